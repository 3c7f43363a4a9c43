//! Token interning with fixed sentinel ids.

use rustc_hash::FxHashMap;

/// Dense token identifier; `u32` keeps n-gram keys compact.
pub type TokenId = u32;

pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

/// Sentinel ids are fixed so they survive any training order.
pub const UNK: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;

/// Bidirectional token/id map, pre-seeded with the three sentinels.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: FxHashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new() -> Vocabulary {
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            ids: FxHashMap::default(),
        };
        for tok in [UNK_TOKEN, BOS_TOKEN, EOS_TOKEN] {
            vocab.intern(tok);
        }
        vocab
    }

    /// Return the id for `token`, inserting it if new.
    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// The id for `token`, mapping unseen tokens to [`UNK`].
    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Total entries, sentinels included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the sentinels are always present
    }

    /// Size of the predicted vocabulary: everything except `<s>`, which is
    /// never an outcome. This is the support of the uniform base
    /// distribution that terminates the smoothing recursion.
    pub fn predicted_len(&self) -> usize {
        self.tokens.len() - 1
    }

    /// Iterate ids in insertion order (sentinels first).
    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        0..self.tokens.len() as TokenId
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}
