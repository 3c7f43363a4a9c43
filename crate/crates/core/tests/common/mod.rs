#![allow(dead_code)]

pub mod oracle;

/// Corpora exercised by the oracle-equivalence tests: small enough for the
/// brute-force reference, varied enough to hit every smoothing branch
/// (singleton-heavy lines, repeats, empty-ish lines, punctuation-free and
/// numeric tokens, shared prefixes/suffixes).
pub fn toy_corpora() -> Vec<Vec<&'static str>> {
    vec![
        vec!["a b", "a b", "b a"],
        vec!["a"],
        vec!["a a a a a"],
        vec!["a b c d e"],
        vec!["the cat sat", "the cat ran", "a dog sat"],
        vec!["x y", "y x", "x x", "y y"],
        vec!["one two three", "two three four", "three four five"],
        vec!["s s s", "s t", "t s", "t t t t"],
        vec!["a b a b a", "b a b a b"],
        vec!["p q r", "p q r", "p q r", "p q s"],
        vec!["m", "n", "o", "m n", "n o", "m n o"],
        vec!["7 8 9", "8 9 7", "9 7 8", "7 9 8"],
        vec!["alpha beta", "beta gamma", "gamma alpha", "alpha gamma beta"],
        vec!["u v w x y z"],
        vec!["k k", "k k k", "k k k k"],
        vec!["a b c", "c b a", "b c a", "a c b", "c a b"],
        vec!["hello world", "hello there", "world hello world"],
        vec!["1 2", "2 1", "1 1 2 2", "2 2 1 1", "1 2 1 2"],
        vec!["f g h i", "g h i f", "h i f g", "f f g g h h i i"],
        vec!["long tail tokens never repeat here at all"],
        vec!["z", "z z", "z z z", "y", "y z y", "z y z y"],
    ]
}
