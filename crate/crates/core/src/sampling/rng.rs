//! Deterministic randomness: a counter-based keyed generator for per-document
//! decisions (order- and thread-independent) and a small sequential generator
//! for reservoir sampling.

/// splitmix64 finalizer: a full-avalanche mix of one 64-bit word.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// 64-bit hash of (seed, domain, key). The domain string separates
/// independent decision streams ("keep", "quartiles", "holdout", ...) so one
/// seed drives them all without correlation; FNV-1a absorbs the strings and
/// splitmix64 finishes the avalanche.
pub fn keyed_hash(seed: u64, domain: &str, key: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET;
    for &b in domain.as_bytes() {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    // Separator byte: "ab"+"c" and "a"+"bc" must hash differently.
    h = (h ^ 0xff).wrapping_mul(FNV_PRIME);
    for &b in key.as_bytes() {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    mix(h ^ mix(seed))
}

/// Uniform draw in [0, 1) from the top 53 bits of a keyed hash.
pub fn keyed_unit(seed: u64, domain: &str, key: &str) -> f64 {
    (keyed_hash(seed, domain, key) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli keep/drop decision for one document. Deterministic in
/// (seed, doc_id) alone: processing order, sharding, and thread count
/// cannot change it. weight 0 never keeps; weight 1 always keeps.
pub fn keep_decision(weight: f64, doc_id: &str, seed: u64) -> bool {
    keyed_unit(seed, "keep", doc_id) < weight
}

/// Sequential splitmix64 generator for the few places that need ordered
/// draws (reservoir sampling); not used for per-document decisions.
#[derive(Debug, Clone)]
pub struct DetRng {
    state: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> DetRng {
        DetRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut x = self.state;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^ (x >> 31)
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform draw in [0, n) (Lemire's multiply-shift with
    /// rejection of the short zone).
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = n.wrapping_neg() % n; // 2^64 mod n
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= zone {
                return (m >> 64) as u64;
            }
        }
    }
}
