//! Deterministic random streams.
//!
//! Every stochastic step in the crate draws from a [`DetRng`] seeded through
//! [`derive_seed`], so a single master seed replays a whole run bit-exact.

use rand::SeedableRng;

/// The generator used everywhere in the crate (xoshiro256**).
pub type DetRng = rand_xoshiro::Xoshiro256StarStar;

pub fn rng_from_seed(seed: u64) -> DetRng {
    DetRng::seed_from_u64(seed)
}

/// SplitMix64 finaliser applied to `master` mixed with a stream tag.
///
/// Distinct tags give statistically independent child seeds; the function is
/// pure so sub-streams can be derived in any order (or in parallel).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags used by the experiment driver.
pub(crate) mod stream {
    pub const FOLDS: u64 = 1;
    pub const RCTX_BINDING: u64 = 2;
    pub const SAMPLING: u64 = 3;
    pub const INNER_FOLDS: u64 = 4;
    pub const INNER_SAMPLING: u64 = 5;
    pub const EA: u64 = 6;
    pub const CLASSIFIER: u64 = 7;
}
