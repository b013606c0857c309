//! Seeded random streams.
//!
//! Every randomized routine takes a 64-bit seed. Trial `i` of a routine draws
//! from the ChaCha stream `i` under that seed, so results do not depend on the
//! order in which trials are evaluated. Nested routines get their own seed
//! through [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for trial `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed for a labelled sub-computation (splitmix64 finalizer).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
