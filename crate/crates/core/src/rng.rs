use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub type Rng = SplitMix64;

/// Deterministic generator for a user-facing seed.
pub fn seeded(seed: u64) -> Rng {
    SplitMix64::seed_from_u64(seed)
}

/// Independent stream derived from `seed` for a named sub-task.
pub fn derived(seed: u64, stream: u64) -> Rng {
    SplitMix64::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
