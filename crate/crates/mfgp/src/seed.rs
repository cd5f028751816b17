//! Deterministic seed derivation.
//!
//! Every stochastic choice in the crate flows from an explicit `u64` seed.
//! Work units (restarts, trials, samples) derive their own seeds from a
//! master seed through a splitmix64 chain, so results are reproducible
//! across runs, platforms and thread schedules.

/// One round of splitmix64.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a sequence of integer parts into a seed.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// Mix a string tag into a seed (FNV-1a over the bytes, then splitmix).
pub fn mix_str(seed: u64, tag: &str) -> u64 {
    let mut fnv: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.as_bytes() {
        fnv ^= u64::from(*b);
        fnv = fnv.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix(seed, &[fnv])
}
