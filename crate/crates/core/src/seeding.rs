//! Deterministic seed derivation for nested RNG streams.

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed from a base seed and a salt path.
pub(crate) fn derive_seed(seed: u64, salts: &[u64]) -> u64 {
    let mut s = splitmix64(seed);
    for &salt in salts {
        s = splitmix64(s ^ splitmix64(salt.wrapping_add(0x517c_c1b7_2722_0a95)));
    }
    s
}
