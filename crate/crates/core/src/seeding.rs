//! Stable seed derivation.
//!
//! Corpus builds and Monte Carlo runs fan out into independent units of work
//! (one per source image, one per trial). Each unit gets its own RNG stream
//! so results do not depend on scheduling order or thread count. The streams
//! are derived here with hashes that are pinned by this crate — never with
//! [`std::hash`], whose output may change between compiler releases.

/// FNV-1a over the UTF-8 bytes of `s`.
///
/// Used to map source identifiers to train/val/test splits and to per-source
/// RNG seeds; the constants are the standard 64-bit FNV parameters.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in s.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 finalizer: bijective avalanche over a 64-bit state.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th unit of work under a run-level `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index))
}

/// Seed for the unit of work named `name` under a run-level `seed`.
pub fn derive_seed_str(seed: u64, name: &str) -> u64 {
    mix(seed ^ stable_hash(name))
}
