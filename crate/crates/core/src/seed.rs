//! Seed derivation. Every random stream in the pipeline is derived from one
//! master seed plus a path of tags, so tasks can run in any order or in
//! parallel and still draw the same numbers.

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a of a string; stable across platforms and releases.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives a child seed from `master` and a sequence of tags.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(master), |acc, &t| mix(acc ^ mix(t)))
}

/// Derives the seed for a named task, e.g. one dataset.
pub fn derive_named(master: u64, name: &str, tags: &[u64]) -> u64 {
    derive(derive(master, &[hash_str(name)]), tags)
}
