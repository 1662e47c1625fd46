//! Independent sub-seeds from one experiment seed.

/// SplitMix64 finalizer over `seed` and a stream tag.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags for [`derive_seed`].
pub mod stream {
    pub const INSTANCE: u64 = 0;
    pub const SENSING: u64 = 1;
    pub const ALLOCATION: u64 = 2;
    pub const DYNAMICS: u64 = 3;
}
