//! Counter-based random streams.
//!
//! Edge draws and trial seeds are pure functions of integer coordinates so that
//! results never depend on iteration order or thread scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) from the top 53 bits of a hash.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw for the unordered pair `(i, j)`, `i < j`, under `seed`.
#[inline]
pub fn pair_uniform(seed: u64, i: usize, j: usize) -> f64 {
    let stream = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    let counter = ((i as u64) << 32) ^ (j as u64);
    unit_f64(splitmix64(stream ^ splitmix64(counter)))
}

/// Tags mixed into the master seed, one per sweep axis.
pub const TAG_N: u64 = 0x6E5F_6772_6964_0001;
pub const TAG_P: u64 = 0x705F_6772_6964_0002;
pub const TAG_BETA: u64 = 0x625F_6772_6964_0003;
pub const TAG_TRIAL: u64 = 0x745F_7472_6C00_0004;

/// Seed for one trial of a sweep, from its grid coordinates.
pub fn derive_seed(
    master: u64,
    n_index: usize,
    p_index: usize,
    beta_index: usize,
    trial: usize,
) -> u64 {
    let mut s = splitmix64(master ^ TAG_N.wrapping_mul(n_index as u64 + 1));
    s = splitmix64(s ^ TAG_P.wrapping_mul(p_index as u64 + 1));
    s = splitmix64(s ^ TAG_BETA.wrapping_mul(beta_index as u64 + 1));
    splitmix64(s ^ TAG_TRIAL.wrapping_mul(trial as u64 + 1))
}
