//! Counter-based random numbers for the stochastic integrator.
//!
//! Every draw is a pure function of (master_seed, path_index, step, word):
//! the four counters are absorbed into a 64-bit state through the splitmix64
//! finalizer, and normals come out of a Box-Muller transform of two such
//! words. No generator state is carried between calls, so paths can run in
//! any order, on any number of threads, and still reproduce bit-identically.

/// splitmix64 finalizer; full-avalanche mixing of one word.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes the four counters into one uniformly mixed word.
pub(crate) fn counter_hash(master_seed: u64, path_index: u64, step: u64, word: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut h = GOLDEN;
    for w in [master_seed, path_index, step, word] {
        h = mix(h ^ mix(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Maps a word to the half-open interval (0, 1]; never returns 0, so the
/// logarithm in Box-Muller is always finite.
fn uniform_open01(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw for one (seed, path, step, channel) counter.
pub(crate) fn standard_normal(master_seed: u64, path_index: u64, step: u64, channel: u64) -> f64 {
    let u1 = uniform_open01(counter_hash(master_seed, path_index, step, 2 * channel));
    let u2 = uniform_open01(counter_hash(master_seed, path_index, step, 2 * channel + 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
