//! Reproducible random number generation.
//!
//! All stochastic code in this crate draws from ChaCha8 streams keyed by a
//! user-supplied `u64` seed. Substream separation uses the cipher's stream
//! counter, so (seed, trial, window) identifies every random draw regardless
//! of scheduling or thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Expands a 64-bit seed into a full ChaCha key.
fn expand_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Generator for substream `stream` of the generator family keyed by `seed`.
///
/// Streams of the same seed are independent ChaCha8 streams; distinct seeds
/// give unrelated keys.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(expand_key(seed));
    rng.set_stream(stream);
    rng
}

/// Stable per-trial seed derived from a master seed; trial `k` always maps to
/// the same seed no matter which worker executes it.
pub fn derive_trial_seed(master_seed: u64, trial: u64) -> u64 {
    let mut state = master_seed ^ trial.wrapping_mul(0xD1B54A32D192ED03);
    splitmix64(&mut state)
}

/// One pair of independent standard normal deviates via the Box–Muller
/// transform. The transform consumes exactly two uniforms, so the draw count
/// is schedule-independent.
pub fn standard_normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Fills `out` with standard normal deviates, two uniforms per pair.
pub fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let mut i = 0;
    while i + 1 < out.len() {
        let (a, b) = standard_normal_pair(rng);
        out[i] = a;
        out[i + 1] = b;
        i += 2;
    }
    if i < out.len() {
        out[i] = standard_normal_pair(rng).0;
    }
}
