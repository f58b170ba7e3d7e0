//! Counter-based random streams: one ChaCha8 stream per `(seed, shard, path)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PATH_BITS: u32 = 40;

/// Stream for path `index` of `shard`; independent of how many other paths were drawn before.
pub fn path_rng(seed: u64, shard: u32, index: u64) -> ChaCha8Rng {
    assert!(index < 1u64 << PATH_BITS, "path index exceeds stream capacity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((shard as u64) << PATH_BITS) | index);
    rng.set_word_pos(0);
    rng
}

/// Uniform on `(0, 1]`.
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals by Box–Muller.
pub fn normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let r = (-2.0 * open_unit(rng).ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * open_unit(rng);
    (r * theta.cos(), r * theta.sin())
}

/// Complex normal `(G1 + i G2)/√2` with `E|Z|² = 1`.
pub fn complex_normal(rng: &mut impl RngCore) -> (f64, f64) {
    let (a, b) = normal_pair(rng);
    (a * std::f64::consts::FRAC_1_SQRT_2, b * std::f64::consts::FRAC_1_SQRT_2)
}
