//! Normalisation constants of the fractional Brownian motion and of the interaction kernel.
//!
//! `c_α` makes `E(B_t - B_s)² = |t-s|^{2α}` when `B = (2π c_α)^{-1/2} (φ - φ(0))`.
//! `c'_α` makes the Fourier transform of `c'_α |t|^{-4α}` equal to `|ξ|^{4α-1}`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::quad::{Integrator, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalizationConstants {
    pub alpha: f64,
    /// `c_α` by quadrature.
    pub c_alpha: f64,
    /// `c_α` from the Gamma-function closed form.
    pub c_alpha_closed: f64,
    /// `c'_α` by quadrature; `NaN` for `α >= 1/4` where it is undefined.
    pub c_prime: f64,
    pub c_prime_closed: f64,
}

const TAIL_PERIODS: f64 = 200.0;

/// `∫_A^∞ cos(u) u^{-s} du` for `A` a multiple of `2π`, by repeated integration by parts.
fn cosine_tail(a: f64, s: f64) -> f64 {
    s * a.powf(-s - 1.0) - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * a.powf(-s - 5.0)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫_0^∞ (1 - cos u) u^{-1-2α} du`.
fn increment_integral(alpha: f64) -> Result<f64> {
    let s = 1.0 + 2.0 * alpha;
    // [0, 1] by the power series of 1 - cos.
    let head: f64 = (1..30u32)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign / (factorial(2 * k) * (2.0 * k as f64 - 2.0 * alpha))
        })
        .sum();
    let a = 2.0 * std::f64::consts::PI * TAIL_PERIODS;
    let q = Integrator::<f64>::new(20, Tolerance::relative(1e-14));
    let mut f = |u: f64| (1.0 - u.cos()) * u.powf(-s);
    let breaks: Vec<f64> = std::iter::once(1.0)
        .chain((1..=TAIL_PERIODS as usize).map(|k| 2.0 * std::f64::consts::PI * k as f64))
        .collect();
    let body = q.piecewise(&mut f, &breaks)?.value;
    let tail = a.powf(1.0 - s) / (s - 1.0) - cosine_tail(a, s);
    Ok(head + body + tail)
}

/// `∫_0^∞ cos(t) t^{-4α} dt` for `α < 1/4`.
fn kernel_integral(alpha: f64) -> Result<f64> {
    let s = 4.0 * alpha;
    let head: f64 = (0..30u32)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / (factorial(2 * k) * (2.0 * k as f64 + 1.0 - s))
        })
        .sum();
    let a = 2.0 * std::f64::consts::PI * TAIL_PERIODS;
    let q = Integrator::<f64>::new(20, Tolerance::relative(1e-14));
    let mut f = |t: f64| t.cos() * t.powf(-s);
    let breaks: Vec<f64> = std::iter::once(1.0)
        .chain((1..=TAIL_PERIODS as usize).map(|k| 2.0 * std::f64::consts::PI * k as f64))
        .collect();
    let body = q.piecewise(&mut f, &breaks)?.value;
    Ok(head + body + cosine_tail(a, s))
}

fn compute(alpha: f64) -> Result<NormalizationConstants> {
    let pi = std::f64::consts::PI;
    let c_alpha = 2.0 * increment_integral(alpha)? / pi;
    let c_alpha_closed = gamma(1.0 - 2.0 * alpha) * (pi * alpha).cos() / (pi * alpha);
    let (c_prime, c_prime_closed) = if alpha < 0.25 {
        let j = kernel_integral(alpha)?;
        (0.5 / j, 0.5 / (gamma(1.0 - 4.0 * alpha) * (2.0 * pi * alpha).sin()))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(NormalizationConstants { alpha, c_alpha, c_alpha_closed, c_prime, c_prime_closed })
}

/// Constants for Hurst index `alpha ∈ (0, 1/2)`, memoised per `alpha`.
pub fn normalization_constants(alpha: f64) -> Result<NormalizationConstants> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid("normalisation constants need alpha in (0, 1/2)"));
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, NormalizationConstants>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("cache poisoned").get(&alpha.to_bits()) {
        return Ok(*c);
    }
    let c = compute(alpha)?;
    cache.lock().expect("cache poisoned").insert(alpha.to_bits(), c);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_form() {
        for alpha in [0.1, 0.15, 0.2, 0.24] {
            let c = normalization_constants(alpha).unwrap();
            assert!((c.c_alpha / c.c_alpha_closed - 1.0).abs() < 1e-10, "{c:?}");
            assert!((c.c_prime / c.c_prime_closed - 1.0).abs() < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn above_quarter() {
        let c = normalization_constants(0.3).unwrap();
        assert!(c.c_prime.is_nan());
        assert!((c.c_alpha / c.c_alpha_closed - 1.0).abs() < 1e-10);
    }
}
