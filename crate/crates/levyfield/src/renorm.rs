//! Leading-order mass counterterm for the massive field and the domination inequality.
//!
//! With `C^j` the scale-`j` covariance of the stationary field (spectral density
//! `χ^j(ξ)|ξ|^{-1-2α}` on the whole line), the two-vertex self-energy at scale `j` is
//! `∫ C^{j→ρ}(u) (-∂²)C^j(u) du = 2π ∫ |ξ|^{-4α} χ^j (χ^j + χ^{j+1}) dξ = M^{j(1-4α)} K`.
//! The diagonal entries of `b^j` pair both internal lines of the same component; the
//! off-diagonal entries pair one line from each component, which only share the same scale,
//! giving `K_mix = 2π ∫ |ξ|^{-4α} (χ^0)² dξ`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::{Mat2, SpectralKernel};
use crate::partition::{PartitionOfUnity, Window};
use crate::quad::{Integrator, Tolerance};
use crate::scalar::Real;

fn integrator<T: Real>() -> Integrator<T> {
    Integrator::with_tolerance(Tolerance::relative(1e-13))
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::c(0.25)) {
        return Err(invalid("alpha must lie in (0, 1/4)"));
    }
    Ok(())
}

/// `2π ∫_ℝ |ξ|^{-4α} χ^j(ξ) w(ξ) dξ` for a second window `w`.
fn overlap<T: Real>(alpha: T, p: &PartitionOfUnity<T>, j: i32, other: Window) -> Result<T> {
    let m = p.base;
    let breaks = [m.powi(j - 1), m.powi(j), m.powi(j + 1)];
    let mut f = |xi: T| p.chi_j(xi, j) * p.weight(xi, other) * xi.powf(-T::c(4.0) * alpha);
    let v = integrator().piecewise(&mut f, &breaks)?.value;
    Ok(v * T::c(4.0 * PI))
}

/// The scale-independent self-energy constant.
pub fn constant_k<T: Real>(alpha: T, p: &PartitionOfUnity<T>) -> Result<T> {
    check_alpha(alpha)?;
    overlap(alpha, p, 0, Window::Band { lo: 0, hi: 1 })
}

/// `M^{-j(1-4α)} ∫ C^{j→ρ}(-∂²)C^j`, evaluated spectrally at scale `j`.
pub fn rescaled_self_energy<T: Real>(alpha: T, p: &PartitionOfUnity<T>, j: i32, rho: i32) -> Result<T> {
    check_alpha(alpha)?;
    if rho < j {
        return Err(invalid("cutoff scale must not be below the field scale"));
    }
    let v = overlap(alpha, p, j, Window::Band { lo: j, hi: rho })?;
    Ok(v * p.base.powf(-T::from_i32(j).unwrap() * (T::one() - T::c(4.0) * alpha)))
}

pub fn mixed_constant<T: Real>(alpha: T, p: &PartitionOfUnity<T>) -> Result<T> {
    check_alpha(alpha)?;
    overlap(alpha, p, 0, Window::Single(0))
}

/// `|V|^{-1} ∫_V∫_V C^{0→1}(x-y) (-∂²)C^0(x-y) dx dy = 2∫_0^V (1 - u/V) g(u) du`.
pub fn finite_volume_k<T: Real>(alpha: T, p: &PartitionOfUnity<T>, volume: T) -> Result<T> {
    check_alpha(alpha)?;
    if !(volume > T::zero()) {
        return Err(invalid("volume must be positive"));
    }
    let wide = SpectralKernel::phi(alpha, p.clone(), Window::Band { lo: 0, hi: 1 })?.with_integrator(integrator());
    let narrow = SpectralKernel::phi(alpha, p.clone(), Window::Single(0))?.with_integrator(integrator());
    let panels = volume.ceil().to_f64_lossy().max(1.0) as usize;
    let h = volume / T::from_usize_lossy(panels);
    let rule = crate::quad::GaussLegendre::<T>::new(24);
    let mut total = T::zero();
    let mut failure: Option<Error> = None;
    for k in 0..panels {
        let a = h * T::from_usize_lossy(k);
        let mut g = |u: T| match (wide.correlation(u, 0, 0, (0, 0)), narrow.correlation(u, 1, 1, (0, 0))) {
            (Ok(c), Ok(d)) => (T::one() - u / volume) * c.value * d.value,
            (Err(e), _) | (_, Err(e)) => {
                failure = Some(e);
                T::zero()
            }
        };
        total = total + rule.apply(&mut g, a, a + h).0;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total * T::c(2.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct CountertermResult {
    pub j: i32,
    pub alpha: f64,
    pub lambda: f64,
    pub base: f64,
    pub volume: f64,
    pub k_volume: f64,
    pub k: f64,
    pub k_mixed: f64,
    pub b: Mat2<f64>,
    /// `λ^{-2} M^{-j(1-4α)} b^j`; zero when `λ = 0`.
    pub b_scaled: Mat2<f64>,
}

/// `b^j = λ² M^{j(1-4α)} [[K, K_mix], [K_mix, K]]` at leading order.
pub fn b_j_leading(j: i32, lambda: f64, alpha: f64, p: &PartitionOfUnity<f64>, volume: f64) -> Result<CountertermResult> {
    if !(0.0..0.5).contains(&lambda) {
        return Err(invalid("coupling must lie in [0, 0.5)"));
    }
    let k = rescaled_self_energy(alpha, p, j, j + 8)?;
    let k_mixed = mixed_constant(alpha, p)?;
    let k_volume = finite_volume_k(alpha, p, volume)?;
    let scale = lambda * lambda * p.base.powf(f64::from(j) * (1.0 - 4.0 * alpha));
    let scaled = [[k, k_mixed], [k_mixed, k]];
    let b = [[scale * k, scale * k_mixed], [scale * k_mixed, scale * k]];
    let b_scaled = if lambda == 0.0 { [[0.0; 2]; 2] } else { scaled };
    Ok(CountertermResult { j, alpha, lambda, base: p.base, volume, k_volume, k, k_mixed, b, b_scaled })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationParams {
    pub beta: f64,
    /// Even power in the Hölder bound `|u| <= v^{1/m}`.
    pub m: u32,
    pub kappa: f64,
    pub lambda: f64,
    pub k: i32,
    pub n: u32,
    pub base: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationSample {
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `ln(LHS/RHS)` seen; non-positive when the inequality holds everywhere.
    pub max_log_ratio: f64,
    pub passed: bool,
}

/// `sup_{x>=0} x^{1/m} e^{-x/n}`-type constant: `K = (1/(m e))^{1/m}`, so that
/// `x^{n/m} e^{-x} <= (n/m)^{n/m} e^{-n/m} = K^n n^{n/m}`.
pub fn domination_constant(m: u32) -> f64 {
    (1.0 / (f64::from(m) * std::f64::consts::E)).powf(1.0 / f64::from(m))
}

impl DominationParams {
    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m % 2 == 1 {
            return Err(invalid("m must be a positive even integer"));
        }
        if self.n == 0 || !(self.kappa > 0.0) || !(self.lambda > 0.0 && self.lambda < 1.0) || !(self.base > 1.0) {
            return Err(invalid("need n >= 1, kappa > 0, lambda in (0, 1) and base > 1"));
        }
        Ok(())
    }

    /// `ln` of the right-hand side `K^n n^{n/m} λ^{-κn/m} M^{-nβk}`.
    pub fn log_rhs(&self) -> f64 {
        let (n, m) = (f64::from(self.n), f64::from(self.m));
        n * domination_constant(self.m).ln() + n / m * n.ln() - self.kappa * n / m * self.lambda.ln()
            - n * self.beta * f64::from(self.k) * self.base.ln()
    }

    /// `ln |u|^n e^{-λ^κ M^{mβk} v}`.
    pub fn log_lhs(&self, s: DominationSample) -> f64 {
        let rate = (self.kappa * self.lambda.ln() + f64::from(self.m) * self.beta * f64::from(self.k) * self.base.ln()).exp();
        f64::from(self.n) * s.u.abs().ln() - rate * s.v
    }

    /// `v` at which the bound is attained with `|u| = v^{1/m}`.
    pub fn tight_v(&self) -> f64 {
        let rate = (self.kappa * self.lambda.ln() + f64::from(self.m) * self.beta * f64::from(self.k) * self.base.ln()).exp();
        f64::from(self.n) / f64::from(self.m) / rate
    }
}

pub fn domination_check(params: &DominationParams, samples: &[DominationSample]) -> Result<DominationReport> {
    params.validate()?;
    let rhs = params.log_rhs();
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for (i, s) in samples.iter().enumerate() {
        if !(s.v >= 0.0) || s.u.abs() > s.v.powf(1.0 / f64::from(params.m)) * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "sample {i} breaks |u| <= v^(1/m): u = {}, v = {}, m = {}",
                s.u, s.v, params.m
            )));
        }
        let r = params.log_lhs(*s) - rhs;
        worst = worst.max(r);
        if r > 1e-12 * rhs.abs().max(1.0) {
            violations += 1;
        }
    }
    Ok(DominationReport { samples: samples.len(), violations, max_log_ratio: worst, passed: violations == 0 })
}
