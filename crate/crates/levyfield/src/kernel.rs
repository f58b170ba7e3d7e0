//! Covariance kernels of the stationary field and of the two-component massive field,
//! evaluated as one-dimensional spectral integrals over the windowed frequency support.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::partition::{PartitionOfUnity, Window};
use crate::quad::{Integrator, QuadOutcome, Tolerance};
use crate::scalar::Real;
use crate::stats::linear_fit;

/// Symmetric 2×2 matrix stored row-major.
pub type Mat2<T> = [[T; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelRole<T> {
    /// Density `|ξ|^(-1-2α)`.
    Phi,
    /// Matrix density `(|ξ|^(1-4α) Id + mass)^(-1)`.
    Sigma { mass: Mat2<T> },
}

#[derive(Clone, Debug)]
pub struct SpectralKernel<T> {
    pub alpha: T,
    pub role: KernelRole<T>,
    pub window: Window,
    pub partition: PartitionOfUnity<T>,
    pub integrator: Integrator<T>,
}

/// Value of a matrix kernel together with the largest per-entry error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixValue<T> {
    pub value: Mat2<T>,
    pub error: T,
}

pub fn operator_norm<T: Real>(m: &Mat2<T>) -> T {
    // Largest singular value of a 2×2 matrix.
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let half_tr = (a + d) * T::c(0.5);
    let disc = ((a - d) * (a - d) * T::c(0.25) + b * b).sqrt();
    (half_tr + disc).sqrt()
}

pub fn is_positive_semidefinite<T: Real>(m: &Mat2<T>, tol: T) -> bool {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = tr.abs().max(T::one());
    (m[0][1] - m[1][0]).abs() <= tol * scale && m[0][0] >= -tol * scale && m[1][1] >= -tol * scale && det >= -tol * scale * scale
}

#[derive(Clone, Copy)]
enum Trig {
    Cos,
    Sin,
}

/// Sign and trigonometric branch of `∫ (iξ)^τ (-iξ)^τ' e^{iξr} ρ(ξ) dξ` folded onto `ξ > 0`.
fn derivative_branch<T: Real>(tau: u32, tau2: u32) -> (T, Trig) {
    let q = (tau as i64 - tau2 as i64).rem_euclid(4);
    if (tau + tau2) % 2 == 0 {
        (if q == 0 { T::one() } else { -T::one() }, Trig::Cos)
    } else {
        (if q == 3 { T::one() } else { -T::one() }, Trig::Sin)
    }
}

impl<T: Real> SpectralKernel<T> {
    fn check_alpha(alpha: T) -> Result<()> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn phi(alpha: T, partition: PartitionOfUnity<T>, window: Window) -> Result<Self> {
        Self::check_alpha(alpha)?;
        Ok(Self { alpha, role: KernelRole::Phi, window, partition, integrator: default_integrator() })
    }

    pub fn sigma(alpha: T, partition: PartitionOfUnity<T>, window: Window, mass: Mat2<T>) -> Result<Self> {
        Self::check_alpha(alpha)?;
        if !is_positive_semidefinite(&mass, T::c(1e-12)) {
            return Err(invalid("mass matrix must be symmetric positive semidefinite"));
        }
        Ok(Self { alpha, role: KernelRole::Sigma { mass }, window, partition, integrator: default_integrator() })
    }

    pub fn with_integrator(mut self, integrator: Integrator<T>) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_window(&self, window: Window) -> Self {
        let mut k = self.clone();
        k.window = window;
        k
    }

    /// Scaling dimension: `α` for the stationary field, `-2α` for the massive field.
    pub fn scaling_dimension(&self) -> T {
        match self.role {
            KernelRole::Phi => self.alpha,
            KernelRole::Sigma { .. } => -T::c(2.0) * self.alpha,
        }
    }

    /// Entry `(a, b)` of the spectral density at `ξ > 0`.
    pub fn density(&self, xi: T, comp: (usize, usize)) -> T {
        match self.role {
            KernelRole::Phi => xi.powf(-T::one() - T::c(2.0) * self.alpha),
            KernelRole::Sigma { mass } => {
                let a = xi.powf(T::one() - T::c(4.0) * self.alpha);
                let m = [[a + mass[0][0], mass[0][1]], [mass[1][0], a + mass[1][1]]];
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
                adj[comp.0][comp.1] / det
            }
        }
    }

    fn scale_integral(
        &self,
        j: i32,
        r: T,
        power: u32,
        trig: Trig,
        comp: (usize, usize),
    ) -> Result<QuadOutcome<T>> {
        let m = self.partition.base;
        let breaks = [m.powi(j - 1), m.powi(j), m.powi(j + 1)];
        let mut f = |xi: T| {
            let w = self.partition.chi_j(xi, j);
            if w == T::zero() {
                return T::zero();
            }
            let osc = match trig {
                Trig::Cos => (xi * r).cos(),
                Trig::Sin => (xi * r).sin(),
            };
            w * xi.powi(power as i32) * osc * self.density(xi, comp)
        };
        Ok(self.integrator.piecewise(&mut f, &breaks)?.scaled(T::c(2.0)))
    }

    /// `∫_ℝ (iξ)^τ (-iξ)^τ' e^{iξr} w(ξ) ρ_ab(ξ) dξ` for the kernel's window `w`.
    pub fn correlation(&self, r: T, tau: u32, tau2: u32, comp: (usize, usize)) -> Result<QuadOutcome<T>> {
        if comp.0 > 1 || comp.1 > 1 {
            return Err(invalid("component index must be 0 or 1"));
        }
        let (sign, trig) = derivative_branch::<T>(tau, tau2);
        let power = tau + tau2;
        let mut out = QuadOutcome::zero();
        match self.window {
            Window::Single(j) => out.accumulate(self.scale_integral(j, r, power, trig, comp)?),
            Window::Band { lo, hi } => {
                for j in lo..=hi {
                    out.accumulate(self.scale_integral(j, r, power, trig, comp)?);
                }
            }
            Window::UpTo(b) => {
                let infrared_ok = match self.role {
                    KernelRole::Phi => power as f64 > 2.0 * self.alpha.to_f64_lossy(),
                    KernelRole::Sigma { .. } => true,
                };
                if !infrared_ok {
                    return Err(invalid("cumulative window is infrared divergent for this kernel"));
                }
                let mut quiet = 0;
                let mut j = b;
                loop {
                    let piece = self.scale_integral(j, r, power, trig, comp)?;
                    let small = piece.abs_integral <= out.abs_integral * T::epsilon() * T::c(0.1);
                    out.accumulate(piece);
                    quiet = if small { quiet + 1 } else { 0 };
                    if quiet >= 3 {
                        break;
                    }
                    j -= 1;
                    if b - j > 4000 {
                        return Err(Error::Quadrature { achieved: out.abs_integral.to_f64_lossy(), panels: 0 });
                    }
                }
            }
        }
        Ok(out.scaled(sign))
    }

    /// `E(ψ(t+lag) - ψ(t))² = 2∫_ℝ (1 - cos ξ lag) w(ξ) ρ(ξ) dξ` for the stationary field.
    ///
    /// Scales with `M^j lag` above `oscillation_cap` keep only the non-oscillating part; the
    /// dropped cosine term decays faster than any power of `M^j lag`.
    pub fn increment_variance(&self, lag: T, oscillation_cap: T) -> Result<QuadOutcome<T>> {
        if !matches!(self.role, KernelRole::Phi) {
            return Err(invalid("increment variance needs the stationary-field role"));
        }
        let (lo, hi) = match self.window {
            Window::Single(j) => (j, j),
            Window::Band { lo, hi } => (lo, hi),
            Window::UpTo(_) => return Err(invalid("increment variance needs a bounded window")),
        };
        let m = self.partition.base;
        let mut out = QuadOutcome::zero();
        for j in lo..=hi {
            let breaks = [m.powi(j - 1), m.powi(j), m.powi(j + 1)];
            let keep_cos = m.powi(j) * lag.abs() <= oscillation_cap;
            let mut f = |xi: T| {
                let w = self.partition.chi_j(xi, j);
                if w == T::zero() {
                    return T::zero();
                }
                let osc = if keep_cos { one_minus_cos(xi * lag) } else { T::one() };
                w * osc * self.density(xi, (0, 0))
            };
            out.accumulate(self.integrator.piecewise(&mut f, &breaks)?.scaled(T::c(4.0)));
        }
        Ok(out)
    }

    /// Scalar covariance of the stationary field at separation `r`.
    pub fn cov_phi(&self, r: T) -> Result<QuadOutcome<T>> {
        if !matches!(self.role, KernelRole::Phi) {
            return Err(invalid("cov_phi needs the stationary-field role"));
        }
        self.correlation(r, 0, 0, (0, 0))
    }

    pub fn cov_sigma(&self, r: T) -> Result<MatrixValue<T>> {
        self.matrix_correlation(r, 0, 0)
    }

    pub fn matrix_correlation(&self, r: T, tau: u32, tau2: u32) -> Result<MatrixValue<T>> {
        let mut value = [[T::zero(); 2]; 2];
        let mut error = T::zero();
        let diagonal_mass = match self.role {
            KernelRole::Phi => return Err(invalid("matrix covariance needs the massive-field role")),
            KernelRole::Sigma { mass } => mass[0][1] == T::zero() && mass[1][0] == T::zero(),
        };
        for a in 0..2 {
            for b in a..2 {
                if a != b && diagonal_mass {
                    continue;
                }
                let q = self.correlation(r, tau, tau2, (a, b))?;
                value[a][b] = q.value;
                value[b][a] = q.value;
                error = error.max(q.error);
            }
        }
        Ok(MatrixValue { value, error })
    }

    /// Largest absolute entry of the correlation, scalar for the stationary field.
    pub fn correlation_magnitude(&self, r: T, tau: u32, tau2: u32) -> Result<T> {
        match self.role {
            KernelRole::Phi => Ok(self.correlation(r, tau, tau2, (0, 0))?.value.abs()),
            KernelRole::Sigma { .. } => {
                let m = self.matrix_correlation(r, tau, tau2)?.value;
                Ok(m.iter().flatten().fold(T::zero(), |a, &v| a.max(v.abs())))
            }
        }
    }

    /// `min(1, M^{j(1-4α)} / ‖mass‖)`: the suppression factor of a scale-`j` massive kernel.
    pub fn mass_suppression(&self, j: i32) -> T {
        match self.role {
            KernelRole::Phi => T::one(),
            KernelRole::Sigma { mass } => {
                let n = operator_norm(&mass);
                if n == T::zero() {
                    T::one()
                } else {
                    T::one().min(self.partition.base.powf(T::c(j as f64) * (T::one() - T::c(4.0) * self.alpha)) / n)
                }
            }
        }
    }

    /// Tabulates entry `comp` at the given separations.
    pub fn tabulate(&self, rs: &[T], comp: (usize, usize)) -> Result<Vec<KernelRow>> {
        rs.iter()
            .map(|&r| {
                let q = self.correlation(r, 0, 0, comp)?;
                Ok(KernelRow {
                    j: self.window.top(),
                    r: r.to_f64_lossy(),
                    value: q.value.to_f64_lossy(),
                    err_estimate: q.error.to_f64_lossy(),
                })
            })
            .collect()
    }
}

fn default_integrator<T: Real>() -> Integrator<T> {
    Integrator::new(20, Tolerance::relative(1e-12))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KernelRow {
    pub j: i32,
    pub r: f64,
    pub value: f64,
    pub err_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleConstant {
    pub j: i32,
    pub constant: f64,
    /// Rescaled separation `M^j |r|` at which the supremum was attained.
    pub argmax: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiscaleReport {
    pub tau: u32,
    pub tau2: u32,
    pub decay_power: u32,
    pub constants: Vec<ScaleConstant>,
    /// `(max - min) / max` over scales.
    pub spread: f64,
    pub passed: bool,
}

/// Rescaled separations `u = M^j |r|` used for the supremum.
pub fn separation_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    let n = 64;
    let (lo, hi) = (1e-2f64.ln(), 20f64.ln());
    g.extend((0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()));
    g
}

/// Empirical constant `sup_u |⟨∂^τψ^j(0) ∂^τ'ψ^j(u M^-j)⟩| (1+u)^R M^{-(τ+τ'-2β)j}`.
pub fn multiscale_constant<T: Real>(
    k: &SpectralKernel<T>,
    j: i32,
    tau: u32,
    tau2: u32,
    decay_power: u32,
) -> Result<ScaleConstant> {
    let kj = k.with_window(Window::Single(j));
    let m = k.partition.base;
    let beta = k.scaling_dimension();
    let norm = m.powf(-(T::c((tau + tau2) as f64) - T::c(2.0) * beta) * T::c(j as f64));
    let mut best = (0.0f64, 0.0f64);
    for u in separation_grid() {
        let r = T::c(u) * m.powi(-j);
        let c = kj.correlation_magnitude(r, tau, tau2)? * norm * T::c((1.0 + u).powi(decay_power as i32));
        let c = c.to_f64_lossy();
        if c > best.0 {
            best = (c, u);
        }
    }
    Ok(ScaleConstant { j, constant: best.0, argmax: best.1 })
}

/// Checks that the multiscale constant is finite and independent of the scale within 1%.
pub fn verify_multiscale_bound<T: Real>(
    k: &SpectralKernel<T>,
    scales: &[i32],
    tau: u32,
    tau2: u32,
    decay_power: u32,
) -> Result<MultiscaleReport> {
    if tau > 4 || tau2 > 4 || decay_power > 8 {
        return Err(invalid("derivative orders must be <= 4 and decay power <= 8"));
    }
    let constants = scales
        .iter()
        .map(|&j| multiscale_constant(k, j, tau, tau2, decay_power))
        .collect::<Result<Vec<_>>>()?;
    let max = constants.iter().map(|c| c.constant).fold(0.0, f64::max);
    let min = constants.iter().map(|c| c.constant).fold(f64::INFINITY, f64::min);
    let spread = if max > 0.0 { (max - min) / max } else { f64::INFINITY };
    let passed = max.is_finite() && max > 0.0 && spread <= 0.01;
    Ok(MultiscaleReport { tau, tau2, decay_power, constants, spread, passed })
}

/// `1 - cos x` without cancellation at small `x`.
pub fn one_minus_cos<T: Real>(x: T) -> T {
    let s = (x * T::c(0.5)).sin();
    T::c(2.0) * s * s
}

fn one_minus_sinc_sq<T: Real>(z: T) -> T {
    if z.abs() < T::c(1e-3) {
        let z2 = z * z;
        z2 / T::c(3.0) - T::c(2.0) * z2 * z2 / T::c(45.0)
    } else {
        let s = z.sin() / z;
        T::one() - s * s
    }
}

/// `⟨|δ^k ψ^j|²⟩ / ⟨|ψ^j|²⟩` with the secondary field's mean square averaged over the position
/// inside its scale-`k` interval: `∫ρ_j (1 - sinc²(ξL/2)) / ∫ρ_j`, `L = M^-k`.
pub fn spring_ratio<T: Real>(k: &SpectralKernel<T>, j: i32, kscale: i32) -> Result<T> {
    let m = k.partition.base;
    let half = m.powi(-kscale) * T::c(0.5);
    let breaks = [m.powi(j - 1), m.powi(j), m.powi(j + 1)];
    let mut num = |xi: T| k.partition.chi_j(xi, j) * k.density(xi, (0, 0)) * one_minus_sinc_sq(xi * half);
    let mut den = |xi: T| k.partition.chi_j(xi, j) * k.density(xi, (0, 0));
    let a = k.integrator.piecewise(&mut num, &breaks)?.value;
    let b = k.integrator.piecewise(&mut den, &breaks)?.value;
    Ok(a / b)
}

/// Fitted decay exponent `e` in `ratio ∝ M^{-e(k-j)}` over the given gaps.
pub fn spring_exponent<T: Real>(k: &SpectralKernel<T>, j: i32, gaps: &[i32]) -> Result<f64> {
    let ln_m = k.partition.base.to_f64_lossy().ln();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &g in gaps {
        x.push(g as f64 * ln_m);
        y.push(spring_ratio(k, j, j + g)?.to_f64_lossy().ln());
    }
    Ok(-linear_fit(&x, &y)?.slope)
}
