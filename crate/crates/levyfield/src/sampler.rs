//! Spectral synthesis of the cutoff fields on a periodic grid.
//!
//! A path on `[-T, T)` with `N` points is built from the Fourier lattice `ξ_n = πn/T`,
//! `1 <= n < N/2`, each mode carrying an independent complex normal weighted by
//! `sqrt(w(ξ_n) ρ(ξ_n) π/T)`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{GridField, PairField, ScaleTag};
use crate::kernel::{is_positive_semidefinite, one_minus_cos, Mat2, SpectralKernel};
use crate::partition::{PartitionOfUnity, Window};
use crate::rng::{complex_normal, path_rng};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig<T> {
    /// Grid size, a power of two `>= 256`.
    pub n: usize,
    /// Half-width `T` of the periodic cell `[-T, T)`.
    pub horizon: T,
    /// Ultraviolet cutoff scale.
    pub rho: i32,
    /// Infrared cutoff scale of the stationary field.
    pub j_min: i32,
    pub seed: u64,
    pub shards: u32,
    pub partition: PartitionOfUnity<T>,
}

/// Position of a replica in the stream space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathId {
    pub shard: u32,
    pub index: u64,
}

impl<T: Real> SamplerConfig<T> {
    pub fn new(n: usize, horizon: T, j_min: i32, rho: i32, seed: u64) -> Self {
        Self { n, horizon, rho, j_min, seed, shards: 1, partition: PartitionOfUnity::smooth(T::c(2.0)) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 256 || !self.n.is_power_of_two() {
            return Err(invalid("grid size must be a power of two >= 256"));
        }
        if !(self.horizon > T::zero()) {
            return Err(invalid("horizon must be positive"));
        }
        if self.shards == 0 {
            return Err(invalid("shard count must be >= 1"));
        }
        if self.partition.base.powi(self.rho) > self.nyquist() {
            return Err(invalid(format!(
                "grid too coarse: M^rho = {} exceeds the Nyquist frequency {}",
                self.partition.base.powi(self.rho),
                self.nyquist()
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> T {
        T::c(2.0) * self.horizon / T::from_usize_lossy(self.n)
    }

    pub fn nyquist(&self) -> T {
        T::PI() * T::from_usize_lossy(self.n) / (T::c(2.0) * self.horizon)
    }

    pub fn frequency(&self, mode: usize) -> T {
        T::PI() * T::from_usize_lossy(mode) / self.horizon
    }

    /// Replica `r` lives on shard `r mod shards` at position `r / shards`.
    pub fn path_id(&self, replica: u64) -> PathId {
        let s = self.shards as u64;
        PathId { shard: (replica % s) as u32, index: replica / s }
    }

    /// Index of `t = 0` on the grid.
    pub fn zero_index(&self) -> usize {
        self.n / 2
    }

    fn empty_field(&self) -> GridField<T> {
        GridField {
            origin: -self.horizon,
            spacing: self.spacing(),
            values: vec![T::zero(); self.n],
            tag: ScaleTag::Untagged,
            anchored: false,
        }
    }
}

fn inverse_plan<T: Real>(n: usize) -> Arc<dyn Fft<T>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Fills mode `n` and its mirror so that the inverse transform is real.
fn place_mode<T: Real>(buf: &mut [Complex<T>], mode: usize, z: Complex<T>) {
    let n = buf.len();
    // e^{iξ_n origin} with origin = -T equals (-1)^n.
    let z = if mode % 2 == 1 { -z } else { z };
    buf[mode] = z;
    buf[n - mode] = z.conj();
}

fn draw<T: Real>(rng: &mut impl rand::RngCore) -> Complex<T> {
    let (a, b) = complex_normal(rng);
    Complex::new(T::c(a), T::c(b))
}

/// Sampler of the stationary field with window `χ^{j_min→ρ}` and density `|ξ|^{-1-2α}`.
pub struct PhiSampler<T: Real> {
    cfg: SamplerConfig<T>,
    amplitudes: Vec<T>,
    plan: Arc<dyn Fft<T>>,
    empty: bool,
}

impl<T: Real> PhiSampler<T> {
    pub fn new(cfg: SamplerConfig<T>, alpha: T) -> Result<Self> {
        cfg.validate()?;
        let window = Window::Band { lo: cfg.j_min, hi: cfg.rho };
        let kernel = SpectralKernel::phi(alpha, cfg.partition, window)?;
        let dxi = T::PI() / cfg.horizon;
        let amplitudes = (1..cfg.n / 2)
            .map(|m| {
                let xi = cfg.frequency(m);
                (cfg.partition.weight(xi, window) * kernel.density(xi, (0, 0)) * dxi).max(T::zero()).sqrt()
            })
            .collect();
        let plan = inverse_plan(cfg.n);
        Ok(Self { empty: window.is_empty(), cfg, amplitudes, plan })
    }

    pub fn config(&self) -> &SamplerConfig<T> {
        &self.cfg
    }

    /// Periodic stationary path with zero spatial mean.
    pub fn stationary(&self, replica: u64) -> GridField<T> {
        let mut f = self.cfg.empty_field();
        f.tag = ScaleTag::Window { lo: self.cfg.j_min, hi: self.cfg.rho };
        if self.empty {
            return f;
        }
        let id = self.cfg.path_id(replica);
        let mut rng = path_rng(self.cfg.seed, id.shard, id.index);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.cfg.n];
        for (k, &a) in self.amplitudes.iter().enumerate() {
            let z = draw::<T>(&mut rng);
            if a > T::zero() {
                place_mode(&mut buf, k + 1, z * a);
            }
        }
        self.plan.process(&mut buf);
        f.values = buf.iter().map(|c| c.re).collect();
        f
    }

    /// Path relative to its value at `t = 0`.
    pub fn anchored(&self, replica: u64) -> GridField<T> {
        let mut f = self.stationary(replica);
        let v0 = f.values[self.cfg.zero_index()];
        for v in &mut f.values {
            *v = *v - v0;
        }
        f.anchored = true;
        f
    }

    /// Exact lattice value of `E(ψ(t+lag) - ψ(t))²`.
    pub fn lattice_increment_variance(&self, lag: T) -> T {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| T::c(4.0) * *a * *a * one_minus_cos(self.cfg.frequency(k + 1) * lag))
            .sum()
    }

    /// Exact lattice value of `E ψ(t)²` for the stationary path.
    pub fn lattice_variance(&self) -> T {
        self.amplitudes.iter().map(|a| T::c(2.0) * *a * *a).sum()
    }
}

pub fn sample_phi<T: Real>(cfg: &SamplerConfig<T>, alpha: T, replica: u64) -> Result<GridField<T>> {
    Ok(PhiSampler::new(cfg.clone(), alpha)?.anchored(replica))
}

pub fn sample_phi_stationary<T: Real>(cfg: &SamplerConfig<T>, alpha: T, replica: u64) -> Result<GridField<T>> {
    Ok(PhiSampler::new(cfg.clone(), alpha)?.stationary(replica))
}

fn cholesky2<T: Real>(s: &Mat2<T>) -> Mat2<T> {
    let l00 = s[0][0].max(T::zero()).sqrt();
    let l10 = if l00 > T::zero() { s[1][0] / l00 } else { T::zero() };
    let l11 = (s[1][1] - l10 * l10).max(T::zero()).sqrt();
    [[l00, T::zero()], [l10, l11]]
}

/// Sampler of the two-component massive field with window `χ^{→ρ}`.
pub struct SigmaSampler<T: Real> {
    cfg: SamplerConfig<T>,
    factors: Vec<Mat2<T>>,
    plan: Arc<dyn Fft<T>>,
}

impl<T: Real> SigmaSampler<T> {
    pub fn new(cfg: SamplerConfig<T>, alpha: T, mass: Mat2<T>) -> Result<Self> {
        cfg.validate()?;
        let window = Window::UpTo(cfg.rho);
        let kernel = SpectralKernel::sigma(alpha, cfg.partition, window, mass)?;
        let dxi = T::PI() / cfg.horizon;
        let factors = (1..cfg.n / 2)
            .map(|m| {
                let xi = cfg.frequency(m);
                let w = cfg.partition.weight(xi, window) * dxi;
                let s = [
                    [kernel.density(xi, (0, 0)) * w, kernel.density(xi, (0, 1)) * w],
                    [kernel.density(xi, (1, 0)) * w, kernel.density(xi, (1, 1)) * w],
                ];
                cholesky2(&s)
            })
            .collect();
        let plan = inverse_plan(cfg.n);
        Ok(Self { cfg, factors, plan })
    }

    pub fn sample(&self, replica: u64) -> PairField<T> {
        let id = self.cfg.path_id(replica);
        let mut rng = path_rng(self.cfg.seed, id.shard, id.index);
        let zero = Complex::new(T::zero(), T::zero());
        let mut plus = vec![zero; self.cfg.n];
        let mut minus = vec![zero; self.cfg.n];
        for (k, l) in self.factors.iter().enumerate() {
            let z1 = draw::<T>(&mut rng);
            let z2 = draw::<T>(&mut rng);
            place_mode(&mut plus, k + 1, z1 * l[0][0] + z2 * l[0][1]);
            place_mode(&mut minus, k + 1, z1 * l[1][0] + z2 * l[1][1]);
        }
        self.plan.process(&mut plus);
        self.plan.process(&mut minus);
        let mut f = self.cfg.empty_field();
        f.tag = ScaleTag::UpTo(self.cfg.rho);
        PairField {
            plus: f.with_values(plus.iter().map(|c| c.re).collect()),
            minus: f.with_values(minus.iter().map(|c| c.re).collect()),
        }
    }

    /// Exact lattice covariance matrix at a point.
    pub fn lattice_covariance(&self) -> Mat2<T> {
        let mut c = [[T::zero(); 2]; 2];
        for l in &self.factors {
            for a in 0..2 {
                for b in 0..2 {
                    c[a][b] = c[a][b] + T::c(2.0) * (l[a][0] * l[b][0] + l[a][1] * l[b][1]);
                }
            }
        }
        c
    }
}

pub fn sample_sigma<T: Real>(cfg: &SamplerConfig<T>, alpha: T, mass: Mat2<T>, replica: u64) -> Result<PairField<T>> {
    if !is_positive_semidefinite(&mass, T::c(1e-12)) {
        return Err(invalid("mass matrix must be positive semidefinite"));
    }
    Ok(SigmaSampler::new(cfg.clone(), alpha, mass)?.sample(replica))
}

/// Angular frequency of DFT bin `k` on a grid of `n` points with the given spacing.
pub fn bin_frequency<T: Real>(k: usize, n: usize, spacing: T) -> T {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    T::c(2.0 * std::f64::consts::PI * signed) / (T::from_usize_lossy(n) * spacing)
}

pub(crate) fn forward<T: Real>(values: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = values.iter().map(|v| Complex::new(*v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

pub(crate) fn backward<T: Real>(mut buf: Vec<Complex<T>>) -> Vec<T> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = T::one() / T::from_usize_lossy(n);
    buf.into_iter().map(|c| c.re * s).collect()
}

/// Applies a real, even Fourier multiplier to a periodic field.
pub fn apply_multiplier<T: Real>(f: &GridField<T>, mut m: impl FnMut(T) -> T) -> GridField<T> {
    let n = f.len();
    let mut spec = forward(&f.values);
    for (k, c) in spec.iter_mut().enumerate() {
        *c = *c * m(bin_frequency(k, n, f.spacing));
    }
    f.with_values(backward(spec))
}

/// The scale-`j` component `χ^j(D) f`. Anchored inputs give anchored components.
pub fn scale_component<T: Real>(f: &GridField<T>, j: i32, p: &PartitionOfUnity<T>) -> Result<GridField<T>> {
    if f.len() < 2 {
        return Err(invalid("field too short for a spectral multiplier"));
    }
    let mut out = apply_multiplier(f, |xi| p.chi_j(xi, j));
    if f.anchored {
        let i0 = f
            .index_of(T::zero())
            .ok_or_else(|| Error::Coverage("anchored field does not contain t = 0".into()))?;
        let v0 = out.values[i0];
        for v in &mut out.values {
            *v = *v - v0;
        }
    }
    out.tag = ScaleTag::Scale(j);
    Ok(out)
}

/// Spectral derivative. Rejects fields with more than `1e-3` of their energy in the top tenth
/// of the frequency band.
pub fn derivative_field<T: Real>(f: &GridField<T>) -> Result<GridField<T>> {
    let n = f.len();
    if n < 4 {
        return Err(invalid("field too short for a spectral derivative"));
    }
    let mut spec = forward(&f.values);
    let mut total = T::zero();
    let mut high = T::zero();
    for (k, c) in spec.iter().enumerate().skip(1) {
        let e = c.norm_sqr();
        total = total + e;
        let kk = if k <= n / 2 { k } else { n - k };
        if kk * 10 >= n / 2 * 9 {
            high = high + e;
        }
    }
    if total > T::zero() && high > T::c(1e-3) * total {
        return Err(Error::Precondition(format!(
            "aliasing risk: {:.3e} of the spectral energy lies near the Nyquist frequency",
            (high / total).to_f64_lossy()
        )));
    }
    for (k, c) in spec.iter_mut().enumerate() {
        if 2 * k == n {
            *c = Complex::new(T::zero(), T::zero());
            continue;
        }
        let xi = bin_frequency(k, n, f.spacing);
        *c = *c * Complex::new(T::zero(), xi);
    }
    let mut out = f.with_values(backward(spec));
    out.anchored = false;
    Ok(out)
}

/// Kernel matching the stationary sampler's window, for quadrature oracles.
pub fn matching_kernel<T: Real>(cfg: &SamplerConfig<T>, alpha: T) -> Result<SpectralKernel<T>> {
    SpectralKernel::phi(alpha, cfg.partition, Window::Band { lo: cfg.j_min, hi: cfg.rho })
}
