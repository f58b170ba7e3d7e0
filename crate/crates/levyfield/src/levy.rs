//! Singular parts of the Lévy area, iterated Stieltjes sums, and the second moment of the
//! area density: one-bubble spectral integrals, their resummed variant and a Monte Carlo check.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{GridField, PairField, ScaleTag};
use crate::kernel::one_minus_cos;
use crate::partition::{PartitionOfUnity, Window};
use crate::quad::{Integrator, QuadOutcome, Tolerance};
use crate::sampler::{backward, bin_frequency, forward, PhiSampler, SamplerConfig};
use crate::scalar::Real;
use crate::stats::{linear_fit, merge_tree, LinearFit, Welford};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AreaPart {
    /// Derivative on the lower-scale component of the first field.
    Plus,
    /// Mixed terms carry the derivative on the lower-scale component of the second field.
    Minus,
}

/// Scale components `ψ^j` and their derivatives for `j = lo..lo+len`.
#[derive(Clone, Debug)]
pub struct ScaleDecomposition<T> {
    pub lo: i32,
    pub components: Vec<GridField<T>>,
    pub derivatives: Vec<GridField<T>>,
}

impl<T: Real> ScaleDecomposition<T> {
    pub fn hi(&self) -> i32 {
        self.lo + self.components.len() as i32 - 1
    }
}

/// Splits a periodic field into `χ^j(D) f` and `∂χ^j(D) f`, `j ∈ [lo, hi]`, from one forward transform.
pub fn decompose<T: Real>(f: &GridField<T>, lo: i32, hi: i32, p: &PartitionOfUnity<T>) -> Result<ScaleDecomposition<T>> {
    if hi < lo {
        return Err(invalid("empty scale range"));
    }
    let n = f.len();
    let spec = forward(&f.values);
    let mut components = Vec::new();
    let mut derivatives = Vec::new();
    for j in lo..=hi {
        let mut c = spec.clone();
        let mut d = spec.clone();
        for k in 0..n {
            let xi = bin_frequency(k, n, f.spacing);
            let w = p.chi_j(xi, j);
            c[k] = c[k] * w;
            d[k] = if 2 * k == n { Complex::new(T::zero(), T::zero()) } else { d[k] * Complex::new(T::zero(), xi * w) };
        }
        let mut cf = f.with_values(backward(c));
        cf.tag = ScaleTag::Scale(j);
        cf.anchored = false;
        let mut df = cf.with_values(backward(d));
        df.tag = ScaleTag::Scale(j);
        components.push(cf);
        derivatives.push(df);
    }
    Ok(ScaleDecomposition { lo, components, derivatives })
}

fn check_pair<T: Real>(a: &ScaleDecomposition<T>, b: &ScaleDecomposition<T>) -> Result<()> {
    if a.lo != b.lo || a.components.len() != b.components.len() {
        return Err(invalid("decompositions cover different scale ranges"));
    }
    if a.components.is_empty() || !a.components[0].same_grid(&b.components[0]) {
        return Err(invalid("fields live on different grids"));
    }
    Ok(())
}

/// One singular part: `½Σ_j ∂a^j b^j + Σ_{j<k} ∂x^j y^k` with `(x, y) = (a, b)` for
/// [`AreaPart::Plus`] and `(b, a)` for [`AreaPart::Minus`].
pub fn singular_part<T: Real>(a: &ScaleDecomposition<T>, b: &ScaleDecomposition<T>, part: AreaPart) -> Result<GridField<T>> {
    check_pair(a, b)?;
    let n = a.components[0].len();
    let half = T::c(0.5);
    let (low, high) = match part {
        AreaPart::Plus => (a, b),
        AreaPart::Minus => (b, a),
    };
    let mut out = vec![T::zero(); n];
    let mut prefix = vec![T::zero(); n];
    for k in 0..a.components.len() {
        let (da, vb) = (&a.derivatives[k].values, &b.components[k].values);
        let vh = &high.components[k].values;
        for i in 0..n {
            out[i] = out[i] + half * da[i] * vb[i] + prefix[i] * vh[i];
        }
        let dl = &low.derivatives[k].values;
        for i in 0..n {
            prefix[i] = prefix[i] + dl[i];
        }
    }
    let mut f = a.components[0].with_values(out);
    f.tag = ScaleTag::Window { lo: a.lo, hi: a.hi() };
    Ok(f)
}

/// Both singular parts, `plus = 𝓐⁺`, `minus = 𝓐⁻` (as densities in time).
pub fn singular_parts<T: Real>(a: &ScaleDecomposition<T>, b: &ScaleDecomposition<T>) -> Result<PairField<T>> {
    Ok(PairField { plus: singular_part(a, b, AreaPart::Plus)?, minus: singular_part(a, b, AreaPart::Minus)? })
}

fn grid_bounds<T: Real>(f: &GridField<T>, s: T, t: T) -> Result<(usize, usize)> {
    if !(s < t) {
        return Err(invalid("area increment needs s < t"));
    }
    let i = f.index_of(s).ok_or_else(|| Error::Coverage("s is not a grid point".into()))?;
    let j = f.index_of(t).ok_or_else(|| Error::Coverage("t is not a grid point".into()))?;
    Ok((i, j))
}

/// `∫_s^t dφ1(t1) ∫_s^{t1} dφ2(t2)` as a trapezoid Stieltjes sum on the grid.
pub fn area_increment<T: Real>(phi1: &GridField<T>, phi2: &GridField<T>, s: T, t: T) -> Result<T> {
    if !phi1.same_grid(phi2) {
        return Err(invalid("fields live on different grids"));
    }
    let (i0, i1) = grid_bounds(phi1, s, t)?;
    let (x, y) = (&phi1.values, &phi2.values);
    let base = y[i0];
    let half = T::c(0.5);
    Ok((i0..i1).map(|i| (x[i + 1] - x[i]) * (half * (y[i] + y[i + 1]) - base)).sum())
}

/// Antisymmetrised area `A12(s,t) - A21(s,t)`.
pub fn signed_area<T: Real>(phi1: &GridField<T>, phi2: &GridField<T>, s: T, t: T) -> Result<T> {
    Ok(area_increment(phi1, phi2, s, t)? - area_increment(phi2, phi1, s, t)?)
}

/// Exact integrals of a trigonometric polynomial given by its grid samples.
pub struct BandLimitedIntegral<T> {
    origin: T,
    spacing: T,
    spectrum: Vec<Complex<T>>,
}

impl<T: Real> BandLimitedIntegral<T> {
    pub fn new(f: &GridField<T>) -> Self {
        Self { origin: f.origin, spacing: f.spacing, spectrum: forward(&f.values) }
    }

    pub fn integral(&self, s: T, t: T) -> T {
        let n = self.spectrum.len();
        let scale = T::one() / T::from_usize_lossy(n);
        let mut acc = self.spectrum[0].re * (t - s);
        for k in 1..n {
            if 2 * k == n {
                continue;
            }
            let xi = bin_frequency(k, n, self.spacing);
            let (a, b) = (xi * (t - self.origin), xi * (s - self.origin));
            let diff = Complex::new(a.cos() - b.cos(), a.sin() - b.sin());
            acc = acc + (self.spectrum[k] * diff / Complex::new(T::zero(), xi)).re;
        }
        acc * scale
    }
}

/// Spectral weights of the area density built from the scale components `χ^k(D)ψ` of a field
/// `ψ` with spectral density `w(ξ)|ξ|^{-1-2α}`, `w` the window weight:
/// `∂𝓐(t) = ∫∫ e^{i(ξ1+ξ2)t} i V(ξ1,ξ2) dW1 dW2`.
///
/// Components are taken over every scale that meets the window (one beyond each end), so they
/// sum back to the field; neighbouring components are correlated.
#[derive(Clone, Debug)]
pub struct BubbleModel<T> {
    pub alpha: T,
    pub partition: PartitionOfUnity<T>,
    /// `Band` or `UpTo`.
    pub window: Window,
    pub inner: Integrator<T>,
    pub outer: Integrator<T>,
}

impl<T: Real> BubbleModel<T> {
    pub fn new(alpha: T, partition: PartitionOfUnity<T>, window: Window) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        if let Window::Single(j) = window {
            return Self::new(alpha, partition, Window::Band { lo: j, hi: j });
        }
        Ok(Self {
            alpha,
            partition,
            window,
            inner: Integrator::new(16, Tolerance::relative(1e-11)),
            outer: Integrator::new(16, Tolerance::relative(1e-10)),
        })
    }

    fn density(&self, xi: T) -> T {
        let w = self.partition.weight(xi, self.window);
        if w == T::zero() {
            T::zero()
        } else {
            w * xi.abs().powf(-T::one() - T::c(2.0) * self.alpha)
        }
    }

    fn components(&self) -> Window {
        match self.window {
            Window::Band { lo, hi } => Window::Band { lo: lo - 1, hi: hi + 1 },
            other => Window::UpTo(other.top() + 1),
        }
    }

    /// Sum of the component multipliers `χ^j` over scales `j < k`.
    fn below(&self, k: i32, xi: T) -> T {
        match self.components() {
            Window::Band { lo, .. } => self.partition.weight(xi, Window::Band { lo, hi: k - 1 }),
            _ => self.partition.weight(xi, Window::UpTo(k - 1)),
        }
    }

    /// Component scales whose `χ^k` may be nonzero at `xi`.
    fn active_scales(&self, xi: T) -> impl Iterator<Item = i32> + '_ {
        let a = xi.abs();
        let kc = if a > T::zero() {
            (a.ln() / self.partition.base.ln()).floor().to_i32().unwrap_or(i32::MIN / 2)
        } else {
            i32::MIN / 2
        };
        let comps = self.components();
        (kc - 1..=kc + 2).filter(move |&k| comps.contains_scale(k))
    }

    /// `V(ξ1, ξ2)`, the real amplitude multiplying `i dW1(ξ1) dW2(ξ2)`.
    pub fn amplitude(&self, part: AreaPart, x1: T, x2: T) -> T {
        let half = T::c(0.5);
        let p = &self.partition;
        match part {
            AreaPart::Plus => {
                let mut s = T::zero();
                for k in self.active_scales(x2) {
                    let c2 = p.chi_j(x2, k);
                    if c2 != T::zero() {
                        s = s + (self.below(k, x1) + half * p.chi_j(x1, k)) * c2;
                    }
                }
                x1 * s
            }
            AreaPart::Minus => {
                let mut diag = T::zero();
                let mut mixed = T::zero();
                for k in self.active_scales(x1) {
                    let c1 = p.chi_j(x1, k);
                    if c1 != T::zero() {
                        diag = diag + c1 * p.chi_j(x2, k);
                        mixed = mixed + self.below(k, x2) * c1;
                    }
                }
                x1 * half * diag + x2 * mixed
            }
        }
    }

    fn support_top(&self) -> T {
        self.partition.base.powi(self.window.top() + 1)
    }

    fn scale_range(&self) -> (i32, i32) {
        (self.window.bottom().unwrap_or(self.window.top()) - 1, self.window.top() + 1)
    }

    /// Spectral density `Π(η) = ∫ ρ(ξ1) ρ(η-ξ1) V(ξ1, η-ξ1)² dξ1` of the area density.
    pub fn profile(&self, part: AreaPart, eta: T) -> Result<QuadOutcome<T>> {
        let Window::Band { lo, hi } = self.window else {
            return Err(invalid("the full bubble profile needs a band window"));
        };
        let m = self.partition.base;
        let top = self.support_top();
        let (a, b) = ((eta - top).max(-top), (eta + top).min(top));
        if !(a < b) {
            return Ok(QuadOutcome::zero());
        }
        let mut breaks = vec![a, b];
        for k in lo - 1..=hi + 1 {
            let mk = m.powi(k);
            breaks.extend([mk, -mk, eta - mk, eta + mk]);
        }
        breaks.retain(|x| *x >= a && *x <= b);
        breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        breaks.dedup();
        let mut f = |x1: T| {
            let x2 = eta - x1;
            let v = self.amplitude(part, x1, x2);
            if v == T::zero() {
                T::zero()
            } else {
                self.density(x1) * self.density(x2) * v * v
            }
        };
        self.inner.piecewise(&mut f, &breaks)
    }

    /// `Π(0) = 2 ∫_0^∞ ρ(ξ)² V(ξ, -ξ)² dξ`, by annuli from the top scale downward.
    pub fn zero_momentum(&self, part: AreaPart) -> Result<T> {
        let m = self.partition.base;
        let (lo, hi) = self.scale_range();
        let bounded = self.window.bottom().is_some();
        if !bounded && !(self.alpha < T::c(0.25)) {
            return Err(invalid("zero-momentum bubble with a cumulative window needs alpha < 1/4"));
        }
        let mut f = |x: T| {
            let v = self.amplitude(part, x, -x);
            if v == T::zero() {
                T::zero()
            } else {
                let r = self.density(x);
                r * r * v * v
            }
        };
        let mut total = QuadOutcome::zero();
        let mut k = hi;
        let mut quiet = 0;
        loop {
            let piece = self.inner.segment(&mut f, m.powi(k - 1), m.powi(k))?;
            let small = piece.abs_integral <= total.abs_integral * T::epsilon() * T::c(0.1);
            total.accumulate(piece);
            k -= 1;
            if bounded && k <= lo {
                break;
            }
            quiet = if small { quiet + 1 } else { 0 };
            if quiet >= 3 {
                break;
            }
            if hi - k > 6000 {
                return Err(Error::Quadrature { achieved: total.abs_integral.to_f64_lossy(), panels: 0 });
            }
        }
        Ok(T::c(2.0) * total.value)
    }

    /// `Var ∫_s^{s+lag} ∂𝓐 = ∫ dη |K_lag(η)|² Π(η)`, `|K_lag|² = 2(1 - cos η lag)/η²`.
    pub fn area_variance(&self, part: AreaPart, lag: T) -> Result<T> {
        let Window::Band { lo, hi } = self.window else {
            return Err(invalid("area variance needs a band window"));
        };
        let m = self.partition.base;
        let top = T::c(2.0) * self.support_top();
        let mut breaks = vec![T::zero(), top];
        for k in lo - 1..=hi + 1 {
            breaks.extend([m.powi(k), T::c(2.0) * m.powi(k)]);
        }
        breaks.retain(|x| *x <= top);
        breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        breaks.dedup();
        let mut err = None;
        let mut f = |eta: T| {
            let k2 = if eta == T::zero() {
                lag * lag
            } else {
                T::c(2.0) * one_minus_cos(eta * lag) / (eta * eta)
            };
            match self.profile(part, eta) {
                Ok(q) => k2 * q.value,
                Err(e) => {
                    err = Some(e);
                    T::zero()
                }
            }
        };
        let out = self.outer.piecewise(&mut f, &breaks)?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(T::c(2.0) * out.value)
    }
}

/// `2π Π_ρ(0)` for the cumulative window `χ^{→ρ}`: the long-time variance rate of the
/// integrated area density, i.e. the one-bubble diagram at zero external momentum.
pub fn bubble_variance<T: Real>(alpha: T, rho: i32, m: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::c(0.25)) {
        return Err(invalid("bubble variance needs alpha in (0, 1/4)"));
    }
    let model = BubbleModel::new(alpha, PartitionOfUnity::new(m, Default::default())?, Window::UpTo(rho))?;
    Ok(T::c(2.0) * T::PI() * model.zero_momentum(AreaPart::Plus)?)
}

/// As [`bubble_variance`] for an arbitrary window and part.
pub fn windowed_bubble_variance<T: Real>(alpha: T, window: Window, p: PartitionOfUnity<T>, part: AreaPart) -> Result<T> {
    Ok(T::c(2.0) * T::PI() * BubbleModel::new(alpha, p, window)?.zero_momentum(part)?)
}

/// `∫_ℝ dη |K_1(η)|² / (1 + λ²(M^ρ/|η|)^{1-4α})`; equals `2π` at `λ = 0`.
pub fn resummation_integral<T: Real>(alpha: T, rho: i32, lambda: T, m: T) -> Result<T> {
    let s = T::one() - T::c(4.0) * alpha;
    let c = lambda * lambda * m.powf(T::c(rho as f64) * s);
    let g = |eta: T| {
        if c == T::zero() {
            T::one()
        } else {
            let e = eta.powf(s);
            e / (e + c)
        }
    };
    let k2 = |eta: T| {
        if eta == T::zero() {
            T::one()
        } else {
            T::c(2.0) * one_minus_cos(eta) / (eta * eta)
        }
    };
    let q = Integrator::<T>::new(20, Tolerance::relative(1e-13));
    let two_pi = T::c(2.0) * T::PI();
    let periods = 64usize;
    let a = two_pi * T::from_usize_lossy(periods);
    let mut body = |eta: T| k2(eta) * g(eta);
    // The first period holds the |η|^{1-4α} onset of the suppression; grade toward 0.
    let mut total = q.graded(&mut body, T::zero(), two_pi, 60)?.value;
    let breaks: Vec<T> = (1..=periods).map(|k| two_pi * T::from_usize_lossy(k)).collect();
    total = total + q.piecewise(&mut body, &breaks)?.value;
    // Tail: 2g/η² on geometric panels, then the oscillating part by parts at a multiple of 2π.
    let mut smooth = |eta: T| T::c(2.0) * g(eta) / (eta * eta);
    let mut lo = a;
    for _ in 0..60 {
        let hi = lo * T::c(2.0);
        total = total + q.segment(&mut smooth, lo, hi)?.value;
        lo = hi;
    }
    let h = |eta: T| T::c(2.0) * g(eta) / (eta * eta);
    let d = a * T::c(1e-4);
    let dh = (h(a + d) - h(a - d)) / (T::c(2.0) * d);
    total = total + dh;
    Ok(T::c(2.0) * total)
}

/// `Π_ρ(0) · ∫ dη |K_1|² / (1 + λ²(M^ρ/|η|)^{1-4α})`.
pub fn resummed_bubble_variance<T: Real>(alpha: T, rho: i32, lambda: T, m: T) -> Result<T> {
    if !(lambda >= T::zero()) {
        return Err(invalid("lambda must be non-negative"));
    }
    let pi0 = bubble_variance(alpha, rho, m)? / (T::c(2.0) * T::PI());
    Ok(pi0 * resummation_integral(alpha, rho, lambda, m)?)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Quadrature,
    Resummed,
    Mc,
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaRow {
    pub alpha: f64,
    pub lambda: f64,
    pub rho: i32,
    pub variance: f64,
    pub stderr: f64,
    pub method: Method,
}

/// Deterministic scan of [`bubble_variance`] (`λ = 0`) or its resummed version.
pub fn quadrature_scan(alpha: f64, lambda: f64, m: f64, rhos: &[i32]) -> Result<Vec<AreaRow>> {
    rhos.par_iter()
        .map(|&rho| {
            let (variance, method) = if lambda == 0.0 {
                (bubble_variance(alpha, rho, m)?, Method::Quadrature)
            } else {
                (resummed_bubble_variance(alpha, rho, lambda, m)?, Method::Resummed)
            };
            Ok(AreaRow { alpha, lambda, rho, variance, stderr: 0.0, method })
        })
        .collect()
}

/// Least-squares slope of `ln variance` against `ρ`.
pub fn divergence_fit(rows: &[AreaRow]) -> Result<LinearFit> {
    let x: Vec<f64> = rows.iter().map(|r| r.rho as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
    linear_fit(&x, &y)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaConfig<T> {
    pub alpha: T,
    /// Coupling; the Monte Carlo estimator samples the free field only, so it must be 0.
    pub lambda: T,
    pub rho_min: i32,
    pub rho_max: i32,
    pub replicas: u64,
    /// Length of the time window of each area increment.
    pub lag: T,
    /// Disjoint increments averaged per replica.
    pub windows_per_path: usize,
    pub part: AreaPart,
    /// Grid, infrared scale, seed and shards; `rho` is overridden by the scan.
    pub sampler: SamplerConfig<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McRow {
    pub rho: i32,
    pub variance: f64,
    pub stderr: f64,
    /// Deterministic value of the same quantity on the continuum.
    pub oracle: f64,
}

const CHUNK: u64 = 64;

/// Monte Carlo estimate of `Var ∫_s^{s+lag} ∂𝓐^{j_min→ρ}` for the free field, per `ρ`.
pub fn mc_area_variance<T: Real>(cfg: &AreaConfig<T>) -> Result<Vec<McRow>> {
    if cfg.replicas < 1000 {
        return Err(Error::Precondition("Monte Carlo area variance needs at least 1000 replicas".into()));
    }
    if cfg.lambda != T::zero() {
        return Err(invalid("the interacting measure is not sampled; use lambda = 0"));
    }
    if cfg.rho_max < cfg.rho_min || cfg.rho_min < cfg.sampler.j_min {
        return Err(invalid("need j_min <= rho_min <= rho_max"));
    }
    let mut rows = Vec::new();
    for rho in cfg.rho_min..=cfg.rho_max {
        let mut sc = cfg.sampler.clone();
        sc.rho = rho;
        let m = sc.partition.base;
        if T::c(2.0) * m.powi(rho + 1) > sc.nyquist() {
            return Err(invalid(format!("grid too coarse for the area density at rho = {rho}")));
        }
        let sampler = PhiSampler::new(sc.clone(), cfg.alpha)?;
        let span = T::c(2.0) * sc.horizon;
        let k = cfg.windows_per_path.max(1);
        let step = span / T::from_usize_lossy(k);
        if cfg.lag > step {
            return Err(invalid("increment windows overlap; reduce lag or windows_per_path"));
        }
        let (lo, hi) = (sc.j_min - 1, rho + 1);
        let chunks: Vec<u64> = (0..cfg.replicas.div_ceil(CHUNK)).collect();
        let parts = chunks
            .par_iter()
            .map(|&c| {
                let mut w = Welford::new();
                for r in c * CHUNK..((c + 1) * CHUNK).min(cfg.replicas) {
                    let f1 = sampler.stationary(2 * r);
                    let f2 = sampler.stationary(2 * r + 1);
                    let d1 = decompose(&f1, lo, hi, &sc.partition)?;
                    let d2 = decompose(&f2, lo, hi, &sc.partition)?;
                    let dens = singular_part(&d1, &d2, cfg.part)?;
                    let integ = BandLimitedIntegral::new(&dens);
                    let mut acc = T::zero();
                    for i in 0..k {
                        let s = -sc.horizon + step * T::from_usize_lossy(i);
                        let a = integ.integral(s, s + cfg.lag);
                        acc = acc + a * a;
                    }
                    w.push(acc / T::from_usize_lossy(k));
                }
                Ok(w)
            })
            .collect::<Result<Vec<Welford<T>>>>()?;
        let total = merge_tree(&parts);
        let model = BubbleModel::new(cfg.alpha, sc.partition, Window::Band { lo: sc.j_min, hi: rho })?;
        let oracle = model.area_variance(cfg.part, cfg.lag)?;
        rows.push(McRow {
            rho,
            variance: total.mean().to_f64_lossy(),
            stderr: total.std_error().to_f64_lossy(),
            oracle: oracle.to_f64_lossy(),
        });
    }
    Ok(rows)
}
