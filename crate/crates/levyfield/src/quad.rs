//! Gauss–Legendre rules and composite integration with panel doubling.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the rule by Newton iteration on the Legendre three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, refined in the target precision.
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut x = T::c(guess);
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::c(2.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != T::zero() {
                dp = d;
            }
            let w = T::c(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Single application of the rule on `[a, b]`; returns `(∫f, ∫|f|)`.
    pub fn apply<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T) -> (T, T) {
        let half = (b - a) * T::c(0.5);
        let mid = (a + b) * T::c(0.5);
        let mut s = T::zero();
        let mut sa = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * *x);
            s = s + *w * v;
            sa = sa + *w * v.abs();
        }
        (s * half, sa * half.abs())
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::c(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { T::one() } else { p1 };
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p, d)
}

/// Stopping rule: accept when `|I_2p - I_p| <= max(abs, rel * ∫|f|)`.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_doublings: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-300, rel: 1e-12, max_doublings: 16 }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { rel, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOutcome<T> {
    pub value: T,
    pub error: T,
    /// Integral of the absolute integrand, the reference scale for relative accuracy.
    pub abs_integral: T,
    pub evaluations: usize,
}

impl<T: Real> QuadOutcome<T> {
    pub fn zero() -> Self {
        Self { value: T::zero(), error: T::zero(), abs_integral: T::zero(), evaluations: 0 }
    }

    pub fn accumulate(&mut self, other: QuadOutcome<T>) {
        self.value = self.value + other.value;
        self.error = self.error + other.error;
        self.abs_integral = self.abs_integral + other.abs_integral;
        self.evaluations += other.evaluations;
    }

    pub fn scaled(mut self, s: T) -> Self {
        self.value = self.value * s;
        self.error = self.error * s.abs();
        self.abs_integral = self.abs_integral * s.abs();
        self
    }
}

/// Composite Gauss–Legendre integrator with panel doubling.
#[derive(Clone, Debug)]
pub struct Integrator<T> {
    rule: GaussLegendre<T>,
    pub tol: Tolerance,
}

impl<T: Real> Integrator<T> {
    pub fn new(points_per_panel: usize, tol: Tolerance) -> Self {
        Self { rule: GaussLegendre::new(points_per_panel), tol }
    }

    pub fn with_tolerance(tol: Tolerance) -> Self {
        Self::new(20, tol)
    }

    pub fn rule(&self) -> &GaussLegendre<T> {
        &self.rule
    }

    fn composite<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T, panels: usize) -> (T, T) {
        let h = (b - a) / T::from_usize_lossy(panels);
        let mut s = T::zero();
        let mut sa = T::zero();
        for p in 0..panels {
            let lo = a + h * T::from_usize_lossy(p);
            let hi = if p + 1 == panels { b } else { lo + h };
            let (v, va) = self.rule.apply(f, lo, hi);
            s = s + v;
            sa = sa + va;
        }
        (s, sa)
    }

    /// Integrates a smooth function on `[a, b]`.
    pub fn segment<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T) -> Result<QuadOutcome<T>> {
        self.segment_with_floor(f, a, b, T::zero())
    }

    /// As [`Self::segment`], accepting any error below `floor` as well.
    fn segment_with_floor<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T, floor: T) -> Result<QuadOutcome<T>> {
        if a == b {
            return Ok(QuadOutcome::zero());
        }
        let n = self.rule.order();
        let mut panels = 1usize;
        let (mut prev, _) = self.composite(f, a, b, panels);
        let mut evals = n;
        let mut last_err = f64::INFINITY;
        for _ in 0..self.tol.max_doublings {
            panels *= 2;
            let (cur, cur_abs) = self.composite(f, a, b, panels);
            evals += n * panels;
            let err = (cur - prev).abs();
            let target = T::c(self.tol.abs).max(T::c(self.tol.rel) * cur_abs).max(floor);
            last_err = err.to_f64_lossy();
            if !last_err.is_finite() {
                break;
            }
            if err <= target {
                return Ok(QuadOutcome { value: cur, error: err, abs_integral: cur_abs, evaluations: evals });
            }
            prev = cur;
        }
        Err(Error::Quadrature { achieved: last_err, panels })
    }

    /// Integrates over consecutive segments of a sorted breakpoint list. The relative tolerance
    /// applies to the whole range: a coarse first pass sets an absolute floor for every piece.
    pub fn piecewise<F: FnMut(T) -> T>(&self, f: &mut F, breaks: &[T]) -> Result<QuadOutcome<T>> {
        let mut coarse = T::zero();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                coarse = coarse + self.composite(f, w[0], w[1], 2).1;
            }
        }
        let floor = T::c(self.tol.rel) * coarse * T::c(0.1);
        let mut out = QuadOutcome::zero();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.accumulate(self.segment_with_floor(f, w[0], w[1], floor)?);
            }
        }
        Ok(out)
    }

    /// Integrates on the segment between `singular` and `regular`, using geometrically shrinking
    /// panels toward `singular` where the integrand may carry an integrable power singularity.
    /// The innermost sliver of relative width `2^-levels` is dropped.
    pub fn graded<F: FnMut(T) -> T>(
        &self,
        f: &mut F,
        singular: T,
        regular: T,
        levels: u32,
    ) -> Result<QuadOutcome<T>> {
        let mut out = QuadOutcome::zero();
        let len = regular - singular;
        let mut outer = T::one();
        for _ in 0..levels {
            let inner = outer * T::c(0.5);
            let (x0, x1) = (singular + len * inner, singular + len * outer);
            let piece = self.segment(f, x0, x1)?;
            let negligible = piece.abs_integral <= out.abs_integral * T::epsilon();
            out.accumulate(piece);
            if negligible {
                break;
            }
            outer = inner;
        }
        Ok(out)
    }
}

impl<T: Real> Default for Integrator<T> {
    fn default() -> Self {
        Self::new(20, Tolerance::default())
    }
}

/// Sorted, de-duplicated copy of a breakpoint list restricted to `[lo, hi]` (endpoints included).
pub fn clip_breaks<T: Real>(raw: &[T], lo: T, hi: T) -> Vec<T> {
    let mut v: Vec<T> = raw.iter().copied().filter(|x| *x > lo && *x < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    v.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (a.abs() + b.abs()));
    v
}
