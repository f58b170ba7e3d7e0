//! Smooth dyadic (base `M`) partition of unity in frequency.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Shape of the cut function on its transition layer `1 <= |ξ| <= M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `C^∞` step built from `exp(-1/u)`.
    #[default]
    Smooth,
    /// Piecewise linear ramp; continuous only.
    Linear,
    /// Smooth step with a dent in the plateau. Breaks the partition identity on purpose.
    Gapped,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "smooth" => Ok(Profile::Smooth),
            "linear" => Ok(Profile::Linear),
            "gapped" => Ok(Profile::Gapped),
            other => Err(format!("unknown profile '{other}' (smooth|linear|gapped)")),
        }
    }
}

/// Frequency window built from the scale pieces `χ^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Single(i32),
    /// Scales `lo..=hi`; empty when `hi < lo`.
    Band { lo: i32, hi: i32 },
    /// All scales up to and including the cutoff.
    UpTo(i32),
}

impl Window {
    pub fn top(&self) -> i32 {
        match *self {
            Window::Single(j) => j,
            Window::Band { hi, .. } => hi,
            Window::UpTo(b) => b,
        }
    }

    pub fn bottom(&self) -> Option<i32> {
        match *self {
            Window::Single(j) => Some(j),
            Window::Band { lo, .. } => Some(lo),
            Window::UpTo(_) => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(*self, Window::Band { lo, hi } if hi < lo)
    }

    pub fn contains_scale(&self, j: i32) -> bool {
        match *self {
            Window::Single(s) => s == j,
            Window::Band { lo, hi } => lo <= j && j <= hi,
            Window::UpTo(b) => j <= b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity<T> {
    pub base: T,
    pub profile: Profile,
}

/// `exp(-1/u) / (exp(-1/u) + exp(-1/(1-u)))`, clamped to `[0, 1]`.
pub fn smooth_step<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::one();
    }
    // Ratio form avoids underflow of both exponentials near the ends.
    let d = (T::one() / u - T::one() / (T::one() - u)).exp();
    T::one() / (T::one() + d)
}

impl<T: Real> PartitionOfUnity<T> {
    pub fn new(base: T, profile: Profile) -> Result<Self> {
        if !(base > T::one()) || !base.is_finite() {
            return Err(invalid("partition base M must be finite and > 1"));
        }
        Ok(Self { base, profile })
    }

    pub fn smooth(base: T) -> Self {
        Self { base, profile: Profile::Smooth }
    }

    /// The cut function `χ`: 1 on `[-1, 1]`, 0 outside `[-M, M]`.
    pub fn cut(&self, xi: T) -> T {
        let a = xi.abs();
        let m = self.base;
        let u = (m - a) / (m - T::one());
        match self.profile {
            Profile::Smooth => smooth_step(u),
            Profile::Linear => u.max(T::zero()).min(T::one()),
            Profile::Gapped => {
                let s = (a - T::c(0.5)) / T::c(0.2);
                let dent = if s.abs() < T::one() {
                    T::c(0.5) * (T::one() - T::one() / (T::one() - s * s)).exp()
                } else {
                    T::zero()
                };
                smooth_step(u) - dent
            }
        }
    }

    /// `χ^j(ξ) = χ(M^-j ξ) - χ(M^(1-j) ξ)`, supported in `M^(j-1) < |ξ| < M^(j+1)`.
    pub fn chi_j(&self, xi: T, j: i32) -> T {
        self.cut(xi * self.base.powi(-j)) - self.cut(xi * self.base.powi(1 - j))
    }

    /// Telescoped window weight.
    pub fn weight(&self, xi: T, w: Window) -> T {
        match w {
            Window::Single(j) => self.chi_j(xi, j),
            Window::Band { lo, hi } => {
                if hi < lo {
                    T::zero()
                } else {
                    self.cut(xi * self.base.powi(-hi)) - self.cut(xi * self.base.powi(1 - lo))
                }
            }
            Window::UpTo(b) => self.cut(xi * self.base.powi(-b)),
        }
    }

    /// Positive-frequency support `(lo, hi)` of a window; `lo = 0` for cumulative windows.
    pub fn support(&self, w: Window) -> (T, T) {
        let m = self.base;
        match w {
            Window::Single(j) => (m.powi(j - 1), m.powi(j + 1)),
            Window::Band { lo, hi } => (m.powi(lo - 1), m.powi(hi + 1)),
            Window::UpTo(b) => (T::zero(), m.powi(b + 1)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionRow {
    pub decade_lo: f64,
    pub decade_hi: f64,
    pub samples: usize,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub rows: Vec<PartitionRow>,
    pub max_deviation: f64,
    /// Every sampled `χ^j` lies in `[0, 1]`.
    pub range_ok: bool,
    /// Every sampled `χ^j` vanishes outside its annulus.
    pub support_ok: bool,
}

/// Samples `Σ_{j=jmin}^{jmax} χ^j(ξ)` on a log grid of `M^(jmin+1) <= |ξ| <= M^(jmax-1)`
/// and records the deviation from 1, grouped by decade of `ξ`.
pub fn partition_check<T: Real>(
    p: &PartitionOfUnity<T>,
    jmin: i32,
    jmax: i32,
    samples_per_decade: usize,
) -> Result<PartitionReport> {
    if jmax < jmin + 2 {
        return Err(invalid("need jmax >= jmin + 2 for a non-empty interior range"));
    }
    let m = p.base.to_f64_lossy();
    let lo = m.powi(jmin + 1).log10();
    let hi = m.powi(jmax - 1).log10();
    let total = (((hi - lo) * samples_per_decade as f64).ceil() as usize).max(2);
    let mut rows: Vec<PartitionRow> = Vec::new();
    let mut range_ok = true;
    let mut support_ok = true;
    let mut max_dev = 0.0f64;
    for s in 0..=total {
        let e = lo + (hi - lo) * s as f64 / total as f64;
        for sign in [1.0, -1.0] {
            let xi = T::c(sign * 10f64.powf(e));
            let mut sum = T::zero();
            for j in jmin..=jmax {
                let c = p.chi_j(xi, j);
                if c < -T::epsilon() || c > T::one() + T::epsilon() {
                    range_ok = false;
                }
                let (a, b) = p.support(Window::Single(j));
                let ax = xi.abs();
                if (ax <= a || ax >= b) && c != T::zero() {
                    support_ok = false;
                }
                sum = sum + c;
            }
            let dev = (sum - T::one()).abs().to_f64_lossy();
            max_dev = max_dev.max(dev);
            let d0 = e.floor();
            match rows.last_mut() {
                Some(r) if r.decade_lo == d0 => {
                    r.samples += 1;
                    r.max_deviation = r.max_deviation.max(dev);
                }
                _ => rows.push(PartitionRow { decade_lo: d0, decade_hi: d0 + 1.0, samples: 1, max_deviation: dev }),
            }
        }
    }
    Ok(PartitionReport { rows, max_deviation: max_dev, range_ok, support_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cut_plateau_and_support() {
        let p = PartitionOfUnity::<f64>::smooth(2.0);
        assert_eq!(p.cut(0.7), 1.0);
        assert_eq!(p.cut(-1.0), 1.0);
        assert_eq!(p.cut(2.0), 0.0);
        assert!(p.cut(1.5) > 0.0 && p.cut(1.5) < 1.0);
    }

    #[test]
    fn smooth_step_is_symmetric() {
        for u in [0.1, 0.25, 0.4] {
            let a: f64 = smooth_step(u);
            let b: f64 = smooth_step(1.0 - u);
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }
}
