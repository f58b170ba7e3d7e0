//! M-adic intervals, scale distances and the averaging / secondary / restriction operators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::GridField;
use crate::quad::Integrator;
use crate::scalar::Real;

/// The interval `[k M^-j, (k+1) M^-j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MadicInterval {
    pub scale: i32,
    pub index: i64,
}

/// Exact length `num / den` of an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactLength {
    pub num: u128,
    pub den: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceConfig<T> {
    pub base: u32,
    pub rho: i32,
    /// The volume is `[-half_width, half_width]`.
    pub half_width: T,
}

impl<T: Real> PhaseSpaceConfig<T> {
    pub fn new(base: u32, rho: i32, half_width: T) -> Result<Self> {
        if base < 2 {
            return Err(invalid("interval tree needs an integer base M >= 2"));
        }
        if rho < 0 {
            return Err(invalid("cutoff scale must be non-negative"));
        }
        if !(half_width > T::zero()) {
            return Err(invalid("volume half-width must be positive"));
        }
        Ok(Self { base, rho, half_width })
    }

    pub fn m(&self) -> T {
        T::from_u32(self.base).expect("small base")
    }
}

impl MadicInterval {
    pub fn new(scale: i32, index: i64) -> Self {
        Self { scale, index }
    }

    pub fn length<T: Real>(&self, m: u32) -> T {
        T::from_u32(m).expect("small base").powi(-self.scale)
    }

    pub fn length_exact(&self, m: u32) -> ExactLength {
        let p = (m as u128).pow(self.scale.unsigned_abs());
        if self.scale >= 0 {
            ExactLength { num: 1, den: p }
        } else {
            ExactLength { num: p, den: 1 }
        }
    }

    pub fn left<T: Real>(&self, m: u32) -> T {
        T::from_i64(self.index).expect("index representable") * self.length::<T>(m)
    }

    pub fn right<T: Real>(&self, m: u32) -> T {
        T::from_i64(self.index + 1).expect("index representable") * self.length::<T>(m)
    }

    pub fn contains<T: Real>(&self, x: T, m: u32) -> bool {
        x >= self.left(m) && x < self.right(m)
    }

    /// The unique interval of scale `j - 1` containing this one.
    pub fn parent(&self, m: u32) -> Self {
        Self { scale: self.scale - 1, index: self.index.div_euclid(m as i64) }
    }

    /// The ancestor at a coarser scale `j' <= j`.
    pub fn ancestor(&self, scale: i32, m: u32) -> Self {
        assert!(scale <= self.scale, "ancestor must be at a coarser scale");
        let steps = (self.scale - scale) as u32;
        Self { scale, index: self.index.div_euclid((m as i64).pow(steps)) }
    }

    /// Chain of ancestors from the parent down to scale `j'`, finest first.
    pub fn ancestors(&self, scale: i32, m: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = *self;
        while cur.scale > scale {
            cur = cur.parent(m);
            out.push(cur);
        }
        out
    }

    /// The `M^(j'-j)` intervals of finer scale `j'` contained in this one, left to right.
    pub fn descendants(&self, scale: i32, m: u32) -> Vec<Self> {
        assert!(scale >= self.scale, "descendants must be at a finer scale");
        let count = (m as i64).pow((scale - self.scale) as u32);
        (0..count).map(|c| Self { scale, index: self.index * count + c }).collect()
    }

    pub fn children(&self, m: u32) -> Vec<Self> {
        self.descendants(self.scale + 1, m)
    }
}

/// The interval of scale `j` containing `x`.
pub fn interval_of_point<T: Real>(x: T, j: i32, m: u32) -> MadicInterval {
    let mj = T::from_u32(m).expect("small base").powi(j);
    let mut k = (x * mj).floor().to_i64().expect("index in range");
    // Guard against rounding placing x just outside the computed cell.
    let iv = MadicInterval::new(j, k);
    if x < iv.left::<T>(m) {
        k -= 1;
    } else if x >= iv.right::<T>(m) {
        k += 1;
    }
    MadicInterval::new(j, k)
}

/// Distance of two same-scale intervals measured in units of scale `j <= scale`.
pub fn dj_distance<T: Real>(a: &MadicInterval, b: &MadicInterval, j: i32, m: u32) -> Result<T> {
    if a.scale != b.scale {
        return Err(invalid("distance needs intervals of equal scale"));
    }
    if j > a.scale {
        return Err(invalid("reference scale must not be finer than the intervals"));
    }
    let gap = T::from_i64((b.index - a.index).abs()).expect("index gap");
    Ok(T::from_u32(m).expect("small base").powi(j - a.scale) * gap)
}

fn grid_slice<T: Real>(f: &GridField<T>, a: T, b: T) -> (usize, usize) {
    // Grid indices i with a <= t_i < b, boundary points snapped up to rounding.
    let n = f.len();
    let first_at_or_after = |x: T| -> usize {
        let r = ((x - f.origin) / f.spacing - T::c(1e-9)).ceil();
        if r <= T::zero() {
            0
        } else {
            r.to_usize().unwrap_or(n).min(n)
        }
    };
    (first_at_or_after(a), first_at_or_after(b))
}

fn sample_at<T: Real>(f: &GridField<T>, t: T, i_near: usize, i_other: usize) -> T {
    // Linear interpolation or extrapolation through two grid samples.
    let (t0, t1) = (f.time(i_near), f.time(i_other));
    let (v0, v1) = (f.values[i_near], f.values[i_other]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Mean of `f` over `Δ` by the composite trapezoid rule on the grid points inside `Δ`.
///
/// When a boundary of `Δ` is not a grid point the sampled path is continued linearly.
pub fn average_on_interval<T: Real>(f: &GridField<T>, iv: &MadicInterval, m: u32) -> Result<T> {
    let (a, b) = (iv.left::<T>(m), iv.right::<T>(m));
    let (i0, i1) = grid_slice(f, a, b);
    if i1 < i0 + 2 {
        return Err(Error::Coverage(format!(
            "interval [{a}, {b}) holds fewer than two grid points"
        )));
    }
    let mut s = T::zero();
    for i in i0..i1 - 1 {
        s = s + (f.values[i] + f.values[i + 1]) * T::c(0.5) * f.spacing;
    }
    let (ta, tb) = (f.time(i0), f.time(i1 - 1));
    if ta > a {
        let fa = if i0 > 0 { sample_at(f, a, i0, i0 - 1) } else { sample_at(f, a, i0, i0 + 1) };
        s = s + (fa + f.values[i0]) * T::c(0.5) * (ta - a);
    }
    if tb < b {
        let fb = if i1 < f.len() { sample_at(f, b, i1 - 1, i1) } else { sample_at(f, b, i1 - 1, i1 - 2) };
        s = s + (fb + f.values[i1 - 1]) * T::c(0.5) * (b - tb);
    }
    Ok(s / (b - a))
}

/// The signed weight `δ^k(x; v) ∈ [-1, 1]` representing the secondary field as
/// `∫_Δ f'(v) δ^k(x; v) dv` over the interval `Δ` containing `x`.
pub fn secondary_kernel<T: Real>(x: T, v: T, iv: &MadicInterval, m: u32) -> T {
    let (a, b) = (iv.left::<T>(m), iv.right::<T>(m));
    let len = b - a;
    if v < x {
        (v - a) / len
    } else if v > x {
        (v - b) / len
    } else {
        T::zero()
    }
}

/// `f(x) - mean_{Δ^k_x} f` evaluated through the derivative representation.
pub fn secondary_from_derivative<T: Real>(
    fprime: impl Fn(T) -> T,
    x: T,
    k: i32,
    m: u32,
    quad: &Integrator<T>,
) -> Result<T> {
    let iv = interval_of_point(x, k, m);
    let (a, b) = (iv.left::<T>(m), iv.right::<T>(m));
    let mut g = |v: T| fprime(v) * secondary_kernel(x, v, &iv, m);
    let left = quad.segment(&mut g, a, x)?;
    let right = quad.segment(&mut g, x, b)?;
    Ok(left.value + right.value)
}

/// The secondary field `δ^k f(x) = f(x) - f(Δ^k_x)` on the grid of `f`.
pub fn secondary_field<T: Real>(f: &GridField<T>, k: i32, m: u32) -> Result<GridField<T>> {
    let cell = T::from_u32(m).expect("small base").powi(-k);
    if f.spacing * T::c(2.0) > cell {
        return Err(Error::Coverage(format!("grid spacing {} too coarse for scale {k}", f.spacing)));
    }
    let mut cache: Vec<(MadicInterval, T)> = Vec::new();
    let mut out = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        let x = f.time(i);
        let iv = interval_of_point(x, k, m);
        let avg = match cache.iter().find(|(c, _)| *c == iv) {
            Some((_, a)) => *a,
            None => {
                let a = average_on_interval(f, &iv, m)?;
                cache.push((iv, a));
                a
            }
        };
        out.push(f.values[i] - avg);
    }
    Ok(f.with_values(out))
}

/// Splits `f_j` on a coarse interval `Δ^h` into the pieces `1_{Δ^j} f_j`, one per `Δ^j ⊂ Δ^h`.
pub fn restrict_high_momentum<T: Real>(
    f: &GridField<T>,
    coarse: &MadicInterval,
    j: i32,
    m: u32,
) -> Result<Vec<GridField<T>>> {
    if coarse.scale >= j {
        return Err(invalid("restriction needs a coarse scale strictly below the field scale"));
    }
    Ok(coarse
        .descendants(j, m)
        .iter()
        .map(|d| {
            let values = (0..f.len())
                .map(|i| if d.contains(f.time(i), m) { f.values[i] } else { T::zero() })
                .collect();
            f.with_values(values)
        })
        .collect())
}
