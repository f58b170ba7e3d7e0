//! Gaussian moments by pairing enumeration, and the simple and spatial pairing bounds.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::SpectralKernel;
use crate::partition::{PartitionOfUnity, Window};
use crate::scalar::Real;

pub const MAX_PAIRING_SIZE: usize = 16;
/// Largest index set for the exhaustive partial-pairing sum in the spatial bound.
pub const MAX_SPATIAL_INDICES: usize = 14;

/// A perfect pairing of `0..2N`, pairs `(i, j)` with `i < j`, sorted by first element.
pub type Pairing = Vec<(u8, u8)>;

fn visit_pairings(free: &mut Vec<u8>, current: &mut Pairing, out: &mut dyn FnMut(&Pairing)) {
    if free.is_empty() {
        out(current);
        return;
    }
    let first = free.remove(0);
    for k in 0..free.len() {
        let partner = free.remove(k);
        current.push((first, partner));
        visit_pairings(free, current, out);
        current.pop();
        free.insert(k, partner);
    }
    free.insert(0, first);
}

/// Calls `f` on every perfect pairing of `0..two_n` in canonical (lexicographic) order.
pub fn for_each_pairing(two_n: usize, mut f: impl FnMut(&Pairing)) -> Result<()> {
    if two_n % 2 != 0 {
        return Err(invalid("pairings need an even number of indices"));
    }
    if two_n > MAX_PAIRING_SIZE {
        return Err(Error::SizeLimit(format!("{two_n} indices exceed the exhaustive limit {MAX_PAIRING_SIZE}")));
    }
    let mut free: Vec<u8> = (0..two_n as u8).collect();
    visit_pairings(&mut free, &mut Vec::new(), &mut f);
    Ok(())
}

pub fn enumerate_pairings(two_n: usize) -> Result<Vec<Pairing>> {
    let mut all = Vec::new();
    for_each_pairing(two_n, |p| all.push(p.clone()))?;
    Ok(all)
}

pub fn double_factorial_odd(two_n: usize) -> u64 {
    (1..two_n as u64).step_by(2).product()
}

/// Centred Gaussian vector given by its covariance matrix (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianVector<T> {
    dim: usize,
    cov: Vec<T>,
}

impl<T: Real> GaussianVector<T> {
    /// Requires exact symmetry and eigenvalues `>= -1e-12 · trace`.
    pub fn new(dim: usize, cov: Vec<T>) -> Result<Self> {
        if cov.len() != dim * dim {
            return Err(invalid("covariance must be dim × dim"));
        }
        for i in 0..dim {
            for j in 0..i {
                if cov[i * dim + j] != cov[j * dim + i] {
                    return Err(invalid("covariance must be exactly symmetric"));
                }
            }
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance entries must be finite"));
        }
        let g = Self { dim, cov };
        let trace: f64 = (0..dim).map(|i| g.get(i, i).to_f64_lossy()).sum();
        if g.min_eigenvalue() < -1e-12 * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(invalid("covariance is not positive semidefinite"));
        }
        Ok(g)
    }

    /// Skips validation; for interpolated covariances whose positivity is itself under test.
    pub fn unchecked(dim: usize, cov: Vec<T>) -> Self {
        assert_eq!(cov.len(), dim * dim);
        Self { dim, cov }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        Self::new(dim, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.cov[i * self.dim + j]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).to_f64_lossy());
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `⟨X_{i_1} … X_{i_k}⟩` by Wick's formula; zero for odd `k`.
    pub fn moment(&self, indices: &[usize]) -> Result<T> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim) {
            return Err(invalid(format!("index {bad} out of range for dimension {}", self.dim)));
        }
        if indices.len() % 2 == 1 {
            return Ok(T::zero());
        }
        if indices.len() > MAX_PAIRING_SIZE {
            return Err(Error::SizeLimit(format!("moments of order > {MAX_PAIRING_SIZE} are out of contract")));
        }
        Ok(self.pair_sum(indices))
    }

    fn pair_sum(&self, idx: &[usize]) -> T {
        if idx.is_empty() {
            return T::one();
        }
        let first = idx[0];
        let rest = &idx[1..];
        let mut total = T::zero();
        let mut buf = Vec::with_capacity(rest.len().saturating_sub(1));
        for k in 0..rest.len() {
            let c = self.get(first, rest[k]);
            if c == T::zero() {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(&rest[..k]);
            buf.extend_from_slice(&rest[k + 1..]);
            total = total + c * self.pair_sum(&buf);
        }
        total
    }

    /// `⟨X_i X_j⟩` summed over a pairing of `indices`.
    pub fn pairing_value(&self, indices: &[usize], pairing: &Pairing) -> T {
        pairing.iter().fold(T::one(), |acc, &(a, b)| acc * self.get(indices[a as usize], indices[b as usize]))
    }
}

/// `⟨x^a⟩` for multi-indices `a`, memoised across calls (Isserlis recursion).
pub struct MomentCache<'a, T> {
    g: &'a GaussianVector<T>,
    memo: HashMap<Vec<u32>, T>,
}

impl<'a, T: Real> MomentCache<'a, T> {
    pub fn new(g: &'a GaussianVector<T>) -> Self {
        Self { g, memo: HashMap::new() }
    }

    pub fn monomial(&mut self, powers: &[u32]) -> T {
        let total: u32 = powers.iter().sum();
        if total % 2 == 1 {
            return T::zero();
        }
        if total == 0 {
            return T::one();
        }
        if let Some(v) = self.memo.get(powers) {
            return *v;
        }
        let i = powers.iter().position(|&p| p > 0).expect("nonzero degree");
        let mut rest = powers.to_vec();
        rest[i] -= 1;
        let mut acc = T::zero();
        for j in 0..rest.len() {
            if rest[j] == 0 {
                continue;
            }
            let c = self.g.get(i, j);
            if c == T::zero() {
                continue;
            }
            let mult = T::c(rest[j] as f64);
            rest[j] -= 1;
            acc = acc + mult * c * self.monomial(&rest);
            rest[j] += 1;
        }
        self.memo.insert(powers.to_vec(), acc);
        acc
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimpleBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

/// `|⟨X_1…X_2N⟩| <= K^{-N} Π_{i<2N} (1 + K Σ_{j>i} |⟨X_i X_j⟩|)` over all components of `g`.
pub fn check_simple_wick_bound<T: Real>(g: &GaussianVector<T>, k: T) -> Result<SimpleBoundReport> {
    let d = g.dim();
    if d % 2 == 1 || d > 12 {
        return Err(invalid("simple bound needs an even dimension <= 12"));
    }
    if !(k > T::zero()) {
        return Err(invalid("K must be positive"));
    }
    let idx: Vec<usize> = (0..d).collect();
    let lhs = g.moment(&idx)?.abs();
    let mut rhs = k.powi(-(d as i32 / 2));
    for i in 0..d.saturating_sub(1) {
        let s: T = (i + 1..d).map(|j| g.get(i, j).abs()).sum();
        rhs = rhs * (T::one() + k * s);
    }
    let (lhs, rhs) = (lhs.to_f64_lossy(), rhs.to_f64_lossy());
    Ok(SimpleBoundReport { lhs, rhs, passed: lhs <= rhs * (1.0 + 1e-12) })
}

/// Gaussian variables attached to intervals: variable `v` lives in interval `interval_of[v]`.
#[derive(Clone, Debug)]
pub struct SpatialInstance<T> {
    pub covariance: GaussianVector<T>,
    pub interval_of: Vec<usize>,
    pub intervals: usize,
}

impl<T: Real> SpatialInstance<T> {
    pub fn new(covariance: GaussianVector<T>, interval_of: Vec<usize>) -> Result<Self> {
        if interval_of.len() != covariance.dim() {
            return Err(invalid("one interval label per variable"));
        }
        let intervals = interval_of.iter().max().map_or(0, |m| m + 1);
        Ok(Self { covariance, interval_of, intervals })
    }

    /// `K_Δ = Σ_{n ∈ Δ} Σ_{(Δ',n') ≠ (Δ,n)} |⟨X_{(Δ,n)} X_{(Δ',n')}⟩|`.
    pub fn interval_kernel(&self, delta: usize) -> T {
        let d = self.covariance.dim();
        let mut s = T::zero();
        for a in (0..d).filter(|&a| self.interval_of[a] == delta) {
            for b in (0..d).filter(|&b| b != a) {
                s = s + self.covariance.get(a, b).abs();
            }
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpatialOrder {
    pub pairs: usize,
    pub pairings: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpatialBoundReport {
    pub anchor: usize,
    pub sup_kernel: f64,
    pub orders: Vec<SpatialOrder>,
    pub passed: bool,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let n = self.0[c];
            self.0[c] = r;
            c = n;
        }
        r
    }
}

fn connecting<T: Real>(inst: &SpatialInstance<T>, pairs: &[(usize, usize)], anchor: usize) -> bool {
    let mut dsu = Dsu((0..inst.intervals).collect());
    let mut touched = vec![false; inst.intervals];
    for &(a, b) in pairs {
        let (x, y) = (inst.interval_of[a], inst.interval_of[b]);
        touched[x] = true;
        touched[y] = true;
        let (rx, ry) = (dsu.find(x), dsu.find(y));
        dsu.0[rx] = ry;
    }
    if !touched[anchor] {
        return false;
    }
    let root = dsu.find(anchor);
    (0..inst.intervals).all(|v| !touched[v] || dsu.find(v) == root)
}

fn visit_partial(
    i: usize,
    used: &mut Vec<bool>,
    pairs: &mut Vec<(usize, usize)>,
    f: &mut dyn FnMut(&[(usize, usize)]),
) {
    let d = used.len();
    if i == d {
        f(pairs);
        return;
    }
    if used[i] {
        visit_partial(i + 1, used, pairs, f);
        return;
    }
    visit_partial(i + 1, used, pairs, f);
    used[i] = true;
    for j in i + 1..d {
        if !used[j] {
            used[j] = true;
            pairs.push((i, j));
            visit_partial(i + 1, used, pairs, f);
            pairs.pop();
            used[j] = false;
        }
    }
    used[i] = false;
}

/// For each number of pairs `N`, the sum over connecting partial pairings that touch `anchor`
/// of `Π |⟨X X'⟩|`, against `(1 + sup_Δ K_Δ)^{3N}`.
pub fn check_spatial_wick_bound<T: Real>(inst: &SpatialInstance<T>, anchor: usize) -> Result<SpatialBoundReport> {
    let d = inst.covariance.dim();
    if d > MAX_SPATIAL_INDICES || inst.intervals > 10 {
        return Err(Error::SizeLimit(format!(
            "instance too large: {d} variables on {} intervals (limits {MAX_SPATIAL_INDICES}, 10)",
            inst.intervals
        )));
    }
    if anchor >= inst.intervals {
        return Err(invalid("anchor interval out of range"));
    }
    let sup = (0..inst.intervals).map(|i| inst.interval_kernel(i)).fold(T::zero(), |a, b| a.max(b));
    let mut lhs = vec![T::zero(); d / 2 + 1];
    let mut counts = vec![0u64; d / 2 + 1];
    let mut used = vec![false; d];
    visit_partial(0, &mut used, &mut Vec::new(), &mut |pairs| {
        if pairs.is_empty() || !connecting(inst, pairs, anchor) {
            return;
        }
        let v = pairs.iter().fold(T::one(), |acc, &(a, b)| acc * inst.covariance.get(a, b).abs());
        lhs[pairs.len()] = lhs[pairs.len()] + v;
        counts[pairs.len()] += 1;
    });
    let mut orders = Vec::new();
    for n in 1..=d / 2 {
        let rhs = (T::one() + sup).powi(3 * n as i32).to_f64_lossy();
        let l = lhs[n].to_f64_lossy();
        orders.push(SpatialOrder { pairs: n, pairings: counts[n], lhs: l, rhs, passed: l <= rhs * (1.0 + 1e-12) });
    }
    let passed = orders.iter().all(|o| o.passed);
    Ok(SpatialBoundReport { anchor, sup_kernel: sup.to_f64_lossy(), orders, passed })
}

/// Two-scale instance from the multiscale field: one variable `φ^0(y)` per coarse interval and
/// one variable `φ^0(x) + φ^1(x)` per fine interval; coarse intervals are listed first.
pub fn two_scale_instance<T: Real>(
    alpha: T,
    partition: PartitionOfUnity<T>,
    coarse: &[T],
    fine: &[T],
) -> Result<SpatialInstance<T>> {
    let k0 = SpectralKernel::phi(alpha, partition.clone(), Window::Single(0))?;
    let k01 = SpectralKernel::phi(alpha, partition, Window::Band { lo: 0, hi: 1 })?;
    let pts: Vec<(T, bool)> = coarse.iter().map(|&x| (x, false)).chain(fine.iter().map(|&x| (x, true))).collect();
    let d = pts.len();
    let mut cov = vec![T::zero(); d * d];
    for a in 0..d {
        for b in a..d {
            let r = (pts[a].0 - pts[b].0).abs();
            let k = if pts[a].1 && pts[b].1 { &k01 } else { &k0 };
            let v = k.cov_phi(r)?.value;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }
    SpatialInstance::new(GaussianVector::new(d, cov)?, (0..d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for two_n in [2, 4, 6, 8] {
            assert_eq!(enumerate_pairings(two_n).unwrap().len() as u64, double_factorial_odd(two_n));
        }
        assert!(enumerate_pairings(3).is_err());
        assert!(enumerate_pairings(18).is_err());
    }

    #[test]
    fn fourth_moment() {
        let g = GaussianVector::new(1, vec![2.0]).unwrap();
        assert_eq!(g.moment(&[0, 0, 0, 0]).unwrap(), 12.0);
        assert_eq!(g.moment(&[0, 0, 0]).unwrap(), 0.0);
        let mut c = MomentCache::new(&g);
        assert_eq!(c.monomial(&[4]), 12.0);
        assert_eq!(c.monomial(&[6]), 120.0);
    }
}
