//! Single-scale cluster expansion on toy instances: finitely many intervals, a few Gaussian
//! point fields per interval, and a polynomial interaction local to each interval.

use rand::Rng;
use serde::Serialize;

use super::forest::{enumerate_forests, pair_count, pair_index, Forest, VertexType};
use super::identity::integrate_ordered_pieces;
use super::instance_hash;
use crate::error::{invalid, Error, Result};
use crate::poly::Polynomial;
use crate::rng::path_rng;
use crate::scalar::Real;
use crate::wick::{GaussianVector, MomentCache};

pub const MAX_TOY_INTERVALS: usize = 4;
pub const MAX_TOY_DEGREE: u32 = 4;
pub const MAX_TOY_ORDER: usize = 3;
pub const CLUSTER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ClusterToy<T> {
    covariance: GaussianVector<T>,
    interval_of: Vec<usize>,
    interaction: Vec<Polynomial<T>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub instance_hash: String,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub abs_err: Vec<f64>,
    pub max_abs_err: f64,
    pub forest_count: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub forests: usize,
    pub draws: usize,
    pub min_eigenvalue: f64,
    pub violations: usize,
    pub passed: bool,
}

impl<T: Real> ClusterToy<T> {
    /// `interaction[Δ]` is a polynomial in all field variables that may only involve fields of `Δ`.
    pub fn new(covariance: GaussianVector<T>, interval_of: Vec<usize>, interaction: Vec<Polynomial<T>>) -> Result<Self> {
        let dim = covariance.dim();
        if interval_of.len() != dim {
            return Err(invalid("one interval label per field"));
        }
        let intervals = interaction.len();
        if intervals == 0 || intervals > MAX_TOY_INTERVALS {
            return Err(Error::SizeLimit(format!("toy instances hold 1..={MAX_TOY_INTERVALS} intervals")));
        }
        if interval_of.iter().any(|&d| d >= intervals) {
            return Err(invalid("field assigned to an interval without an interaction"));
        }
        for (d, p) in interaction.iter().enumerate() {
            if p.nvars() != dim {
                return Err(invalid("interaction polynomials range over all field variables"));
            }
            if p.degree() > MAX_TOY_DEGREE {
                return Err(Error::SizeLimit(format!("interaction degree {} exceeds {MAX_TOY_DEGREE}", p.degree())));
            }
            for (e, _) in p.terms() {
                if e.iter().enumerate().any(|(x, &k)| k > 0 && interval_of[x] != d) {
                    return Err(invalid(format!("interaction of interval {d} involves a foreign field")));
                }
            }
        }
        Ok(Self { covariance, interval_of, interaction })
    }

    pub fn intervals(&self) -> usize {
        self.interaction.len()
    }

    pub fn total_interaction(&self) -> Polynomial<T> {
        self.interaction.iter().fold(Polynomial::zero(self.covariance.dim()), |acc, p| &acc + p)
    }

    /// `(-1)^k/k! · (Σ_Δ 𝓛_Δ)^k` for `k = 0..=order`.
    fn series_terms(&self, order: usize) -> Vec<Polynomial<T>> {
        let total = self.total_interaction();
        let mut out = vec![Polynomial::one(total.nvars())];
        for k in 1..=order {
            let next = &out[k - 1] * &total;
            out.push(next.scale(&(-T::one() / T::from_usize_lossy(k))));
        }
        out
    }

    /// `Σ_{x∈a, y∈b} C(x,y) ∂_x ∂_y p`: the derivative of a Gaussian expectation with respect
    /// to the weakening of the link `{a, b}`.
    pub fn link_operator(&self, p: &Polynomial<T>, a: usize, b: usize) -> Polynomial<T> {
        let dim = self.covariance.dim();
        let mut out = Polynomial::zero(dim);
        for x in (0..dim).filter(|&x| self.interval_of[x] == a) {
            let dx = p.derivative(x);
            if dx.is_zero() {
                continue;
            }
            for y in (0..dim).filter(|&y| self.interval_of[y] == b) {
                let c = self.covariance.get(x, y);
                if c == T::zero() {
                    continue;
                }
                out = &out + &dx.derivative(y).scale(&c);
            }
        }
        out
    }

    /// `C_s(x, y) = s_{Δ(x)Δ(y)} C(x, y)` with `s_{ΔΔ} = 1`; `s` is indexed by interval pairs.
    pub fn interpolated_covariance(&self, s: &[T]) -> GaussianVector<T> {
        let dim = self.covariance.dim();
        let n = self.intervals();
        let mut cov = Vec::with_capacity(dim * dim);
        for x in 0..dim {
            for y in 0..dim {
                let (a, b) = (self.interval_of[x], self.interval_of[y]);
                let f = if a == b { T::one() } else { s[pair_index(n, a, b)] };
                cov.push(f * self.covariance.get(x, y));
            }
        }
        GaussianVector::unchecked(dim, cov)
    }

    pub fn expectation(g: &GaussianVector<T>, p: &Polynomial<T>) -> T {
        let mut cache = MomentCache::new(g);
        p.terms().fold(T::zero(), |acc, (e, c)| acc + *c * cache.monomial(e))
    }

    /// Taylor coefficients of `Z(λ) = 𝔼[exp(-λ Σ 𝓛)]` up to `order`.
    pub fn direct_coefficients(&self, order: usize) -> Vec<T> {
        self.series_terms(order).iter().map(|p| Self::expectation(&self.covariance, p)).collect()
    }

    /// Same coefficients from the forest sum with the interpolated Gaussian measure.
    pub fn forest_coefficients(&self, order: usize) -> Result<(Vec<T>, usize)> {
        let forests = enumerate_forests(self.intervals(), None)?;
        let series = self.series_terms(order);
        let mut out = vec![T::zero(); order + 1];
        for f in &forests {
            for (k, term) in series.iter().enumerate() {
                out[k] = out[k] + self.forest_contribution(f, term)?;
            }
        }
        Ok((out, forests.len()))
    }

    fn forest_contribution(&self, f: &Forest, term: &Polynomial<T>) -> Result<T> {
        let mut g = term.clone();
        for &(a, b) in &f.edges {
            g = self.link_operator(&g, a, b);
            if g.is_zero() {
                return Ok(T::zero());
            }
        }
        let links = f.links();
        // 𝔼_{C_s}[g] is a polynomial of degree deg(g)/2 in the weakenings.
        integrate_ordered_pieces(f.edges.len(), g.degree() / 2, None, |w| {
            let s: Vec<T> = links.iter().map(|l| super::forest::evaluate_link(l, w)).collect();
            Self::expectation(&self.interpolated_covariance(&s), &g)
        })
    }

    pub fn verify(&self, order: usize) -> Result<ClusterReport> {
        if order > MAX_TOY_ORDER {
            return Err(Error::SizeLimit(format!("expansion order {order} exceeds {MAX_TOY_ORDER}")));
        }
        let lhs: Vec<f64> = self.direct_coefficients(order).iter().map(|v| v.to_f64_lossy()).collect();
        let (rhs, forest_count) = self.forest_coefficients(order)?;
        let rhs: Vec<f64> = rhs.iter().map(|v| v.to_f64_lossy()).collect();
        let abs_err: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).collect();
        let max_abs_err = abs_err.iter().copied().fold(0.0, f64::max);
        let hash = instance_hash(&format!("cluster|{order}|{:?}|{:?}|{:?}", self.covariance, self.interval_of, self.interaction));
        Ok(ClusterReport { instance_hash: hash, lhs, rhs, abs_err, max_abs_err, forest_count, passed: max_abs_err <= CLUSTER_TOLERANCE })
    }

    /// Smallest eigenvalue of `C_{s(w)}` over every forest and `draws` uniform weight vectors each.
    pub fn positivity_check(&self, draws: usize, seed: u64) -> Result<PositivityReport> {
        let forests = enumerate_forests(self.intervals(), Some(&vec![VertexType::Plain; self.intervals()]))?;
        debug_assert_eq!(pair_count(self.intervals()), forests[0].links().len());
        let mut min_eig = f64::INFINITY;
        let mut violations = 0;
        for (fi, f) in forests.iter().enumerate() {
            let mut rng = path_rng(seed, fi as u32, 0);
            for _ in 0..draws {
                let w: Vec<T> = (0..f.edges.len()).map(|_| T::c(rng.random::<f64>())).collect();
                let e = self.interpolated_covariance(&f.weakening(&w)).min_eigenvalue();
                min_eig = min_eig.min(e);
                if e < -1e-10 {
                    violations += 1;
                }
            }
        }
        Ok(PositivityReport { forests: forests.len(), draws, min_eigenvalue: min_eig, violations, passed: violations == 0 })
    }
}
