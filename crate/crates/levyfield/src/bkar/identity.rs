//! Forest-interpolation identities checked by exact simplicial quadrature.

use rayon::prelude::*;
use serde::Serialize;

use super::forest::{enumerate_forests, evaluate_link, pair_count, Forest, PairLink, VertexType};
use super::instance_hash;
use crate::error::{invalid, Error, Result};
use crate::poly::Polynomial;
use crate::quad::GaussLegendre;
use crate::scalar::Real;

pub const MAX_IDENTITY_VERTICES: usize = 5;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub instance_hash: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub forest_count: usize,
    pub passed: bool,
}

impl IdentityReport {
    pub(crate) fn new(hash: String, lhs: f64, rhs: f64, forest_count: usize, tol: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        Self { instance_hash: hash, lhs, rhs, abs_err, forest_count, passed: abs_err <= tol }
    }
}

/// Gauss–Legendre order exact for a degree-`deg` polynomial on the `m`-simplex after the
/// collapsing map (whose Jacobian adds up to `m - 1` powers per coordinate).
pub fn simplex_order(deg: u32, m: usize) -> usize {
    let d = deg as usize;
    (d + 1).max((d + m).div_ceil(2)).max(1)
}

/// Quadrature on the ordered simplex `0 <= u_1 <= … <= u_m <= 1` via the collapsing map
/// `u_k = t_k · t_{k+1} ⋯ t_m`.
pub struct SimplexRule<T> {
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> SimplexRule<T> {
    pub fn new(m: usize, order: usize) -> Self {
        if m == 0 {
            return Self { points: vec![Vec::new()], weights: vec![T::one()] };
        }
        let gl = GaussLegendre::<T>::new(order);
        let half = T::c(0.5);
        let t_nodes: Vec<T> = gl.nodes().iter().map(|&x| half * (x + T::one())).collect();
        let t_weights: Vec<T> = gl.weights().iter().map(|&w| half * w).collect();
        let total = order.pow(m as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut digits = vec![0usize; m];
        for _ in 0..total {
            let t: Vec<T> = digits.iter().map(|&d| t_nodes[d]).collect();
            let mut u = vec![T::zero(); m];
            let mut acc = T::one();
            let mut w = T::one();
            for k in (0..m).rev() {
                acc = acc * t[k];
                u[k] = acc;
                w = w * t_weights[digits[k]] * t[k].powi(k as i32);
            }
            points.push(u);
            weights.push(w);
            for d in digits.iter_mut() {
                *d += 1;
                if *d < order {
                    break;
                }
                *d = 0;
            }
        }
        Self { points, weights }
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// `∫_{[0,1]^m} g(w) dw` for a `g` that is polynomial of degree `<= deg` on every region where
/// the order of the `w` coordinates is fixed.
pub fn integrate_ordered_pieces<T: Real>(
    m: usize,
    deg: u32,
    order: Option<usize>,
    mut g: impl FnMut(&[T]) -> T,
) -> Result<T> {
    let need = simplex_order(deg, m);
    let q = match order {
        Some(q) if q < need => {
            return Err(Error::Precondition(format!(
                "degree {deg} on a {m}-simplex needs Gauss–Legendre order {need}, configured {q}"
            )))
        }
        Some(q) => q,
        None => need,
    };
    let rule = SimplexRule::<T>::new(m, q);
    let mut total = T::zero();
    let mut w = vec![T::zero(); m];
    for perm in permutations(m) {
        for (u, wt) in rule.points.iter().zip(&rule.weights) {
            for (k, &e) in perm.iter().enumerate() {
                w[e] = u[k];
            }
            total = total + *wt * g(&w);
        }
    }
    Ok(total)
}

/// `∫ dw (Π_{ℓ∈F} ∂/∂z_ℓ Z)(z(w))` for one forest.
pub fn forest_term<T: Real>(z: &Polynomial<T>, forest: &Forest, order: Option<usize>) -> Result<T> {
    let mut d = z.clone();
    for p in forest.edge_pairs() {
        d = d.derivative(p);
        if d.is_zero() {
            return Ok(T::zero());
        }
    }
    let links: Vec<PairLink> = forest.links();
    let mut point = vec![T::zero(); links.len()];
    integrate_ordered_pieces(forest.edges.len(), d.degree(), order, |w| {
        for (x, l) in point.iter_mut().zip(&links) {
            *x = evaluate_link(l, w);
        }
        d.eval(&point)
    })
}

fn check_polynomial<T: Real>(z: &Polynomial<T>, n: usize) -> Result<()> {
    if n > MAX_IDENTITY_VERTICES {
        return Err(Error::SizeLimit(format!("{n} objects exceed the identity limit {MAX_IDENTITY_VERTICES}")));
    }
    if z.nvars() != pair_count(n) {
        return Err(invalid(format!("functional must have one variable per pair ({})", pair_count(n))));
    }
    Ok(())
}

/// Forest sum and number of forests for an arbitrary type assignment.
pub fn forest_sum<T: Real>(z: &Polynomial<T>, types: &[VertexType], order: Option<usize>) -> Result<(T, usize)> {
    check_polynomial(z, types.len())?;
    let forests = enumerate_forests(types.len(), Some(types))?;
    let terms: Vec<Result<T>> = forests.par_iter().map(|f| forest_term(z, f, order)).collect();
    let mut total = T::zero();
    for t in terms {
        total = total + t?;
    }
    Ok((total, forests.len()))
}

/// `Z(1,…,1)` against the sum over all forests on `n` objects.
pub fn bkar1_verify<T: Real>(z: &Polynomial<T>, n: usize, order: Option<usize>) -> Result<IdentityReport> {
    let types = vec![VertexType::Plain; n];
    let lhs = z.eval(&vec![T::one(); z.nvars()]);
    let (rhs, count) = forest_sum(z, &types, order)?;
    let hash = instance_hash(&format!("bkar1|{n}|{z:?}"));
    Ok(IdentityReport::new(hash, lhs.to_f64_lossy(), rhs.to_f64_lossy(), count, IDENTITY_TOLERANCE))
}

/// Two-type variant: variables between roots are held at 1, trees hold at most one root and
/// paths are read on the forest with all roots merged.
pub fn bkar2_verify<T: Real>(z: &Polynomial<T>, types: &[VertexType], order: Option<usize>) -> Result<IdentityReport> {
    if !types.contains(&VertexType::Root) {
        return Err(invalid("the two-type identity needs at least one root"));
    }
    let lhs = z.eval(&vec![T::one(); z.nvars()]);
    let (rhs, count) = forest_sum(z, types, order)?;
    let hash = instance_hash(&format!("bkar2|{types:?}|{z:?}"));
    Ok(IdentityReport::new(hash, lhs.to_f64_lossy(), rhs.to_f64_lossy(), count, IDENTITY_TOLERANCE))
}
