//! Labelled forests on a small vertex set, and the link weakenings they induce.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const MAX_FOREST_VERTICES: usize = 7;

/// Ordinary objects carry type 1; roots (type 2) may each anchor at most one tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum VertexType {
    Plain,
    Root,
}

/// Index of the unordered pair `{a, b}` in the lexicographic list of pairs of `0..n`.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    debug_assert!(b < n && a != b);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// The pair with the given lexicographic index.
pub fn pair_at(n: usize, idx: usize) -> (usize, usize) {
    let mut k = idx;
    for a in 0..n {
        let row = n - a - 1;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
    }
    panic!("pair index {idx} out of range for {n} vertices");
}

/// How a pair variable is evaluated on a forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum PairLink {
    /// Endpoints in different components.
    Absent,
    /// Endpoints identified (both roots): weakening fixed at 1.
    Frozen,
    /// Positions in `edges` of the forest edges along the connecting path.
    Path(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Forest {
    pub types: Vec<VertexType>,
    pub edges: Vec<(usize, usize)>,
}

impl Forest {
    pub fn vertices(&self) -> usize {
        self.types.len()
    }

    /// Pair-variable indices of the edges, in edge order.
    pub fn edge_pairs(&self) -> Vec<usize> {
        self.edges.iter().map(|&(a, b)| pair_index(self.vertices(), a, b)).collect()
    }

    fn merged(&self, v: usize) -> usize {
        // All roots collapse onto the first root.
        match self.types[v] {
            VertexType::Root => self.types.iter().position(|t| *t == VertexType::Root).unwrap_or(v),
            VertexType::Plain => v,
        }
    }

    /// Path rule for every pair, computed on the forest with all roots merged.
    pub fn links(&self) -> Vec<PairLink> {
        let n = self.vertices();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            let (a, b) = (self.merged(a), self.merged(b));
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        let mut out = Vec::with_capacity(pair_count(n));
        for a in 0..n {
            for b in a + 1..n {
                let (s, t) = (self.merged(a), self.merged(b));
                if s == t {
                    out.push(PairLink::Frozen);
                    continue;
                }
                out.push(match tree_path(&adj, s, t) {
                    Some(p) => PairLink::Path(p),
                    None => PairLink::Absent,
                });
            }
        }
        out
    }

    /// `z_ℓ(w)`: the smallest edge weight along the path, 0 when disconnected, 1 when frozen.
    pub fn z_of_w<T: Real>(&self, a: usize, b: usize, w: &[T]) -> Result<T> {
        if w.len() != self.edges.len() {
            return Err(invalid("one weight per forest edge"));
        }
        if a == b || a >= self.vertices() || b >= self.vertices() {
            return Err(invalid("pair endpoints must be distinct vertices"));
        }
        let links = self.links();
        Ok(evaluate_link(&links[pair_index(self.vertices(), a, b)], w))
    }

    /// All pair weakenings for the given edge weights.
    pub fn weakening<T: Real>(&self, w: &[T]) -> Vec<T> {
        self.links().iter().map(|l| evaluate_link(l, w)).collect()
    }
}

pub fn evaluate_link<T: Real>(link: &PairLink, w: &[T]) -> T {
    match link {
        PairLink::Absent => T::zero(),
        PairLink::Frozen => T::one(),
        PairLink::Path(p) => p.iter().map(|&k| w[k]).fold(T::one(), |m, x| m.min(x)),
    }
}

fn tree_path(adj: &[Vec<(usize, usize)>], s: usize, t: usize) -> Option<Vec<usize>> {
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(v) = stack.pop() {
        if v == t {
            break;
        }
        for &(u, k) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                prev[u] = Some((v, k));
                stack.push(u);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while let Some((p, k)) = prev[v] {
        path.push(k);
        v = p;
    }
    path.reverse();
    Some(path)
}

fn find(parent: &[usize], mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

fn extend(
    n: usize,
    next_pair: usize,
    parent: &mut Vec<usize>,
    roots: &mut Vec<u8>,
    edges: &mut Vec<(usize, usize)>,
    types: &[VertexType],
    out: &mut Vec<Forest>,
) {
    out.push(Forest { types: types.to_vec(), edges: edges.clone() });
    for p in next_pair..pair_count(n) {
        let (a, b) = pair_at(n, p);
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra == rb || roots[ra] + roots[rb] > 1 {
            continue;
        }
        parent[ra] = rb;
        let saved = roots[rb];
        roots[rb] += roots[ra];
        edges.push((a, b));
        extend(n, p + 1, parent, roots, edges, types, out);
        edges.pop();
        roots[rb] = saved;
        parent[ra] = ra;
    }
}

/// Every forest of the complete graph on `n` vertices (edge sets listed in increasing pair
/// order). With `types`, only forests in which each tree holds at most one root.
pub fn enumerate_forests(n: usize, types: Option<&[VertexType]>) -> Result<Vec<Forest>> {
    if n > MAX_FOREST_VERTICES {
        return Err(Error::SizeLimit(format!("{n} vertices exceed the forest limit {MAX_FOREST_VERTICES}")));
    }
    let types: Vec<VertexType> = match types {
        Some(t) if t.len() != n => return Err(invalid("one type per vertex")),
        Some(t) => t.to_vec(),
        None => vec![VertexType::Plain; n],
    };
    let mut roots: Vec<u8> = types.iter().map(|t| u8::from(*t == VertexType::Root)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    extend(n, 0, &mut parent, &mut roots, &mut Vec::new(), &types, &mut out);
    Ok(out)
}
