//! Combinatorial polymer skeletons on a small tree of nested intervals.

use serde::Serialize;

use crate::bkar::forest::enumerate_forests;
use crate::error::{invalid, Error, Result};

pub const MAX_CENSUS_SCALES: usize = 3;
pub const MAX_CENSUS_INTERVALS: usize = 6;

/// `roots` intervals at scale 0, each interval refined into `base` children per finer scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseSpaceWindow {
    pub scales: usize,
    pub roots: usize,
    pub base: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub scale: usize,
    pub parent: Option<usize>,
}

impl PhaseSpaceWindow {
    pub fn intervals(&self) -> Result<Vec<Interval>> {
        if self.scales == 0 || self.roots == 0 || self.base < 2 {
            return Err(invalid("window needs at least one scale, one root and base >= 2"));
        }
        if self.scales > MAX_CENSUS_SCALES {
            return Err(Error::SizeLimit(format!("at most {MAX_CENSUS_SCALES} scales")));
        }
        let mut out: Vec<Interval> = (0..self.roots).map(|_| Interval { scale: 0, parent: None }).collect();
        let mut level: Vec<usize> = (0..self.roots).collect();
        for s in 1..self.scales {
            let mut next = Vec::new();
            for &p in &level {
                for _ in 0..self.base {
                    next.push(out.len());
                    out.push(Interval { scale: s, parent: Some(p) });
                    if out.len() > MAX_CENSUS_INTERVALS {
                        return Err(Error::SizeLimit(format!("window exceeds {MAX_CENSUS_INTERVALS} intervals")));
                    }
                }
            }
            level = next;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub window: PhaseSpaceWindow,
    pub intervals: usize,
    /// Connected spanning skeletons: a horizontal forest per scale plus inclusion links.
    pub skeletons: u64,
    /// Skeletons weighted by the admissible external-leg assignments.
    pub polymers: u64,
    /// `histogram[N]`: number of polymers with `N` external legs.
    pub histogram: Vec<u64>,
    /// The four bins below partition `polymers`; vacuum and two-point take precedence.
    pub vacuum: u64,
    /// Two external legs, counted only when two is below the threshold.
    pub two_point: u64,
    pub at_least_max: u64,
    pub other: u64,
    pub n_ext_max: usize,
    pub cap_slope: usize,
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    let mut parts = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        if ra != rb {
            comp[ra] = rb;
            parts -= 1;
        }
    }
    parts <= 1
}

/// Enumerates skeletons spanning the whole window. External legs leave from the coarsest
/// intervals; interval `Δ` carries `τ_Δ ∈ 0..=n_ext_max + cap_slope · n(Δ)` legs, where
/// `n(Δ)` counts the links at `Δ`.
pub fn polymer_census(window: PhaseSpaceWindow, n_ext_max: usize, cap_slope: usize) -> Result<CensusReport> {
    let iv = window.intervals()?;
    let n = iv.len();
    let mut per_scale: Vec<Vec<usize>> = vec![Vec::new(); window.scales];
    for (i, x) in iv.iter().enumerate() {
        per_scale[x.scale].push(i);
    }
    let vertical: Vec<(usize, usize)> = iv.iter().enumerate().filter_map(|(i, x)| x.parent.map(|p| (p, i))).collect();
    // Cartesian product of per-scale forests, mapped back to window labels.
    let mut horizontal: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for members in &per_scale {
        let forests = enumerate_forests(members.len(), None)?;
        let mut next = Vec::new();
        for h in &horizontal {
            for f in &forests {
                let mut e = h.clone();
                e.extend(f.edges.iter().map(|&(a, b)| (members[a], members[b])));
                next.push(e);
            }
        }
        horizontal = next;
    }
    let mut skeletons = 0u64;
    let mut histogram: Vec<u64> = vec![0];
    for h in &horizontal {
        for mask in 0u32..(1 << vertical.len()) {
            let mut edges = h.clone();
            edges.extend(vertical.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, e)| *e));
            if !connected(n, &edges) {
                continue;
            }
            skeletons += 1;
            let mut ways: Vec<u64> = vec![1];
            for &d in &per_scale[0] {
                let links = edges.iter().filter(|&&(a, b)| a == d || b == d).count();
                let cap = n_ext_max + cap_slope * links;
                let mut next = vec![0u64; ways.len() + cap];
                for (s, &w) in ways.iter().enumerate() {
                    for t in 0..=cap {
                        next[s + t] += w;
                    }
                }
                ways = next;
            }
            if histogram.len() < ways.len() {
                histogram.resize(ways.len(), 0);
            }
            for (s, w) in ways.into_iter().enumerate() {
                histogram[s] += w;
            }
        }
    }
    let polymers = histogram.iter().sum();
    let vacuum = histogram[0];
    let two_point = if n_ext_max > 2 { histogram.get(2).copied().unwrap_or(0) } else { 0 };
    let at_least_max: u64 = histogram.iter().skip(n_ext_max.max(1)).sum();
    let other = polymers - vacuum - at_least_max - two_point;
    Ok(CensusReport {
        window,
        intervals: n,
        skeletons,
        polymers,
        histogram,
        vacuum,
        two_point,
        at_least_max,
        other,
        n_ext_max,
        cap_slope,
    })
}
