//! Feynman diagrams with optional scale labels, degrees of divergence, and the external-leg
//! classification of a model.

use std::collections::BTreeMap;

use serde::Serialize;

use super::model::{Affine, ModelSpec};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagramVertex {
    /// Index into the model's vertex list.
    pub kind: usize,
    pub scale: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LineEnds {
    /// `(vertex, field)` at each end.
    Internal((usize, String), (usize, String)),
    External(usize, String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Line {
    pub ends: LineEnds,
    pub scale: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagram {
    pub vertices: Vec<DiagramVertex>,
    pub lines: Vec<Line>,
}

impl Diagram {
    /// Checks line endpoints and that each vertex uses a sub-multiset of its declared fields.
    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        let mut used: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); self.vertices.len()];
        for v in &self.vertices {
            if v.kind >= model.vertices.len() {
                return Err(invalid(format!("vertex kind {} not declared by the model", v.kind)));
            }
        }
        for l in &self.lines {
            for (z, f) in l.half_lines() {
                if z >= self.vertices.len() {
                    return Err(invalid(format!("line references missing vertex {z}")));
                }
                model.field(f)?;
                *used[z].entry(f).or_default() += 1;
            }
        }
        for (z, counts) in used.iter().enumerate() {
            let decl = &model.vertices[self.vertices[z].kind].fields;
            for (f, &c) in counts {
                if decl.iter().filter(|d| d.as_str() == *f).count() < c {
                    return Err(invalid(format!("vertex {z} exceeds its valence in field `{f}`")));
                }
            }
        }
        Ok(())
    }

    pub fn external_fields(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match &l.ends {
                LineEnds::External(_, f) => Some(f.as_str()),
                LineEnds::Internal(..) => None,
            })
            .collect()
    }

    /// `min_{internal} j(ℓ) - max_{external} j(ℓ)`; requires every line to carry a scale.
    pub fn height(&self) -> Result<i32> {
        let mut min_int = i32::MAX;
        let mut max_ext = i32::MIN;
        for l in &self.lines {
            let j = l.scale.ok_or_else(|| Error::Precondition("missing line scale".into()))?;
            match l.ends {
                LineEnds::Internal(..) => min_int = min_int.min(j),
                LineEnds::External(..) => max_ext = max_ext.max(j),
            }
        }
        if min_int == i32::MAX || max_ext == i32::MIN {
            return Ok(0);
        }
        Ok(min_int - max_ext)
    }

    fn vertex_scale(&self, z: usize) -> Result<i32> {
        self.vertices[z].scale.ok_or_else(|| Error::Precondition(format!("missing scale on vertex {z}")))
    }

    /// At every vertex, the two highest scales among its lines agree up to ±1.
    pub fn scales_admissible(&self) -> Result<bool> {
        for z in 0..self.vertices.len() {
            let mut js: Vec<i32> = Vec::new();
            for l in &self.lines {
                for (w, _) in l.half_lines() {
                    if w == z {
                        js.push(l.scale.ok_or_else(|| Error::Precondition("missing line scale".into()))?);
                    }
                }
            }
            js.sort_unstable_by(|a, b| b.cmp(a));
            if js.len() >= 2 && js[0] - js[1] > 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// One-loop two-point diagram of the cubic vertex: internal `φ–φ` and `∂φ–∂φ` lines at
    /// scale `inner`, external `σ` legs at scale `outer`, both vertices at scale `inner`.
    pub fn one_bubble(inner: i32, outer: i32) -> Self {
        let v = |_: usize| DiagramVertex { kind: 0, scale: Some(inner) };
        let int = |f: &str| Line { ends: LineEnds::Internal((0, f.into()), (1, f.into())), scale: Some(inner) };
        let ext = |z: usize| Line { ends: LineEnds::External(z, "sigma".into()), scale: Some(outer) };
        Self { vertices: vec![v(0), v(1)], lines: vec![int("phi"), int("dphi"), ext(0), ext(1)] }
    }
}

impl Line {
    pub fn half_lines(&self) -> Vec<(usize, &str)> {
        match &self.ends {
            LineEnds::Internal((a, fa), (b, fb)) => vec![(*a, fa.as_str()), (*b, fb.as_str())],
            LineEnds::External(z, f) => vec![(*z, f.as_str())],
        }
    }
}

/// `D + Σ_{external} β`, affine in α.
pub fn omega_affine(model: &ModelSpec, legs: &[&str]) -> Result<Affine> {
    let mut s = Affine { slope: 0.0, offset: f64::from(model.dimension) };
    for l in legs {
        s = s.add(model.beta(l)?);
    }
    Ok(s)
}

pub fn omega(d: &Diagram, model: &ModelSpec, alpha: f64) -> Result<f64> {
    Ok(omega_affine(model, &d.external_fields())?.at(alpha))
}

/// `D · height + Σ_z Σ_{ℓ at z} β_ℓ (j(z) - j(ℓ))`.
pub fn omega_ms(d: &Diagram, model: &ModelSpec, alpha: f64) -> Result<f64> {
    let mut s = f64::from(model.dimension) * f64::from(d.height()?);
    for l in &d.lines {
        let jl = l.scale.ok_or_else(|| Error::Precondition("missing line scale".into()))?;
        for (z, f) in l.half_lines() {
            s += model.beta(f)?.at(alpha) * f64::from(d.vertex_scale(z)? - jl);
        }
    }
    Ok(s)
}

/// `D · height + Σ_y Σ_{external ℓ at y} β_ℓ (j(y) - j(ℓ))`.
pub fn omega_rescaled(d: &Diagram, model: &ModelSpec, alpha: f64) -> Result<f64> {
    let mut s = f64::from(model.dimension) * f64::from(d.height()?);
    for l in &d.lines {
        if let LineEnds::External(z, f) = &l.ends {
            let jl = l.scale.ok_or_else(|| Error::Precondition("missing line scale".into()))?;
            s += model.beta(f)?.at(alpha) * f64::from(d.vertex_scale(*z)? - jl);
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct LegRow {
    pub legs: Vec<String>,
    /// Degree of divergence at the requested α.
    pub omega: f64,
    pub divergent: bool,
    /// Divergent somewhere in the model's α-range.
    pub divergent_in_range: bool,
    /// Some odd-parity field appears an odd number of times.
    pub local_part_vanishes: bool,
    /// Divergent at the requested α with a non-vanishing local part.
    pub target: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub alpha: f64,
    /// Smallest `N` such that every leg configuration of size `>= N` converges over the range.
    pub n_ext_max: usize,
    /// Same threshold at the requested α only.
    pub n_ext_max_at_alpha: usize,
    pub rows: Vec<LegRow>,
    pub targets: Vec<Vec<String>>,
}

fn multisets(names: &[String], size: usize) -> Vec<Vec<String>> {
    fn go(names: &[String], start: usize, left: usize, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..names.len() {
            cur.push(names[i].clone());
            go(names, i, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(names, 0, size, &mut Vec::new(), &mut out);
    out
}

/// Scans external-leg multisets up to `max_legs` over the fields allowed as external legs.
pub fn n_ext_max(model: &ModelSpec, alpha: f64, max_legs: usize) -> Result<Classification> {
    model.validate()?;
    model.check_just_renormalizable()?;
    if !(max_legs >= 1 && max_legs <= 8) {
        return Err(invalid("leg scan size must be in 1..=8"));
    }
    let names: Vec<String> = model.fields.iter().filter(|f| f.external).map(|f| f.name.clone()).collect();
    let (lo, hi) = model.alpha_range;
    let mut rows = Vec::new();
    let mut last_div_range = 0;
    let mut last_div_point = 0;
    for size in 1..=max_legs {
        for legs in multisets(&names, size) {
            let refs: Vec<&str> = legs.iter().map(String::as_str).collect();
            let w = omega_affine(model, &refs)?;
            // On the open range a sloped supremum is only approached at the ends.
            let divergent_in_range = if w.slope == 0.0 { w.offset >= 0.0 } else { w.sup_open(lo, hi) > 0.0 };
            let value = w.at(alpha);
            let divergent = value >= 0.0;
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for l in &refs {
                *counts.entry(l).or_default() += 1;
            }
            let local_part_vanishes = counts.iter().any(|(f, &c)| c % 2 == 1 && model.field(f).map(|s| s.odd).unwrap_or(false));
            if divergent_in_range {
                last_div_range = size;
            }
            if divergent {
                last_div_point = size;
            }
            rows.push(LegRow {
                legs,
                omega: value,
                divergent,
                divergent_in_range,
                local_part_vanishes,
                target: divergent && !local_part_vanishes,
            });
        }
    }
    if last_div_range == max_legs {
        return Err(invalid(format!("divergences persist up to {max_legs} legs; the scan cannot bound them")));
    }
    let targets = rows.iter().filter(|r| r.target).map(|r| r.legs.clone()).collect();
    Ok(Classification {
        alpha,
        n_ext_max: last_div_range + 1,
        n_ext_max_at_alpha: last_div_point + 1,
        rows,
        targets,
    })
}
