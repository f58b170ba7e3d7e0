//! Local part of the one-bubble two-point amplitude and the gain from subtracting it.
//!
//! External legs sit at scale 0 (positions `0` and `s`), the bubble at scale `height`. In one
//! dimension the bubble is `A(u) = M^{height(1-4α)} A_0(M^{height} u)` with
//! `A_0 = C · (-∂²C)` built from the scale-0 covariance `C`; the prefactor cancels in ratios.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::kernel::SpectralKernel;
use crate::partition::{PartitionOfUnity, Window};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Anchor {
    First,
    Second,
}

/// Scale-0 covariance and its derivative tabulated for cubic Hermite interpolation.
pub struct BubbleAmplitude {
    pub alpha: f64,
    pub base: f64,
    table_step: f64,
    c: Vec<f64>,
    dc: Vec<f64>,
    outer_half: f64,
    outer_step: f64,
    inner_half: f64,
    inner_step: f64,
    inner: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GainRow {
    pub height: i32,
    /// Taylor-remainder magnitude over the unrenormalized amplitude.
    pub remainder_ratio: f64,
    /// Signed renormalized amplitude over the unrenormalized one.
    pub signed_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GainReport {
    pub alpha: f64,
    pub base: f64,
    pub rows: Vec<GainRow>,
    /// Slope of `ln(remainder_ratio)` against height.
    pub log_slope: f64,
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// Decay exponent of the signed ratio; the first Taylor term cancels by parity.
    pub signed_exponent: f64,
    pub passed: bool,
}

impl BubbleAmplitude {
    pub fn new(alpha: f64, base: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.25) {
            return Err(invalid("alpha must lie in (0, 1/4)"));
        }
        let p = PartitionOfUnity::new(base, crate::partition::Profile::Smooth)?;
        let k = SpectralKernel::phi(alpha, p, Window::Single(0))?;
        let (outer_half, outer_step, inner_half, inner_step, table_step): (f64, f64, f64, f64, f64) = (96.0, 1.0 / 16.0, 48.0, 1.0 / 16.0, 1.0 / 64.0);
        let n = ((outer_half + inner_half + 2.0) / table_step).ceil() as usize + 2;
        let vals: Vec<Result<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let r = i as f64 * table_step;
                Ok((k.correlation(r, 0, 0, (0, 0))?.value, k.correlation(r, 1, 0, (0, 0))?.value))
            })
            .collect();
        let mut c = Vec::with_capacity(n);
        let mut dc = Vec::with_capacity(n);
        for v in vals {
            let (a, b) = v?;
            c.push(a);
            dc.push(b);
        }
        let ni = (inner_half / inner_step).round() as i64;
        let inner: Vec<Result<(f64, f64)>> = (-ni..=ni)
            .into_par_iter()
            .map(|i| {
                let v = i as f64 * inner_step;
                let a = k.correlation(v, 0, 0, (0, 0))?.value * k.correlation(v, 1, 1, (0, 0))?.value;
                let w = if i.abs() == ni { 0.5 } else { 1.0 };
                Ok((v, a * w * inner_step))
            })
            .collect();
        let inner = inner.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self { alpha, base, table_step, c, dc, outer_half, outer_step, inner_half, inner_step, inner })
    }

    /// Scale-0 covariance at separation `x`.
    pub fn covariance(&self, x: f64) -> f64 {
        let r = x.abs();
        let t = r / self.table_step;
        let i = t.floor() as usize;
        if i + 1 >= self.c.len() {
            return 0.0;
        }
        let u = t - i as f64;
        let h = self.table_step;
        let (p0, p1, m0, m1) = (self.c[i], self.c[i + 1], self.dc[i] * h, self.dc[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1
    }

    fn outer_points(&self) -> impl ParallelIterator<Item = (f64, f64)> + '_ {
        let n = (self.outer_half / self.outer_step).round() as i64;
        let h = self.outer_step;
        (-n..=n).into_par_iter().map(move |i| (i as f64 * h, if i.abs() == n { 0.5 * h } else { h }))
    }

    /// `∫ A_0`, the zero-momentum value of the bubble.
    pub fn bubble_mass(&self) -> f64 {
        self.inner.iter().map(|&(_, a)| a).sum()
    }

    /// `(full, signed renormalized, remainder magnitude)` at leg separation `s`.
    pub fn evaluate(&self, s: f64, height: i32) -> (f64, f64, f64) {
        let eps = self.base.powi(-height);
        self.outer_points()
            .map(|(y, wy)| {
                let cy = self.covariance(y);
                let base = self.covariance(y - s);
                let (mut full, mut ren, mut rem) = (0.0, 0.0, 0.0);
                for &(v, a) in &self.inner {
                    let moved = self.covariance(y + v * eps - s);
                    full += a * moved;
                    ren += a * (moved - base);
                    rem += a.abs() * (moved - base).abs();
                }
                (wy * cy * full, wy * cy * ren, wy * cy.abs() * rem)
            })
            .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    }

    /// Local part with all legs displaced to one internal vertex; independent of the choice.
    pub fn local_part(&self, s: f64, height: i32, anchor: Anchor) -> f64 {
        let eps = self.base.powi(-height);
        match anchor {
            Anchor::First => {
                let mass = self.bubble_mass();
                self.outer_points().map(|(y, w)| w * self.covariance(y) * self.covariance(y - s)).sum::<f64>() * mass
            }
            Anchor::Second => self
                .outer_points()
                .map(|(y, w)| {
                    let mut acc = 0.0;
                    for &(v, a) in &self.inner {
                        let y2 = y - v * eps;
                        acc += a * self.covariance(y2) * self.covariance(y2 - s);
                    }
                    w * acc
                })
                .sum(),
        }
    }

    pub fn inner_half_width(&self) -> f64 {
        self.inner_half
    }

    pub fn inner_step(&self) -> f64 {
        self.inner_step
    }

    /// Ratios averaged over leg separations spread across `[0, 1]`.
    pub fn gain_row(&self, height: i32) -> GainRow {
        let seps = [0.0, 0.25, 0.5, 0.75, 1.0];
        let (mut full, mut ren, mut rem) = (0.0, 0.0, 0.0);
        for &s in &seps {
            let (f, r, m) = self.evaluate(s, height);
            full += f.abs();
            ren += r.abs();
            rem += m;
        }
        GainRow { height, remainder_ratio: rem / full, signed_ratio: ren / full }
    }
}

/// Fits the decay of the renormalized-to-bare ratio in `M^{-height}` over `heights`.
pub fn local_part_gain(heights: &[i32], alpha: f64, base: f64) -> Result<GainReport> {
    if heights.len() < 2 || heights.iter().any(|h| !(0..=8).contains(h)) {
        return Err(invalid("need at least two heights in 0..=8"));
    }
    let amp = BubbleAmplitude::new(alpha, base)?;
    let rows: Vec<GainRow> = heights.iter().map(|&h| amp.gain_row(h)).collect();
    let x: Vec<f64> = rows.iter().map(|r| f64::from(r.height)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.remainder_ratio.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.signed_ratio.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    let fit_signed = linear_fit(&x, &ys)?;
    let lnm = base.ln();
    let exponent = -fit.slope / lnm;
    Ok(GainReport {
        alpha,
        base,
        rows,
        log_slope: fit.slope,
        exponent,
        exponent_stderr: fit.slope_stderr / lnm,
        signed_exponent: -fit_signed.slope / lnm,
        passed: exponent >= 0.9,
    })
}
