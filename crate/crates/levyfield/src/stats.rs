//! Streaming moments and least-squares fits.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Running mean and centred second moment (Welford), mergeable with Chan's update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Welford<T> {
    count: u64,
    mean: T,
    m2: T,
}

impl<T: Real> Welford<T> {
    pub fn new() -> Self {
        Self { count: 0, mean: T::zero(), m2: T::zero() }
    }

    pub fn push(&mut self, x: T) {
        self.count += 1;
        let d = x - self.mean;
        self.mean = self.mean + d / T::c(self.count as f64);
        self.m2 = self.m2 + d * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb, nn) = (T::c(self.count as f64), T::c(other.count as f64), T::c(n as f64));
        let d = other.mean - self.mean;
        Self { count: n, mean: self.mean + d * nb / nn, m2: self.m2 + other.m2 + d * d * na * nb / nn }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            self.m2 / T::c((self.count - 1) as f64)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> T {
        if self.count < 2 {
            T::infinity()
        } else {
            (self.variance() / T::c(self.count as f64)).sqrt()
        }
    }
}

impl<T: Real> FromIterator<T> for Welford<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut w = Self::new();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// Merges accumulators along a balanced binary tree so the result does not depend on how the
/// caller scheduled the partial sums, only on their order.
pub fn merge_tree<T: Real>(parts: &[Welford<T>]) -> Welford<T> {
    match parts.len() {
        0 => Welford::new(),
        1 => parts[0],
        n => {
            let (a, b) = parts.split_at(n / 2);
            merge_tree(a).merge(&merge_tree(b))
        }
    }
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

impl LinearFit {
    /// Symmetric confidence interval on the slope with `z` standard errors.
    pub fn slope_interval(&self, z: f64) -> (f64, f64) {
        (self.slope - z * self.slope_stderr, self.slope + z * self.slope_stderr)
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("linear fit needs two equally long series of length >= 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit with constant abscissa"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, r_squared })
}
