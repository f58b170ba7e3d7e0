use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Spectral content label carried by a sampled field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ScaleTag {
    #[default]
    Untagged,
    Scale(i32),
    Window { lo: i32, hi: i32 },
    UpTo(i32),
}

/// A real field sampled on the uniform grid `origin + i * spacing`, `i = 0..len`.
///
/// Spectral operations treat the samples as one period of a periodic function.
/// `anchored` marks paths stored relative to their value at time zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    pub origin: T,
    pub spacing: T,
    pub values: Vec<T>,
    pub tag: ScaleTag,
    pub anchored: bool,
}

impl<T: Real> GridField<T> {
    pub fn new(origin: T, spacing: T, values: Vec<T>) -> Result<Self> {
        if !(spacing > T::zero()) {
            return Err(invalid("grid spacing must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid values must be finite"));
        }
        Ok(Self { origin, spacing, values, tag: ScaleTag::Untagged, anchored: false })
    }

    /// Samples a closure on `n` grid points.
    pub fn from_fn(origin: T, spacing: T, n: usize, mut f: impl FnMut(T) -> T) -> Result<Self> {
        let values = (0..n).map(|i| f(origin + spacing * T::from_usize_lossy(i))).collect();
        Self::new(origin, spacing, values)
    }

    pub fn zeros_like(&self) -> Self {
        Self { values: vec![T::zero(); self.values.len()], ..self.clone() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.origin + self.spacing * T::from_usize_lossy(i)
    }

    /// Length of the periodic cell.
    pub fn period(&self) -> T {
        self.spacing * T::from_usize_lossy(self.values.len())
    }

    /// Index of a grid time, if `t` lies on the grid (up to a relative slack).
    pub fn index_of(&self, t: T) -> Option<usize> {
        let x = (t - self.origin) / self.spacing;
        let r = x.round();
        if (x - r).abs() > T::c(1e-6) || r < T::zero() {
            return None;
        }
        let i = r.to_usize()?;
        (i < self.values.len()).then_some(i)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self.origin == other.origin
            && self.spacing == other.spacing
    }

    pub fn with_values(&self, values: Vec<T>) -> Self {
        Self { values, ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(invalid("fields live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| *a + *b).collect();
        Ok(Self { values, tag: ScaleTag::Untagged, ..self.clone() })
    }

    pub fn scale(&self, s: T) -> Self {
        self.with_values(self.values.iter().map(|v| *v * s).collect())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// The two components `(σ₊, σ₋)` of a vector field on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PairField<T> {
    pub plus: GridField<T>,
    pub minus: GridField<T>,
}
