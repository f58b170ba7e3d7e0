//! Multiscale Gaussian fields with a dyadic Fourier cutoff, the variance of their Lévy area,
//! and the exact combinatorial and analytic identities behind its renormalization.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); polynomial identities also
//! accept exact rational coefficients. The aliases below fix the scalar to `f64`.

pub mod bkar;
pub mod error;
pub mod field;
pub mod io;
pub mod kernel;
pub mod levy;
pub mod norm;
pub mod partition;
pub mod phase_space;
pub mod poly;
pub mod power;
pub mod quad;
pub mod renorm;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod wick;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Partition = partition::PartitionOfUnity<f64>;
pub type Kernel = kernel::SpectralKernel<f64>;
pub type Field = field::GridField<f64>;
pub type Sampler = sampler::PhiSampler<f64>;
pub type SamplerConfig = sampler::SamplerConfig<f64>;
pub type Bubble = levy::BubbleModel<f64>;
pub type Gaussian = wick::GaussianVector<f64>;
pub type Poly = poly::Polynomial<f64>;
pub type Toy = bkar::ClusterToy<f64>;
