//! Power counting for polynomial models: degrees of divergence, leg classification,
//! renormalization gain and polymer skeleton counts.

pub mod diagram;
pub mod gain;
pub mod model;
pub mod polymer;

pub use diagram::{
    n_ext_max, omega, omega_affine, omega_ms, omega_rescaled, Classification, Diagram, DiagramVertex, LegRow, Line, LineEnds,
};
pub use gain::{local_part_gain, Anchor, BubbleAmplitude, GainReport, GainRow};
pub use model::{Affine, FieldSpec, ModelSpec, VertexSpec};
pub use polymer::{polymer_census, CensusReport, PhaseSpaceWindow};
