//! Forest interpolation formulas and the single-scale cluster expansion on toy instances.

pub mod cluster;
pub mod forest;
pub mod identity;

pub use cluster::{ClusterReport, ClusterToy, PositivityReport};
pub use forest::{enumerate_forests, pair_at, pair_count, pair_index, Forest, PairLink, VertexType};
pub use identity::{bkar1_verify, bkar2_verify, forest_sum, forest_term, IdentityReport};

/// 64-bit FNV-1a of a canonical instance description, as lowercase hex.
pub fn instance_hash(canonical: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
