//! Stable primitive identifiers.
//!
//! Primitive ids must be identical across runs and across re-executions of the
//! same program, so they are content hashes rather than allocation counters:
//! FNV-1a over (feature id, role, centroid quantized at 1e-5). The std hasher
//! is deliberately avoided (its seed changes per process).

use crate::geom::Point3;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrimId(pub u64);

impl fmt::Display for PrimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl fmt::Debug for PrimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimId({:016x})", self.0)
    }
}

impl PrimId {
    pub fn parse_hex(s: &str) -> Option<PrimId> {
        if s.len() != 16 {
            return None;
        }
        u64::from_str_radix(s, 16).ok().map(PrimId)
    }
}

pub const FNV_OFFSET: u64 = 0xcbf29ce484222325;
pub const FNV_PRIME: u64 = 0x100000001b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub fn fnv1a_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Quantize a coordinate to the 1e-5 grid used in id hashes.
pub fn quantize(v: f64) -> i64 {
    (v / 1e-5).round() as i64
}

pub fn quantize_point(p: Point3) -> [i64; 3] {
    [quantize(p.x), quantize(p.y), quantize(p.z)]
}

/// Stable id for a face group.
pub fn face_id(feature: u32, role_code: u8, centroid: Point3) -> PrimId {
    let mut h = fnv1a(b"face");
    h = fnv1a_extend(h, &feature.to_le_bytes());
    h = fnv1a_extend(h, &[role_code]);
    for q in quantize_point(centroid) {
        h = fnv1a_extend(h, &q.to_le_bytes());
    }
    PrimId(h)
}

/// Stable id for a derived edge between two face groups.
pub fn edge_id(face_a: PrimId, face_b: PrimId, centroid: Point3) -> PrimId {
    let (lo, hi) = if face_a.0 <= face_b.0 {
        (face_a.0, face_b.0)
    } else {
        (face_b.0, face_a.0)
    };
    let mut h = fnv1a(b"edge");
    h = fnv1a_extend(h, &lo.to_le_bytes());
    h = fnv1a_extend(h, &hi.to_le_bytes());
    for q in quantize_point(centroid) {
        h = fnv1a_extend(h, &q.to_le_bytes());
    }
    PrimId(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    #[test]
    fn ids_round_trip_hex() {
        let id = face_id(3, 1, vec3(0.5, 0.25, -1.0));
        let s = id.to_string();
        assert_eq!(PrimId::parse_hex(&s), Some(id));
    }

    #[test]
    fn edge_id_symmetric_in_faces() {
        let a = PrimId(7);
        let b = PrimId(11);
        let c = vec3(1.0, 2.0, 3.0);
        assert_eq!(edge_id(a, b, c), edge_id(b, a, c));
    }

    #[test]
    fn quantization_separates_distinct_centroids() {
        assert_ne!(
            face_id(0, 0, vec3(0.0, 0.0, 0.0)),
            face_id(0, 0, vec3(1e-4, 0.0, 0.0))
        );
    }
}
