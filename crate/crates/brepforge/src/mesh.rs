//! Labeled triangle meshes: the geometric ground truth of every `Solid`.

use crate::geom::{Aabb, Point3, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Oriented triangle mesh where every triangle carries a face-group label.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TriMesh {
    pub verts: Vec<Point3>,
    pub tris: Vec<[u32; 3]>,
    /// Face-group index per triangle, parallel to `tris`.
    pub group: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshDefect {
    /// An undirected edge is not shared by exactly two triangles.
    OpenOrNonManifoldEdge,
    /// An edge is traversed twice in the same direction (inconsistent winding).
    InconsistentOrientation,
}

impl TriMesh {
    pub fn new() -> TriMesh {
        TriMesh::default()
    }

    pub fn push_tri(&mut self, tri: [u32; 3], group: u32) {
        self.tris.push(tri);
        self.group.push(group);
    }

    pub fn tri_points(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.tris[t];
        [
            self.verts[a as usize],
            self.verts[b as usize],
            self.verts[c as usize],
        ]
    }

    pub fn tri_normal_area(&self, t: usize) -> (Vec3, f64) {
        let [a, b, c] = self.tri_points(t);
        let n = (b - a).cross(c - a);
        let len = n.norm();
        if len == 0.0 {
            (Vec3::ZERO, 0.0)
        } else {
            (n / len, 0.5 * len)
        }
    }

    pub fn tri_centroid(&self, t: usize) -> Point3 {
        let [a, b, c] = self.tri_points(t);
        (a + b + c) / 3.0
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::of_points(&self.verts)
    }

    pub fn area(&self) -> f64 {
        (0..self.tris.len()).map(|t| self.tri_normal_area(t).1).sum()
    }

    /// Signed volume via the divergence theorem; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        let mut v = 0.0;
        for t in 0..self.tris.len() {
            let [a, b, c] = self.tri_points(t);
            v += a.dot(b.cross(c));
        }
        v / 6.0
    }

    /// Map from undirected edge to the (up to 2) incident triangles, with the
    /// direction each traverses it. Key is (min, max) vertex index.
    pub fn edge_incidence(&self) -> BTreeMap<(u32, u32), Vec<(usize, bool)>> {
        let mut map: BTreeMap<(u32, u32), Vec<(usize, bool)>> = BTreeMap::new();
        for (t, tri) in self.tris.iter().enumerate() {
            for k in 0..3 {
                let u = tri[k];
                let v = tri[(k + 1) % 3];
                let key = (u.min(v), u.max(v));
                map.entry(key).or_default().push((t, u < v));
            }
        }
        map
    }

    /// Watertight + consistently oriented: every undirected edge appears in
    /// exactly two triangles, once per direction.
    pub fn check_closed(&self) -> Result<(), MeshDefect> {
        for (_, inc) in self.edge_incidence() {
            if inc.len() != 2 {
                return Err(MeshDefect::OpenOrNonManifoldEdge);
            }
            if inc[0].1 == inc[1].1 {
                return Err(MeshDefect::InconsistentOrientation);
            }
        }
        Ok(())
    }

    pub fn is_watertight(&self) -> bool {
        self.edge_incidence().values().all(|inc| inc.len() == 2)
    }

    pub fn is_oriented(&self) -> bool {
        self.check_closed().is_ok()
    }

    /// Connected components over shared edges. Returns a component index per
    /// triangle and the component count.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let mut comp = vec![u32::MAX; self.tris.len()];
        let incidence = self.edge_incidence();
        // adjacency per triangle
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.tris.len()];
        for inc in incidence.values() {
            for i in 0..inc.len() {
                for j in (i + 1)..inc.len() {
                    adj[inc[i].0].push(inc[j].0);
                    adj[inc[j].0].push(inc[i].0);
                }
            }
        }
        let mut n_comp = 0;
        for start in 0..self.tris.len() {
            if comp[start] != u32::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = n_comp as u32;
            while let Some(t) = stack.pop() {
                for &u in &adj[t] {
                    if comp[u] == u32::MAX {
                        comp[u] = n_comp as u32;
                        stack.push(u);
                    }
                }
            }
            n_comp += 1;
        }
        (comp, n_comp)
    }

    /// Euler characteristic per connected component (V - E + F over the
    /// triangle mesh). For a closed orientable surface of genus g this is
    /// 2 - 2g.
    pub fn component_euler(&self) -> Vec<i64> {
        let (comp, n_comp) = self.components();
        let mut faces = vec![0i64; n_comp];
        let mut vert_comp: BTreeMap<u32, u32> = BTreeMap::new();
        for (t, tri) in self.tris.iter().enumerate() {
            faces[comp[t] as usize] += 1;
            for &v in tri {
                vert_comp.insert(v, comp[t]);
            }
        }
        let mut verts = vec![0i64; n_comp];
        for (_, &c) in &vert_comp {
            verts[c as usize] += 1;
        }
        let mut edges = vec![0i64; n_comp];
        for ((u, _v), inc) in self.edge_incidence() {
            let c = vert_comp[&u];
            let _ = inc;
            edges[c as usize] += 1;
        }
        (0..n_comp)
            .map(|c| verts[c] + faces[c] - edges[c])
            .collect()
    }

    /// Appends `other`, remapping its vertex and group indices.
    /// Returns the group-index offset applied to `other`.
    pub fn append(&mut self, other: &TriMesh, group_offset: u32) {
        let base = self.verts.len() as u32;
        self.verts.extend_from_slice(&other.verts);
        for (tri, &g) in other.tris.iter().zip(&other.group) {
            self.push_tri(
                [tri[0] + base, tri[1] + base, tri[2] + base],
                g + group_offset,
            );
        }
    }

    /// Flip orientation of every triangle in place.
    pub fn flip(&mut self) {
        for tri in &mut self.tris {
            tri.swap(1, 2);
        }
    }

    /// Group indices that still own at least one triangle.
    pub fn live_groups(&self) -> Vec<u32> {
        let mut seen = std::collections::BTreeSet::new();
        for &g in &self.group {
            seen.insert(g);
        }
        seen.into_iter().collect()
    }

    /// Area-weighted centroid of one group's triangles.
    pub fn group_centroid(&self, g: u32) -> Option<Point3> {
        let mut acc = Vec3::ZERO;
        let mut area = 0.0;
        for t in 0..self.tris.len() {
            if self.group[t] == g {
                let (_, a) = self.tri_normal_area(t);
                acc += self.tri_centroid(t) * a;
                area += a;
            }
        }
        if area > 0.0 {
            Some(acc / area)
        } else {
            None
        }
    }
}

/// Convenience constructor: axis-aligned box with one group per side
/// (groups 0..6 in -x,+x,-y,+y,-z,+z order).
pub fn box_mesh(lo: Point3, hi: Point3) -> TriMesh {
    let mut m = TriMesh::new();
    let corners = [
        lo,
        Point3 { x: hi.x, ..lo },
        Point3 { x: hi.x, y: hi.y, ..lo },
        Point3 { y: hi.y, ..lo },
        Point3 { z: hi.z, ..lo },
        Point3 { x: hi.x, z: hi.z, ..lo },
        hi,
        Point3 { y: hi.y, z: hi.z, ..lo },
    ];
    m.verts.extend_from_slice(&corners);
    // (group, quad with outward CCW winding)
    let quads: [(u32, [u32; 4]); 6] = [
        (0, [0, 4, 7, 3]), // -x
        (1, [1, 2, 6, 5]), // +x
        (2, [0, 1, 5, 4]), // -y
        (3, [3, 7, 6, 2]), // +y
        (4, [0, 3, 2, 1]), // -z
        (5, [4, 5, 6, 7]), // +z
    ];
    for (g, q) in quads {
        m.push_tri([q[0], q[1], q[2]], g);
        m.push_tri([q[0], q[2], q[3]], g);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    #[test]
    fn box_is_closed_with_unit_volume() {
        let m = box_mesh(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0));
        assert!(m.check_closed().is_ok());
        assert!((m.signed_volume() - 1.0).abs() < 1e-12);
        assert!((m.area() - 6.0).abs() < 1e-12);
        assert_eq!(m.component_euler(), vec![2]);
    }

    #[test]
    fn flipped_box_has_negative_volume() {
        let mut m = box_mesh(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0));
        m.flip();
        assert!(m.check_closed().is_ok());
        assert!((m.signed_volume() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_detected() {
        let mut m = box_mesh(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0));
        m.tris.pop();
        m.group.pop();
        assert_eq!(m.check_closed(), Err(MeshDefect::OpenOrNonManifoldEdge));
    }

    #[test]
    fn two_boxes_two_components() {
        let mut m = box_mesh(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0));
        let other = box_mesh(vec3(5.0, 0.0, 0.0), vec3(6.0, 1.0, 1.0));
        m.append(&other, 6);
        assert_eq!(m.components().1, 2);
        assert_eq!(m.component_euler(), vec![2, 2]);
    }
}
