//! Exact incremental constrained triangulation inside a triangular domain.
//!
//! Used by the mesh boolean to subdivide each input triangle along its
//! intersection curves, and by the sketch tessellator (via a super-triangle)
//! to triangulate cap polygons. Runs entirely on rational coordinates: point
//! location and constraint walks are exact, so coincident and collinear
//! inputs subdivide consistently on both sides of a shared edge.

use crate::exact::{orient2d, EPoint2, Rat};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CdtError {
    #[error("point lies outside the triangulation domain")]
    PointOutsideDomain,
    #[error("constraint crosses an existing constraint")]
    CrossingConstraints,
    #[error("pseudo-polygon retriangulation failed")]
    RetriangulationFailed,
}

pub struct Cdt {
    pts: Vec<EPoint2>,
    key: BTreeMap<(Rat, Rat), u32>,
    tris: Vec<[u32; 3]>,
    alive: Vec<bool>,
    constrained: BTreeSet<(u32, u32)>,
}

fn ekey(p: &EPoint2) -> (Rat, Rat) {
    (p[0].clone(), p[1].clone())
}

fn pair(i: u32, j: u32) -> (u32, u32) {
    (i.min(j), i.max(j))
}

impl Cdt {
    /// Domain triangle; reordered to CCW internally.
    pub fn new(a: EPoint2, b: EPoint2, c: EPoint2) -> Cdt {
        let mut cdt = Cdt {
            pts: Vec::new(),
            key: BTreeMap::new(),
            tris: Vec::new(),
            alive: Vec::new(),
            constrained: BTreeSet::new(),
        };
        let ccw = orient2d(&a, &b, &c) > 0;
        let (b, c) = if ccw { (b, c) } else { (c, b) };
        for p in [a, b, c] {
            let id = cdt.pts.len() as u32;
            cdt.key.insert(ekey(&p), id);
            cdt.pts.push(p);
        }
        cdt.push_tri([0, 1, 2]);
        cdt
    }

    fn push_tri(&mut self, t: [u32; 3]) {
        self.tris.push(t);
        self.alive.push(true);
    }

    pub fn point_id(&self, p: &EPoint2) -> Option<u32> {
        self.key.get(&ekey(p)).copied()
    }

    pub fn points(&self) -> &[EPoint2] {
        &self.pts
    }

    pub fn is_constrained(&self, i: u32, j: u32) -> bool {
        self.constrained.contains(&pair(i, j))
    }

    pub fn triangles(&self) -> Vec<[u32; 3]> {
        self.tris
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| a)
            .map(|(t, _)| *t)
            .collect()
    }

    fn add_point(&mut self, p: EPoint2) -> u32 {
        let id = self.pts.len() as u32;
        self.key.insert(ekey(&p), id);
        self.pts.push(p);
        id
    }

    pub fn insert_point(&mut self, p: EPoint2) -> Result<u32, CdtError> {
        if let Some(id) = self.point_id(&p) {
            return Ok(id);
        }
        // locate: first triangle with all orientations >= 0
        let mut hit: Option<(usize, [i32; 3])> = None;
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            let s = [
                orient2d(&self.pts[tri[0] as usize], &self.pts[tri[1] as usize], &p),
                orient2d(&self.pts[tri[1] as usize], &self.pts[tri[2] as usize], &p),
                orient2d(&self.pts[tri[2] as usize], &self.pts[tri[0] as usize], &p),
            ];
            if s.iter().all(|&x| x >= 0) {
                hit = Some((t, s));
                break;
            }
        }
        let Some((t, s)) = hit else {
            return Err(CdtError::PointOutsideDomain);
        };
        let tri = self.tris[t];
        let zeros = s.iter().filter(|&&x| x == 0).count();
        let id = self.add_point(p);
        match zeros {
            0 => {
                // interior: 1 -> 3
                self.alive[t] = false;
                self.push_tri([tri[0], tri[1], id]);
                self.push_tri([tri[1], tri[2], id]);
                self.push_tri([tri[2], tri[0], id]);
            }
            1 => {
                // on the edge whose orientation vanished
                let k = s.iter().position(|&x| x == 0).unwrap();
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let w = tri[(k + 2) % 3];
                self.alive[t] = false;
                self.push_tri([u, id, w]);
                self.push_tri([id, v, w]);
                let was_constrained = self.constrained.remove(&pair(u, v));
                if was_constrained {
                    self.constrained.insert(pair(u, id));
                    self.constrained.insert(pair(id, v));
                }
                // neighbor across (u, v), if any
                if let Some(nt) = self.find_other_tri(u, v, t) {
                    let ntri = self.tris[nt];
                    let x = ntri
                        .iter()
                        .copied()
                        .find(|&x| x != u && x != v)
                        .unwrap();
                    self.alive[nt] = false;
                    // neighbor is oriented (v, u, x) as CCW
                    self.push_tri([v, id, x]);
                    self.push_tri([id, u, x]);
                }
            }
            _ => unreachable!("duplicate point should have been interned"),
        }
        Ok(id)
    }

    fn find_other_tri(&self, u: u32, v: u32, not: usize) -> Option<usize> {
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] || t == not {
                continue;
            }
            if tri.contains(&u) && tri.contains(&v) {
                return Some(t);
            }
        }
        None
    }

    fn edge_exists(&self, i: u32, j: u32) -> bool {
        self.tris
            .iter()
            .zip(&self.alive)
            .any(|(tri, &a)| a && tri.contains(&i) && tri.contains(&j))
    }

    pub fn insert_constraint(&mut self, i: u32, j: u32) -> Result<(), CdtError> {
        if i == j {
            return Ok(());
        }
        if self.edge_exists(i, j) {
            self.constrained.insert(pair(i, j));
            return Ok(());
        }
        // Does the segment pass exactly through another vertex? Split there.
        let (pi, pj) = (self.pts[i as usize].clone(), self.pts[j as usize].clone());
        for k in 0..self.pts.len() as u32 {
            if k == i || k == j {
                continue;
            }
            let pk = &self.pts[k as usize];
            if orient2d(&pi, &pj, pk) == 0 && between(&pi, &pj, pk) {
                self.insert_constraint(i, k)?;
                self.insert_constraint(k, j)?;
                return Ok(());
            }
        }
        // Walk the corridor of triangles crossed by the open segment (i, j).
        let mut upper: Vec<u32> = Vec::new();
        let mut lower: Vec<u32> = Vec::new();
        let mut dead: Vec<usize> = Vec::new();

        // first triangle around i pierced by the segment
        let mut cur: Option<(usize, u32, u32)> = None; // (tri, u, v) exit edge
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] || !tri.contains(&i) {
                continue;
            }
            let k = tri.iter().position(|&x| x == i).unwrap();
            let u = tri[(k + 1) % 3];
            let v = tri[(k + 2) % 3];
            let su = orient2d(&pi, &pj, &self.pts[u as usize]);
            let sv = orient2d(&pi, &pj, &self.pts[v as usize]);
            // segment leaves through edge (u, v) iff u strictly right, v strictly left
            if su < 0 && sv > 0 {
                cur = Some((t, u, v));
                break;
            }
        }
        let Some((mut t, mut u, mut v)) = cur else {
            return Err(CdtError::RetriangulationFailed);
        };
        dead.push(t);
        lower.push(u);
        upper.push(v);
        loop {
            if self.constrained.contains(&pair(u, v)) {
                return Err(CdtError::CrossingConstraints);
            }
            let nt = self
                .find_other_tri(u, v, t)
                .ok_or(CdtError::RetriangulationFailed)?;
            let w = self.tris[nt]
                .iter()
                .copied()
                .find(|&x| x != u && x != v)
                .unwrap();
            dead.push(nt);
            if w == j {
                break;
            }
            let sw = orient2d(&pi, &pj, &self.pts[w as usize]);
            if sw == 0 {
                // passes exactly through w: restart as two sub-constraints
                return match () {
                    () => {
                        // roll back nothing: we have not modified the mesh yet
                        self.insert_constraint(i, w)?;
                        self.insert_constraint(w, j)
                    }
                };
            }
            t = nt;
            if sw < 0 {
                lower.push(w);
                u = w;
            } else {
                upper.push(w);
                v = w;
            }
        }
        for d in dead {
            self.alive[d] = false;
        }
        // upper chain runs on the left of i->j, lower on the right
        let mut upper_poly = vec![i];
        upper_poly.extend(upper.iter().copied());
        upper_poly.push(j);
        let mut lower_poly = vec![j];
        lower_poly.extend(lower.iter().rev().copied());
        lower_poly.push(i);
        self.ear_clip(&upper_poly)?;
        self.ear_clip(&lower_poly)?;
        self.constrained.insert(pair(i, j));
        Ok(())
    }

    /// Triangulate a simple polygon given as a CCW vertex chain (the closing
    /// edge runs last -> first).
    fn ear_clip(&mut self, poly: &[u32]) -> Result<(), CdtError> {
        let mut ring: Vec<u32> = poly.to_vec();
        // ensure CCW by exact signed area
        let area2 = {
            let mut acc = Rat::from_integer(0.into());
            for k in 0..ring.len() {
                let p = &self.pts[ring[k] as usize];
                let q = &self.pts[ring[(k + 1) % ring.len()] as usize];
                acc += &p[0] * &q[1] - &q[0] * &p[1];
            }
            acc
        };
        if crate::exact::sign(&area2) < 0 {
            ring.reverse();
        }
        'outer: while ring.len() > 3 {
            let n = ring.len();
            for k in 0..n {
                let u = ring[(k + n - 1) % n];
                let v = ring[k];
                let w = ring[(k + 1) % n];
                let (pu, pv, pw) = (
                    &self.pts[u as usize],
                    &self.pts[v as usize],
                    &self.pts[w as usize],
                );
                let o = orient2d(pu, pv, pw);
                if o == 0 {
                    // collinear spike: drop v when it lies strictly between
                    if between(pu, pw, pv) {
                        ring.remove(k);
                        continue 'outer;
                    }
                    continue;
                }
                if o < 0 {
                    continue; // reflex
                }
                let mut ear = true;
                for &x in &ring {
                    if x == u || x == v || x == w {
                        continue;
                    }
                    if crate::exact::point_in_tri2(&self.pts[x as usize], pu, pv, pw) {
                        ear = false;
                        break;
                    }
                }
                if ear {
                    self.push_tri([u, v, w]);
                    ring.remove(k);
                    continue 'outer;
                }
            }
            return Err(CdtError::RetriangulationFailed);
        }
        if ring.len() == 3 {
            let o = orient2d(
                &self.pts[ring[0] as usize],
                &self.pts[ring[1] as usize],
                &self.pts[ring[2] as usize],
            );
            if o != 0 {
                self.push_tri([ring[0], ring[1], ring[2]]);
            }
        }
        Ok(())
    }
}

/// Is `p` strictly between `a` and `b` (assuming collinearity)?
fn between(a: &EPoint2, b: &EPoint2, p: &EPoint2) -> bool {
    let d = [&b[0] - &a[0], &b[1] - &a[1]];
    let ap = [&p[0] - &a[0], &p[1] - &a[1]];
    let t = &d[0] * &ap[0] + &d[1] * &ap[1];
    let len = &d[0] * &d[0] + &d[1] * &d[1];
    t > Rat::from_integer(0.into()) && t < len
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat_from_f64;

    fn p(x: f64, y: f64) -> EPoint2 {
        [rat_from_f64(x), rat_from_f64(y)]
    }

    fn total_area(cdt: &Cdt) -> f64 {
        let mut acc = 0.0;
        for t in cdt.triangles() {
            let a = &cdt.points()[t[0] as usize];
            let b = &cdt.points()[t[1] as usize];
            let c = &cdt.points()[t[2] as usize];
            let ab = [
                crate::exact::rat_to_f64(&(&b[0] - &a[0])),
                crate::exact::rat_to_f64(&(&b[1] - &a[1])),
            ];
            let ac = [
                crate::exact::rat_to_f64(&(&c[0] - &a[0])),
                crate::exact::rat_to_f64(&(&c[1] - &a[1])),
            ];
            acc += 0.5 * (ab[0] * ac[1] - ab[1] * ac[0]);
        }
        acc
    }

    #[test]
    fn interior_point_splits_into_three() {
        let mut cdt = Cdt::new(p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0));
        cdt.insert_point(p(1.0, 1.0)).unwrap();
        assert_eq!(cdt.triangles().len(), 3);
        assert!((total_area(&cdt) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_point_splits_edge() {
        let mut cdt = Cdt::new(p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0));
        cdt.insert_point(p(2.0, 0.0)).unwrap();
        assert_eq!(cdt.triangles().len(), 2);
        assert!((total_area(&cdt) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn constraint_through_interior() {
        let mut cdt = Cdt::new(p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0));
        let a = cdt.insert_point(p(1.0, 0.0)).unwrap();
        let b = cdt.insert_point(p(0.0, 1.0)).unwrap();
        cdt.insert_constraint(a, b).unwrap();
        assert!(cdt.is_constrained(a, b));
        assert!((total_area(&cdt) - 8.0).abs() < 1e-12);
        // every edge is used by at most two triangles and orientation is CCW
        for t in cdt.triangles() {
            let o = orient2d(
                &cdt.points()[t[0] as usize],
                &cdt.points()[t[1] as usize],
                &cdt.points()[t[2] as usize],
            );
            assert_eq!(o, 1);
        }
    }

    #[test]
    fn constraint_through_existing_vertex_splits() {
        let mut cdt = Cdt::new(p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0));
        let a = cdt.insert_point(p(2.0, 0.0)).unwrap();
        let m = cdt.insert_point(p(1.0, 1.0)).unwrap();
        let b = cdt.insert_point(p(0.0, 2.0)).unwrap();
        cdt.insert_constraint(a, b).unwrap();
        assert!(cdt.is_constrained(a, m));
        assert!(cdt.is_constrained(m, b));
        assert!((total_area(&cdt) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_point_returns_same_id() {
        let mut cdt = Cdt::new(p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0));
        let a = cdt.insert_point(p(1.0, 1.0)).unwrap();
        let b = cdt.insert_point(p(1.0, 1.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn many_points_preserve_area() {
        let mut cdt = Cdt::new(p(0.0, 0.0), p(8.0, 0.0), p(0.0, 8.0));
        let mut ids = Vec::new();
        for k in 1..6 {
            ids.push(cdt.insert_point(p(k as f64 * 0.5, k as f64 * 0.7)).unwrap());
        }
        for w in ids.windows(2) {
            cdt.insert_constraint(w[0], w[1]).unwrap();
        }
        assert!((total_area(&cdt) - 32.0).abs() < 1e-12);
    }
}
