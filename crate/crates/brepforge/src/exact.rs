//! Exact rational arithmetic for the mesh boolean.
//!
//! All intersection constructions and orientation predicates run on
//! `BigRational` lifted exactly from the f64 input coordinates, so
//! classification decisions are never subject to rounding. Constructed points
//! are interned; identical constructions on either operand of a boolean reduce
//! to the same canonical rational point, which is what makes the stitched
//! output watertight by vertex identity rather than by tolerance.

use crate::geom::{vec3, Point3};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;
pub type EPoint = [Rat; 3];
pub type EPoint2 = [Rat; 2];

pub fn rat_from_f64(v: f64) -> Rat {
    BigRational::from_float(v).expect("finite coordinate")
}

pub fn epoint_from_f64(p: Point3) -> EPoint {
    [rat_from_f64(p.x), rat_from_f64(p.y), rat_from_f64(p.z)]
}

/// Round a rational to the nearest f64 (within ~2 ulp), safe for arbitrarily
/// large numerators/denominators. `BigRational::to_f64` overflows to NaN for
/// operands beyond f64 range, so scale both sides down first.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let a = r.numer().abs();
    let b = r.denom().clone();
    let ea = a.bits() as i64;
    let eb = b.bits() as i64;
    let scale = |x: &BigInt, e: i64| -> f64 {
        // bring x to roughly 2^80 before converting
        let sh = e - 80;
        let y = if sh > 0 { x >> sh } else { x << (-sh) };
        y.to_f64().unwrap()
    };
    let fa = scale(&a, ea);
    let fb = scale(&b, eb);
    let mut v = fa / fb * 2f64.powi((ea - eb) as i32);
    if neg {
        v = -v;
    }
    v
}

pub fn epoint_to_f64(p: &EPoint) -> Point3 {
    vec3(rat_to_f64(&p[0]), rat_to_f64(&p[1]), rat_to_f64(&p[2]))
}

pub fn esub(a: &EPoint, b: &EPoint) -> EPoint {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

pub fn ecross(a: &EPoint, b: &EPoint) -> EPoint {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

pub fn edot(a: &EPoint, b: &EPoint) -> Rat {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

pub fn elerp(a: &EPoint, b: &EPoint, t: &Rat) -> EPoint {
    [
        &a[0] + (&b[0] - &a[0]) * t,
        &a[1] + (&b[1] - &a[1]) * t,
        &a[2] + (&b[2] - &a[2]) * t,
    ]
}

/// Exact plane through three points: (normal, offset) with n·x = d.
#[derive(Debug, Clone)]
pub struct EPlane {
    pub normal: EPoint,
    pub d: Rat,
}

impl EPlane {
    pub fn through(a: &EPoint, b: &EPoint, c: &EPoint) -> EPlane {
        let n = ecross(&esub(b, a), &esub(c, a));
        let d = edot(&n, a);
        EPlane { normal: n, d }
    }

    pub fn is_degenerate(&self) -> bool {
        self.normal.iter().all(|c| c.is_zero())
    }

    /// Sign of n·p - d: +1 above, -1 below, 0 on the plane.
    pub fn side(&self, p: &EPoint) -> i32 {
        sign(&(edot(&self.normal, p) - &self.d))
    }
}

pub fn sign(r: &Rat) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Orientation of 2D triangle (a, b, c): +1 CCW, -1 CW, 0 collinear.
pub fn orient2d(a: &EPoint2, b: &EPoint2, c: &EPoint2) -> i32 {
    let det = (&b[0] - &a[0]) * (&c[1] - &a[1]) - (&b[1] - &a[1]) * (&c[0] - &a[0]);
    sign(&det)
}

/// Intersection parameter of segment (u, v) with a plane, if the segment
/// properly crosses or touches it. Returns t in [0, 1] with p = u + t(v-u).
pub fn seg_plane_param(u: &EPoint, v: &EPoint, plane: &EPlane) -> Option<Rat> {
    let su = edot(&plane.normal, u) - &plane.d;
    let sv = edot(&plane.normal, v) - &plane.d;
    let denom = &su - &sv;
    if denom.is_zero() {
        return None; // parallel (possibly inside the plane)
    }
    let t = su / denom;
    if t >= Rat::zero() && t <= Rat::one() {
        Some(t)
    } else {
        None
    }
}

/// Point-in-triangle (closed) test in 2D. The triangle may have either
/// orientation.
pub fn point_in_tri2(p: &EPoint2, a: &EPoint2, b: &EPoint2, c: &EPoint2) -> bool {
    let orient = orient2d(a, b, c);
    if orient == 0 {
        return false;
    }
    let s0 = orient2d(a, b, p) * orient;
    let s1 = orient2d(b, c, p) * orient;
    let s2 = orient2d(c, a, p) * orient;
    s0 >= 0 && s1 >= 0 && s2 >= 0
}

/// Strict interior version of [`point_in_tri2`].
pub fn point_in_tri2_strict(p: &EPoint2, a: &EPoint2, b: &EPoint2, c: &EPoint2) -> bool {
    let orient = orient2d(a, b, c);
    if orient == 0 {
        return false;
    }
    let s0 = orient2d(a, b, p) * orient;
    let s1 = orient2d(b, c, p) * orient;
    let s2 = orient2d(c, a, p) * orient;
    s0 > 0 && s1 > 0 && s2 > 0
}

/// Canonical interner for exact points. Both operands of a boolean construct
/// intersection points through identical formulas, so interning by value makes
/// shared curve vertices literally the same vertex.
#[derive(Default)]
pub struct PointStore {
    map: std::collections::BTreeMap<EPointKey, u32>,
    pub pts: Vec<EPoint>,
    pub approx: Vec<Point3>,
}

type EPointKey = (Rat, Rat, Rat);

impl PointStore {
    pub fn new() -> PointStore {
        PointStore::default()
    }

    pub fn intern(&mut self, p: EPoint) -> u32 {
        let key = (p[0].clone(), p[1].clone(), p[2].clone());
        if let Some(&id) = self.map.get(&key) {
            return id;
        }
        let id = self.pts.len() as u32;
        self.approx.push(epoint_to_f64(&p));
        self.pts.push(p);
        self.map.insert(key, id);
        id
    }

    pub fn intern_f64(&mut self, p: Point3) -> u32 {
        self.intern(epoint_from_f64(p))
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }
}

/// Project an exact 3D point to 2D by dropping the dominant axis of `normal`.
pub fn project_axis(normal: &EPoint) -> usize {
    let ax = normal[0].abs();
    let ay = normal[1].abs();
    let az = normal[2].abs();
    if ax >= ay && ax >= az {
        0
    } else if ay >= az {
        1
    } else {
        2
    }
}

pub fn drop_axis(p: &EPoint, axis: usize) -> EPoint2 {
    match axis {
        0 => [p[1].clone(), p[2].clone()],
        1 => [p[2].clone(), p[0].clone()],
        _ => [p[0].clone(), p[1].clone()],
    }
}

/// Result of intersecting two 2D segments.
pub enum SegSeg {
    Disjoint,
    /// Proper crossing at parameters (t on ab, u on cd), interior to both.
    Cross(Rat),
    /// Collinear with overlap: parameters of the overlap of cd on ab.
    Overlap(Rat, Rat),
}

/// Intersect segments ab and cd exactly. `Cross(t)` yields the point on ab.
pub fn seg_seg_2d(a: &EPoint2, b: &EPoint2, c: &EPoint2, d: &EPoint2) -> SegSeg {
    let r = [&b[0] - &a[0], &b[1] - &a[1]];
    let s = [&d[0] - &c[0], &d[1] - &c[1]];
    let denom = &r[0] * &s[1] - &r[1] * &s[0];
    let ac = [&c[0] - &a[0], &c[1] - &a[1]];
    if denom.is_zero() {
        // parallel; collinear iff ac x r == 0
        let cross = &ac[0] * &r[1] - &ac[1] * &r[0];
        if !cross.is_zero() {
            return SegSeg::Disjoint;
        }
        let rr = &r[0] * &r[0] + &r[1] * &r[1];
        if rr.is_zero() {
            return SegSeg::Disjoint;
        }
        let t0 = (&ac[0] * &r[0] + &ac[1] * &r[1]) / &rr;
        let ad = [&d[0] - &a[0], &d[1] - &a[1]];
        let t1 = (&ad[0] * &r[0] + &ad[1] * &r[1]) / &rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let lo = if lo < Rat::zero() { Rat::zero() } else { lo };
        let hi = if hi > Rat::one() { Rat::one() } else { hi };
        if lo >= hi {
            return SegSeg::Disjoint;
        }
        SegSeg::Overlap(lo, hi)
    } else {
        let t = (&ac[0] * &s[1] - &ac[1] * &s[0]) / &denom;
        let u = (&ac[0] * &r[1] - &ac[1] * &r[0]) / &denom;
        if t >= Rat::zero() && t <= Rat::one() && u >= Rat::zero() && u <= Rat::one() {
            SegSeg::Cross(t)
        } else {
            SegSeg::Disjoint
        }
    }
}

pub fn elerp2(a: &EPoint2, b: &EPoint2, t: &Rat) -> EPoint2 {
    [&a[0] + (&b[0] - &a[0]) * t, &a[1] + (&b[1] - &a[1]) * t]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(x: f64, y: f64, z: f64) -> EPoint {
        epoint_from_f64(vec3(x, y, z))
    }

    fn ep2(x: f64, y: f64) -> EPoint2 {
        [rat_from_f64(x), rat_from_f64(y)]
    }

    #[test]
    fn f64_round_trip_is_exact() {
        for v in [0.1, -3.75, 1e-17, 12345.678, f64::MIN_POSITIVE] {
            assert_eq!(rat_to_f64(&rat_from_f64(v)), v);
        }
    }

    #[test]
    fn to_f64_survives_huge_operands() {
        let big = rat_from_f64(1e300) * rat_from_f64(1e300) * rat_from_f64(3.0)
            / (rat_from_f64(1e300) * rat_from_f64(1e300));
        assert_eq!(rat_to_f64(&big), 3.0);
    }

    #[test]
    fn plane_side_signs() {
        let pl = EPlane::through(&ep(0.0, 0.0, 0.0), &ep(1.0, 0.0, 0.0), &ep(0.0, 1.0, 0.0));
        assert_eq!(pl.side(&ep(0.0, 0.0, 1.0)), 1);
        assert_eq!(pl.side(&ep(0.0, 0.0, -1.0)), -1);
        assert_eq!(pl.side(&ep(0.5, 0.5, 0.0)), 0);
    }

    #[test]
    fn segment_plane_midpoint() {
        let pl = EPlane::through(&ep(0.0, 0.0, 0.5), &ep(1.0, 0.0, 0.5), &ep(0.0, 1.0, 0.5));
        let t = seg_plane_param(&ep(0.0, 0.0, 0.0), &ep(0.0, 0.0, 1.0), &pl).unwrap();
        assert_eq!(t, rat_from_f64(0.5));
    }

    #[test]
    fn interning_merges_identical_constructions() {
        let mut store = PointStore::new();
        let a = store.intern(elerp(&ep(0.0, 0.0, 0.0), &ep(1.0, 0.0, 0.0), &rat_from_f64(0.25)));
        let b = store.intern(ep(0.25, 0.0, 0.0));
        assert_eq!(a, b);
    }

    #[test]
    fn seg_seg_cases() {
        match seg_seg_2d(&ep2(0.0, 0.0), &ep2(1.0, 0.0), &ep2(0.5, -1.0), &ep2(0.5, 1.0)) {
            SegSeg::Cross(t) => assert_eq!(t, rat_from_f64(0.5)),
            _ => panic!("expected crossing"),
        }
        match seg_seg_2d(&ep2(0.0, 0.0), &ep2(1.0, 0.0), &ep2(0.25, 0.0), &ep2(2.0, 0.0)) {
            SegSeg::Overlap(lo, hi) => {
                assert_eq!(lo, rat_from_f64(0.25));
                assert_eq!(hi, rat_from_f64(1.0));
            }
            _ => panic!("expected overlap"),
        }
        assert!(matches!(
            seg_seg_2d(&ep2(0.0, 0.0), &ep2(1.0, 0.0), &ep2(0.0, 1.0), &ep2(1.0, 1.0)),
            SegSeg::Disjoint
        ));
    }
}
