//! Analytic surface and curve records attached to face groups and edges.

use crate::geom::{Point3, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Surface {
    Plane {
        origin: Point3,
        normal: Vec3,
    },
    Cylinder {
        axis_point: Point3,
        axis_dir: Vec3,
        radius: f64,
    },
    Cone {
        apex: Point3,
        axis_dir: Vec3,
        half_angle: f64,
    },
    Sphere {
        center: Point3,
        radius: f64,
    },
    Torus {
        center: Point3,
        axis_dir: Vec3,
        major_r: f64,
        minor_r: f64,
    },
    Freeform,
}

impl Surface {
    pub fn type_code(&self) -> u8 {
        match self {
            Surface::Plane { .. } => 0,
            Surface::Cylinder { .. } => 1,
            Surface::Cone { .. } => 2,
            Surface::Sphere { .. } => 3,
            Surface::Torus { .. } => 4,
            Surface::Freeform => 5,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Surface::Plane { .. } => "plane",
            Surface::Cylinder { .. } => "cylinder",
            Surface::Cone { .. } => "cone",
            Surface::Sphere { .. } => "sphere",
            Surface::Torus { .. } => "torus",
            Surface::Freeform => "freeform",
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: Point3) -> f64 {
        match *self {
            Surface::Plane { origin, normal } => (p - origin).dot(normal).abs(),
            Surface::Cylinder {
                axis_point,
                axis_dir,
                radius,
            } => {
                let d = p - axis_point;
                let radial = d - axis_dir * d.dot(axis_dir);
                (radial.norm() - radius).abs()
            }
            Surface::Cone {
                apex,
                axis_dir,
                half_angle,
            } => {
                let d = p - apex;
                let h = d.dot(axis_dir);
                let r = (d - axis_dir * h).norm();
                // distance to the cone line in the (h, r) half-plane
                let (s, c) = half_angle.sin_cos();
                (r * c - h * s).abs()
            }
            Surface::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Surface::Torus {
                center,
                axis_dir,
                major_r,
                minor_r,
            } => {
                let d = p - center;
                let h = d.dot(axis_dir);
                let radial = d - axis_dir * h;
                let q = radial.norm() - major_r;
                ((q * q + h * h).sqrt() - minor_r).abs()
            }
            Surface::Freeform => 0.0,
        }
    }

    /// Closest point on the surface to `p` (best effort for tori/cones).
    pub fn project(&self, p: Point3) -> Point3 {
        match *self {
            Surface::Plane { origin, normal } => p - normal * (p - origin).dot(normal),
            Surface::Cylinder {
                axis_point,
                axis_dir,
                radius,
            } => {
                let d = p - axis_point;
                let h = d.dot(axis_dir);
                let radial = d - axis_dir * h;
                match radial.try_normalized(1e-14) {
                    Some(r) => axis_point + axis_dir * h + r * radius,
                    None => p,
                }
            }
            Surface::Cone {
                apex,
                axis_dir,
                half_angle,
            } => {
                let d = p - apex;
                let h = d.dot(axis_dir);
                let radial = d - axis_dir * h;
                let r = radial.norm();
                let (s, c) = half_angle.sin_cos();
                // project (h, r) onto the line r = h tan(half_angle)
                let t = h * c + r * s;
                let rn = radial.try_normalized(1e-14).unwrap_or(Vec3::ZERO);
                apex + axis_dir * (t * c) + rn * (t * s)
            }
            Surface::Sphere { center, radius } => match (p - center).try_normalized(1e-14) {
                Some(d) => center + d * radius,
                None => p,
            },
            Surface::Torus {
                center,
                axis_dir,
                major_r,
                minor_r,
            } => {
                let d = p - center;
                let h = d.dot(axis_dir);
                let radial = d - axis_dir * h;
                let rn = match radial.try_normalized(1e-14) {
                    Some(r) => r,
                    None => return p,
                };
                let ring = center + rn * major_r;
                match (p - ring).try_normalized(1e-14) {
                    Some(m) => ring + m * minor_r,
                    None => p,
                }
            }
            Surface::Freeform => p,
        }
    }

    /// Outward-agnostic surface normal at a point assumed on the surface.
    pub fn normal_at(&self, p: Point3) -> Vec3 {
        match *self {
            Surface::Plane { normal, .. } => normal,
            Surface::Cylinder {
                axis_point,
                axis_dir,
                ..
            } => {
                let d = p - axis_point;
                (d - axis_dir * d.dot(axis_dir))
                    .try_normalized(1e-14)
                    .unwrap_or(Vec3::Z)
            }
            Surface::Cone {
                apex,
                axis_dir,
                half_angle,
            } => {
                let d = p - apex;
                let h = d.dot(axis_dir);
                let radial = (d - axis_dir * h).try_normalized(1e-14).unwrap_or(Vec3::Z);
                let (s, c) = half_angle.sin_cos();
                radial * c - axis_dir * s
            }
            Surface::Sphere { center, .. } => {
                (p - center).try_normalized(1e-14).unwrap_or(Vec3::Z)
            }
            Surface::Torus {
                center,
                axis_dir,
                major_r,
                ..
            } => {
                let d = p - center;
                let h = d.dot(axis_dir);
                let radial = d - axis_dir * h;
                match radial.try_normalized(1e-14) {
                    Some(rn) => {
                        let ring = center + rn * major_r;
                        (p - ring).try_normalized(1e-14).unwrap_or(Vec3::Z)
                    }
                    None => Vec3::Z,
                }
            }
            Surface::Freeform => Vec3::Z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Curve {
    Line {
        p0: Point3,
        p1: Point3,
    },
    CircleArc {
        center: Point3,
        axis: Vec3,
        radius: f64,
        /// true when the chain closes on itself (full circle)
        closed: bool,
    },
    Polyline {
        points: Vec<Point3>,
    },
}

impl Curve {
    pub fn type_code(&self) -> u8 {
        match self {
            Curve::Line { .. } => 0,
            Curve::CircleArc { .. } => 1,
            Curve::Polyline { .. } => 2,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Curve::Line { .. } => "line",
            Curve::CircleArc { .. } => "circle",
            Curve::Polyline { .. } => "polyline",
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Curve::CircleArc { radius, .. } => Some(*radius),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    #[test]
    fn cylinder_distance_and_projection() {
        let s = Surface::Cylinder {
            axis_point: vec3(0.0, 0.0, 0.0),
            axis_dir: vec3(0.0, 0.0, 1.0),
            radius: 2.0,
        };
        assert!((s.distance(vec3(3.0, 0.0, 5.0)) - 1.0).abs() < 1e-12);
        let p = s.project(vec3(3.0, 0.0, 5.0));
        assert!((p - vec3(2.0, 0.0, 5.0)).norm() < 1e-12);
    }

    #[test]
    fn torus_distance() {
        let s = Surface::Torus {
            center: vec3(0.0, 0.0, 0.0),
            axis_dir: vec3(0.0, 0.0, 1.0),
            major_r: 2.0,
            minor_r: 0.5,
        };
        assert!(s.distance(vec3(2.5, 0.0, 0.0)) < 1e-12);
        assert!((s.distance(vec3(2.0, 0.0, 1.0)) - 0.5).abs() < 1e-12);
    }
}
