//! Closed-form signed distance fields and CSG combinators.

use super::ImplicitField;
use crate::geom::Vec3;

/// Analytic signed distance field, positive inside. CSG combinators operate
/// pointwise on operand values; the result bounds the true distance from
/// below in magnitude, which is sufficient for classification and band
/// construction.
#[derive(Clone, Debug)]
pub enum AnalyticSdf {
    /// `r - |x - c|`
    Sphere { center: Vec3, radius: f64 },
    /// Exact box distance, positive inside.
    Box { center: Vec3, half_extents: Vec3 },
    /// Capped cylinder along one coordinate axis.
    Cylinder { center: Vec3, axis: usize, radius: f64, half_height: f64 },
    /// `offset - n . x`; positive on the side the normal points away from.
    HalfSpace { normal: Vec3, offset: f64 },
    Union(Box<AnalyticSdf>, Box<AnalyticSdf>),
    Intersection(Box<AnalyticSdf>, Box<AnalyticSdf>),
    Difference(Box<AnalyticSdf>, Box<AnalyticSdf>),
}

impl AnalyticSdf {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self::Sphere { center, radius }
    }

    pub fn cube(center: Vec3, edge: f64) -> Self {
        Self::Box { center, half_extents: Vec3::repeat(0.5 * edge) }
    }

    pub fn boxed(center: Vec3, half_extents: Vec3) -> Self {
        Self::Box { center, half_extents }
    }

    pub fn cylinder(center: Vec3, axis: usize, radius: f64, half_height: f64) -> Self {
        assert!(axis < 3);
        Self::Cylinder { center, axis, radius, half_height }
    }

    pub fn half_space(normal: Vec3, offset: f64) -> Self {
        Self::HalfSpace { normal: normal.normalize(), offset }
    }

    pub fn union(self, other: AnalyticSdf) -> Self {
        Self::Union(Box::new(self), Box::new(other))
    }

    pub fn intersection(self, other: AnalyticSdf) -> Self {
        Self::Intersection(Box::new(self), Box::new(other))
    }

    pub fn difference(self, other: AnalyticSdf) -> Self {
        Self::Difference(Box::new(self), Box::new(other))
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        match self {
            Self::Sphere { center, radius } => radius - (x - center).norm(),
            Self::Box { center, half_extents } => {
                // Classic exact box distance, negated to make inside positive.
                let q = (x - center).abs() - half_extents;
                let outside = q.sup(&Vec3::zeros()).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                -(outside + inside)
            }
            Self::Cylinder { center, axis, radius, half_height } => {
                let d = x - center;
                let (a1, a2) = ((*axis + 1) % 3, (*axis + 2) % 3);
                let dr = (d[a1] * d[a1] + d[a2] * d[a2]).sqrt() - radius;
                let dh = d[*axis].abs() - half_height;
                let outside = (dr.max(0.0).powi(2) + dh.max(0.0).powi(2)).sqrt();
                let inside = dr.max(dh).min(0.0);
                -(outside + inside)
            }
            Self::HalfSpace { normal, offset } => offset - normal.dot(&x),
            Self::Union(a, b) => a.eval(x).max(b.eval(x)),
            Self::Intersection(a, b) => a.eval(x).min(b.eval(x)),
            Self::Difference(a, b) => a.eval(x).min(-b.eval(x)),
        }
    }

    /// Gradient of the winning operand (a subgradient at ties).
    pub fn grad(&self, x: Vec3) -> Vec3 {
        match self {
            Self::Sphere { center, .. } => {
                let d = x - center;
                let n = d.norm();
                if n <= 1e-300 {
                    Vec3::zeros()
                } else {
                    -d / n
                }
            }
            Self::Box { center, half_extents } => {
                let d = x - center;
                let q = d.abs() - half_extents;
                let g = if q.x.max(q.y).max(q.z) <= 0.0 {
                    // Inside: gradient of the max component.
                    let mut g = Vec3::zeros();
                    let mut best = 0;
                    for a in 1..3 {
                        if q[a] > q[best] {
                            best = a;
                        }
                    }
                    g[best] = d[best].signum();
                    g
                } else {
                    let mut g = q.sup(&Vec3::zeros());
                    let n = g.norm();
                    if n <= 1e-300 {
                        return Vec3::zeros();
                    }
                    g /= n;
                    for a in 0..3 {
                        g[a] *= d[a].signum();
                    }
                    g
                };
                -g
            }
            Self::Cylinder { center, axis, radius, half_height } => {
                let d = x - center;
                let (a1, a2) = ((*axis + 1) % 3, (*axis + 2) % 3);
                let rho = (d[a1] * d[a1] + d[a2] * d[a2]).sqrt();
                let dr = rho - radius;
                let dh = d[*axis].abs() - half_height;
                let mut g = Vec3::zeros();
                let radial = |g: &mut Vec3| {
                    if rho > 1e-300 {
                        g[a1] = d[a1] / rho;
                        g[a2] = d[a2] / rho;
                    }
                };
                if dr <= 0.0 && dh <= 0.0 {
                    if dr >= dh {
                        radial(&mut g);
                    } else {
                        g[*axis] = d[*axis].signum();
                    }
                } else if dr > 0.0 && dh > 0.0 {
                    let n = (dr * dr + dh * dh).sqrt();
                    radial(&mut g);
                    g[a1] *= dr / n;
                    g[a2] *= dr / n;
                    g[*axis] = d[*axis].signum() * dh / n;
                } else if dr > 0.0 {
                    radial(&mut g);
                } else {
                    g[*axis] = d[*axis].signum();
                }
                -g
            }
            Self::HalfSpace { normal, .. } => -normal,
            Self::Union(a, b) => {
                if a.eval(x) >= b.eval(x) {
                    a.grad(x)
                } else {
                    b.grad(x)
                }
            }
            Self::Intersection(a, b) => {
                if a.eval(x) <= b.eval(x) {
                    a.grad(x)
                } else {
                    b.grad(x)
                }
            }
            Self::Difference(a, b) => {
                if a.eval(x) <= -b.eval(x) {
                    a.grad(x)
                } else {
                    -b.grad(x)
                }
            }
        }
    }
}

impl ImplicitField for AnalyticSdf {
    fn value(&self, x: Vec3) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        self.grad(x)
    }
}
