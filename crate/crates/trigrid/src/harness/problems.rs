//! Manufactured solutions with their forcing and boundary data.

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Exact solution, gradient, and the forcing `f = -laplace(u)`.
#[derive(Clone, Copy)]
pub struct Manufactured {
    pub name: &'static str,
    pub u: fn(Vec3) -> f64,
    pub grad: fn(Vec3) -> Vec3,
    pub f: fn(Vec3) -> f64,
}

/// The internal-layer steepness and radius.
pub const LAYER_SLOPE: f64 = 60.0;
pub const LAYER_RADIUS: f64 = std::f64::consts::PI / 3.0;

pub fn manufactured(name: &str) -> Result<Manufactured> {
    match name {
        "cos_x3" => Ok(Manufactured {
            name: "cos_x3",
            u: |x| x.z.cos(),
            grad: |x| Vec3::new(0.0, 0.0, -x.z.sin()),
            f: |x| x.z.cos(),
        }),
        "internal_layer" => Ok(Manufactured {
            name: "internal_layer",
            u: |x| (LAYER_SLOPE * (x.norm() - LAYER_RADIUS)).atan(),
            grad: |x| {
                let r = x.norm();
                if r < 1e-300 {
                    return Vec3::zeros();
                }
                let w = LAYER_SLOPE * (r - LAYER_RADIUS);
                x * (LAYER_SLOPE / ((1.0 + w * w) * r))
            },
            f: |x| {
                // For radial u: laplace u = g'' + 2 g' / r with
                // g' = s / (1 + w^2), g'' = -2 s^2 w / (1 + w^2)^2.
                let r = x.norm().max(1e-12);
                let s = LAYER_SLOPE;
                let w = s * (r - LAYER_RADIUS);
                let q = 1.0 + w * w;
                2.0 * s * s * w / (q * q) - 2.0 * s / (r * q)
            },
        }),
        "linear" => Ok(Manufactured {
            name: "linear",
            u: |x| 1.0 + 2.0 * x.x - x.z,
            grad: |_| Vec3::new(2.0, 0.0, -1.0),
            f: |_| 0.0,
        }),
        "quadratic" => Ok(Manufactured {
            name: "quadratic",
            u: |x| x.x * x.x - x.y * x.y + x.x * x.y + 3.0 * x.z,
            grad: |x| Vec3::new(2.0 * x.x + x.y, -2.0 * x.y + x.x, 3.0),
            f: |_| 0.0,
        }),
        other => Err(Error::Config(format!("unknown manufactured problem '{other}'"))),
    }
}
