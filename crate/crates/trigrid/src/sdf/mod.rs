//! Implicit geometry: signed distance fields sampled on a sparse narrow-band
//! grid, analytic/CSG fields, and exact distance to triangle surfaces.
//!
//! Sign convention throughout: `phi > 0` inside the domain, `phi < 0` outside,
//! and the zero level set is the boundary.

mod analytic;
mod grid;
mod mesh_gen;
mod stl;
mod surface;

pub use analytic::AnalyticSdf;
pub use grid::{SdfAccessor, SparseDistanceGrid, BLOCK_EDGE};
pub use mesh_gen::{box_mesh, icosphere};
pub use stl::{read_stl, read_stl_file, write_binary_stl};
pub use surface::{MeshDistance, TriangleSurface};

use crate::geom::Vec3;

/// A scalar implicit field with a gradient, queryable anywhere inside its
/// embedding domain. The grid and analytic implementations are immutable and
/// `Sync`; accessors with per-thread caches are not, so the trait itself puts
/// no bound.
pub trait ImplicitField {
    /// Field value; positive inside the domain.
    fn value(&self, x: Vec3) -> f64;

    /// Field gradient. May be one-sided where the field is only piecewise
    /// smooth.
    fn gradient(&self, x: Vec3) -> Vec3;

    /// Magnitude beyond which stored values are clamped and gradients are
    /// meaningless (narrow-band grids); `None` for fields valid everywhere.
    fn band_limit(&self) -> Option<f64> {
        None
    }

    /// Unit normal `grad phi / |grad phi|`, or `None` at degenerate points
    /// (medial axis, sharp features) where the gradient vanishes.
    fn unit_normal(&self, x: Vec3) -> Option<Vec3> {
        let g = self.gradient(x);
        let n = g.norm();
        if n <= 1e-10 {
            None
        } else {
            Some(g / n)
        }
    }
}

impl<F: Fn(Vec3) -> f64> ImplicitField for F {
    fn value(&self, x: Vec3) -> f64 {
        self(x)
    }

    /// Central finite differences with a fixed small step.
    fn gradient(&self, x: Vec3) -> Vec3 {
        let h = 1e-6;
        let mut g = Vec3::zeros();
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            g[a] = (self(xp) - self(xm)) / (2.0 * h);
        }
        g
    }
}
