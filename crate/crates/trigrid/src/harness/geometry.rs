//! Geometry sources: named primitives, CSG expressions, and STL files,
//! optionally sampled onto the sparse narrow-band grid.

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::sdf::{read_stl_file, AnalyticSdf, ImplicitField, SparseDistanceGrid};

/// The geometry evaluator used by classification and quadrature: either the
/// sampled narrow-band grid or the analytic field directly.
pub enum GeometryField {
    Sampled(SparseDistanceGrid),
    Direct(AnalyticSdf),
}

impl ImplicitField for GeometryField {
    fn value(&self, x: Vec3) -> f64 {
        match self {
            GeometryField::Sampled(g) => g.value(x),
            GeometryField::Direct(f) => f.eval(x),
        }
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        match self {
            GeometryField::Sampled(g) => g.gradient(x),
            GeometryField::Direct(f) => f.grad(x),
        }
    }

    fn band_limit(&self) -> Option<f64> {
        match self {
            GeometryField::Sampled(g) => g.band_limit(),
            GeometryField::Direct(_) => None,
        }
    }
}

impl GeometryField {
    pub fn sampled_grid(&self) -> Option<&SparseDistanceGrid> {
        match self {
            GeometryField::Sampled(g) => Some(g),
            GeometryField::Direct(_) => None,
        }
    }

    /// A view with a one-block cache for tight evaluation loops.
    pub fn cached(&self) -> CachedField<'_> {
        match self {
            GeometryField::Sampled(g) => CachedField::Accessor(g.accessor()),
            GeometryField::Direct(f) => CachedField::Direct(f),
        }
    }
}

/// Borrowed evaluation view of a [`GeometryField`].
pub enum CachedField<'a> {
    Accessor(crate::sdf::SdfAccessor<'a>),
    Direct(&'a AnalyticSdf),
}

impl ImplicitField for CachedField<'_> {
    fn value(&self, x: Vec3) -> f64 {
        match self {
            CachedField::Accessor(a) => a.value(x),
            CachedField::Direct(f) => f.eval(x),
        }
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        match self {
            CachedField::Accessor(a) => a.gradient(x),
            CachedField::Direct(f) => f.grad(x),
        }
    }

    fn band_limit(&self) -> Option<f64> {
        match self {
            CachedField::Accessor(a) => a.band_limit(),
            CachedField::Direct(_) => None,
        }
    }
}

/// Exact reference measures when the geometry has closed forms.
#[derive(Clone, Copy, Debug)]
pub struct ExactMeasures {
    pub volume: f64,
    pub area: f64,
}

/// The unit sphere and the unit cube used by the standard experiments.
pub fn named_analytic(name: &str) -> Option<(AnalyticSdf, Option<ExactMeasures>)> {
    match name {
        "sphere" => Some((
            AnalyticSdf::sphere(Vec3::zeros(), 1.0),
            Some(ExactMeasures {
                volume: 4.0 / 3.0 * std::f64::consts::PI,
                area: 4.0 * std::f64::consts::PI,
            }),
        )),
        "cube" => Some((
            AnalyticSdf::boxed(Vec3::repeat(0.5), Vec3::repeat(0.5)),
            Some(ExactMeasures { volume: 1.0, area: 6.0 }),
        )),
        // Block with a half-ring handle, the CSG demonstration geometry.
        "handle_block" => Some((
            AnalyticSdf::boxed(Vec3::new(0.0, 0.0, -0.3), Vec3::new(1.0, 0.5, 0.3))
                .union(
                    AnalyticSdf::cylinder(Vec3::zeros(), 1, 0.55, 0.4)
                        .difference(AnalyticSdf::cylinder(Vec3::zeros(), 1, 0.3, 0.5))
                        .intersection(AnalyticSdf::half_space(Vec3::new(0.0, 0.0, -1.0), 0.0)),
                ),
            None,
        )),
        _ => None,
    }
}

/// Builds the geometry field (and exact measures when known) from the
/// configuration.
pub fn build_geometry(cfg: &RunConfig) -> Result<(GeometryField, Option<ExactMeasures>)> {
    let domain = Aabb::cube(
        Vec3::new(cfg.domain_center[0], cfg.domain_center[1], cfg.domain_center[2]),
        cfg.domain_edge,
    );
    let h_g = cfg.effective_h_g();
    if let Some(path) = cfg.geometry.strip_prefix("stl:") {
        let surface = read_stl_file(path)?;
        let grid = SparseDistanceGrid::from_surface_in(surface, domain, h_g, cfg.band_factor)?;
        return Ok((GeometryField::Sampled(grid), None));
    }
    let (analytic, exact) = if let Some(expr) = cfg.geometry.strip_prefix("csg:") {
        (parse_csg(expr)?, None)
    } else {
        named_analytic(&cfg.geometry)
            .ok_or_else(|| Error::Config(format!("unknown geometry '{}'", cfg.geometry)))?
    };
    if cfg.sample_geometry {
        let grid = SparseDistanceGrid::from_field(&analytic, domain, h_g, cfg.band_factor);
        Ok((GeometryField::Sampled(grid), exact))
    } else {
        Ok((GeometryField::Direct(analytic), exact))
    }
}

/// Parses a CSG expression:
///
/// ```text
/// expr := sphere(cx, cy, cz, r)
///       | box(cx, cy, cz, hx, hy, hz)
///       | cylinder(cx, cy, cz, axis, r, half_height)
///       | halfspace(nx, ny, nz, offset)
///       | union(expr, expr) | intersection(expr, expr) | difference(expr, expr)
/// ```
pub fn parse_csg(text: &str) -> Result<AnalyticSdf> {
    let mut parser = CsgParser { text, pos: 0 };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.text.len() {
        return Err(Error::Config(format!(
            "trailing input in CSG expression at byte {}",
            parser.pos
        )));
    }
    Ok(expr)
}

struct CsgParser<'a> {
    text: &'a str,
    pos: usize,
}

impl CsgParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text.as_bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.pos < self.text.len() && self.text.as_bytes()[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Config(format!(
                "expected '{}' at byte {} of CSG expression",
                c as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text.as_bytes()[self.pos].is_ascii_alphanumeric()
                || self.text.as_bytes()[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Config(format!("expected a name at byte {start}")));
        }
        Ok(&self.text[start..self.pos])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && matches!(self.text.as_bytes()[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E')
        {
            self.pos += 1;
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| Error::Config(format!("bad number at byte {start}")))
    }

    fn expr(&mut self) -> Result<AnalyticSdf> {
        let name = self.ident()?.to_string();
        self.expect(b'(')?;
        let out = match name.as_str() {
            "sphere" => {
                let v = self.numbers(4)?;
                AnalyticSdf::sphere(Vec3::new(v[0], v[1], v[2]), v[3])
            }
            "box" => {
                let v = self.numbers(6)?;
                AnalyticSdf::boxed(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
            }
            "cylinder" => {
                let v = self.numbers(6)?;
                let axis = v[3] as usize;
                if axis > 2 {
                    return Err(Error::Config("cylinder axis must be 0, 1 or 2".into()));
                }
                AnalyticSdf::cylinder(Vec3::new(v[0], v[1], v[2]), axis, v[4], v[5])
            }
            "halfspace" => {
                let v = self.numbers(4)?;
                AnalyticSdf::half_space(Vec3::new(v[0], v[1], v[2]), v[3])
            }
            "union" | "intersection" | "difference" => {
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                match name.as_str() {
                    "union" => a.union(b),
                    "intersection" => a.intersection(b),
                    _ => a.difference(b),
                }
            }
            other => return Err(Error::Config(format!("unknown CSG primitive '{other}'"))),
        };
        self.expect(b')')?;
        Ok(out)
    }

    fn numbers(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(b',')?;
            }
            v.push(self.number()?);
        }
        Ok(v)
    }
}

/// Parses a Neumann region tag like `z>0.25` into a point predicate;
/// `none` yields `None`.
pub fn parse_neumann_tag(tag: &str) -> Result<Option<(usize, bool, f64)>> {
    if tag == "none" {
        return Ok(None);
    }
    let (axis, rest) = match tag.as_bytes().first() {
        Some(b'x') => (0usize, &tag[1..]),
        Some(b'y') => (1, &tag[1..]),
        Some(b'z') => (2, &tag[1..]),
        _ => return Err(Error::Config(format!("bad neumann tag '{tag}'"))),
    };
    let (greater, value) = match rest.as_bytes().first() {
        Some(b'>') => (true, &rest[1..]),
        Some(b'<') => (false, &rest[1..]),
        _ => return Err(Error::Config(format!("bad neumann tag '{tag}'"))),
    };
    let value: f64 =
        value.parse().map_err(|_| Error::Config(format!("bad neumann tag value in '{tag}'")))?;
    Ok(Some((axis, greater, value)))
}
