//! Run configuration: flat key = value text with sections, round-trippable.

use crate::error::{Error, Result};

/// All tunables of a run. Defaults follow the method's standard choices:
/// band factor 3, sharp threshold 0.3, stabilization threshold 1/8,
/// partition weights 100/1, adaptive fraction 0.15.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    // [geometry]
    /// `sphere`, `cube`, `stl:<path>`, or `csg:<expression>`.
    pub geometry: String,
    pub domain_center: [f64; 3],
    pub domain_edge: f64,
    /// Geometry grid spacing; 0 selects h_q / 2.
    pub h_g: f64,
    pub band_factor: u32,
    /// Sample analytic fields onto the sparse grid (true) or evaluate them
    /// directly (false).
    pub sample_geometry: bool,
    // [fe_grid]
    pub base_refinements: u8,
    pub boundary_refinements: u32,
    pub h_min: f64,
    pub cos_theta: f64,
    /// Supersampling spacing; 0 selects max(h_g, h_f / 16).
    pub h_sample: f64,
    // [quadrature]
    pub r_q: u32,
    pub r_q_extra: u32,
    // [discretization]
    pub p: usize,
    /// Nitsche penalty scale; 0 selects 10 for p = 1 and 40 for p = 2.
    pub gamma0: f64,
    pub epsilon: f64,
    /// Disables extended-basis stabilization when false.
    pub stabilize: bool,
    pub problem: String,
    /// `none` or an axis tag like `z>0.25` routing boundary to Neumann.
    pub neumann: String,
    // [solver]
    pub solver: String,
    pub tol: f64,
    pub max_iter: usize,
    pub n_subdomains: usize,
    pub weight_solid: u64,
    pub weight_inactive: u64,
    // [study]
    pub h_sequence: Vec<f64>,
    pub adaptive_steps: u32,
    pub adaptive_fraction: f64,
    // [output]
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: "sphere".into(),
            domain_center: [0.0; 3],
            domain_edge: 4.0,
            h_g: 0.0,
            band_factor: 3,
            sample_geometry: true,
            base_refinements: 3,
            boundary_refinements: 0,
            h_min: 0.0,
            cos_theta: 0.3,
            h_sample: 0.0,
            r_q: 3,
            r_q_extra: 0,
            p: 1,
            gamma0: 0.0,
            epsilon: 0.125,
            stabilize: true,
            problem: "cos_x3".into(),
            neumann: "none".into(),
            solver: "jacobi-pcg".into(),
            tol: 1e-8,
            max_iter: 50_000,
            n_subdomains: 1,
            weight_solid: 100,
            weight_inactive: 1,
            h_sequence: vec![0.25, 0.125, 0.0625],
            adaptive_steps: 2,
            adaptive_fraction: 0.15,
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    /// Finite element size at the finest uniform level.
    pub fn h_f(&self) -> f64 {
        self.domain_edge / (1u64 << self.base_refinements) as f64
    }

    /// Quadrature cell size implied by `r_q`.
    pub fn h_q(&self) -> f64 {
        self.h_f() / (1u64 << self.r_q) as f64
    }

    /// Effective geometry spacing (default: half the quadrature size).
    pub fn effective_h_g(&self) -> f64 {
        if self.h_g > 0.0 {
            self.h_g
        } else {
            0.5 * self.h_q()
        }
    }

    /// Default penalties keep the Nitsche form coercive on sliver cuts left
    /// after stabilization (support fraction down to epsilon = 1/8).
    pub fn effective_gamma0(&self) -> f64 {
        if self.gamma0 > 0.0 {
            self.gamma0
        } else if self.p == 1 {
            40.0
        } else {
            80.0
        }
    }

    pub fn effective_h_sample(&self) -> f64 {
        if self.h_sample > 0.0 {
            self.h_sample
        } else {
            self.effective_h_g().max(self.h_f() / 16.0)
        }
    }

    /// Checks value ranges; returns non-fatal warnings (e.g. h_q < h_g).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.domain_edge <= 0.0 {
            return Err(Error::Config("domain_edge must be positive".into()));
        }
        if self.p != 1 && self.p != 2 {
            return Err(Error::Config(format!("p must be 1 or 2, got {}", self.p)));
        }
        if !(self.cos_theta > 0.0 && self.cos_theta < 1.0) {
            return Err(Error::Config("cos_theta must lie in (0, 1)".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("epsilon must lie in (0, 1)".into()));
        }
        if self.band_factor < 2 {
            return Err(Error::Config("band_factor must be at least 2".into()));
        }
        if self.r_q > 6 {
            return Err(Error::Config("r_q is limited to 6".into()));
        }
        if self.n_subdomains == 0 {
            return Err(Error::Config("n_subdomains must be at least 1".into()));
        }
        if self.weight_solid == 0 || self.weight_inactive == 0 {
            return Err(Error::Config("partition weights must be positive".into()));
        }
        match self.solver.as_str() {
            "jacobi-pcg" | "bddc" => {}
            s => return Err(Error::Config(format!("unknown solver '{s}'"))),
        }
        if !(0.0..=1.0).contains(&self.adaptive_fraction) {
            return Err(Error::Config("adaptive_fraction must lie in [0, 1]".into()));
        }
        let mut warnings = Vec::new();
        if self.h_q() < self.effective_h_g() {
            warnings.push(format!(
                "h_q = {} is below the geometry resolution h_g = {}; the geometry cannot resolve further",
                self.h_q(),
                self.effective_h_g()
            ));
        }
        Ok(warnings)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
        }
        match key {
            "geometry" => self.geometry = value.into(),
            "domain_center" => {
                let parts: Vec<f64> = value
                    .split_whitespace()
                    .map(|w| num::<f64>(key, w))
                    .collect::<Result<_>>()?;
                if parts.len() != 3 {
                    return Err(Error::Config("domain_center needs three numbers".into()));
                }
                self.domain_center = [parts[0], parts[1], parts[2]];
            }
            "domain_edge" => self.domain_edge = num(key, value)?,
            "h_g" => self.h_g = num(key, value)?,
            "band_factor" => self.band_factor = num(key, value)?,
            "sample_geometry" => self.sample_geometry = num(key, value)?,
            "base_refinements" => self.base_refinements = num(key, value)?,
            "boundary_refinements" => self.boundary_refinements = num(key, value)?,
            "h_min" => self.h_min = num(key, value)?,
            "cos_theta" => self.cos_theta = num(key, value)?,
            "h_sample" => self.h_sample = num(key, value)?,
            "r_q" => self.r_q = num(key, value)?,
            "r_q_extra" => self.r_q_extra = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "gamma0" => self.gamma0 = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "stabilize" => self.stabilize = num(key, value)?,
            "problem" => self.problem = value.into(),
            "neumann" => self.neumann = value.into(),
            "solver" => self.solver = value.into(),
            "tol" => self.tol = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "n_subdomains" => self.n_subdomains = num(key, value)?,
            "weight_solid" => self.weight_solid = num(key, value)?,
            "weight_inactive" => self.weight_inactive = num(key, value)?,
            "h_sequence" => {
                self.h_sequence = value
                    .split_whitespace()
                    .map(|w| num::<f64>(key, w))
                    .collect::<Result<_>>()?;
            }
            "adaptive_steps" => self.adaptive_steps = num(key, value)?,
            "adaptive_fraction" => self.adaptive_fraction = num(key, value)?,
            "output_dir" => self.output_dir = value.into(),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Canonical serialization; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        let _ = write!(
            s,
            "[geometry]\n\
             geometry = {}\n\
             domain_center = {} {} {}\n\
             domain_edge = {}\n\
             h_g = {}\n\
             band_factor = {}\n\
             sample_geometry = {}\n\
             \n[fe_grid]\n\
             base_refinements = {}\n\
             boundary_refinements = {}\n\
             h_min = {}\n\
             cos_theta = {}\n\
             h_sample = {}\n\
             \n[quadrature]\n\
             r_q = {}\n\
             r_q_extra = {}\n\
             \n[discretization]\n\
             p = {}\n\
             gamma0 = {}\n\
             epsilon = {}\n\
             stabilize = {}\n\
             problem = {}\n\
             neumann = {}\n\
             \n[solver]\n\
             solver = {}\n\
             tol = {}\n\
             max_iter = {}\n\
             n_subdomains = {}\n\
             weight_solid = {}\n\
             weight_inactive = {}\n\
             \n[study]\n\
             h_sequence = {}\n\
             adaptive_steps = {}\n\
             adaptive_fraction = {}\n\
             \n[output]\n\
             output_dir = {}\n",
            self.geometry,
            self.domain_center[0],
            self.domain_center[1],
            self.domain_center[2],
            self.domain_edge,
            self.h_g,
            self.band_factor,
            self.sample_geometry,
            self.base_refinements,
            self.boundary_refinements,
            self.h_min,
            self.cos_theta,
            self.h_sample,
            self.r_q,
            self.r_q_extra,
            self.p,
            self.gamma0,
            self.epsilon,
            self.stabilize,
            self.problem,
            self.neumann,
            self.solver,
            self.tol,
            self.max_iter,
            self.n_subdomains,
            self.weight_solid,
            self.weight_inactive,
            self.h_sequence.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(" "),
            self.adaptive_steps,
            self.adaptive_fraction,
            self.output_dir,
        );
        s
    }
}
