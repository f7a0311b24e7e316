//! Leaf cell classification against the implicit field, with supersampling
//! of the face neighbors of cut cells to catch sub-grid features.

use super::{CellClass, FeGrid};
use crate::error::Result;
use crate::geom::Vec3;
use crate::sdf::ImplicitField;

/// Parameters for the four-step classification.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyParams {
    /// Supersampling lattice spacing; clamped per cell so the lattice has at
    /// least one segment and at most `MAX_SEGMENTS` per edge.
    pub h_sample: f64,
    /// Sharp feature threshold: a cell is extraordinary when two sampled
    /// normals satisfy `n_k . n_l < cos_theta`.
    pub cos_theta: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self { h_sample: 0.0, cos_theta: 0.3 }
    }
}

const MAX_SEGMENTS: usize = 64;

/// Corner-sign summary: `phi = 0` counts as inside.
fn sign_summary<'a>(values: impl IntoIterator<Item = &'a f64>) -> (bool, bool) {
    let mut has_pos = false;
    let mut has_neg = false;
    for &v in values {
        if v >= 0.0 {
            has_pos = true;
        } else {
            has_neg = true;
        }
    }
    (has_pos, has_neg)
}

impl FeGrid {
    /// Classifies every leaf:
    ///
    /// 1. sample `phi` (and normals on candidate cut cells) at cell vertices;
    /// 2. label cut cells from the corner sign change, split them into
    ///    ordinary/extraordinary with the sharp-normal criterion, and label
    ///    the rest active or inactive;
    /// 3. collect the face neighbors of cut cells;
    /// 4. supersample those neighbors on a sub-cell lattice and promote newly
    ///    detected cut cells to extraordinary.
    pub fn classify(&mut self, field: &dyn ImplicitField, params: &ClassifyParams) -> Result<()> {
        assert!(params.cos_theta > 0.0 && params.cos_theta < 1.0);
        // S1 + S2 over cell vertices.
        let n_leaves = self.leaf_count();
        for idx in 0..n_leaves {
            let anchor = self.cell_anchor(idx);
            let h = self.cell_size(idx);
            let mut corners = [0.0f64; 8];
            for (n, c) in corners.iter_mut().enumerate() {
                let p = anchor
                    + Vec3::new((n & 1) as f64, ((n >> 1) & 1) as f64, (n >> 2) as f64) * h;
                *c = field.value(p);
            }
            let (has_pos, has_neg) = sign_summary(corners.iter());
            let class = if has_pos && has_neg {
                // Normals are meaningful only where the field still varies;
                // outside a narrow band the stored values are clamps.
                let usable = field.band_limit().map(|d| 0.9 * d);
                let mut normals: Vec<Option<Vec3>> = Vec::with_capacity(8);
                for n in 0..8 {
                    if usable.is_some_and(|lim| corners[n].abs() >= lim) {
                        continue;
                    }
                    let p = anchor
                        + Vec3::new((n & 1) as f64, ((n >> 1) & 1) as f64, (n >> 2) as f64) * h;
                    normals.push(field.unit_normal(p));
                }
                if sharp_feature(&normals, params.cos_theta) {
                    CellClass::CutExtraordinary
                } else {
                    CellClass::CutOrdinary
                }
            } else if has_neg {
                CellClass::Inactive
            } else {
                CellClass::Active
            };
            self.set_class(idx, class);
        }

        // S3: face neighbors of cut cells.
        let mut in_p = vec![false; n_leaves];
        for idx in 0..n_leaves {
            if !self.leaves()[idx].class.is_cut() {
                continue;
            }
            for axis in 0..3 {
                for dir in [-1, 1] {
                    for n in self.face_neighbors(idx, axis, dir) {
                        in_p[n] = true;
                    }
                }
            }
        }

        // S4: supersample non-cut members of the neighbor set.
        for idx in 0..n_leaves {
            if !in_p[idx] || self.leaves()[idx].class.is_cut() {
                continue;
            }
            let anchor = self.cell_anchor(idx);
            let h = self.cell_size(idx);
            let segments = if params.h_sample > 0.0 {
                ((h / params.h_sample).ceil() as usize).clamp(1, MAX_SEGMENTS)
            } else {
                1
            };
            if segments == 1 {
                continue; // lattice equals the vertices already sampled
            }
            let step = h / segments as f64;
            let (mut has_pos, mut has_neg) = (false, false);
            'scan: for k in 0..=segments {
                for j in 0..=segments {
                    for i in 0..=segments {
                        let p = anchor + Vec3::new(i as f64, j as f64, k as f64) * step;
                        if field.value(p) >= 0.0 {
                            has_pos = true;
                        } else {
                            has_neg = true;
                        }
                        if has_pos && has_neg {
                            break 'scan;
                        }
                    }
                }
            }
            if has_pos && has_neg {
                self.set_class(idx, CellClass::CutExtraordinary);
            }
        }
        Ok(())
    }
}

fn sharp_feature(normals: &[Option<Vec3>], cos_theta: f64) -> bool {
    // A degenerate gradient anywhere counts as the indicator firing.
    if normals.iter().any(|n| n.is_none()) {
        return true;
    }
    for (i, a) in normals.iter().enumerate() {
        for b in normals.iter().skip(i + 1) {
            if a.unwrap().dot(&b.unwrap()) < cos_theta {
                return true;
            }
        }
    }
    false
}
