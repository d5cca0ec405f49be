use serde::{Deserialize, Serialize};

use crate::em::{CpwGeometry, Material};
use crate::error::positive;
use crate::kinetic::kinetic_fraction;
use crate::{Error, Result};

/// Gap values to try along a fixed-footprint line `w + 2s = total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub s_min: f64,
    /// Upper end of the sweep; defaults to the largest `s` leaving `w > d`.
    pub s_max: Option<f64>,
    pub step: f64,
}

impl SearchGrid {
    pub fn with_step(step: f64) -> Self {
        SearchGrid {
            s_min: 1e-6,
            s_max: None,
            step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryCandidate {
    pub s: f64,
    pub w: f64,
    pub kinetic_fraction: f64,
}

/// Exhaustive search over `s` at fixed footprint, ranked by ascending kinetic
/// fraction (best first).
pub fn optimize_geometry(
    total: f64,
    d: f64,
    mat: &Material,
    grid: &SearchGrid,
) -> Result<Vec<GeometryCandidate>> {
    positive("footprint", total)?;
    positive("d", d)?;
    positive("grid step", grid.step)?;
    positive("s_min", grid.s_min)?;
    let s_max = grid.s_max.unwrap_or(0.5 * total);
    // tolerate accumulated rounding at the upper end
    let slack = 1e-9 * grid.step;
    let mut out = Vec::new();
    for i in 0.. {
        let s = grid.s_min + i as f64 * grid.step;
        if s > s_max + slack {
            break;
        }
        let w = total - 2.0 * s;
        if w <= d {
            continue;
        }
        let geom = CpwGeometry {
            w,
            s,
            d,
            length: None,
        };
        if let Ok(x) = kinetic_fraction(&geom, mat) {
            out.push(GeometryCandidate {
                s,
                w,
                kinetic_fraction: x,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    out.sort_by(|a, b| a.kinetic_fraction.total_cmp(&b.kinetic_fraction));
    Ok(out)
}
