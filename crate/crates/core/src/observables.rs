//! Probability current `j = (|f|^2 + |h|^2, -(f* h + h* f))` and the scalar
//! observables derived from it.

use serde::{Deserialize, Serialize};

use crate::dynamics::History;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::state::SpinorField;

/// Relative velocity floor: `v` is only reported where `j0 >= 1e-30 * max j0`.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    grid: Grid1D,
    pub j0: Vec<f64>,
    pub jz: Vec<f64>,
    pub time: f64,
}

impl CurrentField {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `sum j0 dz`.
    pub fn total(&self) -> f64 {
        self.j0.iter().sum::<f64>() * self.grid.dz()
    }

    /// Largest `|jz| - j0` over the cells, in units of `ulp(j0)`. Non-positive
    /// when the current is timelike everywhere.
    pub fn spacelike_excess_ulps(&self) -> f64 {
        self.j0
            .iter()
            .zip(&self.jz)
            .map(|(a, b)| {
                let ulp = if *a > 0.0 { *a * f64::EPSILON } else { f64::MIN_POSITIVE };
                (b.abs() - a) / ulp
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn current(state: &SpinorField) -> CurrentField {
    let (j0, jz) = state
        .f
        .iter()
        .zip(&state.h)
        .map(|(f, h)| {
            let cross = f.conj() * h + h.conj() * f;
            (f.norm_sqr() + h.norm_sqr(), -cross.re)
        })
        .unzip();
    CurrentField {
        grid: *state.grid(),
        j0,
        jz,
        time: state.time,
    }
}

/// A set of cells bounded by (snapped) cell boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `z > q`
    Right(f64),
    /// `z < q`
    Left(f64),
    /// `a < z < b`
    Between(f64, f64),
    Everywhere,
}

/// A region after snapping: cells `lo..hi` and the boundary positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnappedRegion {
    pub cells: (usize, usize),
    pub z_lo: f64,
    pub z_hi: f64,
}

impl Region {
    pub fn snap(&self, grid: &Grid1D) -> SnappedRegion {
        let n = grid.n_cells();
        let (lo, hi) = match *self {
            Region::Right(q) => (grid.snap(q), n),
            Region::Left(q) => (0, grid.snap(q)),
            Region::Between(a, b) => {
                let (a, b) = (grid.snap(a), grid.snap(b));
                (a, b.max(a))
            }
            Region::Everywhere => (0, n),
        };
        SnappedRegion {
            cells: (lo, hi),
            z_lo: grid.boundary(lo),
            z_hi: grid.boundary(hi),
        }
    }
}

/// Riemann sum of `j0 dz` over the snapped region.
pub fn probability(current: &CurrentField, region: Region) -> f64 {
    let (lo, hi) = region.snap(&current.grid).cells;
    current.j0[lo..hi].iter().sum::<f64>() * current.grid.dz()
}

/// Same as [`probability`] without materialising the current.
pub fn state_probability(state: &SpinorField, region: Region) -> f64 {
    let (lo, hi) = region.snap(state.grid()).cells;
    (lo..hi)
        .map(|i| state.f[i].norm_sqr() + state.h[i].norm_sqr())
        .sum::<f64>()
        * state.grid().dz()
}

/// `v = jz / j0` where `j0 >= floor`, `None` elsewhere.
pub fn velocity(current: &CurrentField, floor: f64) -> Vec<Option<f64>> {
    current
        .j0
        .iter()
        .zip(&current.jz)
        .map(|(a, b)| (*a >= floor && *a > 0.0).then(|| b / a))
        .collect()
}

/// `DEFAULT_RELATIVE_FLOOR` times the peak density.
pub fn default_floor(current: &CurrentField) -> f64 {
    let peak = current.j0.iter().copied().fold(0.0, f64::max);
    (peak * DEFAULT_RELATIVE_FLOOR).max(f64::MIN_POSITIVE)
}

/// Largest `|d_t j0 + d_z jz|` over interior cells and times, with centred
/// differences in both directions. Needs every step in the history.
pub fn continuity_residual(history: &History) -> Result<f64> {
    if history.stride() != 1 {
        return Err(Error::StrideNotOne {
            stride: history.stride(),
        });
    }
    let currents: Vec<CurrentField> = history.snapshots().iter().map(current).collect();
    let dt = history.dt();
    let dz = history.grid().dz();
    let n = history.grid().n_cells();
    let mut worst = 0.0f64;
    for t in 1..currents.len().saturating_sub(1) {
        let (prev, now, next) = (&currents[t - 1], &currents[t], &currents[t + 1]);
        for i in 1..n - 1 {
            let r = (next.j0[i] - prev.j0[i]) / (2.0 * dt) + (now.jz[i + 1] - now.jz[i - 1]) / (2.0 * dz);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
