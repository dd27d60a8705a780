use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centred grid on `[z_min, z_max]`.
///
/// Cell `i` spans `[z_min + i dz, z_min + (i + 1) dz]` and its centre is
/// `z_min + (i + 1/2) dz`. Boundaries are numbered `0..=n_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    z_min: f64,
    z_max: f64,
    n_cells: usize,
    dz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub n_cells: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid1D::new(spec.z_min, spec.z_max, spec.n_cells)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(grid: Grid1D) -> Self {
        GridSpec {
            z_min: grid.z_min,
            z_max: grid.z_max,
            n_cells: grid.n_cells,
        }
    }
}

impl Grid1D {
    pub fn new(z_min: f64, z_max: f64, n_cells: usize) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite extent [{z_min}, {z_max}]"
            )));
        }
        if z_max <= z_min {
            return Err(Error::InvalidGrid(format!(
                "non-positive extent [{z_min}, {z_max}]"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        let dz = (z_max - z_min) / n_cells as f64;
        if !(dz > 0.0) {
            return Err(Error::InvalidGrid("cell width underflows".into()));
        }
        Ok(Grid1D {
            z_min,
            z_max,
            n_cells,
            dz,
        })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    /// Centre of cell `i`. Indices outside `0..n_cells` extrapolate the
    /// same formula, which the exact-solution oracle relies on.
    pub fn center(&self, i: isize) -> f64 {
        self.z_min + (i as f64 + 0.5) * self.dz
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i as isize))
    }

    /// Position of boundary `k` (`k = 0` is `z_min`, `k = n_cells` is `z_max`).
    pub fn boundary(&self, k: usize) -> f64 {
        if k == self.n_cells {
            self.z_max
        } else {
            self.z_min + k as f64 * self.dz
        }
    }

    /// Index of the boundary nearest to `z`, clamped to the grid.
    pub fn snap(&self, z: f64) -> usize {
        let k = ((z - self.z_min) / self.dz).round();
        if k <= 0.0 || k.is_nan() {
            0
        } else if k >= self.n_cells as f64 {
            self.n_cells
        } else {
            k as usize
        }
    }

    /// Like [`Grid1D::snap`] but rejects points outside `[z_min, z_max]`.
    pub fn snap_within(&self, z: f64) -> Result<usize> {
        if !z.is_finite() || z < self.z_min || z > self.z_max {
            return Err(Error::OutsideGrid {
                lo: z,
                hi: z,
                z_min: self.z_min,
                z_max: self.z_max,
            });
        }
        Ok(self.snap(z))
    }

    /// Index of the cell containing `z`, if any.
    pub fn cell_of(&self, z: f64) -> Option<usize> {
        if !self.contains(z) {
            return None;
        }
        let i = ((z - self.z_min) / self.dz).floor() as usize;
        Some(i.min(self.n_cells - 1))
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.z_min && z <= self.z_max
    }

    pub fn spec(&self) -> GridSpec {
        (*self).into()
    }
}
