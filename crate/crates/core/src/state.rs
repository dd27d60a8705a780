//! Two-component spinor fields and the initial-data constructors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Probability mass a normalised constructor may lose to grid truncation.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The state `(f, h)` sampled at cell centres at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: Grid1D,
    pub f: Vec<Complex64>,
    pub h: Vec<Complex64>,
    pub time: f64,
}

impl SpinorField {
    pub fn zeros(grid: Grid1D) -> Self {
        let n = grid.n_cells();
        SpinorField {
            grid,
            f: vec![ZERO; n],
            h: vec![ZERO; n],
            time: 0.0,
        }
    }

    pub fn from_components(
        grid: Grid1D,
        f: Vec<Complex64>,
        h: Vec<Complex64>,
        time: f64,
    ) -> Result<Self> {
        let n = grid.n_cells();
        if f.len() != n || h.len() != n {
            return Err(Error::InvalidArgument(format!(
                "component lengths ({}, {}) do not match {n} cells",
                f.len(),
                h.len()
            )));
        }
        Ok(SpinorField { grid, f, h, time })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `sum (|f|^2 + |h|^2) dz`.
    pub fn norm(&self) -> f64 {
        self.f
            .iter()
            .zip(&self.h)
            .map(|(f, h)| f.norm_sqr() + h.norm_sqr())
            .sum::<f64>()
            * self.grid.dz()
    }

    /// `sum (f_a* f_b + h_a* h_b) dz`.
    pub fn inner(&self, other: &SpinorField) -> Result<Complex64> {
        self.same_grid(other)?;
        let s: Complex64 = self
            .f
            .iter()
            .zip(&self.h)
            .zip(other.f.iter().zip(&other.h))
            .map(|((fa, ha), (fb, hb))| fa.conj() * fb + ha.conj() * hb)
            .sum();
        Ok(s * self.grid.dz())
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidPacket(format!("cannot normalise a field of norm {n}")));
        }
        let s = 1.0 / n.sqrt();
        self.f.iter_mut().chain(self.h.iter_mut()).for_each(|a| *a *= s);
        Ok(self)
    }

    /// Cellwise `self + other`.
    pub fn add(&self, other: &SpinorField) -> Result<SpinorField> {
        self.same_grid(other)?;
        let mut out = self.clone();
        for (a, b) in out.f.iter_mut().zip(&other.f) {
            *a += b;
        }
        for (a, b) in out.h.iter_mut().zip(&other.h) {
            *a += b;
        }
        Ok(out)
    }

    pub fn scaled(&self, c: Complex64) -> SpinorField {
        let mut out = self.clone();
        out.f.iter_mut().chain(out.h.iter_mut()).for_each(|a| *a *= c);
        out
    }

    /// Keeps the cells on one side of `q` and zeroes the rest.
    ///
    /// `q` is snapped to the nearest cell boundary; the snapped position is
    /// returned alongside the cut field. Left and right cuts at the same `q`
    /// partition the cells, so their sum reproduces `self` exactly.
    pub fn cut(&self, q: f64, side: Side) -> Result<(SpinorField, f64)> {
        let k = self.grid.snap_within(q)?;
        let mut out = self.clone();
        let zeroed = match side {
            Side::Left => k..self.len(),
            Side::Right => 0..k,
        };
        out.f[zeroed.clone()].fill(ZERO);
        out.h[zeroed].fill(ZERO);
        Ok((out, self.grid.boundary(k)))
    }

    pub(crate) fn same_grid(&self, other: &SpinorField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Which side of a cut survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    Gaussian,
    CompactBump,
    PlaneSuperposition,
}

/// Initial-data description.
///
/// `width` is the density width: a Gaussian packet has
/// `j0 ~ exp(-(z - z0)^2 / width^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub kind: PacketKind,
    #[serde(default)]
    pub z0: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub k0: f64,
    #[serde(default)]
    pub mass: f64,
    /// `[z_l, z_r]` for compact bumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[f64; 2]>,
    /// Left-mover wavenumber of a plane superposition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Right-mover wavenumber of a plane superposition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl PacketSpec {
    pub fn gaussian(z0: f64, width: f64, k0: f64, mass: f64) -> Self {
        PacketSpec {
            kind: PacketKind::Gaussian,
            z0,
            width,
            k0,
            mass,
            support: None,
            k: None,
            p: None,
        }
    }

    pub fn compact(support: [f64; 2], k0: f64, mass: f64) -> Self {
        PacketSpec {
            kind: PacketKind::CompactBump,
            z0: 0.5 * (support[0] + support[1]),
            width: support[1] - support[0],
            k0,
            mass,
            support: Some(support),
            k: None,
            p: None,
        }
    }

    pub fn plane_superposition(k: f64, p: f64) -> Self {
        PacketSpec {
            kind: PacketKind::PlaneSuperposition,
            z0: 0.0,
            width: 1.0,
            k0: 0.0,
            mass: 0.0,
            support: None,
            k: Some(k),
            p: Some(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.z0, self.width, self.k0, self.mass]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidPacket("non-finite parameter".into()));
        }
        if !(self.width > 0.0) {
            return Err(Error::InvalidPacket(format!("width {} must be > 0", self.width)));
        }
        if !(self.mass >= 0.0) {
            return Err(Error::InvalidPacket(format!("mass {} must be >= 0", self.mass)));
        }
        match self.kind {
            PacketKind::CompactBump if self.support.is_none() => {
                Err(Error::InvalidPacket("compact_bump needs `support`".into()))
            }
            PacketKind::PlaneSuperposition if self.k.is_none() || self.p.is_none() => {
                Err(Error::InvalidPacket("plane_superposition needs `k` and `p`".into()))
            }
            _ => Ok(()),
        }
    }

    /// Dispatches to the constructor for `kind`.
    pub fn build(&self, grid: &Grid1D) -> Result<SpinorField> {
        self.validate()?;
        match self.kind {
            PacketKind::Gaussian => gaussian_packet(self, grid),
            PacketKind::CompactBump => {
                let [lo, hi] = self.support.expect("validated");
                compact_packet(self, [lo, hi], grid)
            }
            PacketKind::PlaneSuperposition => {
                plane_superposition(self.k.expect("validated"), self.p.expect("validated"), grid)
            }
        }
    }
}

/// `h / f` for a positive-energy plane wave `exp(i(k z - E t))` of the free
/// equation: `-k / (E + m)` with `E = sqrt(k^2 + m^2)`.
pub fn positive_energy_ratio(k: f64, mass: f64) -> f64 {
    let e = k.hypot(mass);
    if e + mass == 0.0 {
        0.0
    } else {
        -k / (e + mass)
    }
}

/// Positive-energy Gaussian with density `~ exp(-(z - z0)^2 / width^2)`.
pub fn gaussian_packet(spec: &PacketSpec, grid: &Grid1D) -> Result<SpinorField> {
    spec.validate()?;
    if spec.kind != PacketKind::Gaussian {
        return Err(Error::InvalidPacket(format!("expected gaussian, got {:?}", spec.kind)));
    }
    let lost = 0.5 * erfc((spec.z0 - grid.z_min()) / spec.width)
        + 0.5 * erfc((grid.z_max() - spec.z0) / spec.width);
    if lost > TRUNCATION_TOLERANCE {
        return Err(Error::GridTooNarrow { mass: lost });
    }
    let sigma2 = 2.0 * spec.width * spec.width;
    modulated(spec, grid, |z| {
        let d = z - spec.z0;
        (-d * d / sigma2).exp()
    })
}

/// Positive-energy packet whose amplitudes are exactly zero outside
/// `support`, with an `exp(-1/(1 - x^2))` envelope.
pub fn compact_packet(spec: &PacketSpec, support: [f64; 2], grid: &Grid1D) -> Result<SpinorField> {
    spec.validate()?;
    let [lo, hi] = support;
    if !(lo < hi) {
        return Err(Error::EmptySupport { lo, hi });
    }
    if !(grid.contains(lo) && grid.contains(hi)) {
        return Err(Error::OutsideGrid {
            lo,
            hi,
            z_min: grid.z_min(),
            z_max: grid.z_max(),
        });
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let field = modulated(spec, grid, |z| {
        let x = (z - mid) / half;
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    })?;
    Ok(field)
}

/// Unnormalised `f = a + b`, `h = a - b` with `a = exp(i k z)` (left-mover)
/// and `b = exp(i p z)` (right-mover).
pub fn plane_superposition(k: f64, p: f64, grid: &Grid1D) -> Result<SpinorField> {
    if !(k.is_finite() && p.is_finite()) {
        return Err(Error::InvalidPacket("non-finite wavenumber".into()));
    }
    let (f, h) = grid
        .centers()
        .map(|z| {
            let a = Complex64::cis(k * z);
            let b = Complex64::cis(p * z);
            (a + b, a - b)
        })
        .unzip();
    SpinorField::from_components(*grid, f, h, 0.0)
}

fn modulated(spec: &PacketSpec, grid: &Grid1D, envelope: impl Fn(f64) -> f64) -> Result<SpinorField> {
    let ratio = positive_energy_ratio(spec.k0, spec.mass);
    let (f, h): (Vec<_>, Vec<_>) = grid
        .centers()
        .map(|z| {
            let f = Complex64::cis(spec.k0 * z) * envelope(z);
            (f, f * ratio)
        })
        .unzip();
    if f.iter().all(|a| *a == ZERO) {
        let (lo, hi) = spec.support.map_or((spec.z0, spec.z0), |[a, b]| (a, b));
        return Err(Error::EmptySupport { lo, hi });
    }
    SpinorField::from_components(*grid, f, h, 0.0)?.normalized()
}
