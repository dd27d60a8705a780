//! Time evolution of the two-component Dirac system
//!
//! ```text
//! i d_t f = i d_z h + (V + m) f
//! i d_t h = i d_z f + (V - m) h
//! ```
//!
//! In the characteristic variables `u = f + h` and `w = f - h` the principal
//! part decouples into `d_t u = d_z u` and `d_t w = -d_z w`, while mass and
//! potential act cell-locally as `-i (V + m sigma_1)`. With `dt = dz` the
//! transport is an exact one-cell copy and the local flow is an exact 2x2
//! exponential, so the discrete domain of dependence of a cell after `n`
//! steps is exactly `n` cells on either side. Amplitudes outside that cone
//! stay bitwise zero whatever the potential or mass.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::state::SpinorField;

/// Probability allowed in the two edge cells before a checked run aborts.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// Shift, then a full-step rotation.
    Lie,
    /// Half rotation, shift, half rotation.
    #[default]
    Strang,
}

/// What happens to amplitude that reaches the grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Fail once the edge cells hold more than [`BOUNDARY_MASS_LIMIT`].
    Abort,
    /// Let amplitude leave the grid; nothing enters. The map stays linear
    /// and causal but is no longer unitary.
    Truncate,
}

/// Scheme parameters. The time step is always the cell width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    dt: f64,
    mass: f64,
    splitting: Splitting,
}

impl SchemeConfig {
    pub fn new(grid: &Grid1D, mass: f64, splitting: Splitting) -> Result<Self> {
        Self::with_dt(grid, grid.dz(), mass, splitting)
    }

    /// Rejects any `dt` that is not exactly `dz`.
    pub fn with_dt(grid: &Grid1D, dt: f64, mass: f64, splitting: Splitting) -> Result<Self> {
        if dt != grid.dz() {
            return Err(Error::CflViolation { dt, dz: grid.dz() });
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidArgument(format!("mass {mass} must be finite and >= 0")));
        }
        Ok(SchemeConfig { dt, mass, splitting })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }
}

/// A potential switched on at `t_start`, replacing whatever was active.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub t_start: f64,
    pub values: Vec<f64>,
}

/// External electrostatic potential energy `V(t, z)` per cell,
/// piecewise constant in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid1D,
    base: Vec<f64>,
    epochs: Vec<Epoch>,
}

impl Potential {
    pub fn zero(grid: Grid1D) -> Self {
        Potential {
            grid,
            base: vec![0.0; grid.n_cells()],
            epochs: Vec::new(),
        }
    }

    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        Self::with_epochs(grid, values, Vec::new())
    }

    pub fn from_fn(grid: Grid1D, v: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.centers().map(v).collect())
    }

    /// `base` is active before the first epoch starts.
    pub fn with_epochs(grid: Grid1D, base: Vec<f64>, epochs: Vec<Epoch>) -> Result<Self> {
        let n = grid.n_cells();
        let check = |v: &[f64]| -> Result<()> {
            if v.len() != n {
                return Err(Error::InvalidPotential(format!(
                    "{} values for {n} cells",
                    v.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidPotential(format!("non-finite value {x}")));
            }
            Ok(())
        };
        check(&base)?;
        for e in &epochs {
            check(&e.values)?;
            if !e.t_start.is_finite() {
                return Err(Error::InvalidPotential("non-finite epoch start".into()));
            }
        }
        if epochs.windows(2).any(|w| w[0].t_start >= w[1].t_start) {
            return Err(Error::InvalidPotential("epochs must be strictly ordered by t_start".into()));
        }
        Ok(Potential { grid, base, epochs })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn is_static(&self) -> bool {
        self.epochs.is_empty()
    }

    /// 0 for the base values, `i + 1` for `epochs[i]`.
    fn epoch_index(&self, t: f64) -> usize {
        self.epochs.partition_point(|e| e.t_start <= t)
    }

    fn values(&self, index: usize) -> &[f64] {
        if index == 0 {
            &self.base
        } else {
            &self.epochs[index - 1].values
        }
    }

    /// Values active at time `t`.
    pub fn at(&self, t: f64) -> &[f64] {
        self.values(self.epoch_index(t))
    }
}

/// `V0` on `[z_on, z_off]`, zero far away, joined by raised-cosine ramps of
/// width `smoothing` placed just outside the interval.
pub fn rectangular_barrier(
    grid: &Grid1D,
    v0: f64,
    z_on: f64,
    z_off: f64,
    smoothing: f64,
) -> Result<Potential> {
    if !(z_on < z_off) {
        return Err(Error::InvertedInterval { lo: z_on, hi: z_off });
    }
    if !(grid.contains(z_on) && grid.contains(z_off)) {
        return Err(Error::OutsideGrid {
            lo: z_on,
            hi: z_off,
            z_min: grid.z_min(),
            z_max: grid.z_max(),
        });
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) || !v0.is_finite() {
        return Err(Error::InvalidPotential(format!(
            "barrier height {v0} and smoothing {smoothing} must be finite, smoothing >= 0"
        )));
    }
    let ramp = |d: f64| 0.5 * (1.0 + (std::f64::consts::PI * d / smoothing).cos());
    Potential::from_fn(*grid, |z| {
        if (z_on..=z_off).contains(&z) {
            v0
        } else if smoothing > 0.0 && z < z_on && z > z_on - smoothing {
            v0 * ramp(z_on - z)
        } else if smoothing > 0.0 && z > z_off && z < z_off + smoothing {
            v0 * ramp(z - z_off)
        } else {
            0.0
        }
    })
}

/// Adds `dv` to cells with centres in `region` while `window[0] <= t < window[1]`.
pub fn perturb_potential(
    potential: &Potential,
    region: [f64; 2],
    window: [f64; 2],
    dv: f64,
) -> Result<Potential> {
    let [z_a, z_b] = region;
    let [t_a, t_b] = window;
    if !(z_a <= z_b) {
        return Err(Error::InvertedInterval { lo: z_a, hi: z_b });
    }
    if !(t_a <= t_b) || !t_a.is_finite() || !t_b.is_finite() {
        return Err(Error::InvertedInterval { lo: t_a, hi: t_b });
    }
    if !dv.is_finite() {
        return Err(Error::InvalidPotential(format!("non-finite perturbation {dv}")));
    }
    if dv == 0.0 || t_a == t_b {
        return Ok(potential.clone());
    }
    let grid = potential.grid;
    let inside: Vec<bool> = grid.centers().map(|z| z >= z_a && z <= z_b).collect();
    let mut starts: Vec<f64> = potential.epochs.iter().map(|e| e.t_start).collect();
    starts.extend([t_a, t_b]);
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    let epochs = starts
        .into_iter()
        .map(|s| {
            let mut values = potential.at(s).to_vec();
            if s >= t_a && s < t_b {
                for (v, hit) in values.iter_mut().zip(&inside) {
                    if *hit {
                        *v += dv;
                    }
                }
            }
            Epoch { t_start: s, values }
        })
        .collect();
    Potential::with_epochs(grid, potential.base.clone(), epochs)
}

/// `(u, w) = (f + h, f - h)`: left- and right-moving amplitudes.
pub fn to_characteristics(state: &SpinorField) -> (Vec<Complex64>, Vec<Complex64>) {
    state
        .f
        .iter()
        .zip(&state.h)
        .map(|(f, h)| (f + h, f - h))
        .unzip()
}

/// Inverse of [`to_characteristics`].
pub fn from_characteristics(
    grid: Grid1D,
    u: &[Complex64],
    w: &[Complex64],
    time: f64,
) -> Result<SpinorField> {
    let (f, h) = u
        .iter()
        .zip(w)
        .map(|(u, w)| ((u + w) * 0.5, (u - w) * 0.5))
        .unzip();
    SpinorField::from_components(grid, f, h, time)
}

/// Per-epoch phase factors `exp(-i V tau)` for the local rotation.
struct RotationTable {
    cos: f64,
    sin: f64,
    tau: f64,
    phases: Vec<Option<Vec<Complex64>>>,
    trivial: Vec<Option<bool>>,
}

impl RotationTable {
    fn new(mass: f64, tau: f64, n_epochs: usize) -> Self {
        RotationTable {
            cos: (mass * tau).cos(),
            sin: (mass * tau).sin(),
            tau,
            phases: vec![None; n_epochs],
            trivial: vec![None; n_epochs],
        }
    }

    fn apply(&mut self, potential: &Potential, mass: f64, t: f64, u: &mut [Complex64], w: &mut [Complex64]) {
        let idx = potential.epoch_index(t);
        let values = potential.values(idx);
        let trivial = *self.trivial[idx].get_or_insert_with(|| mass == 0.0 && values.iter().all(|v| *v == 0.0));
        if trivial {
            return;
        }
        let tau = self.tau;
        let phases = self.phases[idx]
            .get_or_insert_with(|| values.iter().map(|v| Complex64::cis(-v * tau)).collect());
        let (c, s) = (self.cos, self.sin);
        for ((u, w), ph) in u.iter_mut().zip(w.iter_mut()).zip(phases.iter()) {
            // -i s x = (s x.im, -s x.re)
            let nu = Complex64::new(c * u.re + s * w.im, c * u.im - s * w.re);
            let nw = Complex64::new(c * w.re + s * u.im, c * w.im - s * u.re);
            *u = ph * nu;
            *w = ph * nw;
        }
    }
}

/// Steps a state held in characteristic variables.
pub struct Evolver<'a> {
    grid: Grid1D,
    cfg: SchemeConfig,
    potential: &'a Potential,
    policy: BoundaryPolicy,
    table: RotationTable,
    u: Vec<Complex64>,
    w: Vec<Complex64>,
    t0: f64,
    steps: usize,
}

impl<'a> Evolver<'a> {
    pub fn new(
        state: &SpinorField,
        potential: &'a Potential,
        cfg: SchemeConfig,
        policy: BoundaryPolicy,
    ) -> Result<Self> {
        let grid = *state.grid();
        if potential.grid != grid {
            return Err(Error::GridMismatch);
        }
        if cfg.dt != grid.dz() {
            return Err(Error::CflViolation { dt: cfg.dt, dz: grid.dz() });
        }
        let tau = match cfg.splitting {
            Splitting::Lie => cfg.dt,
            Splitting::Strang => 0.5 * cfg.dt,
        };
        let (u, w) = to_characteristics(state);
        Ok(Evolver {
            grid,
            cfg,
            potential,
            policy,
            table: RotationTable::new(cfg.mass, tau, potential.epochs.len() + 1),
            u,
            w,
            t0: state.time,
            steps: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.cfg.dt
    }

    pub fn characteristics(&self) -> (&[Complex64], &[Complex64]) {
        (&self.u, &self.w)
    }

    pub fn state(&self) -> SpinorField {
        from_characteristics(self.grid, &self.u, &self.w, self.time()).expect("lengths match grid")
    }

    /// Probability held by the first and last cell.
    pub fn edge_mass(&self) -> f64 {
        let n = self.u.len() - 1;
        0.5 * (self.u[0].norm_sqr() + self.w[0].norm_sqr() + self.u[n].norm_sqr() + self.w[n].norm_sqr())
            * self.grid.dz()
    }

    pub fn step(&mut self) -> Result<()> {
        if self.policy == BoundaryPolicy::Abort {
            let mass = self.edge_mass();
            if mass > BOUNDARY_MASS_LIMIT {
                return Err(Error::BoundaryMass { step: self.steps, mass });
            }
        }
        let t = self.time();
        let dt = self.cfg.dt;
        let mass = self.cfg.mass;
        match self.cfg.splitting {
            Splitting::Strang => {
                self.table.apply(self.potential, mass, t + 0.25 * dt, &mut self.u, &mut self.w);
                self.shift();
                self.table.apply(self.potential, mass, t + 0.75 * dt, &mut self.u, &mut self.w);
            }
            Splitting::Lie => {
                self.shift();
                self.table.apply(self.potential, mass, t + 0.5 * dt, &mut self.u, &mut self.w);
            }
        }
        self.steps += 1;
        Ok(())
    }

    fn shift(&mut self) {
        let n = self.u.len();
        self.u.copy_within(1.., 0);
        self.u[n - 1] = ZERO;
        self.w.copy_within(..n - 1, 1);
        self.w[0] = ZERO;
    }
}

/// One step of the scheme.
pub fn step(state: &SpinorField, potential: &Potential, cfg: SchemeConfig) -> Result<SpinorField> {
    let mut ev = Evolver::new(state, potential, cfg, BoundaryPolicy::Abort)?;
    ev.step()?;
    Ok(ev.state())
}

/// Snapshots of an evolution taken every `stride` steps.
#[derive(Debug, Clone)]
pub struct History {
    potential: Potential,
    cfg: SchemeConfig,
    stride: usize,
    snapshots: Vec<SpinorField>,
}

impl History {
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn scheme(&self) -> SchemeConfig {
        self.cfg
    }

    pub fn grid(&self) -> &Grid1D {
        self.snapshots[0].grid()
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    pub fn snapshots(&self) -> &[SpinorField] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Steps elapsed at snapshot `k`.
    pub fn steps_at(&self, k: usize) -> usize {
        k * self.stride
    }

    /// Time elapsed since the initial snapshot.
    pub fn elapsed(&self, k: usize) -> f64 {
        self.steps_at(k) as f64 * self.cfg.dt
    }

    pub fn initial(&self) -> &SpinorField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &SpinorField {
        self.snapshots.last().expect("history is never empty")
    }

    /// Largest `|norm(t) - norm(0)|` over the snapshots.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.initial().norm();
        self.snapshots
            .iter()
            .map(|s| (s.norm() - n0).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs `n_steps` steps and keeps `n_steps / stride + 1` snapshots.
pub fn evolve(
    state: &SpinorField,
    potential: &Potential,
    n_steps: usize,
    cfg: SchemeConfig,
    stride: usize,
) -> Result<History> {
    evolve_with_policy(state, potential, n_steps, cfg, stride, BoundaryPolicy::Abort)
}

pub fn evolve_with_policy(
    state: &SpinorField,
    potential: &Potential,
    n_steps: usize,
    cfg: SchemeConfig,
    stride: usize,
    policy: BoundaryPolicy,
) -> Result<History> {
    if stride == 0 {
        return Err(Error::InvalidArgument("snapshot stride must be >= 1".into()));
    }
    let mut ev = Evolver::new(state, potential, cfg, policy)?;
    let mut snapshots = Vec::with_capacity(n_steps / stride + 1);
    snapshots.push(state.clone());
    for n in 1..=n_steps {
        ev.step()?;
        if n % stride == 0 {
            snapshots.push(ev.state());
        }
    }
    Ok(History {
        potential: potential.clone(),
        cfg,
        stride,
        snapshots,
    })
}
