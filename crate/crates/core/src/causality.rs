//! Checks that turn the lightcone structure of the Dirac equation into
//! numbers.
//!
//! Support statements (nothing outside the cone, cut pieces that never
//! reach a region, perturbations that cannot be seen) are exact for this
//! scheme and are checked with tolerance zero: any nonzero bit is a
//! failure. Probability inequalities are sums of many terms and carry a
//! rounding tolerance of [`INEQUALITY_TOLERANCE`].

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{BoundaryPolicy, Evolver, History, Potential, SchemeConfig, Splitting};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::state::{Side, SpinorField};

/// Slack for inequalities between regional probabilities.
pub const INEQUALITY_TOLERANCE: f64 = 1e-10;

/// Linearity slack per step, in units of the largest amplitude.
pub const LINEARITY_ULPS_PER_STEP: f64 = 4.0;

/// Default cap on the grid size for basis enumeration.
pub const DEFAULT_BASIS_CAP: usize = 4096;

/// Outcome of one check. `pass` holds exactly when `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
    /// Time and position where the margin was smallest.
    pub worst_t: Option<f64>,
    pub worst_z: Option<f64>,
}

impl CausalityReport {
    pub fn new(name: impl Into<String>, margin: f64, tolerance: f64, worst: Option<(f64, f64)>) -> Self {
        CausalityReport {
            name: name.into(),
            pass: margin >= -tolerance,
            margin,
            tolerance,
            worst_t: worst.map(|w| w.0),
            worst_z: worst.map(|w| w.1),
        }
    }

    /// Report for a check whose margin is minus the largest offending value.
    fn exact(name: impl Into<String>, worst: Worst) -> Self {
        let margin = if worst.value == 0.0 { 0.0 } else { -worst.value };
        Self::new(name, margin, 0.0, worst.at)
    }
}

impl fmt::Display for CausalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} margin={:e} tolerance={:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.margin,
            self.tolerance
        )?;
        if let (Some(t), Some(z)) = (self.worst_t, self.worst_z) {
            write!(f, " t={t} z={z}")?;
        }
        Ok(())
    }
}

/// Running maximum of a violation, keeping the earliest location on ties.
#[derive(Debug, Clone, Copy)]
struct Worst {
    value: f64,
    at: Option<(f64, f64)>,
}

impl Worst {
    fn none() -> Self {
        Worst { value: 0.0, at: None }
    }

    fn offer(&mut self, value: f64, t: f64, z: f64) {
        if value > self.value {
            self.value = value;
            self.at = Some((t, z));
        }
    }

    /// Larger value wins; ties go to the smaller `t`, then the smaller `z`.
    fn merge(self, other: Worst) -> Worst {
        match self.value.total_cmp(&other.value) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal => match (self.at, other.at) {
                (Some(a), Some(b)) => {
                    if (a.0, a.1) <= (b.0, b.1) {
                        self
                    } else {
                        other
                    }
                }
                (Some(_), None) => self,
                _ => other,
            },
        }
    }
}

/// Smallest cell interval holding every cell with `|f| + |h| > threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    /// `None` when no cell exceeds the threshold.
    pub bounds: Option<(f64, f64)>,
    pub threshold: f64,
}

impl SupportInterval {
    pub fn new(z_lo: f64, z_hi: f64) -> Result<Self> {
        if !(z_lo <= z_hi) {
            return Err(Error::InvertedInterval { lo: z_lo, hi: z_hi });
        }
        Ok(SupportInterval {
            bounds: Some((z_lo, z_hi)),
            threshold: 0.0,
        })
    }

    pub fn empty() -> Self {
        SupportInterval {
            bounds: None,
            threshold: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_none()
    }

    /// Cells `lo..hi` covered after snapping to boundaries.
    fn cells(&self, grid: &Grid1D) -> Option<(usize, usize)> {
        self.bounds.map(|(a, b)| (grid.snap(a), grid.snap(b)))
    }
}

fn amplitude(f: Complex64, h: Complex64) -> f64 {
    f.norm() + h.norm()
}

pub fn support(state: &SpinorField, threshold: f64) -> SupportInterval {
    let hit = |i: &usize| amplitude(state.f[*i], state.h[*i]) > threshold;
    let first = (0..state.len()).find(hit);
    let last = (0..state.len()).rev().find(hit);
    let grid = state.grid();
    SupportInterval {
        bounds: first.zip(last).map(|(a, b)| (grid.boundary(a), grid.boundary(b + 1))),
        threshold,
    }
}

/// Every snapshot must vanish exactly outside the initial support widened by
/// one cell per step on each side.
pub fn lightcone_check(history: &History, initial: &SupportInterval) -> CausalityReport {
    let grid = *history.grid();
    let n = grid.n_cells();
    let cells = initial.cells(&grid);
    let worst = history
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(k, state)| {
            let s = history.steps_at(k);
            let (lo, hi) = match cells {
                Some((lo, hi)) => (lo.saturating_sub(s), (hi + s).min(n)),
                None => (0, 0),
            };
            let t = history.elapsed(k);
            let mut worst = Worst::none();
            for i in (0..lo).chain(hi.max(lo)..n) {
                worst.offer(amplitude(state.f[i], state.h[i]), t, grid.center(i as isize));
            }
            worst
        })
        .reduce(Worst::none, Worst::merge);
    CausalityReport::exact("lightcone", worst)
}

/// Suffix sums of `j0 dz`: `out[q]` is the probability in cells `q..n`.
fn tail_probabilities(state: &SpinorField) -> Vec<f64> {
    let dz = state.grid().dz();
    let mut out = vec![0.0; state.len() + 1];
    for i in (0..state.len()).rev() {
        out[i] = out[i + 1] + (state.f[i].norm_sqr() + state.h[i].norm_sqr()) * dz;
    }
    out
}

/// `P_0(z > Q) - P_t(z > Q + t)` for every snapshot.
pub fn causal_inequality_check(history: &History, q: f64) -> Result<CausalityReport> {
    let grid = *history.grid();
    let qi = grid.snap_within(q)?;
    let q_snapped = grid.boundary(qi);
    let last_steps = history.steps_at(history.len() - 1);
    if qi + last_steps > grid.n_cells() {
        return Err(Error::RegionExitsGrid {
            z: q_snapped + history.elapsed(history.len() - 1),
        });
    }
    let p0 = tail_probabilities(history.initial())[qi];
    let mut margin = f64::INFINITY;
    let mut at = None;
    for (k, state) in history.snapshots().iter().enumerate() {
        let pt = tail_probabilities(state)[qi + history.steps_at(k)];
        let m = p0 - pt;
        if m < margin {
            margin = m;
            at = Some((history.elapsed(k), q_snapped));
        }
    }
    Ok(CausalityReport::new(
        "causal_inequality",
        margin,
        INEQUALITY_TOLERANCE,
        at,
    ))
}

/// [`causal_inequality_check`] for every cut point `Q` whose comoving
/// boundary `Q + t` stays on the grid for the whole history.
pub fn causal_inequality_sweep(history: &History) -> Result<CausalityReport> {
    let grid = *history.grid();
    let n = grid.n_cells();
    let last_steps = history.steps_at(history.len() - 1);
    if last_steps > n {
        return Err(Error::RegionExitsGrid {
            z: grid.z_min() + history.elapsed(history.len() - 1),
        });
    }
    let p0 = tail_probabilities(history.initial());
    let per_snapshot: Vec<(f64, Option<(f64, f64)>)> = history
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(k, state)| {
            let s = history.steps_at(k);
            let pt = tail_probabilities(state);
            let mut margin = f64::INFINITY;
            let mut at = None;
            for qi in 0..=(n - last_steps) {
                let m = p0[qi] - pt[qi + s];
                if m < margin {
                    margin = m;
                    at = Some((history.elapsed(k), grid.boundary(qi)));
                }
            }
            (margin, at)
        })
        .collect();
    let (margin, at) = per_snapshot
        .into_iter()
        .fold((f64::INFINITY, None), |best, cur| if cur.0 < best.0 { cur } else { best });
    Ok(CausalityReport::new(
        "causal_inequality_sweep",
        margin,
        INEQUALITY_TOLERANCE,
        at,
    ))
}

/// `P_0(z > 0) - P_t(z > L)` over snapshots with `t <= t_max < L`, for a
/// barrier on `[0, L]`.
pub fn tunneling_bound_check(history: &History, length: f64, t_max: f64) -> Result<CausalityReport> {
    if !(t_max < length) {
        return Err(Error::HorizonTooLong { length, t_max });
    }
    let grid = *history.grid();
    let left = grid.snap_within(0.0)?;
    let right = grid.snap_within(length)?;
    let leaked = tail_probabilities(history.initial())[left];
    let mut margin = f64::INFINITY;
    let mut at = None;
    for (k, state) in history.snapshots().iter().enumerate() {
        let t = history.elapsed(k);
        if t > t_max {
            break;
        }
        let m = leaked - tail_probabilities(state)[right];
        if m < margin {
            margin = m;
            at = Some((t, grid.boundary(right)));
        }
    }
    Ok(CausalityReport::new("tunneling_bound", margin, INEQUALITY_TOLERANCE, at))
}

/// The three clauses of the cut decomposition `Psi = Psi_L + Psi_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub q: f64,
    /// `Psi_L(t) + Psi_R(t) = Psi(t)` up to accumulated rounding.
    pub linearity: CausalityReport,
    /// `Psi = Psi_R` bitwise on `z > Q + t`.
    pub right_agreement: CausalityReport,
    /// `Psi_L = 0` bitwise on `z > Q + t`.
    pub left_vanishing: CausalityReport,
}

impl DecompositionReport {
    pub fn reports(&self) -> [&CausalityReport; 3] {
        [&self.linearity, &self.right_agreement, &self.left_vanishing]
    }

    pub fn pass(&self) -> bool {
        self.reports().iter().all(|r| r.pass)
    }
}

pub fn decomposition_check(
    state0: &SpinorField,
    q: f64,
    potential: &Potential,
    n_steps: usize,
    cfg: SchemeConfig,
) -> Result<DecompositionReport> {
    let grid = *state0.grid();
    let (left, q_snapped) = state0.cut(q, Side::Left)?;
    let (right, _) = state0.cut(q, Side::Right)?;
    let qi = grid.snap(q_snapped);
    let n = grid.n_cells();

    let mut full = Evolver::new(state0, potential, cfg, BoundaryPolicy::Abort)?;
    let mut ev_l = Evolver::new(&left, potential, cfg, BoundaryPolicy::Abort)?;
    let mut ev_r = Evolver::new(&right, potential, cfg, BoundaryPolicy::Abort)?;

    let mut lin = Worst::none();
    let mut agree = Worst::none();
    let mut vanish = Worst::none();
    let mut scale = 0.0f64;
    for step in 0..=n_steps {
        if step > 0 {
            full.step()?;
            ev_l.step()?;
            ev_r.step()?;
        }
        let t = step as f64 * cfg.dt();
        let (psi, psi_l, psi_r) = (full.state(), ev_l.state(), ev_r.state());
        for i in 0..n {
            let z = grid.center(i as isize);
            let sum_f = psi_l.f[i] + psi_r.f[i];
            let sum_h = psi_l.h[i] + psi_r.h[i];
            lin.offer(amplitude(sum_f - psi.f[i], sum_h - psi.h[i]), t, z);
            scale = scale
                .max(amplitude(psi.f[i], psi.h[i]))
                .max(amplitude(psi_l.f[i], psi_l.h[i]))
                .max(amplitude(psi_r.f[i], psi_r.h[i]));
        }
        for i in (qi + step).min(n)..n {
            let z = grid.center(i as isize);
            agree.offer(amplitude(psi.f[i] - psi_r.f[i], psi.h[i] - psi_r.h[i]), t, z);
            vanish.offer(amplitude(psi_l.f[i], psi_l.h[i]), t, z);
        }
    }
    let lin_tol = LINEARITY_ULPS_PER_STEP * f64::EPSILON * (n_steps as f64 + 1.0) * scale;
    let lin_margin = if lin.value == 0.0 { 0.0 } else { -lin.value };
    Ok(DecompositionReport {
        q: q_snapped,
        linearity: CausalityReport::new("decomposition.linearity", lin_margin, lin_tol, lin.at),
        right_agreement: CausalityReport::exact("decomposition.right_agreement", agree),
        left_vanishing: CausalityReport::exact("decomposition.left_vanishing", vanish),
    })
}

/// Applies the `n_steps` propagator to every unit vector supported in
/// `z < Q` and reports the largest amplitude that reaches `z > Q + t`.
///
/// The propagation truncates at the grid edges so unit vectors next to the
/// boundary are admissible; truncation only removes amplitude.
pub fn operator_identity_check(
    potential: &Potential,
    grid: &Grid1D,
    n_steps: usize,
    q: f64,
    cfg: SchemeConfig,
    cap: usize,
) -> Result<CausalityReport> {
    let n = grid.n_cells();
    if n > cap {
        return Err(Error::GridTooLarge { cells: n, cap });
    }
    if potential.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let qi = grid.snap_within(q)?;
    let basis: Vec<(usize, bool)> = (0..qi).flat_map(|j| [(j, true), (j, false)]).collect();
    let worst = basis
        .par_iter()
        .map(|&(j, upper)| -> Result<Worst> {
            let mut e = SpinorField::zeros(*grid);
            if upper {
                e.f[j] = Complex64::new(1.0, 0.0);
            } else {
                e.h[j] = Complex64::new(1.0, 0.0);
            }
            let mut ev = Evolver::new(&e, potential, cfg, BoundaryPolicy::Truncate)?;
            let mut worst = Worst::none();
            for step in 0..=n_steps {
                if step > 0 {
                    ev.step()?;
                }
                let (u, w) = ev.characteristics();
                let t = step as f64 * cfg.dt();
                for i in (qi + step).min(n)..n {
                    // |f| + |h| with f = (u + w)/2, h = (u - w)/2
                    let amp = 0.5 * ((u[i] + w[i]).norm() + (u[i] - w[i]).norm());
                    worst.offer(amp, t, grid.center(i as isize));
                }
            }
            Ok(worst)
        })
        .try_reduce(Worst::none, |a, b| Ok(a.merge(b)))?;
    Ok(CausalityReport::exact("operator_identity", worst))
}

/// Sample times (as fractions of a step) at which the scheme reads the
/// potential.
fn sample_offsets(splitting: Splitting) -> &'static [f64] {
    match splitting {
        Splitting::Strang => &[0.25, 0.75],
        Splitting::Lie => &[0.5],
    }
}

/// Evolves `state0` under `base` and `perturbed` and compares them on
/// `observer` (`[a, b]`) at every step up to `n_steps`.
///
/// Every cell and step where the two potentials differ must lie outside the
/// discrete past lightcone of the observer at the final step; otherwise the
/// experiment is misconfigured and an error is returned.
pub fn signalling_check(
    state0: &SpinorField,
    base: &Potential,
    perturbed: &Potential,
    observer: [f64; 2],
    n_steps: usize,
    cfg: SchemeConfig,
) -> Result<CausalityReport> {
    let grid = *state0.grid();
    if base.grid() != &grid || perturbed.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let [a, b] = observer;
    if !(a < b) {
        return Err(Error::InvertedInterval { lo: a, hi: b });
    }
    let lo = grid.snap_within(a)?;
    let hi = grid.snap_within(b)?;
    let t0 = state0.time;
    for step in 0..n_steps {
        let reach = n_steps - step;
        let cone = (lo.saturating_sub(reach), hi + reach);
        for off in sample_offsets(cfg.splitting()) {
            let t = t0 + (step as f64 + off) * cfg.dt();
            let (va, vb) = (base.at(t), perturbed.at(t));
            if let Some(j) = (0..grid.n_cells()).find(|&j| va[j] != vb[j] && j >= cone.0 && j < cone.1) {
                return Err(Error::PastConeIntersection {
                    step,
                    z: grid.center(j as isize),
                });
            }
        }
    }

    let mut ev_a = Evolver::new(state0, base, cfg, BoundaryPolicy::Abort)?;
    let mut ev_b = Evolver::new(state0, perturbed, cfg, BoundaryPolicy::Abort)?;
    let mut worst = Worst::none();
    for step in 0..=n_steps {
        if step > 0 {
            ev_a.step()?;
            ev_b.step()?;
        }
        let (ua, wa) = ev_a.characteristics();
        let (ub, wb) = ev_b.characteristics();
        let t = step as f64 * cfg.dt();
        for i in lo..hi {
            let diff = 0.5 * ((ua[i] + wa[i] - ub[i] - wb[i]).norm() + (ua[i] - wa[i] - ub[i] + wb[i]).norm());
            let bitwise_equal = ua[i] == ub[i] && wa[i] == wb[i];
            let value = if bitwise_equal { 0.0 } else { diff.max(f64::MIN_POSITIVE) };
            worst.offer(value, t, grid.center(i as isize));
        }
    }
    Ok(CausalityReport::exact("signalling", worst))
}
