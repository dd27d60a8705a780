//! Closed-form references: the massless solution `f = a(z+t) + b(z-t)`,
//! `h = a(z+t) - b(z-t)`, drifting interference fringes, the characteristic
//! determinant of the 3+1D operator in the Weyl basis, and a dispersion
//! validator for the scheme.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::causality::CausalityReport;
use crate::dynamics::{BoundaryPolicy, Evolver, Potential, SchemeConfig, Splitting};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::observables::current;
use crate::state::{plane_superposition, positive_energy_ratio, SpinorField};

/// Largest `|k| dz` for which a plane wave counts as resolved.
pub const RESOLUTION_LIMIT: f64 = 0.5;

/// Determinant agreement budget, in ulps of `(sum xi_mu^2)^2`.
pub const DETERMINANT_ULPS: f64 = 8.0;

/// Exact massless, potential-free solution sampled at time `t`.
///
/// When `t` is a whole number of cells the samples are taken at the
/// neighbouring cell centres `z_{i +- n}` themselves, so the result can be
/// compared bitwise with an exact transport.
pub fn massless_exact(
    a: impl Fn(f64) -> Complex64,
    b: impl Fn(f64) -> Complex64,
    t: f64,
    grid: &Grid1D,
) -> SpinorField {
    let shift = t / grid.dz();
    let whole = shift.round();
    let aligned = (shift - whole).abs() <= 1e-9 * whole.abs().max(1.0);
    let (f, h) = (0..grid.n_cells() as isize)
        .map(|i| {
            let (za, zb) = if aligned {
                let n = whole as isize;
                (grid.center(i + n), grid.center(i - n))
            } else {
                let z = grid.center(i);
                (z + t, z - t)
            };
            let (a, b) = (a(za), b(zb));
            (a + b, a - b)
        })
        .unzip();
    SpinorField::from_components(*grid, f, h, t).expect("lengths match grid")
}

/// Wavenumbers of the left-moving (`k`) and right-moving (`p`) plane waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeSpec {
    k: f64,
    p: f64,
}

impl FringeSpec {
    pub fn new(k: f64, p: f64) -> Result<Self> {
        if !(k.is_finite() && p.is_finite() && k > 0.0 && p > k) {
            return Err(Error::InvalidArgument(format!("fringe needs p > k > 0, got k = {k}, p = {p}")));
        }
        Ok(FringeSpec { k, p })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(p + k) / (p - k)`
    pub fn phase_velocity(&self) -> f64 {
        (self.p + self.k) / (self.p - self.k)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.p - self.k)
    }

    /// `4 cos^2[(p - k)/2 (z - v t)]`
    pub fn density(&self, z: f64, t: f64) -> f64 {
        let c = (0.5 * (self.p - self.k) * (z - self.phase_velocity() * t)).cos();
        4.0 * c * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeResult {
    pub phase_velocity: f64,
    pub max_abs_prob_velocity: f64,
    pub fringe_density_formula_residual: f64,
    /// Number of snapshots in which the density maximum was located.
    pub tracked_points: usize,
}

/// Cells at least `2 n_steps` cells away from either edge.
fn bulk_window(grid: &Grid1D, n_steps: usize) -> Result<(usize, usize)> {
    let lo = 2 * n_steps;
    let hi = grid.n_cells().saturating_sub(2 * n_steps);
    if lo + 2 >= hi {
        return Err(Error::InvalidArgument(format!(
            "grid of {} cells has no bulk window for {n_steps} steps",
            grid.n_cells()
        )));
    }
    Ok((lo, hi))
}

/// Position of the local maximum of `rho` in `lo..hi`, refined by a
/// parabola through the neighbouring samples.
fn local_maximum(rho: &[f64], lo: usize, hi: usize, grid: &Grid1D) -> Option<f64> {
    let lo = lo.max(1);
    let hi = hi.min(rho.len() - 1);
    if lo >= hi {
        return None;
    }
    let i = (lo..hi).max_by(|&a, &b| rho[a].total_cmp(&rho[b]))?;
    if i == lo || i + 1 == hi {
        // maximum sits on the search edge; not a proper interior peak
        return None;
    }
    let (l, c, r) = (rho[i - 1], rho[i], rho[i + 1]);
    let denom = l - 2.0 * c + r;
    let offset = if denom < 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    Some(grid.center(i as isize) + offset * grid.dz())
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mz = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - mz)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    sxy / sxx
}

/// Evolves `a = exp(ikz)`, `b = exp(ipz)` with `m = V = 0`, follows one
/// density maximum across the bulk window and measures its drift.
pub fn fringe_demo(spec: FringeSpec, grid: &Grid1D, n_steps: usize) -> Result<FringeResult> {
    let dz = grid.dz();
    if spec.p * dz > RESOLUTION_LIMIT {
        return Err(Error::UnresolvedWavenumber {
            k: spec.p,
            dz,
            limit: RESOLUTION_LIMIT,
        });
    }
    let (lo, hi) = bulk_window(grid, n_steps)?;
    let period_cells = (spec.wavelength() / dz).ceil() as usize;
    if hi - lo < 2 * period_cells {
        return Err(Error::InvalidArgument("bulk window shorter than two fringe periods".into()));
    }

    let state = plane_superposition(spec.k, spec.p, grid)?;
    let potential = Potential::zero(*grid);
    let cfg = SchemeConfig::new(grid, 0.0, Splitting::Strang)?;
    let mut ev = Evolver::new(&state, &potential, cfg, BoundaryPolicy::Truncate)?;

    let half = period_cells / 2;
    let mut track: Vec<(f64, f64)> = Vec::new();
    let mut position: Option<f64> = None;
    let mut max_v = 0.0f64;
    let mut residual = 0.0f64;
    for step in 0..=n_steps {
        if step > 0 {
            ev.step()?;
        }
        let snapshot = ev.state();
        let t = step as f64 * dz;
        let j = current(&snapshot);
        for i in lo..hi {
            if j.j0[i] > 0.0 {
                max_v = max_v.max((j.jz[i] / j.j0[i]).abs());
            }
            let rho = snapshot.f[i].norm_sqr();
            residual = residual.max((rho - spec.density(grid.center(i as isize), t)).abs());
        }
        let rho: Vec<f64> = snapshot.f.iter().map(|f| f.norm_sqr()).collect();
        let (from, to) = match position {
            None => (lo + half, lo + half + period_cells),
            Some(z) => {
                let c = grid.cell_of(z).unwrap_or(lo);
                (c.saturating_sub(half).max(lo), (c + half).min(hi))
            }
        };
        if to + 1 >= hi {
            // the tracked peak is about to leave the window
            break;
        }
        match local_maximum(&rho, from, to, grid) {
            Some(z) => {
                position = Some(z);
                track.push((t, z));
            }
            None if position.is_none() => continue,
            None => break,
        }
    }
    if track.len() < 3 {
        return Err(Error::InvalidArgument("too few snapshots to measure the fringe drift".into()));
    }
    Ok(FringeResult {
        phase_velocity: slope(&track),
        max_abs_prob_velocity: max_v,
        fringe_density_formula_residual: residual,
        tracked_points: track.len(),
    })
}

/// Covariant vector `xi_mu = d_mu Phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covector4(pub [f64; 4]);

impl Covector4 {
    /// `xi_mu xi^mu` with signature `(-, +, +, +)`.
    pub fn square(&self) -> f64 {
        let [x0, x1, x2, x3] = self.0;
        -x0 * x0 + x1 * x1 + x2 * x2 + x3 * x3
    }

    /// `sum_mu xi_mu^2`, the scale that rounding errors are measured against.
    pub fn euclidean_square(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

pub type Matrix4 = [[Complex64; 4]; 4];

fn pauli() -> [[[Complex64; 2]; 2]; 3] {
    let o = Complex64::new(0.0, 0.0);
    let r = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [[[o, r], [r, o]], [[o, -i], [i, o]], [[r, o], [o, -r]]]
}

/// Weyl-basis gamma matrices
/// `gamma^0 = -i [[0, I], [I, 0]]`, `gamma^j = -i [[0, sigma_j], [-sigma_j, 0]]`.
pub fn gamma_matrices() -> [Matrix4; 4] {
    let zero = Complex64::new(0.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    let ident = [
        [Complex64::new(1.0, 0.0), zero],
        [zero, Complex64::new(1.0, 0.0)],
    ];
    let block = |upper: [[Complex64; 2]; 2], lower: [[Complex64; 2]; 2]| {
        let mut m = [[zero; 4]; 4];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c + 2] = minus_i * upper[r][c];
                m[r + 2][c] = minus_i * lower[r][c];
            }
        }
        m
    };
    let s = pauli();
    let neg = |a: [[Complex64; 2]; 2]| a.map(|row| row.map(|x| -x));
    [
        block(ident, ident),
        block(s[0], neg(s[0])),
        block(s[1], neg(s[1])),
        block(s[2], neg(s[2])),
    ]
}

/// `M^mu xi_mu` with `M^mu = gamma^mu`.
pub fn principal_symbol(xi: &Covector4) -> Matrix4 {
    let gammas = gamma_matrices();
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (g, x) in gammas.iter().zip(xi.0) {
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] += g[r][c] * x;
            }
        }
    }
    m
}

/// Determinant by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn determinant(m: &Matrix4) -> Complex64 {
    let mut a = *m;
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .expect("non-empty range");
        if a[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for row in col + 1..4 {
            let factor = a[row][col] / p;
            for c in col..4 {
                let sub = factor * a[col][c];
                a[row][c] -= sub;
            }
        }
    }
    det
}

/// `det[M^mu xi_mu]`; equals `(xi_mu xi^mu)^2`.
pub fn characteristic_determinant(xi: &Covector4) -> Complex64 {
    determinant(&principal_symbol(xi))
}

/// `|det - (xi.xi)^2|` in ulps of `(sum xi_mu^2)^2`.
pub fn determinant_error_ulps(xi: &Covector4) -> f64 {
    let det = characteristic_determinant(xi);
    let closed = xi.square() * xi.square();
    let scale = xi.euclidean_square() * xi.euclidean_square();
    if scale == 0.0 {
        return det.norm() / f64::MIN_POSITIVE;
    }
    (det - closed).norm() / (f64::EPSILON * scale)
}

/// Checks the determinant identity on `samples` covectors with components
/// drawn uniformly from `[-1, 1]`. Margin is `8 - worst ulps`.
pub fn determinant_identity_check(samples: usize, seed: u64) -> CausalityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let xi = Covector4(std::array::from_fn(|_| rng.random_range(-1.0..=1.0)));
        worst = worst.max(determinant_error_ulps(&xi));
    }
    CausalityReport::new("characteristic_identity", DETERMINANT_ULPS - worst, 0.0, None)
}

/// Largest `|det[M^mu xi_mu]|` allowed for a lightlike covector.
pub const LIGHTLIKE_TOLERANCE: f64 = 1e-12;

/// Checks that the principal symbol is singular on `samples` lightlike
/// covectors `(1, n)` with `n` a random unit vector.
pub fn lightlike_determinant_check(samples: usize, seed: u64) -> CausalityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    while drawn < samples {
        let n: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(len > 1e-3 && len <= 1.0) {
            continue;
        }
        let xi = Covector4([1.0, n[0] / len, n[1] / len, n[2] / len]);
        worst = worst.max(characteristic_determinant(&xi).norm());
        drawn += 1;
    }
    CausalityReport::new("characteristic_lightlike", LIGHTLIKE_TOLERANCE - worst, 0.0, None)
}

/// Phase rotation rate of an evolved positive-energy plane wave
/// `exp(ikz)`, measured by least squares on the unwrapped phase of its
/// overlap with the initial state over the bulk window.
pub fn measure_frequency(k: f64, mass: f64, grid: &Grid1D, dt: f64, n_steps: usize) -> Result<f64> {
    let cfg = SchemeConfig::with_dt(grid, dt, mass, Splitting::Strang)?;
    if k.abs() * grid.dz() > RESOLUTION_LIMIT {
        return Err(Error::UnresolvedWavenumber {
            k,
            dz: grid.dz(),
            limit: RESOLUTION_LIMIT,
        });
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let (lo, hi) = bulk_window(grid, n_steps)?;
    let ratio = positive_energy_ratio(k, mass);
    let (f, h) = grid
        .centers()
        .map(|z| {
            let f = Complex64::cis(k * z);
            (f, f * ratio)
        })
        .unzip();
    let state = SpinorField::from_components(*grid, f, h, 0.0)?;
    let potential = Potential::zero(*grid);
    let mut ev = Evolver::new(&state, &potential, cfg, BoundaryPolicy::Truncate)?;

    let overlap = |s: &SpinorField| -> Complex64 {
        (lo..hi)
            .map(|i| state.f[i].conj() * s.f[i] + state.h[i].conj() * s.h[i])
            .sum()
    };
    let mut previous = overlap(&state);
    let mut phase = 0.0;
    let mut points = vec![(0.0, 0.0)];
    for step in 1..=n_steps {
        ev.step()?;
        let now = overlap(&ev.state());
        phase += (now / previous).arg();
        previous = now;
        points.push((step as f64 * dt, phase));
    }
    Ok(-slope(&points))
}

/// `|E_measured - sqrt(k^2 + m^2)|`.
pub fn dispersion_check(k: f64, mass: f64, grid: &Grid1D, dt: f64, n_steps: usize) -> Result<f64> {
    let measured = measure_frequency(k, mass, grid, dt, n_steps)?;
    Ok((measured - k.hypot(mass)).abs())
}
