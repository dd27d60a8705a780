//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that the verdict lines are always
//! printed; the process exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dyadic, Scenario};
use luminal::causality::{
    causal_inequality_check, causal_inequality_sweep, decomposition_check, lightcone_check,
    operator_identity_check, signalling_check, support, tunneling_bound_check, INEQUALITY_TOLERANCE,
};
use luminal::config::ExperimentConfig;
use luminal::dynamics::{evolve, rectangular_barrier, BoundaryPolicy, Evolver, Potential, SchemeConfig, Splitting};
use luminal::experiment::{q_point, run_dumont};
use luminal::observables::{continuity_residual, current, state_probability};
use luminal::oracles::{
    determinant_identity_check, fringe_demo, lightlike_determinant_check, massless_exact, FringeSpec,
    DETERMINANT_ULPS, LIGHTLIKE_TOLERANCE,
};
use luminal::state::{compact_packet, gaussian_packet};
use luminal::{Grid1D, PacketSpec, SpinorField};

const SCENARIOS: u64 = 50;
const COARSE_STEPS: usize = 48;
const TIMELIKE_ULPS: f64 = 4.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn determinant_identity() -> Verdict {
    let clock = Instant::now();
    let general = determinant_identity_check(10_000, 2024);
    let lightlike = lightlike_determinant_check(10_000, 2025);
    let elapsed = clock.elapsed();
    let worst_ulps = DETERMINANT_ULPS - general.margin;
    let worst_light = LIGHTLIKE_TOLERANCE - lightlike.margin;
    verdict(
        general.pass && lightlike.pass && elapsed < Duration::from_secs(1),
        format!(
            "worst {worst_ulps:.2} ulps (limit 8), lightlike |det| <= {worst_light:.1e}, {:.3} s",
            secs(elapsed)
        ),
    )
}

/// Per-scenario results shared by the exact-causality, causal-inequality and
/// current criteria.
struct ScenarioOutcome {
    exact_margins: [f64; 4],
    sweep_margin: f64,
    spacelike_ulps: f64,
}

fn run_scenario(s: &Scenario) -> ScenarioOutcome {
    let grid = s.grid();
    let state = s.state(&grid);
    let pot = s.potential(&grid);
    let cfg = s.scheme(&grid);
    let n_steps = s.n_steps(&grid);
    let history = evolve(&state, &pot, n_steps, cfg, 1).unwrap();

    let light = lightcone_check(&history, &support(&state, 0.0));
    let decomposition = decomposition_check(&state, s.q, &pot, n_steps, cfg).unwrap();
    let coarse = s.coarse_grid();
    let operator = operator_identity_check(
        &s.potential(&coarse),
        &coarse,
        COARSE_STEPS,
        s.q,
        s.scheme(&coarse),
        1024,
    )
    .unwrap();
    let signal = signalling_check(&state, &pot, &s.kicked(&grid), s.observer, n_steps, cfg).unwrap();
    let sweep = causal_inequality_sweep(&history).unwrap();
    let spacelike_ulps = history
        .snapshots()
        .iter()
        .map(|snap| current(snap).spacelike_excess_ulps())
        .fold(f64::NEG_INFINITY, f64::max);
    ScenarioOutcome {
        exact_margins: [
            light.margin,
            decomposition.left_vanishing.margin,
            operator.margin,
            signal.margin,
        ],
        sweep_margin: sweep.margin,
        spacelike_ulps,
    }
}

fn exact_causality(outcomes: &[ScenarioOutcome], elapsed: Duration) -> Verdict {
    let names = ["lightcone", "decomposition(c)", "operator_identity", "signalling"];
    let offenders: Vec<String> = outcomes
        .iter()
        .enumerate()
        .flat_map(|(i, o)| {
            o.exact_margins
                .iter()
                .zip(names)
                .filter(|(m, _)| **m != 0.0)
                .map(move |(m, n)| format!("scenario {i} {n} margin {m:e}"))
        })
        .collect();
    verdict(
        offenders.is_empty() && outcomes.len() == SCENARIOS as usize && elapsed < Duration::from_secs(120),
        if offenders.is_empty() {
            format!("{} scenarios x 4 checks, every margin exactly 0.0, {:.1} s", outcomes.len(), secs(elapsed))
        } else {
            format!("{} nonzero margins, first: {}", offenders.len(), offenders[0])
        },
    )
}

/// Pure right-mover `f = b`, `h = -b` with `m = V = 0`.
fn saturation() -> f64 {
    let grid = Grid1D::new(-40.0, 40.0, 3200).unwrap();
    let bump = compact_packet(&PacketSpec::compact([-30.0, -10.0], 0.0, 0.0), [-30.0, -10.0], &grid).unwrap();
    let b: Vec<Complex64> = bump.f.iter().map(|x| x * Complex64::cis(0.7)).collect();
    let h: Vec<Complex64> = b.iter().map(|x| -x).collect();
    let state = SpinorField::from_components(grid, b, h, 0.0).unwrap();
    let cfg = SchemeConfig::new(&grid, 0.0, Splitting::Strang).unwrap();
    let history = evolve(&state, &Potential::zero(grid), 1200, cfg, 1).unwrap();
    [-35.0, -28.0, -20.0, -15.0, -10.5, -5.0]
        .iter()
        .map(|q| causal_inequality_check(&history, *q).unwrap().margin.abs())
        .fold(0.0, f64::max)
}

fn causal_inequality(outcomes: &[ScenarioOutcome]) -> Verdict {
    let worst = outcomes.iter().map(|o| o.sweep_margin).fold(f64::INFINITY, f64::min);
    let saturated = saturation();
    verdict(
        worst >= -INEQUALITY_TOLERANCE && saturated <= INEQUALITY_TOLERANCE,
        format!("worst margin {worst:e} over all Q and snapshots; massless right-mover |margin| <= {saturated:e}"),
    )
}

fn tunneling_bound() -> Verdict {
    let length = 10.0;
    let grid = Grid1D::new(-40.0, 40.0, 4000).unwrap();
    let n_steps = ((length / grid.dz()).round() as usize) - 1;
    let t_max = n_steps as f64 * grid.dz();
    let mut worst_exact = 0.0f64;
    let mut worst_leak = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let v0 = rng.random_range(0.0..20.0);
        let mass = rng.random_range(0.0..2.0);
        let k0 = rng.random_range(0.0..3.0);
        let pot = rectangular_barrier(&grid, v0, 0.0, length, 0.0).unwrap();
        let cfg = SchemeConfig::new(&grid, mass, Splitting::Strang).unwrap();
        let confined = compact_packet(&PacketSpec::compact([-20.0, 0.0], k0, mass), [-20.0, 0.0], &grid).unwrap();
        let h = evolve(&confined, &pot, n_steps, cfg, 1).unwrap();
        let r = tunneling_bound_check(&h, length, t_max).unwrap();
        worst_exact = worst_exact.max(r.margin.abs());
        let exact = h.snapshots().iter().all(|s| state_probability(s, luminal::Region::Right(length)) == 0.0);
        if !exact {
            worst_exact = f64::INFINITY;
        }

        // leak a small bump across z = 0
        let eps: f64 = 1e-6;
        let leak = compact_packet(&PacketSpec::compact([0.0, 3.0], k0, mass), [0.0, 3.0], &grid).unwrap();
        let state = confined.add(&leak.scaled(Complex64::new(eps.sqrt(), 0.0))).unwrap();
        let h = evolve(&state, &pot, n_steps, cfg, 1).unwrap();
        let leaked = state_probability(&state, luminal::Region::Right(0.0));
        let r = tunneling_bound_check(&h, length, t_max).unwrap();
        let beyond = h
            .snapshots()
            .iter()
            .map(|s| state_probability(s, luminal::Region::Right(length)))
            .fold(0.0, f64::max);
        worst_leak = worst_leak.min(leaked + INEQUALITY_TOLERANCE - beyond);
        if !r.pass {
            worst_leak = f64::NEG_INFINITY;
        }
    }
    verdict(
        worst_exact == 0.0 && worst_leak >= 0.0,
        format!("P_t(z > L) = 0.0 for all t < L in 8 runs; with leak eps: min(eps + 1e-10 - P) = {worst_leak:e}"),
    )
}

/// `erfc(x) = 2/sqrt(pi) int_x^inf exp(-s^2) ds` by composite Simpson on
/// `[x, x + 12]`; the neglected tail is below `exp(-144)`.
fn erfc_by_quadrature(x: f64) -> f64 {
    let n = 200_000;
    let h = 12.0 / n as f64;
    let f = |s: f64| (-s * s).exp();
    let mut sum = f(x) + f(x + 12.0);
    for i in 1..n {
        sum += f(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 / std::f64::consts::PI.sqrt() * sum * h / 3.0
}

fn dumont() -> Verdict {
    let clock = Instant::now();
    let oracle = 0.5 * erfc_by_quadrature(25.0 / 15.0);
    let mut lines = Vec::new();
    let mut pass = (oracle - 0.0092).abs() <= 0.0005;
    for v0 in [0.0, 1.0, 5.0, 20.0] {
        let report = run_dumont(&ExperimentConfig::dumont(v0)).unwrap().report;
        let tail_q95 = report.scalar("reference_tail_probability").unwrap();
        let t_t = report.scalar("tunnelling_time");
        let q = report.scalar("q_point");
        let consistent_q = match (t_t, q) {
            (Some(t), Some(q)) => q_point(t, 15.0).unwrap() == q,
            _ => false,
        };
        let inequality = report.check("tunnelled_vs_tail").unwrap();
        let tunnelled = report.scalar("tunnelled_probability").unwrap_or(0.0);
        let tail = report.scalar("tail_probability").unwrap_or(0.0);
        let ok = (tail_q95 - 0.0092).abs() <= 0.0005
            && (tail_q95 - oracle).abs() <= 0.0005
            && consistent_q
            && inequality.pass
            && tunnelled <= tail;
        pass &= ok;
        lines.push(format!(
            "V0={v0}: Q={} tunnelled={tunnelled:.3e} <= tail={tail:.3e}",
            q.unwrap_or(f64::NAN)
        ));
        if v0 == 0.0 {
            lines.push(format!("P0(z>-95)={tail_q95:.6} vs erfc oracle {oracle:.6}"));
        }
    }
    let elapsed = clock.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    verdict(pass, format!("{}; {:.1} s", lines.join("; "), secs(elapsed)))
}

fn fringe() -> Verdict {
    let grid = Grid1D::new(-100.0, 100.0, 8000).unwrap();
    let spec = FringeSpec::new(1.0, 2.0).unwrap();
    let r = fringe_demo(spec, &grid, 1000).unwrap();
    let rel = (r.phase_velocity - 3.0).abs() / 3.0;
    verdict(
        rel <= 0.02 && r.max_abs_prob_velocity <= 1e-6,
        format!(
            "fringe velocity {:.6} (target 3, rel err {rel:.1e}), max |v| = {:.1e} in the bulk",
            r.phase_velocity, r.max_abs_prob_velocity
        ),
    )
}

/// Largest norm change over `10^4` steps of a massive packet scattering off
/// a barrier.
fn drift_per_10k_steps() -> f64 {
    let grid = Grid1D::new(-150.0, 150.0, 30_000).unwrap();
    let state = compact_packet(&PacketSpec::compact([-20.0, 0.0], 1.0, 1.0), [-20.0, 0.0], &grid).unwrap();
    let pot = rectangular_barrier(&grid, 5.0, 0.0, 5.0, 0.0).unwrap();
    let cfg = SchemeConfig::new(&grid, 1.0, Splitting::Strang).unwrap();
    let mut ev = Evolver::new(&state, &pot, cfg, BoundaryPolicy::Abort).unwrap();
    let n0 = state.norm();
    let mut worst = 0.0f64;
    for step in 1..=10_000 {
        ev.step().unwrap();
        if step % 500 == 0 {
            worst = worst.max((ev.state().norm() - n0).abs());
        }
    }
    worst
}

/// Continuity residual of a smooth massive run at `dz = 0.1 / 2^level`.
fn residual_at(level: u32) -> f64 {
    let cells = 800 << level;
    let grid = Grid1D::new(-40.0, 40.0, cells).unwrap();
    let state = gaussian_packet(&PacketSpec::gaussian(-8.0, 3.0, 1.0, 1.0), &grid).unwrap();
    let pot = Potential::from_fn(grid, |z| 1.5 * (-z * z / 8.0).exp()).unwrap();
    let cfg = SchemeConfig::new(&grid, 1.0, Splitting::Strang).unwrap();
    let n_steps = (10.0 / grid.dz()).round() as usize;
    let history = evolve(&state, &pot, n_steps, cfg, 1).unwrap();
    continuity_residual(&history).unwrap()
}

fn current_properties(outcomes: &[ScenarioOutcome]) -> Verdict {
    let spacelike = outcomes.iter().map(|o| o.spacelike_ulps).fold(f64::NEG_INFINITY, f64::max);
    let drift = drift_per_10k_steps();
    let residuals: Vec<f64> = (0..4).map(residual_at).collect();
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        spacelike <= TIMELIKE_ULPS && drift <= 1e-10 && min_ratio >= 1.9,
        format!(
            "max(|jz| - j0) = {spacelike:.1} ulps; drift {drift:.1e} per 1e4 steps; residual ratios {:?}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn massless_oracle() -> Verdict {
    let grid = Grid1D::new(-1000.0, 1000.0, 32_000).unwrap();
    let envelope = |z: f64, lo: f64, hi: f64| {
        let x = (2.0 * z - lo - hi) / (hi - lo);
        if x.abs() < 1.0 {
            (1.0 - x * x).powi(3)
        } else {
            0.0
        }
    };
    let a = |z: f64| {
        let e = envelope(z, 100.0, 300.0);
        Complex64::new(dyadic(e * (0.3 * z).cos(), 20), dyadic(e * (0.3 * z).sin(), 20))
    };
    let b = |z: f64| {
        let e = envelope(z, -300.0, -120.0);
        Complex64::new(dyadic(0.5 * e, 20), dyadic(-e * (1.1 * z).sin(), 20))
    };
    let state = massless_exact(a, b, 0.0, &grid);
    let cfg = SchemeConfig::new(&grid, 0.0, Splitting::Strang).unwrap();
    let pot = Potential::zero(grid);
    let mut ev = Evolver::new(&state, &pot, cfg, BoundaryPolicy::Abort).unwrap();
    let mut mismatches = 0usize;
    for step in 1..=10_000usize {
        ev.step().unwrap();
        if step % 2500 == 0 {
            let exact = massless_exact(a, b, step as f64 * grid.dz(), &grid);
            let got = ev.state();
            mismatches += got
                .f
                .iter()
                .zip(&exact.f)
                .chain(got.h.iter().zip(&exact.h))
                .filter(|(x, y)| x.re.to_bits() != y.re.to_bits() || x.im.to_bits() != y.im.to_bits())
                .count();
        }
    }
    verdict(
        mismatches == 0,
        format!("10^4 steps on 32000 cells, {mismatches} bitwise mismatches at t = 2500, 5000, 7500, 10000 steps"),
    )
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            verdict(false, format!("panicked: {msg}"))
        }
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters from the harness are irrelevant here.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }

    let clock = Instant::now();
    let outcomes: Vec<ScenarioOutcome> = guarded_outcomes();
    let scenario_time = clock.elapsed();

    let results = [
        ("characteristic identity", guarded(determinant_identity)),
        ("exact discrete causality", guarded(|| exact_causality(&outcomes, scenario_time))),
        ("causal inequality", guarded(|| causal_inequality(&outcomes))),
        ("luminal tunnelling bound", guarded(tunneling_bound)),
        ("tunnelling-time reproduction", guarded(dumont)),
        ("fringe demo", guarded(fringe)),
        ("current properties", guarded(|| current_properties(&outcomes))),
        ("massless oracle", guarded(massless_oracle)),
    ];
    let mut all = true;
    for (i, (name, v)) in results.iter().enumerate() {
        println!("{} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        all &= v.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn guarded_outcomes() -> Vec<ScenarioOutcome> {
    (0..SCENARIOS)
        .filter_map(|seed| {
            let s = Scenario::random(seed);
            match catch_unwind(AssertUnwindSafe(|| run_scenario(&s))) {
                Ok(o) => Some(o),
                Err(_) => {
                    eprintln!("scenario {seed} panicked: {s:?}");
                    None
                }
            }
        })
        .collect()
}
