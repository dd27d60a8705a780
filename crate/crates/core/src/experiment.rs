//! Running configured experiments: evolution, checks, tunnelling-time
//! analysis and parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::causality::{
    causal_inequality_check, causal_inequality_sweep, decomposition_check, lightcone_check,
    operator_identity_check, signalling_check, support, tunneling_bound_check, CausalityReport,
    INEQUALITY_TOLERANCE,
};
use crate::config::{BarrierSpec, CheckSpec, ExperimentConfig};
use crate::dynamics::{evolve, perturb_potential, History};
use crate::error::{Error, Result};
use crate::observables::{current, state_probability, Region};
use crate::state::PacketKind;

/// Largest accepted norm drift over a run.
pub const CONSERVATION_TOLERANCE: f64 = 1e-10;

/// Slack on `|jz| <= j0`, in ulps of `j0`.
pub const TIMELIKE_ULPS: f64 = 4.0;

/// `L - t_T`: the left end of the initial tail that lies in the causal past
/// of a packet leaving the barrier at time `t_T`.
pub fn q_point(t_t: f64, length: f64) -> Result<f64> {
    if !(t_t >= 0.0) {
        return Err(Error::InvalidArgument(format!("tunnelling time {t_t} must be >= 0")));
    }
    Ok(length - t_t)
}

/// Elapsed time of the first snapshot with `P(z > z_detect) >= threshold`.
pub fn arrival_time(history: &History, z_detect: f64, threshold: f64) -> Option<f64> {
    arrival_index(history, z_detect, threshold).map(|k| history.elapsed(k))
}

fn arrival_index(history: &History, z_detect: f64, threshold: f64) -> Option<usize> {
    history
        .snapshots()
        .iter()
        .position(|s| state_probability(s, Region::Right(z_detect)) >= threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub checks: Vec<CausalityReport>,
    /// Named scalar results in the order they were computed.
    pub scalars: Vec<(String, f64)>,
    /// Wall-clock seconds per phase. Not part of any determinism guarantee.
    pub timings: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.scalars.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn check(&self, name: &str) -> Option<&CausalityReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A finished run: its report and the history it was computed from.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub history: History,
}

/// Runs one configured check. Decomposition yields one report per clause.
pub fn run_check(check: &CheckSpec, config: &ExperimentConfig, history: &History) -> Result<Vec<CausalityReport>> {
    let grid = config.grid()?;
    let cfg = config.scheme_config()?;
    let state0 = history.initial();
    let n_steps = config.scheme.n_steps;
    Ok(match check {
        CheckSpec::Lightcone => vec![lightcone_check(history, &support(state0, 0.0))],
        CheckSpec::CausalInequality { q } => vec![causal_inequality_check(history, *q)?],
        CheckSpec::CausalInequalitySweep => vec![causal_inequality_sweep(history)?],
        CheckSpec::TunnelingBound { length, t_max } => vec![tunneling_bound_check(history, *length, *t_max)?],
        CheckSpec::Decomposition { q } => {
            let r = decomposition_check(state0, *q, history.potential(), n_steps, cfg)?;
            vec![r.linearity, r.right_agreement, r.left_vanishing]
        }
        CheckSpec::OperatorIdentity { q, n_steps, max_cells } => {
            vec![operator_identity_check(history.potential(), &grid, *n_steps, *q, cfg, *max_cells)?]
        }
        CheckSpec::Signalling {
            region,
            window,
            dv,
            observer,
        } => {
            let perturbed = perturb_potential(history.potential(), *region, *window, *dv)?;
            vec![signalling_check(state0, history.potential(), &perturbed, *observer, n_steps, cfg)?]
        }
        CheckSpec::CurrentTimelike => {
            let worst = history
                .snapshots()
                .iter()
                .map(|s| current(s).spacelike_excess_ulps())
                .fold(f64::NEG_INFINITY, f64::max);
            vec![CausalityReport::new("current_timelike", TIMELIKE_ULPS - worst, 0.0, None)]
        }
        CheckSpec::Conservation => {
            let drift = history.norm_drift();
            vec![CausalityReport::new("conservation", CONSERVATION_TOLERANCE - drift, 0.0, None)]
        }
    })
}

/// Evolves the configured state and runs every configured check, plus the
/// tunnelling-time analysis when `config.dumont` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let grid = config.grid()?;
    let mut timings = Vec::new();

    let clock = Instant::now();
    let state0 = config.packet.build(&grid)?;
    let potential = config.potential()?;
    let cfg = config.scheme_config()?;
    let history = evolve(&state0, &potential, config.scheme.n_steps, cfg, config.stride)?;
    timings.push(("evolve".to_string(), clock.elapsed().as_secs_f64()));

    let mut scalars = vec![
        ("dz".to_string(), grid.dz()),
        ("final_time".to_string(), history.last().time),
        ("initial_norm".to_string(), state0.norm()),
        ("norm_drift".to_string(), history.norm_drift()),
    ];
    let mut checks = Vec::new();

    let clock = Instant::now();
    for check in &config.checks {
        checks.extend(run_check(check, config, &history)?);
    }
    timings.push(("checks".to_string(), clock.elapsed().as_secs_f64()));

    if config.dumont.is_some() {
        let clock = Instant::now();
        let (report, extra) = tunnelling_analysis(config, &history)?;
        checks.push(report);
        scalars.extend(extra);
        timings.push(("tunnelling_analysis".to_string(), clock.elapsed().as_secs_f64()));
    }

    Ok(Experiment {
        report: ExperimentReport {
            config: config.clone(),
            checks,
            scalars,
            timings,
        },
        history,
    })
}

/// Estimates the tunnelling time, places `Q` and compares the tunnelled
/// probability with the tail probability in its causal past.
fn tunnelling_analysis(config: &ExperimentConfig, history: &History) -> Result<(CausalityReport, Vec<(String, f64)>)> {
    let spec = config.dumont.as_ref().expect("caller checked");
    let length = spec.barrier_length;
    let initial = history.initial();
    let mut scalars = Vec::new();

    let transmitted = state_probability(history.last(), Region::Right(length));
    scalars.push(("final_transmitted_probability".to_string(), transmitted));
    let threshold = spec.threshold_fraction * transmitted;
    let arrival = if transmitted > 0.0 {
        arrival_index(history, length, threshold)
    } else {
        None
    };

    let report = match arrival {
        Some(index) => {
            let t_t = history.elapsed(index);
            let q = q_point(t_t, length)?;
            let tunnelled = state_probability(&history.snapshots()[index], Region::Right(length));
            let tail = state_probability(initial, Region::Right(q));
            scalars.push(("tunnelling_time".to_string(), t_t));
            scalars.push(("q_point".to_string(), q));
            scalars.push(("tail_probability".to_string(), tail));
            scalars.push(("tunnelled_probability".to_string(), tunnelled));
            CausalityReport::new(
                "tunnelled_vs_tail",
                tail - tunnelled,
                INEQUALITY_TOLERANCE,
                Some((t_t, q)),
            )
        }
        None => CausalityReport::new("tunnelled_vs_tail", 0.0, INEQUALITY_TOLERANCE, None),
    };

    if let Some(q_ref) = spec.reference_q {
        scalars.push((
            "reference_tail_probability".to_string(),
            state_probability(initial, Region::Right(q_ref)),
        ));
        if config.packet.kind == PacketKind::Gaussian {
            let p = &config.packet;
            scalars.push((
                "reference_tail_analytic".to_string(),
                0.5 * erfc((q_ref - p.z0) / p.width),
            ));
        }
    }
    Ok((report, scalars))
}

/// [`run_experiment`] for a configuration that carries a `dumont` section.
pub fn run_dumont(config: &ExperimentConfig) -> Result<Experiment> {
    if config.dumont.is_none() {
        return Err(Error::Config("run_dumont needs a [dumont] section".into()));
    }
    run_experiment(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    V0,
    L,
    Mass,
    K0,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v0" => Ok(SweepParameter::V0),
            "l" | "length" => Ok(SweepParameter::L),
            "mass" | "m" => Ok(SweepParameter::Mass),
            "k0" => Ok(SweepParameter::K0),
            other => Err(Error::InvalidArgument(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

/// `config` with `parameter` set to `value`.
pub fn with_parameter(config: &ExperimentConfig, parameter: SweepParameter, value: f64) -> Result<ExperimentConfig> {
    if !value.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite sweep value {value}")));
    }
    let mut c = config.clone();
    match parameter {
        SweepParameter::V0 => {
            let b = c.potential.barrier.get_or_insert(BarrierSpec {
                v0: 0.0,
                z_on: 0.0,
                z_off: c.dumont.as_ref().map_or(1.0, |d| d.barrier_length),
                smoothing: 0.0,
            });
            b.v0 = value;
        }
        SweepParameter::L => {
            let b = c
                .potential
                .barrier
                .as_mut()
                .ok_or_else(|| Error::Config("sweeping L needs a barrier".into()))?;
            b.z_off = b.z_on + value;
            if let Some(d) = c.dumont.as_mut() {
                d.barrier_length = value;
            }
        }
        SweepParameter::Mass => c.packet.mass = value,
        SweepParameter::K0 => c.packet.k0 = value,
    }
    c.validate()?;
    Ok(c)
}

/// Independent runs, one per value, in the order of `values`. A failing run
/// does not stop its siblings.
pub fn run_sweep(config: &ExperimentConfig, parameter: SweepParameter, values: &[f64]) -> Vec<Result<ExperimentReport>> {
    values
        .par_iter()
        .map(|v| {
            let c = with_parameter(config, parameter, *v)?;
            run_experiment(&c).map(|e| e.report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{OutputSpec, PotentialSpec, SchemeSpec};
    use crate::dynamics::{Potential, SchemeConfig, Splitting};
    use crate::grid::{Grid1D, GridSpec};
    use crate::state::{compact_packet, PacketSpec};

    #[test]
    fn q_point_examples() {
        assert_eq!(q_point(110.0, 15.0).unwrap(), -95.0);
        assert_eq!(q_point(0.0, 15.0).unwrap(), 15.0);
        assert_eq!(q_point(15.0, 15.0).unwrap(), 0.0);
        assert!(q_point(-1.0, 15.0).is_err());
    }

    #[test]
    fn arrival_of_a_light_speed_packet() {
        let g = Grid1D::new(-30.0, 30.0, 1200).unwrap();
        let s = compact_packet(&PacketSpec::compact([-15.0, -5.0], 4.0, 0.0), [-15.0, -5.0], &g).unwrap();
        let cfg = SchemeConfig::new(&g, 0.0, Splitting::Strang).unwrap();
        let h = evolve(&s, &Potential::zero(g), 400, cfg, 1).unwrap();
        let t = arrival_time(&h, 0.0, 0.5).unwrap();
        assert!((t - 10.0).abs() <= g.dz() + 1e-12, "{t}");
        assert_eq!(arrival_time(&h, 0.0, 1.5), None);
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            seed: 1,
            stride: 4,
            out_dir: "unused".into(),
            grid: GridSpec {
                z_min: -60.0,
                z_max: 60.0,
                n_cells: 1200,
            },
            packet: PacketSpec::compact([-30.0, -10.0], 1.0, 1.0),
            potential: PotentialSpec {
                barrier: Some(BarrierSpec {
                    v0: 2.0,
                    z_on: 0.0,
                    z_off: 5.0,
                    smoothing: 0.0,
                }),
                perturbations: Vec::new(),
            },
            scheme: SchemeSpec {
                splitting: Splitting::Strang,
                n_steps: 300,
            },
            output: OutputSpec::default(),
            dumont: None,
            checks: vec![
                CheckSpec::Lightcone,
                CheckSpec::CausalInequality { q: -12.0 },
                CheckSpec::Decomposition { q: -20.0 },
                CheckSpec::Conservation,
                CheckSpec::CurrentTimelike,
            ],
        }
    }

    #[test]
    fn experiment_runs_checks_in_order() {
        let e = run_experiment(&small_config()).unwrap();
        let names: Vec<&str> = e.report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "lightcone",
                "causal_inequality",
                "decomposition.linearity",
                "decomposition.right_agreement",
                "decomposition.left_vanishing",
                "conservation",
                "current_timelike"
            ]
        );
        assert!(e.report.pass(), "{:?}", e.report.checks);
    }

    #[test]
    fn sweep_edge_cases() {
        let c = small_config();
        assert!(run_sweep(&c, SweepParameter::V0, &[]).is_empty());
        let r = run_sweep(&c, SweepParameter::V0, &[1.0, 1.0]);
        assert_eq!(r.len(), 2);
        let (a, b) = (r[0].as_ref().unwrap(), r[1].as_ref().unwrap());
        assert_eq!(a.checks, b.checks);
        assert_eq!(a.scalars, b.scalars);
        let bad = run_sweep(&c, SweepParameter::Mass, &[-1.0, 0.5]);
        assert!(bad[0].is_err());
        assert!(bad[1].is_ok());
    }

    #[test]
    fn sweep_parameter_names() {
        assert_eq!("V0".parse::<SweepParameter>().unwrap(), SweepParameter::V0);
        assert_eq!("k0".parse::<SweepParameter>().unwrap(), SweepParameter::K0);
        assert!("speed".parse::<SweepParameter>().is_err());
    }
}
