use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use luminal::causality::CausalityReport;
use luminal::config::{CheckSpec, ExperimentConfig};
use luminal::dynamics::{evolve_with_policy, BoundaryPolicy, Potential, SchemeConfig, Splitting};
use luminal::experiment::{run_experiment, run_sweep, SweepParameter};
use luminal::io::{write_density_csv, write_report};
use luminal::oracles::{determinant_identity_check, fringe_demo, lightlike_determinant_check, FringeSpec};
use luminal::state::plane_superposition;
use luminal::Grid1D;

/// Causality checks and tunnelling experiments on an exact-lightcone Dirac lattice.
#[derive(Parser)]
#[command(name = "luminal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot stride in steps; overrides `stride` from the config.
    #[arg(long)]
    stride: Option<usize>,
    /// Check to run (repeatable). Replaces the configured list; a configured
    /// check of the same name keeps its parameters.
    #[arg(long = "check")]
    checks: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a configured state, write density.csv and report.txt.
    Simulate(Common),
    /// Run causality checks only; writes report.txt.
    Verify(Common),
    /// Tunnelling-time reproduction with the built-in setup (or --config).
    Dumont {
        #[command(flatten)]
        common: Common,
        /// Barrier height.
        #[arg(long, default_value_t = 1.0)]
        v0: f64,
    },
    /// Fringe drift of two superposed massless plane waves.
    Fringe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 8000)]
        cells: usize,
        /// Half-width of the grid.
        #[arg(long, default_value_t = 100.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Characteristic-determinant identity on random covectors.
    Characteristics {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Repeat a configured experiment over values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of v0, l, mass, k0.
        #[arg(long)]
        parameter: SweepParameter,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
}

fn load_config(common: &Common, fallback: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
    let mut config = match (&common.config, fallback) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(config)) => config,
        (None, None) => bail!("--config is required"),
    };
    if let Some(stride) = common.stride {
        config.stride = stride;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.to_string_lossy().into_owned();
    }
    if !common.checks.is_empty() {
        let mut checks = Vec::new();
        for name in &common.checks {
            let configured: Vec<CheckSpec> = config.checks.iter().filter(|c| c.name() == name).cloned().collect();
            if configured.is_empty() {
                checks.push(CheckSpec::default_for(name, &config)?);
            } else {
                checks.extend(configured);
            }
        }
        config.checks = checks;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &Common, default: &str) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn save_report(dir: &Path, checks: &[CausalityReport], scalars: &[(String, f64)]) -> Result<()> {
    let path = dir.join("report.txt");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_report(BufWriter::new(file), checks, scalars)?;
    for c in checks {
        println!("{c}");
    }
    Ok(())
}

fn save_timings(dir: &Path, timings: &[(String, f64)]) -> Result<()> {
    let text: String = timings.iter().map(|(k, v)| format!("{k} {v:.3}\n")).collect();
    fs::write(dir.join("timings.txt"), &text)?;
    for (k, v) in timings {
        eprintln!("[timing] {k}: {v:.3} s");
    }
    Ok(())
}

/// Runs `config` and writes its artifacts. Returns whether every check passed.
fn experiment(config: &ExperimentConfig, csv: bool) -> Result<bool> {
    let dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let run = run_experiment(config)?;
    if csv && config.output.csv {
        let file = File::create(dir.join("density.csv"))?;
        write_density_csv(&run.history, BufWriter::new(file), config.output.cell_stride)?;
    }
    fs::write(dir.join("config.toml"), config.to_toml_string()?)?;
    save_report(&dir, &run.report.checks, &run.report.scalars)?;
    save_timings(&dir, &run.report.timings)?;
    Ok(run.report.pass())
}

fn fringe(common: &Common, k: f64, p: f64, cells: usize, half_width: f64, steps: usize) -> Result<bool> {
    let dir = out_dir(common, "out/fringe")?;
    let grid = Grid1D::new(-half_width, half_width, cells)?;
    let spec = FringeSpec::new(k, p)?;
    let result = fringe_demo(spec, &grid, steps)?;
    let expected = spec.phase_velocity();
    // the drift is measured from the tracked maximum of |f|^2
    let drift = result.phase_velocity;
    let checks = vec![
        CausalityReport::new("fringe_phase_velocity", 0.02 - ((drift - expected) / expected).abs(), 0.0, None),
        CausalityReport::new("fringe_probability_velocity", 1e-6 - result.max_abs_prob_velocity, 0.0, None),
    ];
    let scalars = vec![
        ("expected_phase_velocity".to_string(), expected),
        ("measured_phase_velocity".to_string(), drift),
        ("max_abs_probability_velocity".to_string(), result.max_abs_prob_velocity),
        ("density_formula_residual".to_string(), result.fringe_density_formula_residual),
        ("tracked_points".to_string(), result.tracked_points as f64),
    ];

    let stride = common.stride.unwrap_or(50);
    let state = plane_superposition(k, p, &grid)?;
    let cfg = SchemeConfig::new(&grid, 0.0, Splitting::Strang)?;
    let history = evolve_with_policy(&state, &Potential::zero(grid), steps, cfg, stride, BoundaryPolicy::Truncate)?;
    let file = File::create(dir.join("density.csv"))?;
    write_density_csv(&history, BufWriter::new(file), 1)?;

    save_report(&dir, &checks, &scalars)?;
    Ok(checks.iter().all(|c| c.pass))
}

fn characteristics(common: &Common, samples: usize, seed: u64) -> Result<bool> {
    let dir = out_dir(common, "out/characteristics")?;
    let checks = vec![
        determinant_identity_check(samples, seed),
        lightlike_determinant_check(samples, seed),
    ];
    save_report(&dir, &checks, &[("samples".to_string(), samples as f64)])?;
    Ok(checks.iter().all(|c| c.pass))
}

fn sweep(common: &Common, parameter: SweepParameter, values: &[f64]) -> Result<bool> {
    let config = load_config(common, None)?;
    let dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&dir)?;
    let mut checks = Vec::new();
    let mut scalars = Vec::new();
    let mut failed_runs = 0;
    for (i, (value, run)) in values.iter().zip(run_sweep(&config, parameter, values)).enumerate() {
        scalars.push((format!("run{i}.value"), *value));
        match run {
            Ok(report) => {
                for c in report.checks {
                    checks.push(CausalityReport {
                        name: format!("run{i}.{}", c.name),
                        ..c
                    });
                }
                scalars.extend(report.scalars.into_iter().map(|(k, v)| (format!("run{i}.{k}"), v)));
            }
            Err(e) => {
                eprintln!("run {i} ({value}): {e}");
                failed_runs += 1;
            }
        }
    }
    save_report(&dir, &checks, &scalars)?;
    Ok(failed_runs == 0 && checks.iter().all(|c| c.pass))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(common) => experiment(&load_config(&common, None)?, true),
        Command::Verify(common) => {
            let config = load_config(&common, None)?;
            if config.checks.is_empty() {
                bail!("no checks requested; pass --check or list [[checks]] in the config");
            }
            experiment(&config, false)
        }
        Command::Dumont { common, v0 } => {
            let config = load_config(&common, Some(ExperimentConfig::dumont(v0)))?;
            if config.dumont.is_none() {
                bail!("the configuration has no [dumont] section");
            }
            experiment(&config, true)
        }
        Command::Fringe {
            common,
            k,
            p,
            cells,
            half_width,
            steps,
        } => fringe(&common, k, p, cells, half_width, steps),
        Command::Characteristics { common, samples, seed } => characteristics(&common, samples, seed),
        Command::Sweep {
            common,
            parameter,
            values,
        } => sweep(&common, parameter, &values),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
