//! Experiment configuration files.
//!
//! Configurations are TOML documents. Every table maps to one struct below;
//! unknown keys are rejected so typos surface as errors rather than silently
//! falling back to defaults. `dt` is not configurable: it always equals the
//! cell width.

use serde::{Deserialize, Serialize};

use crate::causality::DEFAULT_BASIS_CAP;
use crate::dynamics::{perturb_potential, rectangular_barrier, Potential, SchemeConfig, Splitting};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, GridSpec};
use crate::state::PacketSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for randomised checks (determinant samples, property sweeps).
    #[serde(default)]
    pub seed: u64,
    /// Keep every `stride`-th step in the history.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    pub grid: GridSpec,
    pub packet: PacketSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dumont: Option<DumontSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

fn default_stride() -> usize {
    1
}

fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<PerturbationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub v0: f64,
    pub z_on: f64,
    pub z_off: f64,
    #[serde(default)]
    pub smoothing: f64,
}

/// `dv` added on cells in `region` during `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub region: [f64; 2],
    pub window: [f64; 2],
    pub dv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    #[serde(default)]
    pub splitting: Splitting,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write `density.csv`.
    #[serde(default = "yes")]
    pub csv: bool,
    /// Keep every `cell_stride`-th cell in `density.csv`.
    #[serde(default = "default_stride")]
    pub cell_stride: usize,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            csv: true,
            cell_stride: 1,
        }
    }
}

/// Tunnelling-time analysis of a barrier on `[0, barrier_length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumontSpec {
    pub barrier_length: f64,
    /// Arrival is declared once `P(z > L)` reaches this fraction of the
    /// final transmitted probability.
    #[serde(default = "default_fraction")]
    pub threshold_fraction: f64,
    /// An externally quoted cut point whose tail probability is reported
    /// alongside the measured one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_q: Option<f64>,
}

fn default_fraction() -> f64 {
    0.1
}

fn default_cap() -> usize {
    DEFAULT_BASIS_CAP
}

/// A causality check and its parameters, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Lightcone,
    CausalInequality {
        q: f64,
    },
    CausalInequalitySweep,
    TunnelingBound {
        length: f64,
        t_max: f64,
    },
    Decomposition {
        q: f64,
    },
    OperatorIdentity {
        q: f64,
        n_steps: usize,
        #[serde(default = "default_cap")]
        max_cells: usize,
    },
    Signalling {
        region: [f64; 2],
        window: [f64; 2],
        dv: f64,
        observer: [f64; 2],
    },
    CurrentTimelike,
    Conservation,
}

pub const CHECK_NAMES: [&str; 9] = [
    "lightcone",
    "causal_inequality",
    "causal_inequality_sweep",
    "tunneling_bound",
    "decomposition",
    "operator_identity",
    "signalling",
    "current_timelike",
    "conservation",
];

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Lightcone => "lightcone",
            CheckSpec::CausalInequality { .. } => "causal_inequality",
            CheckSpec::CausalInequalitySweep => "causal_inequality_sweep",
            CheckSpec::TunnelingBound { .. } => "tunneling_bound",
            CheckSpec::Decomposition { .. } => "decomposition",
            CheckSpec::OperatorIdentity { .. } => "operator_identity",
            CheckSpec::Signalling { .. } => "signalling",
            CheckSpec::CurrentTimelike => "current_timelike",
            CheckSpec::Conservation => "conservation",
        }
    }

    /// Parameters derived from `config` for a check requested by name only.
    /// Cut points default to the left barrier edge (or `z = 0`).
    pub fn default_for(name: &str, config: &ExperimentConfig) -> Result<CheckSpec> {
        let barrier = config.potential.barrier.as_ref();
        let q = barrier.map_or(0.0, |b| b.z_on);
        let dz = (config.grid.z_max - config.grid.z_min) / config.grid.n_cells as f64;
        Ok(match name {
            "lightcone" => CheckSpec::Lightcone,
            "causal_inequality" => CheckSpec::CausalInequality { q },
            "causal_inequality_sweep" => CheckSpec::CausalInequalitySweep,
            "tunneling_bound" => {
                let b = barrier.ok_or_else(|| Error::Config("tunneling_bound needs a barrier".into()))?;
                let length = b.z_off - b.z_on;
                CheckSpec::TunnelingBound {
                    length,
                    t_max: length - dz,
                }
            }
            "decomposition" => CheckSpec::Decomposition { q },
            "operator_identity" => CheckSpec::OperatorIdentity {
                q,
                n_steps: config.scheme.n_steps.min(64),
                max_cells: DEFAULT_BASIS_CAP,
            },
            "current_timelike" => CheckSpec::CurrentTimelike,
            "conservation" => CheckSpec::Conservation,
            "signalling" => {
                return Err(Error::Config(
                    "signalling needs region, window, dv and observer; list it under [[checks]]".into(),
                ))
            }
            other => return Err(Error::Config(format!("unknown check `{other}`"))),
        })
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.z_min, self.grid.z_max, self.grid.n_cells)
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        SchemeConfig::new(&self.grid()?, self.packet.mass, self.scheme.splitting)
    }

    /// Static barrier plus every configured perturbation.
    pub fn potential(&self) -> Result<Potential> {
        let grid = self.grid()?;
        let mut pot = match &self.potential.barrier {
            Some(b) => rectangular_barrier(&grid, b.v0, b.z_on, b.z_off, b.smoothing)?,
            None => Potential::zero(grid),
        };
        for p in &self.potential.perturbations {
            pot = perturb_potential(&pot, p.region, p.window, p.dv)?;
        }
        Ok(pot)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.packet.validate()?;
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        if self.output.cell_stride == 0 {
            return Err(Error::Config("output.cell_stride must be >= 1".into()));
        }
        self.potential()?;
        let inside = |what: &str, z: f64| -> Result<()> {
            if grid.contains(z) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} = {z} lies outside the grid")))
            }
        };
        if let Some(d) = &self.dumont {
            if !(d.barrier_length > 0.0) {
                return Err(Error::Config("dumont.barrier_length must be > 0".into()));
            }
            inside("dumont.barrier_length", d.barrier_length)?;
            if !(d.threshold_fraction > 0.0 && d.threshold_fraction <= 1.0) {
                return Err(Error::Config("dumont.threshold_fraction must be in (0, 1]".into()));
            }
            if let Some(q) = d.reference_q {
                inside("dumont.reference_q", q)?;
            }
        }
        for check in &self.checks {
            match check {
                CheckSpec::CausalInequality { q } | CheckSpec::Decomposition { q } => inside("q", *q)?,
                CheckSpec::OperatorIdentity { q, .. } => inside("q", *q)?,
                CheckSpec::TunnelingBound { length, t_max } => {
                    inside("length", *length)?;
                    inside("z = 0", 0.0)?;
                    if !(t_max < length) {
                        return Err(Error::Config("tunneling_bound needs t_max < length".into()));
                    }
                }
                CheckSpec::Signalling {
                    region,
                    window,
                    dv,
                    observer,
                } => {
                    inside("observer", observer[0])?;
                    inside("observer", observer[1])?;
                    if !(observer[0] < observer[1] && region[0] <= region[1] && window[0] <= window[1])
                        || !dv.is_finite()
                    {
                        return Err(Error::Config("malformed signalling check".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The tunnelling setup used for the reproduction: a Gaussian centred at
    /// `z0 = -120` with density width 15 approaching a barrier on `[0, 15]`,
    /// in units where the particle mass is 1.
    pub fn dumont(v0: f64) -> Self {
        ExperimentConfig {
            seed: 0,
            stride: 40,
            out_dir: "out/dumont".into(),
            grid: GridSpec {
                z_min: -400.0,
                z_max: 200.0,
                n_cells: 12_000,
            },
            packet: PacketSpec::gaussian(-120.0, 15.0, 1.0, 1.0),
            potential: PotentialSpec {
                barrier: Some(BarrierSpec {
                    v0,
                    z_on: 0.0,
                    z_off: 15.0,
                    smoothing: 0.0,
                }),
                perturbations: Vec::new(),
            },
            scheme: SchemeSpec {
                splitting: Splitting::Strang,
                n_steps: 6000,
            },
            output: OutputSpec {
                csv: true,
                cell_stride: 10,
            },
            dumont: Some(DumontSpec {
                barrier_length: 15.0,
                threshold_fraction: 0.1,
                reference_q: Some(-95.0),
            }),
            checks: vec![
                CheckSpec::CausalInequalitySweep,
                CheckSpec::CurrentTimelike,
                CheckSpec::Conservation,
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
stride = 5
out_dir = "out/sample"

[grid]
z_min = -60.0
z_max = 60.0
n_cells = 2400

[packet]
kind = "compact_bump"
k0 = 1.0
mass = 1.0
support = [-20.0, -5.0]

[potential.barrier]
v0 = 5.0
z_on = 0.0
z_off = 10.0

[[potential.perturbations]]
region = [-50.0, -45.0]
window = [0.0, 5.0]
dv = 2.0

[scheme]
splitting = "strang"
n_steps = 400

[[checks]]
name = "lightcone"

[[checks]]
name = "causal_inequality"
q = -5.0

[[checks]]
name = "tunneling_bound"
length = 10.0
t_max = 9.5
"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.stride, 5);
        assert_eq!(c.checks.len(), 3);
        assert_eq!(c.checks[1], CheckSpec::CausalInequality { q: -5.0 });
        assert_eq!(c.scheme.splitting, Splitting::Strang);
        assert!(c.output.csv);
        let pot = c.potential().unwrap();
        assert_eq!(pot.epochs().len(), 2);
    }

    #[test]
    fn round_trips() {
        for c in [ExperimentConfig::from_toml_str(SAMPLE).unwrap(), ExperimentConfig::dumont(5.0)] {
            let text = c.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let typo = SAMPLE.replace("n_steps = 400", "n_step = 400");
        assert!(ExperimentConfig::from_toml_str(&typo).is_err());
        let bad = SAMPLE.replace("n_cells = 2400", "n_cells = 1");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let outside = SAMPLE.replace("q = -5.0", "q = -500.0");
        assert!(ExperimentConfig::from_toml_str(&outside).is_err());
        let unknown_check = SAMPLE.replace("name = \"lightcone\"", "name = \"warp_drive\"");
        assert!(ExperimentConfig::from_toml_str(&unknown_check).is_err());
    }

    #[test]
    fn defaults_for_named_checks() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        for name in CHECK_NAMES {
            let spec = CheckSpec::default_for(name, &c);
            if name == "signalling" {
                assert!(spec.is_err());
            } else {
                assert_eq!(spec.unwrap().name(), name);
            }
        }
        assert!(CheckSpec::default_for("nope", &c).is_err());
    }
}
