//! Experiment configuration files.
//!
//! A config is a TOML document with a strict schema: unknown keys are
//! rejected and every field is checked before anything runs.
//!
//! ```toml
//! protocol = "rb_qutrit"
//! depths = [2, 8, 32, 128, 512]
//! sequences = 30
//! shots = 2000
//! seed = 7
//!
//! [noise]
//! preset = "depolarizing"
//! ```

use std::path::{Path, PathBuf};

use qutrit_rb::noise::preset;
use qutrit_rb::protocols::{Basis, CbExperimentPlan, CycleGate, InterleavedGate, RbExperimentPlan, RbVariant};
use qutrit_rb::{LevelPair, NoiseModel};
use serde::Deserialize;

use crate::CliError;

/// Fewest depths a decay fit accepts.
pub const MIN_DEPTHS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    RbQubitLike,
    RbQutrit,
    RbInterleaved,
    RbSimultaneous,
    CycleBenchmarking,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::RbQubitLike => "rb_qubit_like",
            Protocol::RbQutrit => "rb_qutrit",
            Protocol::RbInterleaved => "rb_interleaved",
            Protocol::RbSimultaneous => "rb_simultaneous",
            Protocol::CycleBenchmarking => "cycle_benchmarking",
        }
    }
}

/// Where the noise model comes from. Exactly one field must be set.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSource {
    pub preset: Option<String>,
    /// JSON or TOML file holding a noise model, relative to the config file.
    pub file: Option<PathBuf>,
    pub model: Option<NoiseModel>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub depths: Vec<usize>,
    /// Sequences per depth (RB) or randomizations per depth (CB).
    pub sequences: usize,
    pub shots: u64,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseSource,
    pub output_dir: Option<PathBuf>,

    /// `rb_qubit_like`: driven pair, `"01"`, `"12"` or `"02"`.
    pub subspace: Option<LevelPair>,
    /// `rb_interleaved`: `identity`, `x_pi_01`, `x_pi_12`, `hadamard`, or a table index.
    pub interleaved_gate: Option<GateChoice>,
    /// `rb_simultaneous`: number of qutrits (default 2).
    pub qutrits: Option<usize>,
    /// `cycle_benchmarking`: `identity` or `csum`.
    pub cycle: Option<CycleGate>,
    /// `cycle_benchmarking`: explicit basis settings, e.g. `[["Z", "X"]]`.
    pub basis_settings: Option<Vec<Vec<Basis>>>,
    #[serde(default)]
    pub compile_basis_changes: bool,
    /// Adds bootstrap uncertainties on `p` (200 resamples over sequences).
    #[serde(default)]
    pub bootstrap: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GateChoice {
    Index(usize),
    Named(String),
}

impl GateChoice {
    fn resolve(&self) -> Result<InterleavedGate, String> {
        match self {
            GateChoice::Index(i) => Ok(InterleavedGate::Index(*i)),
            GateChoice::Named(name) => match name.as_str() {
                "identity" => Ok(InterleavedGate::Identity),
                "x_pi_01" => Ok(InterleavedGate::XPi01),
                "x_pi_12" => Ok(InterleavedGate::XPi12),
                "hadamard" => Ok(InterleavedGate::Hadamard),
                other => Err(format!("unknown interleaved gate {other:?}")),
            },
        }
    }
}

pub enum Plan {
    Rb(RbExperimentPlan),
    Cb(CbExperimentPlan),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(e.to_string()))?;
        Ok((Self::parse(text)?, bytes))
    }

    fn forbid<T>(&self, field: &Option<T>, name: &str, allowed: &str) -> Result<(), CliError> {
        if field.is_some() {
            return Err(CliError::Config(format!(
                "`{name}` is only valid for {allowed}, not {}",
                self.protocol.name()
            )));
        }
        Ok(())
    }

    /// Checks the schema constraints and builds the experiment plan.
    pub fn plan(&self) -> Result<Plan, CliError> {
        let cfg = |m: String| CliError::Config(m);
        if self.depths.len() < MIN_DEPTHS {
            return Err(cfg(format!(
                "at least {MIN_DEPTHS} depths are needed for fitting, got {}",
                self.depths.len()
            )));
        }
        if self.protocol != Protocol::RbQubitLike {
            self.forbid(&self.subspace, "subspace", "rb_qubit_like")?;
        }
        if self.protocol != Protocol::RbInterleaved {
            self.forbid(&self.interleaved_gate, "interleaved_gate", "rb_interleaved")?;
        }
        if self.protocol != Protocol::RbSimultaneous {
            self.forbid(&self.qutrits, "qutrits", "rb_simultaneous")?;
        }
        if self.protocol != Protocol::CycleBenchmarking {
            self.forbid(&self.cycle, "cycle", "cycle_benchmarking")?;
            self.forbid(&self.basis_settings, "basis_settings", "cycle_benchmarking")?;
            if self.compile_basis_changes {
                return Err(cfg("`compile_basis_changes` is only valid for cycle_benchmarking".into()));
            }
        }
        let rb = |variant| {
            let plan = RbExperimentPlan {
                variant,
                depths: self.depths.clone(),
                sequences_per_depth: self.sequences,
                shots: self.shots,
                master_seed: self.seed,
            };
            plan.validate().map_err(|e| cfg(e.to_string()))?;
            Ok(Plan::Rb(plan))
        };
        match self.protocol {
            Protocol::RbQutrit => rb(RbVariant::Qutrit),
            Protocol::RbQubitLike => rb(RbVariant::QubitLike {
                subspace: self.subspace.ok_or_else(|| cfg("rb_qubit_like needs `subspace`".into()))?,
            }),
            Protocol::RbInterleaved => rb(RbVariant::Interleaved {
                gate: self
                    .interleaved_gate
                    .as_ref()
                    .ok_or_else(|| cfg("rb_interleaved needs `interleaved_gate`".into()))?
                    .resolve()
                    .map_err(cfg)?,
            }),
            Protocol::RbSimultaneous => rb(RbVariant::Simultaneous { qutrits: self.qutrits.unwrap_or(2) }),
            Protocol::CycleBenchmarking => {
                let cycle = self.cycle.clone().ok_or_else(|| cfg("cycle_benchmarking needs `cycle`".into()))?;
                let mut plan = CbExperimentPlan::new(cycle, 2, self.shots, self.seed);
                plan.depths = self.depths.clone();
                plan.randomizations_per_depth = self.sequences;
                plan.basis_settings = self.basis_settings.clone().unwrap_or_default();
                plan.compile_basis_changes = self.compile_basis_changes;
                plan.validate().map_err(|e| cfg(e.to_string()))?;
                Ok(Plan::Cb(plan))
            }
        }
    }

    /// Resolves the noise model. Relative file paths are taken from `base`.
    pub fn noise_model(&self, base: &Path) -> Result<NoiseModel, CliError> {
        let cfg = |m: String| CliError::Config(m);
        let n = &self.noise;
        let set = [n.preset.is_some(), n.file.is_some(), n.model.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        let model = match set {
            0 => NoiseModel::noiseless(),
            1 => {
                if let Some(name) = &n.preset {
                    preset(name).ok_or_else(|| cfg(format!("unknown noise preset {name:?}")))?
                } else if let Some(file) = &n.file {
                    let path = base.join(file);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| cfg(format!("{}: {e}", path.display())))?;
                    if path.extension().is_some_and(|e| e == "json") {
                        serde_json::from_str(&text).map_err(|e| cfg(format!("{}: {e}", path.display())))?
                    } else {
                        toml::from_str(&text).map_err(|e| cfg(format!("{}: {e}", path.display())))?
                    }
                } else {
                    n.model.clone().expect("counted above")
                }
            }
            _ => return Err(cfg("set only one of noise.preset, noise.file, noise.model".into())),
        };
        model.validate().map_err(|e| cfg(e.to_string()))?;
        Ok(model)
    }
}
