//! Run configuration: one TOML (or JSON) file with a section per subsystem.
//! Every section and key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use prosim_core::conditioning::PipelineConfig;
use prosim_core::fatigue::FatigueConfig;
use prosim_core::synth::ArtifactSpec;
use prosim_core::PlantConfig;
use prosim_core::{FingerModel, MotorModel, PdGains, SessionConfig, VsaParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSettings {
    pub command_hold_s: f64,
    pub decay_tau_s: f64,
    pub lift_delay_s: f64,
}

impl Default for SessionSettings {
    fn default() -> Self {
        let d = SessionConfig::default();
        Self {
            command_hold_s: d.command_hold_s,
            decay_tau_s: d.decay_tau_s,
            lift_delay_s: d.plant.lift_delay_s,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Calibration profile used by `estimate`, `simulate` and `serve`.
    pub calibration: Option<PathBuf>,
    /// Output directory when `--out` is not given.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub vsa: VsaParams,
    pub pd: PdGains,
    pub motor: MotorModel,
    pub fatigue: FatigueConfig,
    pub finger: FingerModel,
    pub synth: ArtifactSpec,
    pub session: SessionSettings,
    pub paths: Paths,
}

impl RunConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML. Relative
    /// paths inside the file resolve against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::read(path, e))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::read(path, e))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.paths.calibration, &mut cfg.paths.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when no file is given.
    pub fn resolve(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.session_config().validate()?;
        Ok(())
    }

    pub fn plant_config(&self) -> PlantConfig {
        PlantConfig {
            vsa: self.vsa,
            pd: self.pd,
            motor: self.motor,
            finger: self.finger,
            lift_delay_s: self.session.lift_delay_s,
        }
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            pipeline: self.pipeline.clone(),
            fatigue: self.fatigue,
            plant: self.plant_config(),
            artifacts: self.synth.clone(),
            command_hold_s: self.session.command_hold_s,
            decay_tau_s: self.session.decay_tau_s,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.synth.seed = s;
        }
        self
    }
}
