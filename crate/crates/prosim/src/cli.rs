use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use prosim_core::conditioning::condition;
use prosim_core::estimation::{estimate_stiffness_multi, reference_pair};
use prosim_core::fatigue::PairCompensator;
use prosim_core::plant::{
    characterize_position, characterize_stiffness, summarize, CharacterizationConfig, ObjectKind, ObjectModel,
    ProbeProfile,
};
use prosim_core::session::{builtin_script, simulate_grasp, BUILTIN_SCRIPTS};
use prosim_core::synth::{generate, ActivationProfile};
use prosim_core::{CalibrationProfile, CharacterizationResult, Conditioner};

use crate::calibration::{calibrate, TorqueProtocol};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::fatigue_fit::{fit_recording, DEFAULT_BIN_S};
use crate::io::{self, num};
use crate::server::{serve, ServerContext};
use crate::svg::{line_plot, Series};

/// Fingertip stiffness targets of the stiffness sweep, N/mm.
pub const STIFFNESS_TARGETS: [f64; 5] = [0.091, 0.12, 0.16, 0.3, 1.7];
/// Fingertip stiffness held during the position sweep, N/mm.
pub const POSITION_HOLD_TARGET: f64 = 0.165;
pub const POSITION_TARGETS_DEG: [f64; 3] = [0.0, 30.0, 60.0];

#[derive(Debug, Parser)]
#[command(name = "prosim", version, about = "sEMG tele-impedance prosthetic hand simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML or JSON run configuration.
    #[arg(long, global = true, env = "PROSIM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the synthetic-signal seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Stiffness,
    Position,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a raw recording from an activation profile (writes semg.csv).
    Synth { profile: PathBuf },
    /// Condition a raw recording into normalized envelopes (writes envelopes.csv).
    Condition { recording: PathBuf },
    /// Fit the stiffness model to loaded trials (writes calibration.json).
    Calibrate { recording: PathBuf, protocol: PathBuf },
    /// Stiffness and position references for a recording (writes references.csv).
    Estimate {
        recording: PathBuf,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Fit a fatigue model to sustained contractions (writes fatigue.json).
    FatigueFit {
        recording: PathBuf,
        /// RMS bin length in contraction seconds.
        #[arg(long, default_value_t = DEFAULT_BIN_S)]
        bin_s: f64,
    },
    /// Force-deflection characterization of the finger.
    Characterize {
        #[arg(long, value_enum, default_value = "stiffness")]
        mode: Mode,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Sensor noise as a fraction of peak deflection and force.
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        /// Also write force_deflection.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Scripted grasp against a virtual object (writes telemetry.jsonl, summary.json).
    Simulate {
        #[arg(long)]
        scenario: String,
        /// Built-in script name or a profile JSON path.
        #[arg(long, default_value = "gentle")]
        script: String,
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Take activations from a live client instead of a script.
        #[arg(long)]
        live: bool,
        #[arg(long, default_value_t = 8765)]
        port: u16,
    },
    /// Real-time simulation server.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "free")]
        scenario: String,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
}

impl Ctx {
    fn new(common: &Common) -> CliResult<Self> {
        let cfg = RunConfig::resolve(common.config.as_deref())?.with_seed(common.seed);
        let out = common
            .out
            .clone()
            .or_else(|| cfg.paths.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            seed: cfg.synth.seed,
            cfg,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn profile(&self, explicit: Option<&Path>) -> CliResult<Option<CalibrationProfile>> {
        match explicit.or(self.cfg.paths.calibration.as_deref()) {
            Some(p) => {
                let profile: CalibrationProfile = io::read_json(p)?;
                profile.validate().map_err(|e| CliError::read(p, e))?;
                Ok(Some(profile))
            }
            None => Ok(None),
        }
    }

    fn profile_or_nominal(&self, explicit: Option<&Path>) -> CliResult<CalibrationProfile> {
        match self.profile(explicit)? {
            Some(p) => Ok(p),
            None => Ok(self.cfg.session_config().nominal_profile()?),
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let ctx = Ctx::new(&cli.common)?;
    match cli.command {
        Command::Synth { profile } => synth(&ctx, &profile),
        Command::Condition { recording } => condition_cmd(&ctx, &recording),
        Command::Calibrate { recording, protocol } => calibrate_cmd(&ctx, &recording, &protocol),
        Command::Estimate { recording, calibration } => estimate(&ctx, &recording, calibration.as_deref()),
        Command::FatigueFit { recording, bin_s } => fatigue_fit(&ctx, &recording, bin_s),
        Command::Characterize {
            mode,
            trials,
            noise,
            svg,
        } => characterize(&ctx, mode, trials, noise, svg),
        Command::Simulate {
            scenario,
            script,
            calibration,
            live,
            port,
        } => {
            let kind: ObjectKind = scenario.parse()?;
            if live {
                serve_cmd(&ctx, port, kind, calibration.as_deref())
            } else {
                simulate(&ctx, kind, &script, calibration.as_deref())
            }
        }
        Command::Serve {
            port,
            scenario,
            calibration,
        } => serve_cmd(&ctx, port, scenario.parse()?, calibration.as_deref()),
    }
}

fn synth(ctx: &Ctx, profile_path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(profile_path).map_err(|e| CliError::read(profile_path, e))?;
    let profile = ActivationProfile::from_json(&text).map_err(|e| CliError::read(profile_path, e))?;
    let frames = generate(&profile, &ctx.cfg.synth, &ctx.cfg.pipeline)?;
    io::write_recording(&ctx.path("semg.csv"), &frames)
}

fn condition_cmd(ctx: &Ctx, recording: &Path) -> CliResult<()> {
    let frames = io::read_recording(recording)?;
    let samples = condition(&frames, &ctx.cfg.pipeline)?;
    io::write_envelopes(&ctx.path("envelopes.csv"), &samples)
}

fn calibrate_cmd(ctx: &Ctx, recording: &Path, protocol_path: &Path) -> CliResult<()> {
    let protocol: TorqueProtocol = io::read_json(protocol_path)?;
    let frames = io::read_recording(recording)?;
    let (profile, report) = calibrate(&frames, &protocol, &ctx.cfg.pipeline, &ctx.cfg.finger)?;
    io::write_json(&ctx.path("calibration.json"), &profile)?;
    io::write_json(&ctx.path("calibration_report.json"), &report)
}

fn estimate(ctx: &Ctx, recording: &Path, calibration: Option<&Path>) -> CliResult<()> {
    let profile = ctx
        .profile(calibration)?
        .ok_or_else(|| CliError::input("estimate needs --calibration or paths.calibration"))?;
    estimate_stiffness_multi(&[0.0], &[0.0], &profile)?;
    let frames = io::read_recording(recording)?;
    let pipeline = prosim_core::conditioning::PipelineConfig {
        mvc: profile.mvc,
        bias: profile.bias,
        ..ctx.cfg.pipeline.clone()
    };
    let mut conditioner = Conditioner::new(pipeline.clone())?;
    let model = profile.fatigue.unwrap_or_default();
    let mut compensator = PairCompensator::new(&ctx.cfg.fatigue, model, model)?;
    let dt = 1.0 / pipeline.fs_hz;
    let mut rows = Vec::with_capacity(frames.len());
    for f in &frames {
        if let Some(s) = conditioner.push(f)? {
            let c_fi = compensator.push(s.envelope.biceps, s.envelope.triceps, dt);
            let r = reference_pair(&s, &profile, c_fi);
            rows.push(vec![
                num(s.t_ms),
                num(r.s_imcj),
                num(r.s_ref),
                num(r.theta_ref),
                num(c_fi),
            ]);
        }
    }
    io::write_table(
        &ctx.path("references.csv"),
        &["t_ms", "s_imcj", "s_ref", "theta_ref", "c_fi"],
        rows,
    )
}

fn fatigue_fit(ctx: &Ctx, recording: &Path, bin_s: f64) -> CliResult<()> {
    let frames = io::read_recording(recording)?;
    let report = fit_recording(&frames, &ctx.cfg.pipeline, &ctx.cfg.fatigue, bin_s)?;
    io::write_json(&ctx.path("fatigue.json"), &report)
}

#[derive(Serialize)]
struct LevelReport {
    level: f64,
    /// Fingertip stiffness target (stiffness mode) or flexion in degrees (position mode).
    target: f64,
    trials: usize,
    mean_slope: f64,
    min_slope: f64,
    max_slope: f64,
    mean_r_squared: f64,
    min_r_squared: f64,
    samples_per_trial: usize,
    truncated: bool,
}

#[derive(Serialize)]
struct CharacterizationReport {
    mode: &'static str,
    tip_gain: f64,
    hold_stiffness: Option<f64>,
    noise_fraction: f64,
    seed: u64,
    probe: ProbeProfile<f64>,
    levels: Vec<LevelReport>,
}

fn characterize(ctx: &Ctx, mode: Mode, trials: usize, noise: f64, svg: bool) -> CliResult<()> {
    let plant = ctx.cfg.plant_config();
    plant.validate()?;
    if !(noise >= 0.0) {
        return Err(CliError::input("--noise must be non-negative"));
    }
    let finger = plant.finger;
    let ccfg = CharacterizationConfig {
        trials,
        noise_fraction: noise,
        seed: ctx.seed,
        ..Default::default()
    };
    let (results, targets, probe, hold, name): (Vec<CharacterizationResult>, Vec<f64>, _, _, _) = match mode {
        Mode::Stiffness => {
            let probe = ProbeProfile::stiffness_default();
            let levels: Vec<f64> = STIFFNESS_TARGETS.iter().map(|&k| finger.joint_stiffness(k)).collect();
            let r = characterize_stiffness(&plant, &levels, &probe, &ccfg)?;
            (r, STIFFNESS_TARGETS.to_vec(), probe, None, "stiffness")
        }
        Mode::Position => {
            let probe = ProbeProfile::position_default();
            let hold = finger.joint_stiffness(POSITION_HOLD_TARGET);
            let pos: Vec<f64> = POSITION_TARGETS_DEG.iter().map(|d| d.to_radians()).collect();
            let r = characterize_position(&plant, &pos, hold, &probe, &ccfg)?;
            (r, POSITION_TARGETS_DEG.to_vec(), probe, Some(hold), "position")
        }
    };
    let summary = summarize(&results);
    let levels = summary
        .iter()
        .zip(&targets)
        .map(|(s, &target)| LevelReport {
            level: s.level,
            target,
            trials: s.trials,
            mean_slope: s.mean_slope,
            min_slope: s.min_slope,
            max_slope: s.max_slope,
            mean_r_squared: s.mean_r_squared,
            min_r_squared: s.min_r_squared,
            samples_per_trial: results.iter().find(|r| r.level == s.level).map_or(0, |r| r.n),
            truncated: s.truncated,
        })
        .collect();
    let report = CharacterizationReport {
        mode: name,
        tip_gain: finger.tip_gain(),
        hold_stiffness: hold,
        noise_fraction: noise,
        seed: ctx.seed,
        probe,
        levels,
    };
    io::write_json(&ctx.path("summary.json"), &report)?;
    io::write_table(
        &ctx.path("fits.csv"),
        &[
            "level",
            "trial",
            "slope_n_per_mm",
            "intercept_n",
            "r_squared",
            "n",
            "truncated",
        ],
        results.iter().map(|r| {
            vec![
                num(r.level),
                r.trial.to_string(),
                num(r.slope),
                num(r.intercept),
                num(r.r_squared),
                r.n.to_string(),
                r.truncated.to_string(),
            ]
        }),
    )?;
    io::write_table(
        &ctx.path("samples.csv"),
        &["level", "trial", "deflection_mm", "force_n"],
        results.iter().flat_map(|r| {
            r.pairs
                .iter()
                .map(move |&(d, f)| vec![num(r.level), r.trial.to_string(), num(d), num(f)])
        }),
    )?;
    if svg {
        let series: Vec<Series> = results
            .iter()
            .filter(|r| r.trial == 0)
            .zip(&targets)
            .map(|(r, t)| Series {
                label: format!("{t} (fit {:.3} N/mm)", r.slope),
                points: &r.pairs,
            })
            .collect();
        let plot = line_plot("Force vs deflection", "deflection (mm)", "force (N)", &series);
        io::write_atomic(&ctx.path("force_deflection.svg"), plot.as_bytes())?;
    }
    Ok(())
}

fn load_script(name: &str) -> CliResult<ActivationProfile> {
    if BUILTIN_SCRIPTS.contains(&name) {
        return Ok(builtin_script(name)?);
    }
    let path = Path::new(name);
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::input(format!(
            "script '{name}' is neither built in ({}) nor readable: {e}",
            BUILTIN_SCRIPTS.join(", ")
        ))
    })?;
    ActivationProfile::from_json(&text).map_err(|e| CliError::read(path, e))
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    scenario: ObjectKind,
    script: &'a str,
    seed: u64,
    outcome: prosim_core::plant::GraspStatus,
    peak_force: f64,
    duration_s: f64,
    ticks: usize,
}

fn simulate(ctx: &Ctx, kind: ObjectKind, script_name: &str, calibration: Option<&Path>) -> CliResult<()> {
    let script = load_script(script_name)?;
    let cfg = ctx.cfg.session_config();
    let profile = ctx.profile_or_nominal(calibration)?;
    let trial = simulate_grasp(&cfg, &profile, ObjectModel::preset(kind), &script)?;
    io::write_jsonl(&ctx.path("telemetry.jsonl"), &trial.telemetry)?;
    io::write_json(
        &ctx.path("summary.json"),
        &SimulationSummary {
            scenario: kind,
            script: script_name,
            seed: ctx.seed,
            outcome: trial.outcome,
            peak_force: trial.peak_force,
            duration_s: trial.duration_s,
            ticks: trial.telemetry.len(),
        },
    )
}

fn serve_cmd(ctx: &Ctx, port: u16, kind: ObjectKind, calibration: Option<&Path>) -> CliResult<()> {
    let profile = ctx.profile_or_nominal(calibration)?;
    let server = ServerContext::new(ctx.cfg.session_config(), profile, kind)?;
    let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, port));
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::output(format!("runtime: {e}")))?;
    rt.block_on(serve(addr, server))
        .map_err(|e| CliError::input(format!("cannot serve on port {port}: {e}")))
}
