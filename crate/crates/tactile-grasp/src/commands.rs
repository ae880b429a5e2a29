//! The three commands: calibrate, simulate and bias-plot.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tactile_grasp_core::arm::JOINTS;
use tactile_grasp_core::calibration::{
    free_motion_sweep, generate_free_motion_dataset_per_joint, train_bias_model, BiasFunction, BiasSample, TrainReport,
};
use tactile_grasp_core::sim::{analyze, run_grasp, Scenario, SimLog};
use tactile_grasp_core::wrench::CHANNELS;

use crate::config::Config;
use crate::error::{exit, CliError};
use crate::files::{dataset_csv, simlog_csv, train_report_csv, write_atomic, ModelFile, Provenance};
use crate::svg::{Plot, Series, PALETTE};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Record of one command invocation, written after every other artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Config>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunManifest::from_toml(&text)
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_toml().as_bytes())
    }
}

/// Everything a calibration run produces.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub dataset: Vec<BiasSample>,
    pub model: ModelFile,
    pub report: TrainReport,
}

/// Free-motion sweep seeded with `seed`, sensor noise with `seed + 1`,
/// training with `seed`.
pub fn calibrate(cfg: &Config) -> Result<Calibration, CliError> {
    cfg.validate()?;
    let c = &cfg.calibration;
    let truth = cfg.bias.spec();
    let train = cfg.train_config()?;
    let noise_seed = c.seed.wrapping_add(1);
    let sweep = free_motion_sweep(c.points, c.sweep_dt, c.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let dataset = generate_free_motion_dataset_per_joint(&truth, &sweep, &c.noise_sigma, noise_seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (model, report) = train_bias_model(&dataset, &train).map_err(CliError::training)?;
    let provenance = Provenance {
        bias: truth,
        noise_sigma: c.noise_sigma,
        points: c.points,
        sweep_dt: c.sweep_dt,
        sweep_seed: c.seed,
        noise_seed,
        train,
    };
    Ok(Calibration { dataset, model: ModelFile::new(model, provenance), report })
}

/// Regenerates the free-motion samples a model was trained on.
pub fn regenerate_dataset(p: &Provenance) -> Result<Vec<BiasSample>, CliError> {
    let sweep = free_motion_sweep(p.points, p.sweep_dt, p.sweep_seed).map_err(|e| CliError::Input(e.to_string()))?;
    generate_free_motion_dataset_per_joint(&p.bias, &sweep, &p.noise_sigma, p.noise_seed)
        .map_err(|e| CliError::Input(e.to_string()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

/// Refuses to write any output over one of the inputs.
fn guard_inputs(inputs: &[&Path], outputs: &[PathBuf]) -> Result<(), CliError> {
    for out in outputs {
        let Ok(o) = out.canonicalize() else { continue };
        for inp in inputs {
            if inp.canonicalize().is_ok_and(|i| i == o) {
                return Err(CliError::Input(format!("output {} would overwrite an input", out.display())));
            }
        }
    }
    Ok(())
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

/// `calibrate --config <path> --out <path> [--seed N]`.
pub fn cmd_calibrate(config: &Path, out: &Path, seed: Option<u64>) -> Result<u8, CliError> {
    let mut cfg = Config::load(config)?;
    if let Some(s) = seed {
        cfg.calibration.seed = s;
    }
    let train_path = sibling(out, "train.csv");
    let data_path = sibling(out, "dataset.csv");
    let manifest_path = sibling(out, "manifest.toml");
    let outputs = [out.to_path_buf(), train_path.clone(), data_path.clone(), manifest_path.clone()];
    guard_inputs(&[config], &outputs)?;

    let run = calibrate(&cfg)?;
    ensure_parent(out)?;
    run.model.save(out)?;
    write_atomic(&train_path, &train_report_csv(&run.report))?;
    write_atomic(&data_path, &dataset_csv(&run.dataset))?;
    for j in &run.report.joints {
        let sigma = cfg.calibration.noise_sigma[j.joint];
        println!("joint {}: held-out rmse {:.6} N·m (noise sigma {sigma})", j.joint, j.validation_rmse);
    }
    RunManifest {
        command: "calibrate".into(),
        version: VERSION.into(),
        seed: cfg.calibration.seed,
        inputs: vec![show(config)],
        artifacts: vec![show(out), show(&train_path), show(&data_path)],
        joint: None,
        config: Some(cfg),
    }
    .write(&manifest_path)?;
    Ok(exit::OK)
}

/// Key=value report of a run; falls back to the halt record when no step completed.
pub fn report_text(log: &SimLog, scenario: &Scenario) -> String {
    let mut text = match analyze(log, &scenario.params, &scenario.world) {
        Ok(r) => r.to_key_value(),
        Err(_) => format!(
            "samples=0\ngrasp_complete=false\ngrasp_time=none\nhalt_time={}\n",
            log.halt.as_ref().map_or("none".to_string(), |h| h.t.to_string())
        ),
    };
    if let Some(h) = &log.halt {
        text.push_str(&format!("halt_reason={}\n", h.error));
    }
    text
}

fn channel_plot(log: &SimLog, title: &str, unit: &str, channels: std::ops::Range<usize>) -> String {
    let lines = channels
        .map(|c| Series {
            name: format!("ee_{}", CHANNELS[c]),
            color: PALETTE[c % 3].into(),
            class: "channel".into(),
            points: log.records.iter().map(|r| (r.t, r.wrench.stacked()[c])).collect(),
        })
        .collect();
    Plot { title: title.into(), x_label: "time (s)".into(), y_label: unit.into(), lines, scatter: vec![] }.render()
}

/// `simulate --config <path> --model <path> --out-dir <path>`.
pub fn cmd_simulate(config: &Path, model: &Path, out_dir: &Path) -> Result<u8, CliError> {
    let cfg = Config::load(config)?;
    let scenario = cfg.scenario()?;
    let model_file = ModelFile::load(model)?;
    let paths = ["simlog.csv", "report.txt", "forces.svg", "torques.svg", "manifest.toml"].map(|n| out_dir.join(n));
    guard_inputs(&[config, model], &paths)?;
    let [log_path, report_path, forces_path, torques_path, manifest_path] = paths;

    let log = run_grasp(&scenario, &model_file.model).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write_atomic(&log_path, &simlog_csv(&log))?;
    let report = report_text(&log, &scenario);
    write_atomic(&report_path, report.as_bytes())?;
    write_atomic(&forces_path, channel_plot(&log, "End-effector forces", "force (N)", 0..3).as_bytes())?;
    write_atomic(&torques_path, channel_plot(&log, "End-effector torques", "torque (N·m)", 3..6).as_bytes())?;

    let code = if let Some(h) = &log.halt {
        eprintln!("run halted at t = {} s: {}", h.t, h.error);
        exit::SINGULAR
    } else if let Some(t) = log.grasp_complete_at {
        println!("grasp complete at t = {t} s");
        exit::OK
    } else {
        eprintln!("grasp did not complete within {} s", scenario.duration);
        exit::NOT_CONVERGED
    };
    RunManifest {
        command: "simulate".into(),
        version: VERSION.into(),
        seed: scenario.seed,
        inputs: vec![show(config), show(model)],
        artifacts: [&log_path, &report_path, &forces_path, &torques_path].map(|p| show(p)).to_vec(),
        joint: None,
        config: Some(cfg),
    }
    .write(&manifest_path)?;
    Ok(code)
}

/// Largest number of sample markers drawn; denser datasets are strided.
const MAX_SCATTER: usize = 1500;
const CURVE_POINTS: usize = 400;

/// Free-motion samples of one joint overlaid with the two direction branches of the model.
pub fn bias_plot_svg(model: &ModelFile, joint: usize) -> Result<String, CliError> {
    if joint >= JOINTS {
        return Err(CliError::Input(format!("joint must lie in 0..={}, got {joint}", JOINTS - 1)));
    }
    let samples: Vec<(f64, f64)> = regenerate_dataset(&model.provenance)?
        .into_iter()
        .filter(|s| s.joint == joint)
        .map(|s| (s.angle, s.torque))
        .collect();
    let stride = samples.len().div_ceil(MAX_SCATTER).max(1);
    let scatter = Series {
        name: "free-motion samples".into(),
        color: "#7f7f7f".into(),
        class: "samples".into(),
        points: samples.into_iter().step_by(stride).collect(),
    };
    let pi = std::f64::consts::PI;
    let curve = |direction: f64, color: &str| Series {
        name: format!("model, direction {direction:+}"),
        color: color.into(),
        class: "model-curve".into(),
        points: (0..=CURVE_POINTS)
            .map(|k| {
                let q = -pi + 2.0 * pi * k as f64 / CURVE_POINTS as f64;
                (q, model.model.bias(joint, q, direction))
            })
            .collect(),
    };
    Ok(Plot {
        title: format!("Joint {joint} bias: samples and fitted model"),
        x_label: "joint angle (rad)".into(),
        y_label: "bias torque (N·m)".into(),
        lines: vec![curve(1.0, PALETTE[0]), curve(-1.0, PALETTE[1])],
        scatter: vec![scatter],
    }
    .render())
}

/// `bias-plot --model <path> --joint <0-5> --out <path>`.
pub fn cmd_bias_plot(model: &Path, joint: usize, out: &Path) -> Result<u8, CliError> {
    if joint >= JOINTS {
        return Err(CliError::Input(format!("joint must lie in 0..={}, got {joint}", JOINTS - 1)));
    }
    let model_file = ModelFile::load(model)?;
    let manifest_path = sibling(out, "manifest.toml");
    guard_inputs(&[model], &[out.to_path_buf(), manifest_path.clone()])?;
    let svg = bias_plot_svg(&model_file, joint)?;
    ensure_parent(out)?;
    write_atomic(out, svg.as_bytes())?;
    RunManifest {
        command: "bias-plot".into(),
        version: VERSION.into(),
        seed: model_file.seed,
        inputs: vec![show(model)],
        artifacts: vec![show(out)],
        joint: Some(joint),
        config: None,
    }
    .write(&manifest_path)?;
    Ok(exit::OK)
}
