//! On-disk formats: the JSON model file, the CSV tables and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tactile_grasp_core::arm::JOINTS;
use tactile_grasp_core::calibration::{BiasModel, BiasSample, BiasSpec, TrainConfig, TrainReport};
use tactile_grasp_core::sim::SimLog;

use crate::error::CliError;

pub const MODEL_FORMAT: &str = "tactile-grasp-bias-model";
pub const MODEL_VERSION: u32 = 1;

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| CliError::Input(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// How the training data behind a model was produced, enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub bias: BiasSpec,
    pub noise_sigma: [f64; JOINTS],
    pub points: usize,
    pub sweep_dt: f64,
    pub sweep_seed: u64,
    pub noise_seed: u64,
    pub train: TrainConfig,
}

/// Versioned JSON container for a trained [`BiasModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub model: BiasModel,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn new(model: BiasModel, provenance: Provenance) -> Self {
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, seed: model.seed, model, provenance }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(CliError::Input(format!("model file: unknown format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(CliError::Input(format!("model file: unsupported version {}", file.version)));
        }
        file.model.validate().map_err(|e| CliError::Input(format!("model file: {e}")))?;
        if file.seed != file.model.seed {
            return Err(CliError::Input("model file: seed does not match the model".into()));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        ModelFile::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer flushes")
}

fn row<I: IntoIterator<Item = String>>(w: &mut csv::Writer<Vec<u8>>, fields: I) {
    w.write_record(fields).expect("in-memory writer");
}

/// `joint,angle_rad,direction,torque_nm`.
pub fn dataset_csv(data: &[BiasSample]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    row(&mut w, ["joint", "angle_rad", "direction", "torque_nm"].map(String::from));
    for s in data {
        row(&mut w, [s.joint.to_string(), s.angle.to_string(), s.direction.to_string(), s.torque.to_string()]);
    }
    finish(w)
}

/// Parses a dataset CSV back into samples.
pub fn read_dataset_csv(bytes: &[u8]) -> Result<Vec<BiasSample>, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| CliError::Input(e.to_string()))?;
    if header != vec!["joint", "angle_rad", "direction", "torque_nm"] {
        return Err(CliError::Input(format!("unexpected dataset header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
            let f = |i: usize| rec[i].parse::<f64>().map_err(|e| CliError::Input(e.to_string()));
            let joint = rec[0].parse::<usize>().map_err(|e| CliError::Input(e.to_string()))?;
            BiasSample::new(joint, f(1)?, f(2)?, f(3)?).map_err(|e| CliError::Input(e.to_string()))
        })
        .collect()
}

/// `joint,epoch,train_mse,validation_rmse`; the held-out error sits on each
/// joint's final epoch row.
pub fn train_report_csv(report: &TrainReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    row(&mut w, ["joint", "epoch", "train_mse", "validation_rmse"].map(String::from));
    for j in &report.joints {
        let last = j.epoch_mse.len();
        for (e, mse) in j.epoch_mse.iter().enumerate() {
            let val = if e + 1 == last { j.validation_rmse.to_string() } else { String::new() };
            row(&mut w, [j.joint.to_string(), (e + 1).to_string(), mse.to_string(), val]);
        }
    }
    finish(w)
}

pub const SIMLOG_HEADER: [&str; 21] = [
    "t", "ee_fx", "ee_fy", "ee_fz", "ee_tx", "ee_ty", "ee_tz", "vx", "vy", "vz", "wx", "wy", "wz", "z", "contact",
    "u_vx", "u_vy", "u_vz", "u_wx", "u_wy", "u_wz",
];

/// One row per step: filtered end-effector wrench, hand twist, z, contact flag, command.
pub fn simlog_csv(log: &SimLog) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    row(&mut w, SIMLOG_HEADER.map(String::from));
    for r in &log.records {
        let mut fields = Vec::with_capacity(SIMLOG_HEADER.len());
        fields.push(r.t.to_string());
        fields.extend(r.wrench.stacked().iter().map(|v| v.to_string()));
        fields.extend(r.velocity.linear.iter().chain(r.velocity.angular.iter()).map(|v| v.to_string()));
        fields.push(r.z.to_string());
        fields.push(u8::from(r.contact).to_string());
        fields.extend(r.command.linear.iter().chain(r.command.angular.iter()).map(|v| v.to_string()));
        row(&mut w, fields);
    }
    finish(w)
}
