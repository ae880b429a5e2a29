use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, Workspace};
use super::{BiasFunction, BiasSample};
use crate::arm::JOINTS;
use crate::error::{Error, Result};
use crate::math;

pub const HIDDEN_WIDTH: usize = 64;
const INPUTS: usize = 2;
const MIN_SAMPLES: usize = 100;

fn expected_shape() -> [(usize, usize); 3] {
    [(INPUTS, HIDDEN_WIDTH), (HIDDEN_WIDTH, HIDDEN_WIDTH), (HIDDEN_WIDTH, 1)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Fraction of each joint's samples held out for validation.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 20,
            learning_rate: 1e-3,
            momentum: 0.9,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self, samples: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid("validation fraction must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 || self.batch_size > samples {
            return Err(Error::invalid("batch size must lie in 1..=dataset size"));
        }
        Ok(())
    }
}

/// Per-joint regressor with its input/output normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRegressor {
    pub net: Mlp,
    pub angle_mean: f64,
    pub angle_scale: f64,
    pub target_mean: f64,
    pub target_scale: f64,
}

impl JointRegressor {
    fn inputs(&self, angle: f64, direction: f64) -> [f64; INPUTS] {
        [(angle - self.angle_mean) / self.angle_scale, direction]
    }

    pub fn predict(&self, angle: f64, direction: f64, ws: &mut Workspace) -> f64 {
        self.target_mean + self.target_scale * self.net.predict(&self.inputs(angle, direction), ws)
    }

    pub fn validate(&self) -> Result<()> {
        if self.net.shape() != expected_shape() {
            return Err(Error::ShapeMismatch(format!(
                "expected layers {:?}, found {:?}",
                expected_shape(),
                self.net.shape()
            )));
        }
        if let Some(i) = self.net.layers.iter().position(|l| !l.is_well_formed()) {
            return Err(Error::ShapeMismatch(format!("layer {i} has inconsistent or non-finite parameters")));
        }
        let norms = [self.angle_mean, self.angle_scale, self.target_mean, self.target_scale];
        if !math::all_finite(&norms) || self.angle_scale <= 0.0 || self.target_scale <= 0.0 {
            return Err(Error::ShapeMismatch("invalid normalization constants".into()));
        }
        Ok(())
    }
}

/// One trained regressor per joint plus the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    pub joints: Vec<JointRegressor>,
    pub seed: u64,
}

impl BiasModel {
    pub fn new(joints: Vec<JointRegressor>, seed: u64) -> Result<Self> {
        let m = BiasModel { joints, seed };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.len() != JOINTS {
            return Err(Error::ShapeMismatch(format!("expected {JOINTS} joints, found {}", self.joints.len())));
        }
        self.joints.iter().try_for_each(JointRegressor::validate)
    }
}

impl BiasFunction for BiasModel {
    fn bias(&self, joint: usize, angle: f64, direction: f64) -> f64 {
        let r = &self.joints[joint];
        let mut ws = r.net.workspace();
        r.predict(angle, direction, &mut ws)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTrainReport {
    pub joint: usize,
    /// Mean training loss of each epoch, in N·m².
    pub epoch_mse: Vec<f64>,
    /// Held-out root-mean-square error after training, in N·m.
    pub validation_rmse: f64,
    pub train_samples: usize,
    pub validation_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub joints: Vec<JointTrainReport>,
}

fn joint_seed(seed: u64, joint: usize) -> u64 {
    seed ^ (joint as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fits one joint's regressor on `(angle, direction) → torque`.
///
/// Samples are shuffled once and split into train/validation; training runs
/// mini-batch SGD with classical momentum on the standardized target.
pub fn train_joint_regressor(
    samples: &[BiasSample],
    joint: usize,
    cfg: &TrainConfig,
) -> Result<(JointRegressor, JointTrainReport)> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "joint {joint} has {} samples, at least {MIN_SAMPLES} required",
            samples.len()
        )));
    }
    cfg.validate(samples.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(joint_seed(cfg.seed, joint));

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((samples.len() as f64 * cfg.validation_fraction) as usize).clamp(1, samples.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    if cfg.batch_size > train_idx.len() {
        return Err(Error::invalid("batch size exceeds training split"));
    }

    let n = train_idx.len() as f64;
    let target_mean = train_idx.iter().map(|&i| samples[i].torque).sum::<f64>() / n;
    let var = train_idx.iter().map(|&i| {
        let d = samples[i].torque - target_mean;
        d * d
    }).sum::<f64>() / n;
    let target_scale = if var > 1e-24 { math::sqrt(var) } else { 1.0 };

    let mut reg = JointRegressor {
        net: Mlp::new(&[INPUTS, HIDDEN_WIDTH, HIDDEN_WIDTH, 1], &mut rng),
        angle_mean: 0.0,
        angle_scale: PI,
        target_mean,
        target_scale,
    };

    let rows: Vec<([f64; INPUTS], f64)> = samples
        .iter()
        .map(|s| (reg.inputs(s.angle, s.direction), (s.torque - target_mean) / target_scale))
        .collect();

    let mut ws = reg.net.workspace();
    let mut grad = reg.net.zeros_like();
    let mut velocity = reg.net.zeros_like();
    let mut train: Vec<usize> = train_idx.to_vec();
    let mut epoch_mse = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        train.shuffle(&mut rng);
        let mut sse = 0.0;
        for batch in train.chunks(cfg.batch_size) {
            let loss = reg
                .net
                .batch_gradient(batch.iter().map(|&i| (&rows[i].0[..], rows[i].1)), &mut ws, &mut grad);
            if !loss.is_finite() {
                return Err(Error::TrainingFailed { joint, epoch });
            }
            sse += loss * batch.len() as f64;
            velocity.scale(cfg.momentum);
            velocity.axpy(-cfg.learning_rate, &grad);
            reg.net.axpy(1.0, &velocity);
        }
        if !reg.net.is_finite() {
            return Err(Error::TrainingFailed { joint, epoch });
        }
        epoch_mse.push(sse / n * target_scale * target_scale);
    }

    let val_sse: f64 = val_idx
        .iter()
        .map(|&i| {
            let s = &samples[i];
            let e = reg.predict(s.angle, s.direction, &mut ws) - s.torque;
            e * e
        })
        .sum();
    let report = JointTrainReport {
        joint,
        epoch_mse,
        validation_rmse: math::sqrt(val_sse / val_idx.len() as f64),
        train_samples: train_idx.len(),
        validation_samples: val_idx.len(),
    };
    Ok((reg, report))
}

/// Trains all six joints from a mixed dataset.
pub fn train_bias_model(data: &[BiasSample], cfg: &TrainConfig) -> Result<(BiasModel, TrainReport)> {
    let mut joints = Vec::with_capacity(JOINTS);
    let mut reports = Vec::with_capacity(JOINTS);
    for j in 0..JOINTS {
        let samples: Vec<BiasSample> = data.iter().filter(|s| s.joint == j).copied().collect();
        let (reg, rep) = train_joint_regressor(&samples, j, cfg)?;
        joints.push(reg);
        reports.push(rep);
    }
    Ok((BiasModel::new(joints, cfg.seed)?, TrainReport { joints: reports }))
}
