//! Scenario and calibration configuration: TOML sections with the exact
//! parameter keys, unknown keys rejected, missing keys taking the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tactile_grasp_core::arm::{ArmModel, DhLink, JOINTS};
use tactile_grasp_core::calibration::{BiasSpec, JointBias, SineTerm, TrainConfig, DEFAULT_NOISE_SIGMA};
use tactile_grasp_core::contact::ContactWorld;
use tactile_grasp_core::controller::ControllerParams;
use tactile_grasp_core::sim::Scenario;
use tactile_grasp_core::wrench::ThresholdFilter;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub gap: f64,
    pub misalign_x: f64,
    pub misalign_y: f64,
    pub noise_sigma: [f64; JOINTS],
    pub home: [f64; JOINTS],
    pub stop_on_complete: bool,
}

/// DH rows `[a, alpha, d, theta_offset]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmSection {
    pub link1: [f64; 4],
    pub link2: [f64; 4],
    pub link3: [f64; 4],
    pub link4: [f64; 4],
    pub link5: [f64; 4],
    pub link6: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub v_dz: f64,
    pub alpha_vx: f64,
    pub alpha_vy: f64,
    pub alpha_vz: f64,
    pub alpha_wx: f64,
    pub alpha_wy: f64,
    pub alpha_wz: f64,
    pub beta_wz: f64,
    pub b_x: f64,
    pub b_y: f64,
    pub b_z: f64,
    pub b_wx: f64,
    pub b_wy: f64,
    pub b_wz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_dz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactSection {
    pub z0: f64,
    #[serde(rename = "K_z")]
    pub k_z: f64,
    #[serde(rename = "K_x")]
    pub k_x: f64,
    #[serde(rename = "K_y")]
    pub k_y: f64,
    pub d: f64,
    pub mu_surface: f64,
    pub mu_edge: f64,
    pub edge_radius: f64,
    #[serde(rename = "K_rx")]
    pub k_rx: f64,
    #[serde(rename = "K_ry")]
    pub k_ry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub force_threshold: f64,
    pub torque_threshold: f64,
}

/// Ground-truth bias `offset + amplitude·sin(frequency·q + phase) + direction_gain·s` per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSection {
    pub amplitude: [f64; JOINTS],
    pub frequency: [f64; JOINTS],
    pub phase: [f64; JOINTS],
    pub direction_gain: [f64; JOINTS],
    pub offset: [f64; JOINTS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// Free-motion trajectory points; each yields one sample per joint.
    pub points: usize,
    pub sweep_dt: f64,
    pub noise_sigma: [f64; JOINTS],
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub arm: ArmSection,
    pub controller: ControllerSection,
    pub contact: ContactSection,
    pub filter: FilterSection,
    pub bias: BiasSection,
    pub calibration: CalibrationSection,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = Scenario::default_grasp();
        ScenarioSection {
            duration: s.duration,
            dt: s.dt,
            seed: s.seed,
            gap: s.gap,
            misalign_x: s.misalign_x,
            misalign_y: s.misalign_y,
            noise_sigma: s.noise_sigma,
            home: s.home,
            stop_on_complete: s.stop_on_complete,
        }
    }
}

fn dh_row(l: &DhLink) -> [f64; 4] {
    [l.length, l.twist, l.offset, l.angle_offset]
}

impl Default for ArmSection {
    fn default() -> Self {
        let arm = ArmModel::default_six_dof();
        let l = arm.links();
        ArmSection {
            link1: dh_row(&l[0]),
            link2: dh_row(&l[1]),
            link3: dh_row(&l[2]),
            link4: dh_row(&l[3]),
            link5: dh_row(&l[4]),
            link6: dh_row(&l[5]),
        }
    }
}

impl Default for ControllerSection {
    fn default() -> Self {
        ControllerSection::from(ControllerParams::default_gains())
    }
}

impl From<ControllerParams> for ControllerSection {
    fn from(p: ControllerParams) -> Self {
        ControllerSection {
            v_dz: p.v_dz,
            alpha_vx: p.alpha_vx,
            alpha_vy: p.alpha_vy,
            alpha_vz: p.alpha_vz,
            alpha_wx: p.alpha_wx,
            alpha_wy: p.alpha_wy,
            alpha_wz: p.alpha_wz,
            beta_wz: p.beta_wz,
            b_x: p.b_x,
            b_y: p.b_y,
            b_z: p.b_z,
            b_wx: p.b_wx,
            b_wy: p.b_wy,
            b_wz: p.b_wz,
            tau_dz: p.tau_dz,
            f_f: p.f_f,
        }
    }
}

impl Default for ContactSection {
    fn default() -> Self {
        let w = ContactWorld::default();
        ContactSection {
            z0: w.z0,
            k_z: w.k_z,
            k_x: w.k_x,
            k_y: w.k_y,
            d: w.lever_arm,
            mu_surface: w.mu_surface,
            mu_edge: w.mu_edge,
            edge_radius: w.edge_radius,
            k_rx: w.k_rx,
            k_ry: w.k_ry,
        }
    }
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection { force_threshold: ThresholdFilter::DEFAULT_FORCE, torque_threshold: ThresholdFilter::DEFAULT_TORQUE }
    }
}

impl Default for BiasSection {
    fn default() -> Self {
        BiasSection::from_spec(&BiasSpec::default_arm()).expect("default bias is single-tone")
    }
}

impl BiasSection {
    /// Inverse of [`BiasSection::spec`] for specs with at most one sine term per joint.
    pub fn from_spec(spec: &BiasSpec) -> Option<Self> {
        let mut s = BiasSection {
            amplitude: [0.0; JOINTS],
            frequency: [1.0; JOINTS],
            phase: [0.0; JOINTS],
            direction_gain: [0.0; JOINTS],
            offset: [0.0; JOINTS],
        };
        for (j, b) in spec.joints.iter().enumerate() {
            match b.terms.as_slice() {
                [] => {}
                [t] => {
                    s.amplitude[j] = t.amplitude;
                    s.frequency[j] = t.frequency;
                    s.phase[j] = t.phase;
                }
                _ => return None,
            }
            s.direction_gain[j] = b.direction_gain;
            s.offset[j] = b.offset;
        }
        Some(s)
    }

    pub fn spec(&self) -> BiasSpec {
        BiasSpec {
            joints: std::array::from_fn(|j| JointBias {
                terms: vec![SineTerm { amplitude: self.amplitude[j], frequency: self.frequency[j], phase: self.phase[j] }],
                direction_gain: self.direction_gain[j],
                offset: self.offset[j],
            }),
        }
    }
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        CalibrationSection {
            points: 6000,
            sweep_dt: 0.02,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            validation_fraction: t.validation_fraction,
            seed: 11,
        }
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite")))
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train_config().map(|_| ())?;
        let c = &self.calibration;
        if c.points == 0 {
            return Err(CliError::Config("calibration.points must be positive".into()));
        }
        if !(c.sweep_dt > 0.0 && c.sweep_dt.is_finite()) {
            return Err(CliError::Config("calibration.sweep_dt must be positive".into()));
        }
        finite("calibration.noise_sigma", &c.noise_sigma)?;
        if c.noise_sigma.iter().any(|s| *s < 0.0) {
            return Err(CliError::Config("calibration.noise_sigma must be non-negative".into()));
        }
        let b = &self.bias;
        for (name, v) in [
            ("bias.amplitude", &b.amplitude),
            ("bias.frequency", &b.frequency),
            ("bias.phase", &b.phase),
            ("bias.direction_gain", &b.direction_gain),
            ("bias.offset", &b.offset),
        ] {
            finite(name, v)?;
        }
        Ok(())
    }

    pub fn arm(&self) -> Result<ArmModel, CliError> {
        let a = &self.arm;
        let rows = [a.link1, a.link2, a.link3, a.link4, a.link5, a.link6];
        for r in &rows {
            finite("arm link", r)?;
        }
        ArmModel::new(rows.map(|r| DhLink::new(r[0], r[1], r[2], r[3]))).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn controller(&self) -> ControllerParams {
        let c = &self.controller;
        ControllerParams {
            v_dz: c.v_dz,
            alpha_vx: c.alpha_vx,
            alpha_vy: c.alpha_vy,
            alpha_vz: c.alpha_vz,
            alpha_wx: c.alpha_wx,
            alpha_wy: c.alpha_wy,
            alpha_wz: c.alpha_wz,
            beta_wz: c.beta_wz,
            b_x: c.b_x,
            b_y: c.b_y,
            b_z: c.b_z,
            b_wx: c.b_wx,
            b_wy: c.b_wy,
            b_wz: c.b_wz,
            tau_dz: c.tau_dz,
            f_f: c.f_f,
        }
    }

    pub fn world(&self) -> ContactWorld {
        let c = &self.contact;
        ContactWorld {
            z0: c.z0,
            k_z: c.k_z,
            k_x: c.k_x,
            k_y: c.k_y,
            mu_surface: c.mu_surface,
            mu_edge: c.mu_edge,
            edge_radius: c.edge_radius,
            lever_arm: c.d,
            k_rx: c.k_rx,
            k_ry: c.k_ry,
        }
    }

    pub fn filter(&self) -> Result<ThresholdFilter, CliError> {
        ThresholdFilter::uniform(self.filter.force_threshold, self.filter.torque_threshold)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let s = &self.scenario;
        Ok(Scenario {
            arm: self.arm()?,
            params: self.controller(),
            world: self.world(),
            home: s.home,
            gap: s.gap,
            misalign_x: s.misalign_x,
            misalign_y: s.misalign_y,
            bias: self.bias.spec(),
            noise_sigma: s.noise_sigma,
            filter: self.filter()?,
            duration: s.duration,
            dt: s.dt,
            seed: s.seed,
            stop_on_complete: s.stop_on_complete,
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let c = &self.calibration;
        let t = TrainConfig {
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            momentum: c.momentum,
            validation_fraction: c.validation_fraction,
            seed: c.seed,
        };
        if t.epochs == 0 || t.batch_size == 0 {
            return Err(CliError::Config("calibration.epochs and batch_size must be at least 1".into()));
        }
        if !(t.validation_fraction > 0.0 && t.validation_fraction < 1.0) {
            return Err(CliError::Config("calibration.validation_fraction must lie in (0, 1)".into()));
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) || !(0.0..1.0).contains(&t.momentum) {
            return Err(CliError::Config("calibration.learning_rate must be positive and momentum in [0, 1)".into()));
        }
        Ok(t)
    }
}
