//! Fixed-step closed loop:
//! contact → biased joint sensors → bias removal → wrench recovery →
//! frame change → threshold → commands → velocity lag → kinematic update.

mod analysis;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::arm::{
    forward_kinematics, geometric_jacobian, movement_direction, joint_torques_from_wrench, joint_velocities_from_twist,
    wrench_from_joint_torques, ArmModel, JOINTS,
};
use crate::calibration::{BiasFunction, BiasSpec};
use crate::contact::{ContactState, ContactWorld};
use crate::controller::{grasp_command, velocity_dynamics_step, CommandVector, ControllerParams, HandVelocity, MAX_DT};
use crate::error::{Error, Result};
use crate::math::{self, Vec6};
use crate::wrench::{transform_wrench, transform_wrench_to_base, ThresholdFilter, Wrench};

/// Per-joint torque-sensor noise during the slow grasp motion (N·m). Mapped
/// through the default arm it stays well below the default filter thresholds.
pub const DEFAULT_SENSOR_NOISE: [f64; JOINTS] = [0.005, 0.005, 0.003, 0.001, 0.0007, 0.0002];

pub use analysis::{
    analyze, settle_time, trailing_mean, CompletionTracker, ConvergenceReport, COMPLETION_BAND,
    COMPLETION_HOLD, SMOOTHING_WINDOW,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub arm: ArmModel,
    pub params: ControllerParams,
    pub world: ContactWorld,
    /// Starting joint configuration.
    pub home: [f64; JOINTS],
    /// Distance from the fingertips to the undeformed surface at start (m).
    pub gap: f64,
    /// Initial misalignment with the surface about hand x and y (rad).
    pub misalign_x: f64,
    pub misalign_y: f64,
    /// Ground-truth motion bias added to every joint reading.
    pub bias: BiasSpec,
    /// Per-joint Gaussian sensor noise (N·m).
    pub noise_sigma: [f64; JOINTS],
    pub filter: ThresholdFilter,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    /// End the run as soon as the grasp-complete criterion holds.
    pub stop_on_complete: bool,
}

impl Scenario {
    /// Default gains, default arm and contact world, 0.0275 m gap.
    pub fn default_grasp() -> Self {
        Scenario {
            arm: ArmModel::default_six_dof(),
            params: ControllerParams::default_gains(),
            world: ContactWorld::default(),
            home: ArmModel::DEFAULT_HOME,
            gap: 0.0275,
            misalign_x: 0.01,
            misalign_y: -0.01,
            bias: BiasSpec::default_arm(),
            noise_sigma: DEFAULT_SENSOR_NOISE,
            filter: ThresholdFilter::default(),
            duration: 40.0,
            dt: 0.001,
            seed: 7,
            stop_on_complete: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.world.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::invalid("dt must lie in (0, 0.01] s"));
        }
        if !(self.gap >= 0.0 && self.gap.is_finite()) {
            return Err(Error::invalid("gap must be non-negative"));
        }
        crate::calibration::check_sigmas(&self.noise_sigma)?;
        if !math::all_finite(&self.home) || !self.misalign_x.is_finite() || !self.misalign_y.is_finite() {
            return Err(Error::invalid("initial pose must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        libm::round(self.duration / self.dt) as usize
    }
}

/// Mutable loop state.
#[derive(Debug, Clone)]
pub struct SimState {
    pub step: usize,
    pub q: [f64; JOINTS],
    pub qdot: [f64; JOINTS],
    pub velocity: HandVelocity,
    /// Fingertip position along the approach axis (m).
    pub z: f64,
    pub contact: ContactState,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let z = scenario.world.z0 - scenario.gap;
        let mut contact = ContactState::with_tilt(scenario.misalign_x, scenario.misalign_y);
        contact.update_penetration(&scenario.world, z);
        Ok(SimState {
            step: 0,
            q: scenario.home.map(math::wrap_angle),
            qdot: [0.0; JOINTS],
            velocity: HandVelocity::default(),
            z,
            contact,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        })
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }
}

/// Everything observed and commanded during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    /// Contact wrench as produced by the environment (end-effector frame).
    pub wrench_true: Wrench,
    /// Recovered wrench before the threshold filter (end-effector frame).
    pub wrench_raw: Wrench,
    /// Recovered wrench fed to the controller (end-effector frame).
    pub wrench: Wrench,
    pub velocity: HandVelocity,
    pub z: f64,
    pub contact: bool,
    pub rotation: f64,
    pub tilt_x: f64,
    pub tilt_y: f64,
    pub command: CommandVector,
    pub q: [f64; JOINTS],
    /// Raw sensor torques.
    pub tau_s: Vec6,
    /// Predicted bias.
    pub tau_bias: Vec6,
    /// Calibrated interaction torques.
    pub tau_int: Vec6,
}

/// Advances the loop by one `dt` and returns the record for the instant it started from.
pub fn step<B: BiasFunction + ?Sized>(
    scenario: &Scenario,
    state: &mut SimState,
    compensator: &B,
) -> Result<LogRecord> {
    let dt = scenario.dt;
    let t = state.time(dt);
    let pose = forward_kinematics(&scenario.arm, &state.q)?;
    let jac = geometric_jacobian(&scenario.arm, &state.q)?;
    let to_ee = pose.base_to_ee();

    let wrench_true = scenario.world.contact_wrench(state.z, &state.contact);
    let base_true = transform_wrench_to_base(&to_ee, &wrench_true)?;
    let direction = movement_direction(&state.qdot);
    let mut tau_s = joint_torques_from_wrench(&jac, &base_true)? + scenario.bias.bias_vector(&state.q, &direction);
    for (x, sigma) in tau_s.iter_mut().zip(&scenario.noise_sigma) {
        let e: f64 = StandardNormal.sample(&mut state.rng);
        *x += sigma * e;
    }

    let tau_bias = compensator.bias_vector(&state.q, &direction);
    let tau_int = crate::calibration::remove_bias(&tau_s, &tau_bias);
    let base = wrench_from_joint_torques(&jac, &tau_int)?;
    let wrench_raw = transform_wrench(&to_ee, &base)?;
    let wrench = scenario.filter.apply(&wrench_raw);

    let command = grasp_command(&scenario.params, &wrench)?;
    let record = LogRecord {
        t,
        wrench_true,
        wrench_raw,
        wrench,
        velocity: state.velocity,
        z: state.z,
        contact: state.contact.in_contact,
        rotation: state.contact.rotation,
        tilt_x: state.contact.tilt_x,
        tilt_y: state.contact.tilt_y,
        command,
        q: state.q,
        tau_s,
        tau_bias,
        tau_int,
    };

    let v = velocity_dynamics_step(&state.velocity, &command, &scenario.params, dt)?;
    state.velocity = v;
    state.z += v.linear.z * dt;
    state.contact.update_penetration(&scenario.world, state.z);
    if state.contact.in_contact {
        state.contact.dx += v.linear.x * dt;
        state.contact.dy += v.linear.y * dt;
        state.contact.rotation += v.angular.z * dt;
    }
    state.contact.tilt_x += v.angular.x * dt;
    state.contact.tilt_y += v.angular.y * dt;

    let r = &pose.rotation;
    let mut twist = Vec6::zeros();
    twist.fixed_rows_mut::<3>(0).copy_from(&(r * v.linear));
    twist.fixed_rows_mut::<3>(3).copy_from(&(r * v.angular));
    let qdot = joint_velocities_from_twist(&jac, &twist)?;
    for j in 0..JOINTS {
        state.qdot[j] = qdot[j];
        state.q[j] = math::wrap_angle(state.q[j] + qdot[j] * dt);
    }
    state.step += 1;
    Ok(record)
}

/// Why a run ended before its duration.
#[derive(Debug, Clone, PartialEq)]
pub struct Halt {
    pub t: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub records: Vec<LogRecord>,
    pub dt: f64,
    /// Filter the run used; analysis derives its zero-target bands from it.
    pub filter: ThresholdFilter,
    /// Time at which the grasp-complete criterion was first met.
    pub grasp_complete_at: Option<f64>,
    pub halt: Option<Halt>,
}

impl SimLog {
    pub fn grasp_complete(&self) -> bool {
        self.grasp_complete_at.is_some()
    }
}

/// Runs the scenario to its duration, or until the grasp completes when
/// `stop_on_complete` is set. A singular configuration ends the run and is
/// recorded in [`SimLog::halt`].
pub fn run_grasp<B: BiasFunction + ?Sized>(scenario: &Scenario, compensator: &B) -> Result<SimLog> {
    let mut state = SimState::new(scenario)?;
    let steady = crate::controller::predicted_steady_state(&scenario.params, &scenario.world)?;
    let mut tracker = CompletionTracker::new(&steady, &scenario.filter, scenario.dt);
    let n = scenario.steps();
    let mut log = SimLog {
        records: Vec::with_capacity(n),
        dt: scenario.dt,
        filter: scenario.filter,
        ..Default::default()
    };
    for _ in 0..n {
        match step(scenario, &mut state, compensator) {
            Ok(rec) => {
                if let Some(t) = tracker.push(&rec) {
                    if log.grasp_complete_at.is_none() {
                        log.grasp_complete_at = Some(t);
                    }
                }
                log.records.push(rec);
                if scenario.stop_on_complete && log.grasp_complete_at.is_some() {
                    break;
                }
            }
            Err(error @ Error::Singular { .. }) => {
                log.halt = Some(Halt { t: state.time(scenario.dt), error });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(log)
}
