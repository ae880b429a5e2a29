//! Motion-bias calibration of the joint torque sensors.
//!
//! Free-motion recordings carry only the bias torque (plus noise), so a
//! regressor on `(angle, direction)` fitted to them can be subtracted from
//! live readings to leave the interaction torque.

mod mlp;
mod model;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::arm::{JointState, JOINTS};
use crate::error::{Error, Result};
use crate::math::{self, Vec6};

pub use mlp::{Dense, Mlp, Workspace};
pub use model::{
    train_bias_model, train_joint_regressor, BiasModel, JointRegressor, JointTrainReport, TrainConfig,
    TrainReport, HIDDEN_WIDTH,
};

/// Per-joint torque noise of the default arm during the free-motion sweep
/// (N·m). The fast excitation shakes the arm, so these recordings are
/// noisier than the slow grasp approach; the sensors on the large proximal
/// joints also have a wider range and a coarser resolution.
pub const DEFAULT_NOISE_SIGMA: [f64; JOINTS] = [0.015, 0.015, 0.01, 0.003, 0.002, 0.0005];

/// One free-motion reading of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSample {
    pub joint: usize,
    pub angle: f64,
    /// Sign of the joint velocity: −1, 0 or +1.
    pub direction: f64,
    pub torque: f64,
}

impl BiasSample {
    pub fn new(joint: usize, angle: f64, direction: f64, torque: f64) -> Result<Self> {
        if joint >= JOINTS {
            return Err(Error::invalid("joint index out of range"));
        }
        if !(direction == -1.0 || direction == 0.0 || direction == 1.0) {
            return Err(Error::invalid("direction must be -1, 0 or +1"));
        }
        if !angle.is_finite() || !torque.is_finite() {
            return Err(Error::invalid("sample fields must be finite"));
        }
        Ok(BiasSample { joint, angle, direction, torque })
    }
}

/// Anything that maps `(joint, angle, direction)` to a bias torque.
pub trait BiasFunction {
    fn bias(&self, joint: usize, angle: f64, direction: f64) -> f64;

    fn bias_vector(&self, q: &[f64; JOINTS], direction: &[f64; JOINTS]) -> Vec6 {
        Vec6::from_fn(|j, _| self.bias(j, q[j], direction[j]))
    }
}

impl<F: Fn(usize, f64, f64) -> f64> BiasFunction for F {
    fn bias(&self, joint: usize, angle: f64, direction: f64) -> f64 {
        self(joint, angle, direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// `offset + Σ A·sin(k·q + φ) + g·direction` for one joint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JointBias {
    pub terms: Vec<SineTerm>,
    pub direction_gain: f64,
    pub offset: f64,
}

impl JointBias {
    pub fn sine(amplitude: f64, frequency: f64, phase: f64, direction_gain: f64) -> Self {
        JointBias {
            terms: alloc::vec![SineTerm { amplitude, frequency, phase }],
            direction_gain,
            offset: 0.0,
        }
    }

    pub fn constant(offset: f64) -> Self {
        JointBias { terms: Vec::new(), direction_gain: 0.0, offset }
    }

    pub fn eval(&self, angle: f64, direction: f64) -> f64 {
        let s: f64 = self.terms.iter().map(|t| t.amplitude * math::sin(t.frequency * angle + t.phase)).sum();
        self.offset + s + self.direction_gain * direction
    }
}

/// Synthetic ground-truth bias for all six joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    pub joints: [JointBias; JOINTS],
}

impl BiasSpec {
    pub fn zero() -> Self {
        BiasSpec { joints: Default::default() }
    }

    /// Gravity-like bias, large on the proximal joints and small on the
    /// light wrist joints.
    pub fn default_arm() -> Self {
        BiasSpec {
            joints: [
                JointBias::sine(1.0, 1.0, 0.0, 0.15),
                JointBias::sine(0.8, 1.0, 0.4, 0.12),
                JointBias::sine(0.5, 1.0, -0.3, 0.1),
                JointBias::sine(0.15, 1.0, 0.2, 0.06),
                JointBias::sine(0.1, 1.0, -0.5, 0.04),
                JointBias::sine(0.02, 1.0, 0.1, 0.01),
            ],
        }
    }
}

impl BiasFunction for BiasSpec {
    fn bias(&self, joint: usize, angle: f64, direction: f64) -> f64 {
        self.joints[joint].eval(angle, direction)
    }
}

/// One sample per joint per trajectory point: ground truth plus Gaussian noise.
pub fn generate_free_motion_dataset<B: BiasFunction + ?Sized>(
    truth: &B,
    trajectory: &[JointState],
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<BiasSample>> {
    generate_free_motion_dataset_per_joint(truth, trajectory, &[noise_sigma; JOINTS], seed)
}

/// As [`generate_free_motion_dataset`] with a separate noise level per joint.
pub fn generate_free_motion_dataset_per_joint<B: BiasFunction + ?Sized>(
    truth: &B,
    trajectory: &[JointState],
    noise_sigma: &[f64; JOINTS],
    seed: u64,
) -> Result<Vec<BiasSample>> {
    if trajectory.is_empty() {
        return Err(Error::invalid("trajectory is empty"));
    }
    check_sigmas(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trajectory.len() * JOINTS);
    for state in trajectory {
        let dir = state.direction();
        for j in 0..JOINTS {
            let e: f64 = StandardNormal.sample(&mut rng);
            let torque = truth.bias(j, state.q[j], dir[j]) + noise_sigma[j] * e;
            out.push(BiasSample { joint: j, angle: state.q[j], direction: dir[j], torque });
        }
    }
    Ok(out)
}

pub(crate) fn check_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.iter().all(|s| s.is_finite() && *s >= 0.0) {
        Ok(())
    } else {
        Err(Error::invalid("noise sigma must be finite and non-negative"))
    }
}

/// Free-motion excitation: every joint moves between random waypoints in
/// ±0.95π with a half-cosine velocity profile and rests briefly at each
/// waypoint, so both movement directions and the rest state are visited
/// across the whole joint range.
pub fn free_motion_sweep(points: usize, dt: f64, seed: u64) -> Result<Vec<JointState>> {
    if points == 0 || !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("sweep needs points > 0 and dt > 0"));
    }
    const REACH: f64 = 0.95 * core::f64::consts::PI;
    const REST: f64 = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    struct Segment {
        from: f64,
        to: f64,
        start: f64,
        duration: f64,
    }
    let mut segments: [Segment; JOINTS] = core::array::from_fn(|_| Segment {
        from: 0.0,
        to: 0.0,
        start: 0.0,
        duration: 0.0,
    });
    let next = |seg: &mut Segment, rng: &mut ChaCha8Rng, t: f64| {
        let from = seg.to;
        let mut to = rng.random_range(-REACH..REACH);
        while math::abs(to - from) < 0.5 {
            to = rng.random_range(-REACH..REACH);
        }
        *seg = Segment { from, to, start: t, duration: rng.random_range(1.5..3.0) };
    };
    for seg in segments.iter_mut() {
        seg.to = rng.random_range(-REACH..REACH);
        next(seg, &mut rng, 0.0);
    }

    let mut out = Vec::with_capacity(points);
    for k in 0..points {
        let t = k as f64 * dt;
        let mut q = [0.0; JOINTS];
        let mut qdot = [0.0; JOINTS];
        for (j, seg) in segments.iter_mut().enumerate() {
            while t >= seg.start + seg.duration + REST {
                let end = seg.start + seg.duration + REST;
                next(seg, &mut rng, end);
            }
            let s = (t - seg.start) / seg.duration;
            let span = seg.to - seg.from;
            if s < 1.0 {
                let pi = core::f64::consts::PI;
                q[j] = seg.from + span * 0.5 * (1.0 - math::cos(pi * s));
                qdot[j] = span * 0.5 * pi * math::sin(pi * s) / seg.duration;
            } else {
                q[j] = seg.to;
            }
        }
        out.push(JointState::new(q, qdot)?);
    }
    Ok(out)
}

pub fn predict_bias<B: BiasFunction + ?Sized>(model: &B, q: &[f64; JOINTS], direction: &[f64; JOINTS]) -> Vec6 {
    model.bias_vector(q, direction)
}

/// `τ_int = τ_s − τ_bias`.
pub fn remove_bias(tau_s: &Vec6, tau_bias: &Vec6) -> Vec6 {
    tau_s - tau_bias
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_constant_trajectory_is_ground_truth() {
        let truth = BiasSpec::default_arm();
        let state = JointState::new([0.1, -0.2, 0.3, 0.4, -0.5, 0.6], [0.0, 1.0, -1.0, 0.0, 2.0, -0.1]).unwrap();
        let traj = alloc::vec![state; 10];
        let data = generate_free_motion_dataset(&truth, &traj, 0.0, 3).unwrap();
        assert_eq!(data.len(), 60);
        for s in &data {
            assert_eq!(s.torque, truth.bias(s.joint, s.angle, s.direction));
        }
    }

    #[test]
    fn noise_statistics_match_sigma() {
        let truth = BiasSpec::default_arm();
        let traj = free_motion_sweep(10_000 / JOINTS + 1, 0.01, 1).unwrap();
        let data = generate_free_motion_dataset(&truth, &traj, 0.05, 9).unwrap();
        let resid: Vec<f64> = data.iter().map(|s| s.torque - truth.bias(s.joint, s.angle, s.direction)).collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let sd = math::sqrt(resid.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0));
        assert!(resid.len() >= 10_000);
        assert!((0.045..=0.055).contains(&sd), "sd {sd}");
    }

    #[test]
    fn dataset_is_deterministic() {
        let truth = BiasSpec::default_arm();
        let traj = free_motion_sweep(500, 0.01, 4).unwrap();
        let a = generate_free_motion_dataset(&truth, &traj, 0.05, 77).unwrap();
        let b = generate_free_motion_dataset(&truth, &traj, 0.05, 77).unwrap();
        assert_eq!(a, b);
        let c = generate_free_motion_dataset(&truth, &traj, 0.05, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_trajectory_rejected() {
        assert!(matches!(
            generate_free_motion_dataset(&BiasSpec::zero(), &[], 0.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sweep_visits_both_directions_and_rest() {
        let traj = free_motion_sweep(20_000, 0.01, 5).unwrap();
        for j in 0..JOINTS {
            let dirs: Vec<f64> = traj.iter().map(|s| s.direction()[j]).collect();
            for d in [-1.0, 0.0, 1.0] {
                assert!(dirs.iter().filter(|&&x| x == d).count() > 500, "joint {j} dir {d}");
            }
            let lo = traj.iter().map(|s| s.q[j]).fold(f64::INFINITY, f64::min);
            let hi = traj.iter().map(|s| s.q[j]).fold(f64::NEG_INFINITY, f64::max);
            assert!(lo < -2.5 && hi > 2.5);
        }
    }

    #[test]
    fn remove_bias_cases() {
        let a = Vec6::new(1.0, -2.0, 3.0, 0.5, 0.0, -0.1);
        assert_eq!(remove_bias(&a, &a), Vec6::zeros());
        assert_eq!(remove_bias(&Vec6::repeat(1.0), &Vec6::zeros()), Vec6::repeat(1.0));
    }

    #[test]
    fn sample_validation() {
        assert!(BiasSample::new(6, 0.0, 0.0, 0.0).is_err());
        assert!(BiasSample::new(0, 0.0, 0.5, 0.0).is_err());
        assert!(BiasSample::new(0, f64::NAN, 1.0, 0.0).is_err());
        assert!(BiasSample::new(5, 1.0, -1.0, 0.2).is_ok());
    }
}
