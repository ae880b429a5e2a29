//! Tactile feedback command laws and the first-order hand-velocity lag
//! `v̇ + b v = u`, `ω̇ + b_ω ω = u_ω` (all in the end-effector frame).

use serde::{Deserialize, Serialize};

use crate::contact::ContactWorld;
use crate::error::{Error, Result};
use crate::math::{self, Vec3};
use crate::wrench::{Frame, Wrench};

/// Gains, damping-to-inertia ratios and desired values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Free-space approach speed (m/s).
    pub v_dz: f64,
    pub alpha_vx: f64,
    pub alpha_vy: f64,
    pub alpha_vz: f64,
    pub alpha_wx: f64,
    pub alpha_wy: f64,
    pub alpha_wz: f64,
    /// z-torque per unit z-force (N·m/N).
    pub beta_wz: f64,
    pub b_x: f64,
    pub b_y: f64,
    pub b_z: f64,
    pub b_wx: f64,
    pub b_wy: f64,
    pub b_wz: f64,
    pub tau_dz: Option<f64>,
    pub f_f: Option<f64>,
}

impl ControllerParams {
    /// Default grasp gains: slow approach, force-regulated z, torque-driven spin.
    pub const fn default_gains() -> Self {
        ControllerParams {
            v_dz: 0.0055,
            alpha_vx: 0.0025,
            alpha_vy: 0.0025,
            alpha_vz: 0.4,
            alpha_wx: 0.25,
            alpha_wy: 0.0025,
            alpha_wz: 1.0,
            beta_wz: 0.025,
            b_x: 1.0,
            b_y: 1.0,
            b_z: 1.0,
            b_wx: 1.0,
            b_wy: 1.0,
            b_wz: 1.0,
            tau_dz: None,
            f_f: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.v_dz,
            self.alpha_vx,
            self.alpha_vy,
            self.alpha_vz,
            self.alpha_wx,
            self.alpha_wy,
            self.alpha_wz,
            self.beta_wz,
            self.b_x,
            self.b_y,
            self.b_z,
            self.b_wx,
            self.b_wy,
            self.b_wz,
            self.tau_dz.unwrap_or(0.0),
            self.f_f.unwrap_or(0.0),
        ];
        if !math::all_finite(&all) {
            return Err(Error::invalid("controller parameters must be finite"));
        }
        if self.linear_damping().iter().chain(self.angular_damping().iter()).any(|b| *b <= 0.0) {
            return Err(Error::invalid("damping ratios must be positive"));
        }
        if self.alpha_vz <= 0.0 {
            return Err(Error::invalid("alpha_vz must be positive"));
        }
        Ok(())
    }

    pub fn linear_damping(&self) -> Vec3 {
        Vec3::new(self.b_x, self.b_y, self.b_z)
    }

    pub fn angular_damping(&self) -> Vec3 {
        Vec3::new(self.b_wx, self.b_wy, self.b_wz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HandVelocity {
    pub linear: Vec3,
    pub angular: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommandVector {
    pub linear: Vec3,
    pub angular: Vec3,
}

/// Commands for the full grasp from the (filtered) end-effector wrench.
pub fn grasp_command(p: &ControllerParams, w: &Wrench) -> Result<CommandVector> {
    w.expect_frame(Frame::EndEffector)?;
    let (f, t) = (&w.force, &w.torque);
    Ok(CommandVector {
        linear: Vec3::new(
            p.alpha_vx * f.x,
            p.alpha_vy * f.y,
            p.b_z * p.v_dz * (1.0 + p.alpha_vz * f.z),
        ),
        angular: Vec3::new(
            p.alpha_wx * t.x,
            p.alpha_wy * t.y,
            p.alpha_wz * (p.beta_wz * f.z - t.z),
        ),
    })
}

/// `α_v (f_f − f_e)`.
pub fn generic_force_command(alpha_v: f64, f_f: f64, f_e: f64) -> f64 {
    alpha_v * (f_f - f_e)
}

/// `α_ω (τ_d − τ_e)`.
pub fn generic_torque_command(alpha_w: f64, tau_d: f64, tau_e: f64) -> f64 {
    alpha_w * (tau_d - tau_e)
}

pub const MAX_DT: f64 = 0.01;

/// One explicit-Euler step of the velocity lag.
pub fn velocity_dynamics_step(
    vel: &HandVelocity,
    cmd: &CommandVector,
    p: &ControllerParams,
    dt: f64,
) -> Result<HandVelocity> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::invalid("dt must lie in (0, 0.01] s"));
    }
    let bv = p.linear_damping();
    let bw = p.angular_damping();
    Ok(HandVelocity {
        linear: vel.linear + (cmd.linear - bv.component_mul(&vel.linear)) * dt,
        angular: vel.angular + (cmd.angular - bw.component_mul(&vel.angular)) * dt,
    })
}

/// Closed-form predictions of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Free-space approach speed (m/s).
    pub v_free: f64,
    /// Final contact force along z (N).
    pub f_zf: f64,
    /// Final z-torque once rotation has stopped at the edge (N·m).
    pub tau_zf: f64,
    /// Constant z-rotation rate under the unmodified torque law with `τ_dz` (rad/s).
    pub omega_z_unmodified: Option<f64>,
    /// Steady z-rotation rate on the flat surface region at `f_zf` (rad/s).
    pub omega_z_flat: f64,
}

impl SteadyState {
    /// The wrench at which every grasp command balances: `(0, 0, f_zf, 0, 0, τ_zf)`.
    pub fn wrench(&self) -> Wrench {
        Wrench {
            force: Vec3::new(0.0, 0.0, self.f_zf),
            torque: Vec3::new(0.0, 0.0, self.tau_zf),
            frame: Frame::EndEffector,
        }
    }
}

pub fn predicted_steady_state(p: &ControllerParams, world: &ContactWorld) -> Result<SteadyState> {
    if !(p.alpha_vz > 0.0) {
        return Err(Error::invalid("alpha_vz must be positive"));
    }
    let f_zf = -1.0 / p.alpha_vz;
    Ok(SteadyState {
        v_free: p.v_dz,
        f_zf,
        tau_zf: p.beta_wz * f_zf,
        omega_z_unmodified: p.tau_dz.map(|t| p.alpha_wz * t / p.b_wz),
        omega_z_flat: p.alpha_wz * f_zf * (p.beta_wz - world.lever_arm * world.mu_surface) / p.b_wz,
    })
}

/// Free-space approach speed `v_dz (1 − e^{−b_z t})` starting from rest.
pub fn approach_velocity(p: &ControllerParams, t: f64) -> f64 {
    p.v_dz * (1.0 - math::exp(-p.b_z * t))
}

/// Distance travelled in free space, `v_dz (t − (1 − e^{−b_z t}) / b_z)`.
pub fn approach_distance(p: &ControllerParams, t: f64) -> f64 {
    p.v_dz * (t - (1.0 - math::exp(-p.b_z * t)) / p.b_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wrench::Frame;
    use proptest::prelude::*;

    fn ee(f: [f64; 3], t: [f64; 3]) -> Wrench {
        Wrench::new(Vec3::from(f), Vec3::from(t), Frame::EndEffector).unwrap()
    }

    #[test]
    fn default_gain_commands() {
        let p = ControllerParams::default_gains();
        let u = grasp_command(&p, &ee([0.0; 3], [0.0; 3])).unwrap();
        assert_eq!(u.linear, Vec3::new(0.0, 0.0, 0.0055));
        assert_eq!(u.angular, Vec3::zeros());

        let u = grasp_command(&p, &ee([0.0, 0.0, -2.5], [0.0; 3])).unwrap();
        assert_eq!(u.linear.z, 0.0);

        let u = grasp_command(&p, &ee([0.0, 0.0, -2.5], [0.0, 0.0, 0.025 * -2.5])).unwrap();
        assert_eq!(u.angular.z, 0.0);
        assert!(grasp_command(&p, &Wrench::zero(Frame::Base)).is_err());
    }

    #[test]
    fn generic_laws() {
        assert_eq!(generic_force_command(0.4, -2.5, -2.5), 0.0);
        assert_eq!(generic_force_command(0.4, -2.5, 0.0), -1.0);
        assert!(generic_force_command(0.4, 1.0, 0.5) > 0.0);
        assert_eq!(generic_torque_command(1.0, -0.0625, -0.0625), 0.0);
        assert_eq!(generic_torque_command(1.0, -0.0625, 0.0), -0.0625);
        assert!((generic_torque_command(2.0, 0.3, 0.1) - 2.0 * generic_torque_command(1.0, 0.2, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn euler_step_cases() {
        let p = ControllerParams::default_gains();
        let cmd = CommandVector { linear: Vec3::new(1.0, 0.0, 0.0), angular: Vec3::zeros() };
        let v = velocity_dynamics_step(&HandVelocity::default(), &cmd, &p, 0.001).unwrap();
        assert_eq!(v.linear.x, 0.001);

        let eq = HandVelocity { linear: Vec3::new(0.2, -0.1, 0.3), angular: Vec3::new(0.1, 0.2, -0.3) };
        let cmd = CommandVector { linear: eq.linear, angular: eq.angular };
        assert_eq!(velocity_dynamics_step(&eq, &cmd, &p, 0.001).unwrap(), eq);

        for dt in [0.0, -1e-3, 0.02, f64::NAN] {
            assert!(velocity_dynamics_step(&eq, &cmd, &p, dt).is_err());
        }
    }

    #[test]
    fn settles_within_four_time_constants() {
        let p = ControllerParams::default_gains();
        let cmd = CommandVector { linear: Vec3::new(0.3, -0.2, 0.0055), angular: Vec3::new(0.0, 0.0, 1.0) };
        let mut v = HandVelocity::default();
        for _ in 0..4000 {
            v = velocity_dynamics_step(&v, &cmd, &p, 0.001).unwrap();
        }
        for (x, u) in v.linear.iter().chain(v.angular.iter()).zip(cmd.linear.iter().chain(cmd.angular.iter())) {
            assert!((x - u).abs() <= 0.02 * u.abs());
        }
    }

    #[test]
    fn approach_matches_closed_form() {
        let p = ControllerParams::default_gains();
        let zero = ee([0.0; 3], [0.0; 3]);
        let mut v = HandVelocity::default();
        let mut worst: f64 = 0.0;
        for k in 1..=10_000 {
            let u = grasp_command(&p, &zero).unwrap();
            v = velocity_dynamics_step(&v, &u, &p, 1e-3).unwrap();
            worst = worst.max((v.linear.z - approach_velocity(&p, k as f64 * 1e-3)).abs());
        }
        assert!(worst <= 1e-4, "{worst}");
    }

    #[test]
    fn steady_state_predictions() {
        let p = ControllerParams::default_gains();
        let w = ContactWorld::default();
        let s = predicted_steady_state(&p, &w).unwrap();
        assert_eq!(s.f_zf, -2.5);
        assert!((s.tau_zf + 0.0625).abs() < 1e-15);
        assert_eq!(s.v_free, 0.0055);
        assert_eq!(s.omega_z_unmodified, None);
        let with_tau = ControllerParams { tau_dz: Some(-0.0625), ..p };
        assert_eq!(predicted_steady_state(&with_tau, &w).unwrap().omega_z_unmodified, Some(-0.0625));
        let stiff = ControllerParams { alpha_vz: 1e12, ..p };
        assert!(predicted_steady_state(&stiff, &w).unwrap().f_zf.abs() < 1e-11);
        let bad = ControllerParams { alpha_vz: 0.0, ..p };
        assert!(predicted_steady_state(&bad, &w).is_err());
    }

    #[test]
    fn equilibrium_wrench_zeroes_every_command() {
        let p = ControllerParams::default_gains();
        let s = predicted_steady_state(&p, &ContactWorld::default()).unwrap();
        let u = grasp_command(&p, &s.wrench()).unwrap();
        assert_eq!(u.linear, Vec3::zeros());
        assert!(u.angular.amax() < 1e-17);
        let rest = velocity_dynamics_step(&HandVelocity::default(), &u, &p, 1e-3).unwrap();
        assert!(rest.linear.amax() == 0.0 && rest.angular.amax() < 1e-19);
    }

    #[test]
    fn param_validation() {
        assert!(ControllerParams::default_gains().validate().is_ok());
        let p = ControllerParams { b_wy: 0.0, ..ControllerParams::default_gains() };
        assert!(p.validate().is_err());
        let p = ControllerParams { alpha_vz: -0.1, ..ControllerParams::default_gains() };
        assert!(p.validate().is_err());
        let p = ControllerParams { tau_dz: Some(f64::NAN), ..ControllerParams::default_gains() };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn command_is_affine_in_wrench(
            a in prop::array::uniform6(-5.0f64..5.0),
            b in prop::array::uniform6(-5.0f64..5.0),
        ) {
            let p = ControllerParams::default_gains();
            let wa = Wrench::from_stacked(&a.into(), Frame::EndEffector);
            let wb = Wrench::from_stacked(&b.into(), Frame::EndEffector);
            let sum = Wrench::from_stacked(&(wa.stacked() + wb.stacked()), Frame::EndEffector);
            let z = grasp_command(&p, &Wrench::zero(Frame::EndEffector)).unwrap();
            let ua = grasp_command(&p, &wa).unwrap();
            let ub = grasp_command(&p, &wb).unwrap();
            let us = grasp_command(&p, &sum).unwrap();
            // u(a + b) = u(a) + u(b) − u(0)
            prop_assert!((us.linear - (ua.linear + ub.linear - z.linear)).amax() < 1e-12);
            prop_assert!((us.angular - (ua.angular + ub.angular - z.angular)).amax() < 1e-12);
        }

        #[test]
        fn zero_set_is_unique(w in prop::array::uniform6(-5.0f64..5.0)) {
            let p = ControllerParams::default_gains();
            let s = predicted_steady_state(&p, &ContactWorld::default()).unwrap();
            let w = Wrench::from_stacked(&w.into(), Frame::EndEffector);
            let u = grasp_command(&p, &w).unwrap();
            let off = (w.stacked() - s.wrench().stacked()).amax();
            if off > 1e-6 {
                prop_assert!(u.linear.amax().max(u.angular.amax()) > 0.0);
            }
        }
    }
}
