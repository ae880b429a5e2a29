//! Six-joint serial arm: forward kinematics, geometric Jacobian and the
//! joint-torque ↔ end-effector wrench maps.
//!
//! Links follow the standard Denavit–Hartenberg convention: each row is
//! `(a, α, d, θ_offset)` and link `i` contributes
//! `Rot_z(q_i + θ_offset) · Trans_z(d) · Trans_x(a) · Rot_x(α)`.

use core::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix4, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Mat3, Mat4, Mat6, Vec3, Vec6};
use crate::wrench::{Frame, Wrench};

pub const JOINTS: usize = 6;

/// Guard: `σ_min < SINGULAR_RATIO · σ_max` is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhLink {
    /// Link length `a` (m).
    pub length: f64,
    /// Link twist `α` (rad).
    pub twist: f64,
    /// Link offset `d` (m).
    pub offset: f64,
    /// Constant added to the joint angle (rad).
    pub angle_offset: f64,
}

impl DhLink {
    pub const fn new(length: f64, twist: f64, offset: f64, angle_offset: f64) -> Self {
        DhLink { length, twist, offset, angle_offset }
    }

    fn transform(&self, q: f64) -> Mat4 {
        let (st, ct) = (math::sin(q + self.angle_offset), math::cos(q + self.angle_offset));
        let (sa, ca) = (math::sin(self.twist), math::cos(self.twist));
        Matrix4::new(
            ct, -st * ca, st * sa, self.length * ct, //
            st, ct * ca, -ct * sa, self.length * st, //
            0.0, sa, ca, self.offset, //
            0.0, 0.0, 0.0, 1.0,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    links: [DhLink; JOINTS],
}

impl ArmModel {
    pub fn new(links: [DhLink; JOINTS]) -> Result<Self> {
        for (i, l) in links.iter().enumerate() {
            if !math::all_finite(&[l.length, l.twist, l.offset, l.angle_offset]) {
                return Err(Error::invalid(alloc::format!("link {i} has non-finite parameters")));
            }
            if l.length < 0.0 {
                return Err(Error::invalid(alloc::format!("link {i} has negative length")));
            }
        }
        Ok(ArmModel { links })
    }

    /// The shipped desk-scale arm: six links, twists of ±π/2 on the
    /// non-parallel joints, lengths and offsets between 0.15 and 0.30 m.
    pub fn default_six_dof() -> Self {
        ArmModel {
            links: [
                DhLink::new(0.15, FRAC_PI_2, 0.25, 0.0),
                DhLink::new(0.30, 0.0, 0.0, 0.0),
                DhLink::new(0.15, FRAC_PI_2, 0.0, 0.0),
                DhLink::new(0.0, -FRAC_PI_2, 0.25, 0.0),
                DhLink::new(0.0, FRAC_PI_2, 0.0, 0.0),
                DhLink::new(0.0, 0.0, 0.18, 0.0),
            ],
        }
    }

    /// Well-conditioned starting configuration for [`ArmModel::default_six_dof`].
    pub const DEFAULT_HOME: [f64; JOINTS] = [0.0, 0.6, -1.2, 0.0, 0.9, 0.0];

    pub fn links(&self) -> &[DhLink; JOINTS] {
        &self.links
    }

    /// Cumulative transforms `T_0^i` for i = 0..=6 (identity first).
    fn chain(&self, q: &[f64; JOINTS]) -> Result<[Mat4; JOINTS + 1]> {
        if !math::all_finite(q) {
            return Err(Error::invalid("joint angles must be finite"));
        }
        let mut frames = [Mat4::identity(); JOINTS + 1];
        for i in 0..JOINTS {
            frames[i + 1] = frames[i] * self.links[i].transform(q[i]);
        }
        Ok(frames)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: [f64; JOINTS],
    pub qdot: [f64; JOINTS],
}

impl JointState {
    /// Builds a state with angles wrapped into (−π, π].
    pub fn new(q: [f64; JOINTS], qdot: [f64; JOINTS]) -> Result<Self> {
        if !math::all_finite(&q) || !math::all_finite(&qdot) {
            return Err(Error::invalid("joint state must be finite"));
        }
        Ok(JointState { q: q.map(math::wrap_angle), qdot })
    }

    /// Per-joint movement direction in {−1, 0, +1}.
    pub fn direction(&self) -> [f64; JOINTS] {
        movement_direction(&self.qdot)
    }
}

/// Joint speeds below this are treated as standing still (rad/s).
pub const DIRECTION_DEADBAND: f64 = 1e-3;

/// Sign of each joint velocity, with speeds under [`DIRECTION_DEADBAND`]
/// mapped to 0.
pub fn movement_direction(qdot: &[f64; JOINTS]) -> [f64; JOINTS] {
    qdot.map(|v| if math::abs(v) < DIRECTION_DEADBAND { 0.0 } else { math::signum0(v) })
}

/// End-effector pose in the base frame. `rotation` has the end-effector axes
/// as columns, so it maps end-effector coordinates into base coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub position: Vec3,
}

impl Pose {
    /// Rotation taking base-frame vectors into the end-effector frame.
    pub fn base_to_ee(&self) -> Mat3 {
        self.rotation.transpose()
    }

    pub fn approach_axis(&self) -> Vec3 {
        self.rotation.column(2).into_owned()
    }
}

pub fn forward_kinematics(model: &ArmModel, q: &[f64; JOINTS]) -> Result<Pose> {
    let t = model.chain(q)?[JOINTS];
    Ok(Pose {
        rotation: t.fixed_view::<3, 3>(0, 0).into_owned(),
        position: t.fixed_view::<3, 1>(0, 3).into_owned(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian(pub Mat6);

impl Jacobian {
    pub fn matrix(&self) -> &Mat6 {
        &self.0
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec6 {
        let mut s = SVD::new(self.0, false, false).singular_values;
        s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Fails when the smallest singular value drops below
    /// [`SINGULAR_RATIO`] times the largest.
    pub fn check_regular(&self) -> Result<()> {
        let s = self.singular_values();
        let ratio = if s[0] > 0.0 { s[JOINTS - 1] / s[0] } else { 0.0 };
        if !(ratio >= SINGULAR_RATIO) {
            return Err(Error::Singular { measure: singularity_measure(self), ratio });
        }
        Ok(())
    }
}

/// Column i is `(z_{i−1} × (p_e − p_{i−1}); z_{i−1})`, referenced at the
/// end-effector origin and expressed in the base frame.
pub fn geometric_jacobian(model: &ArmModel, q: &[f64; JOINTS]) -> Result<Jacobian> {
    let frames = model.chain(q)?;
    let pe: Vec3 = frames[JOINTS].fixed_view::<3, 1>(0, 3).into_owned();
    let mut j = Mat6::zeros();
    for i in 0..JOINTS {
        let z: Vec3 = frames[i].fixed_view::<3, 1>(0, 2).into_owned();
        let p: Vec3 = frames[i].fixed_view::<3, 1>(0, 3).into_owned();
        let lin = z.cross(&(pe - p));
        j.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    Ok(Jacobian(j))
}

/// `sqrt(det(J Jᵀ))`; zero at a singularity.
pub fn singularity_measure(j: &Jacobian) -> f64 {
    let jjt = j.0 * j.0.transpose();
    math::sqrt(jjt.lu().determinant().max(0.0))
}

/// `τ = Jᵀ F` for a base-frame wrench stacked as (force; torque).
pub fn joint_torques_from_wrench(j: &Jacobian, f: &Wrench) -> Result<Vec6> {
    f.expect_frame(Frame::Base)?;
    Ok(j.0.transpose() * f.stacked())
}

/// Recovers the base-frame wrench `F = (J Jᵀ)⁻¹ J τ`.
///
/// Evaluated as the least-squares solution of `Jᵀ F = τ` through a QR
/// factorization of `Jᵀ`, which is algebraically the same expression without
/// squaring the condition number.
pub fn wrench_from_joint_torques(j: &Jacobian, tau_int: &Vec6) -> Result<Wrench> {
    j.check_regular()?;
    let qr = j.0.transpose().qr();
    let rhs = qr.q().transpose() * tau_int;
    let f = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or(Error::Singular { measure: singularity_measure(j), ratio: 0.0 })?;
    Ok(Wrench::from_stacked(&f, Frame::Base))
}

/// Joint velocities realizing a base-frame twist `(v; ω)` at the end effector.
pub fn joint_velocities_from_twist(j: &Jacobian, twist: &Vec6) -> Result<Vec6> {
    j.check_regular()?;
    j.0.lu()
        .solve(twist)
        .ok_or(Error::Singular { measure: singularity_measure(j), ratio: 0.0 })
}
