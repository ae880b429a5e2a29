//! Object-surface model: spring normal force, friction z-torque with a
//! high-friction edge region, finger-elastic lateral forces and
//! misalignment torques.

use serde::{Deserialize, Serialize};

use crate::controller::ControllerParams;
use crate::error::{Error, Result};
use crate::math::{self, Vec3};
use crate::wrench::{Frame, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactWorld {
    /// Undeformed surface position along the approach axis (m).
    pub z0: f64,
    /// Normal stiffness (N/m).
    pub k_z: f64,
    /// Lateral finger stiffness (N/m).
    pub k_x: f64,
    pub k_y: f64,
    pub mu_surface: f64,
    pub mu_edge: f64,
    /// Accumulated z-rotation after first contact at which the edge is reached (rad).
    pub edge_radius: f64,
    /// Lever arm `d` from the rotation axis to the contact (m).
    pub lever_arm: f64,
    /// Torque per radian of misalignment about x and y while in contact (N·m/rad).
    pub k_rx: f64,
    pub k_ry: f64,
}

impl Default for ContactWorld {
    fn default() -> Self {
        ContactWorld {
            z0: 0.0,
            k_z: 500.0,
            k_x: 300.0,
            k_y: 300.0,
            mu_surface: 0.2,
            mu_edge: 0.5,
            edge_radius: 0.35,
            lever_arm: 0.05,
            k_rx: 200.0,
            k_ry: 200.0,
        }
    }
}

impl ContactWorld {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.z0,
            self.k_z,
            self.k_x,
            self.k_y,
            self.mu_surface,
            self.mu_edge,
            self.edge_radius,
            self.lever_arm,
            self.k_rx,
            self.k_ry,
        ];
        if !math::all_finite(&all) {
            return Err(Error::invalid("contact parameters must be finite"));
        }
        if self.k_z <= 0.0 || self.k_x <= 0.0 || self.k_y <= 0.0 {
            return Err(Error::invalid("stiffnesses must be positive"));
        }
        if !(0.0 < self.mu_surface && self.mu_surface < self.mu_edge) {
            return Err(Error::invalid("need 0 < mu_surface < mu_edge"));
        }
        if self.lever_arm <= 0.0 {
            return Err(Error::invalid("lever arm must be positive"));
        }
        if self.edge_radius < 0.0 || self.k_rx < 0.0 || self.k_ry < 0.0 {
            return Err(Error::invalid("edge radius and misalignment stiffness must be non-negative"));
        }
        Ok(())
    }

    pub fn friction_at(&self, rotation_progress: f64) -> f64 {
        if math::abs(rotation_progress) >= self.edge_radius {
            self.mu_edge
        } else {
            self.mu_surface
        }
    }

    /// Wrench the surface exerts on the hand, in the end-effector frame.
    pub fn contact_wrench(&self, z: f64, state: &ContactState) -> Wrench {
        let fz = normal_force(self, z);
        let (fx, fy) = lateral_forces(self, state.dx, state.dy, state.in_contact);
        let (tx, ty) = alignment_torques(self, state.tilt_x, state.tilt_y, state.in_contact);
        let tz = friction_torque_z(self, fz, state.rotation);
        Wrench { force: Vec3::new(fx, fy, fz), torque: Vec3::new(tx, ty, tz), frame: Frame::EndEffector }
    }
}

/// Contact bookkeeping owned by the simulation loop.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactState {
    pub in_contact: bool,
    /// `z − z0` while in contact, zero otherwise (m).
    pub penetration: f64,
    /// z-rotation accumulated since first contact (rad).
    pub rotation: f64,
    /// Lateral fingertip displacement since touch-down (m).
    pub dx: f64,
    pub dy: f64,
    /// Misalignment of the hand with the surface about x and y (rad).
    pub tilt_x: f64,
    pub tilt_y: f64,
}

impl ContactState {
    pub fn with_tilt(tilt_x: f64, tilt_y: f64) -> Self {
        ContactState { tilt_x, tilt_y, ..Default::default() }
    }

    /// Updates contact flags and penetration for approach coordinate `z`.
    pub fn update_penetration(&mut self, world: &ContactWorld, z: f64) {
        let pen = z - world.z0;
        if pen > 0.0 {
            self.in_contact = true;
            self.penetration = pen;
        } else {
            self.in_contact = false;
            self.penetration = 0.0;
            self.dx = 0.0;
            self.dy = 0.0;
        }
    }
}

/// `f_z = −K_z (z − z0)` past the surface, zero before it.
pub fn normal_force(world: &ContactWorld, z: f64) -> f64 {
    if z > world.z0 {
        -world.k_z * (z - world.z0)
    } else {
        0.0
    }
}

/// `τ_z = d μ f_z`, with μ switching to the edge value once the accumulated
/// rotation magnitude reaches `edge_radius`.
pub fn friction_torque_z(world: &ContactWorld, f_z: f64, rotation_progress: f64) -> f64 {
    world.lever_arm * world.friction_at(rotation_progress) * f_z
}

pub fn lateral_forces(world: &ContactWorld, dx: f64, dy: f64, in_contact: bool) -> (f64, f64) {
    if in_contact {
        (-world.k_x * dx, -world.k_y * dy)
    } else {
        (0.0, 0.0)
    }
}

pub fn alignment_torques(world: &ContactWorld, tilt_x: f64, tilt_y: f64, in_contact: bool) -> (f64, f64) {
    if in_contact {
        (-world.k_rx * tilt_x, -world.k_ry * tilt_y)
    } else {
        (0.0, 0.0)
    }
}

/// Whether the modified z-torque law stops rotating at friction `mu`:
/// true iff `β_ωz ≤ d μ`.
pub fn rotation_stops(params: &ControllerParams, world: &ContactWorld, mu: f64) -> bool {
    params.beta_wz <= world.lever_arm * mu
}

/// Rotation halts once the edge region is reached.
pub fn edge_stop_condition(params: &ControllerParams, world: &ContactWorld) -> bool {
    rotation_stops(params, world, world.mu_edge)
}
