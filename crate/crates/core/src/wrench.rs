//! Force/torque pairs tagged with the frame they are expressed in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Mat3, Vec3, Vec6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Base,
    EndEffector,
}

impl Frame {
    /// Column-name prefix used in CSV output.
    pub fn prefix(self) -> &'static str {
        match self {
            Frame::Base => "base",
            Frame::EndEffector => "ee",
        }
    }
}

/// Channel names in stacking order.
pub const CHANNELS: [&str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    /// N
    pub force: Vec3,
    /// N·m
    pub torque: Vec3,
    pub frame: Frame,
}

impl Wrench {
    pub fn new(force: Vec3, torque: Vec3, frame: Frame) -> Result<Self> {
        if !math::all_finite(force.as_slice()) || !math::all_finite(torque.as_slice()) {
            return Err(Error::invalid("wrench components must be finite"));
        }
        Ok(Wrench { force, torque, frame })
    }

    pub fn zero(frame: Frame) -> Self {
        Wrench { force: Vec3::zeros(), torque: Vec3::zeros(), frame }
    }

    /// Splits a stacked `(f; τ)` vector.
    pub fn from_stacked(v: &Vec6, frame: Frame) -> Self {
        Wrench {
            force: v.fixed_rows::<3>(0).into_owned(),
            torque: v.fixed_rows::<3>(3).into_owned(),
            frame,
        }
    }

    pub fn stacked(&self) -> Vec6 {
        Vec6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn expect_frame(&self, expected: Frame) -> Result<()> {
        if self.frame != expected {
            return Err(Error::FrameMismatch { expected, found: self.frame });
        }
        Ok(())
    }

    /// CSV header fragment such as `ee_fx,ee_fy,...`.
    pub fn csv_header(frame: Frame) -> alloc::string::String {
        let mut s = alloc::string::String::new();
        for (i, c) in CHANNELS.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(frame.prefix());
            s.push('_');
            s.push_str(c);
        }
        s
    }
}

fn rotation_deviation(r: &Mat3) -> f64 {
    let ortho = (r.transpose() * r - Mat3::identity()).amax();
    ortho.max(math::abs(r.determinant() - 1.0))
}

/// Rotates a base-frame wrench into the end-effector frame with the
/// block-diagonal `diag(R, R)`, where `r_base_to_ee` maps base coordinates into
/// end-effector coordinates.
pub fn transform_wrench(r_base_to_ee: &Mat3, w: &Wrench) -> Result<Wrench> {
    w.expect_frame(Frame::Base)?;
    rotate(r_base_to_ee, w, Frame::EndEffector)
}

/// Inverse of [`transform_wrench`]: `r_base_to_ee` is the same matrix, its
/// transpose is applied.
pub fn transform_wrench_to_base(r_base_to_ee: &Mat3, w: &Wrench) -> Result<Wrench> {
    w.expect_frame(Frame::EndEffector)?;
    rotate(&r_base_to_ee.transpose(), w, Frame::Base)
}

fn rotate(r: &Mat3, w: &Wrench, to: Frame) -> Result<Wrench> {
    let deviation = rotation_deviation(r);
    if !(deviation <= 1e-8) {
        return Err(Error::InvalidRotation { deviation });
    }
    Ok(Wrench { force: r * w.force, torque: r * w.torque, frame: to })
}

/// Per-axis dead-band: components with magnitude strictly below the
/// threshold read as zero, everything else passes untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFilter {
    thresholds: [f64; 6],
}

impl ThresholdFilter {
    pub const DEFAULT_FORCE: f64 = 0.2;
    pub const DEFAULT_TORQUE: f64 = 0.02;

    pub fn new(thresholds: [f64; 6]) -> Result<Self> {
        if thresholds.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("thresholds must be finite and non-negative"));
        }
        Ok(ThresholdFilter { thresholds })
    }

    pub fn uniform(force: f64, torque: f64) -> Result<Self> {
        Self::new([force, force, force, torque, torque, torque])
    }

    pub fn thresholds(&self) -> &[f64; 6] {
        &self.thresholds
    }

    pub fn apply(&self, w: &Wrench) -> Wrench {
        let mut v = w.stacked();
        for (x, t) in v.iter_mut().zip(&self.thresholds) {
            if math::abs(*x) < *t {
                *x = 0.0;
            }
        }
        Wrench::from_stacked(&v, w.frame)
    }
}

impl Default for ThresholdFilter {
    fn default() -> Self {
        Self::uniform(Self::DEFAULT_FORCE, Self::DEFAULT_TORQUE).unwrap()
    }
}

pub fn apply_threshold(filter: &ThresholdFilter, w: &Wrench) -> Wrench {
    filter.apply(w)
}

/// True when every axis carrying both force and motion has them opposed.
pub fn contact_sign_check(f: &Vec3, v: &Vec3) -> bool {
    f.iter()
        .zip(v.iter())
        .all(|(&fi, &vi)| fi == 0.0 || vi == 0.0 || math::signum0(fi) == -math::signum0(vi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;

    fn base(f: [f64; 3], t: [f64; 3]) -> Wrench {
        Wrench::new(Vec3::from(f), Vec3::from(t), Frame::Base).unwrap()
    }

    fn rotation(roll: f64, pitch: f64, yaw: f64) -> Mat3 {
        *nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw).matrix()
    }

    #[test]
    fn identity_transform_flips_frame_only() {
        let w = base([1.0, -2.0, 3.0], [0.1, 0.2, -0.3]);
        let e = transform_wrench(&Mat3::identity(), &w).unwrap();
        assert_eq!(e.frame, Frame::EndEffector);
        assert_eq!(e.force, w.force);
        assert_eq!(e.torque, w.torque);
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let e = transform_wrench(&r, &base([1.0, 0.0, 0.0], [0.0; 3])).unwrap();
        // Oracle: explicit row-by-column product.
        let f = [1.0, 0.0, 0.0];
        for row in 0..3 {
            let expect: f64 = (0..3).map(|k| r[(row, k)] * f[k]).sum();
            assert_eq!(e.force[row], expect);
        }
        assert_eq!(e.force, Vec3::new(0.0, 1.0, 0.0));
        let rz = rotation(0.0, 0.0, FRAC_PI_2);
        assert!((rz - r).amax() < 1e-15);
    }

    #[test]
    fn rejects_non_rotation_and_wrong_frame() {
        let w = base([1.0, 0.0, 0.0], [0.0; 3]);
        let scaled = Mat3::identity() * 1.01;
        assert!(matches!(transform_wrench(&scaled, &w), Err(Error::InvalidRotation { .. })));
        let reflect = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(transform_wrench(&reflect, &w).is_err());
        let ee = Wrench::zero(Frame::EndEffector);
        assert!(matches!(
            transform_wrench(&Mat3::identity(), &ee),
            Err(Error::FrameMismatch { .. })
        ));
        assert!(Wrench::new(Vec3::new(f64::NAN, 0.0, 0.0), Vec3::zeros(), Frame::Base).is_err());
    }

    #[test]
    fn threshold_cases() {
        let f = ThresholdFilter::uniform(0.1, 0.1).unwrap();
        let small = base([0.05, -0.09, 0.0], [0.01, 0.0, -0.02]);
        assert_eq!(f.apply(&small).stacked(), Vec6::zeros());

        let edge = base([0.1, -0.1, 0.0], [0.0; 3]);
        assert_eq!(f.apply(&edge).force, Vec3::new(0.1, -0.1, 0.0));

        let mixed = base([0.05, 0.2, -3.0], [0.5, -0.05, 0.1]);
        let out = f.apply(&mixed).stacked();
        assert_eq!(out, Vec6::new(0.0, 0.2, -3.0, 0.5, 0.0, 0.1));
        assert!(ThresholdFilter::uniform(-0.1, 0.1).is_err());
        assert!(ThresholdFilter::uniform(0.1, f64::NAN).is_err());
    }

    #[test]
    fn sign_check_cases() {
        assert!(contact_sign_check(&Vec3::new(0.0, 0.0, -2.5), &Vec3::new(0.0, 0.0, 0.0055)));
        assert!(contact_sign_check(&Vec3::zeros(), &Vec3::new(1.0, -2.0, 3.0)));
        assert!(!contact_sign_check(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn csv_header_prefix() {
        assert_eq!(Wrench::csv_header(Frame::EndEffector), "ee_fx,ee_fy,ee_fz,ee_tx,ee_ty,ee_tz");
    }

    fn arb_wrench() -> impl Strategy<Value = Wrench> {
        prop::array::uniform6(-50.0f64..50.0)
            .prop_map(|v| Wrench::from_stacked(&Vec6::from_column_slice(&v), Frame::Base))
    }

    proptest! {
        #[test]
        fn transform_preserves_norms_and_inverts(
            w in arb_wrench(),
            a in -3.2f64..3.2, b in -1.5f64..1.5, c in -3.2f64..3.2,
        ) {
            let r = rotation(a, b, c);
            let e = transform_wrench(&r, &w).unwrap();
            prop_assert!((e.force.norm() - w.force.norm()).abs() < 1e-12);
            prop_assert!((e.torque.norm() - w.torque.norm()).abs() < 1e-12);
            let back = transform_wrench_to_base(&r, &e).unwrap();
            prop_assert!((back.stacked() - w.stacked()).amax() < 1e-12);
        }

        #[test]
        fn threshold_idempotent_and_sign_preserving(
            w in arb_wrench(),
            th in prop::array::uniform6(0.0f64..20.0),
        ) {
            let f = ThresholdFilter::new(th).unwrap();
            let once = f.apply(&w);
            prop_assert_eq!(f.apply(&once), once);
            for (o, i) in once.stacked().iter().zip(w.stacked().iter()) {
                prop_assert!(*o == 0.0 || o == i);
            }
        }
    }
}
