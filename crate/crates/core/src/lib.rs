//! Tactile grasping from joint-torque sensing.
//!
//! The crate recovers a six-axis end-effector wrench from biased joint
//! torque readings (learned bias removal, Jacobian pseudoinverse, frame
//! change, dead-band filter), drives the hand with force/torque feedback
//! velocity commands, and simulates the whole loop against a spring and
//! friction contact model.
//!
//! It is `no_std` with `alloc`; disable the default `std` feature to build
//! for bare targets. IO, configuration and the command-line tool live in
//! the `tactile-grasp` crate.

#![cfg_attr(not(feature = "std"), no_std)]
extern crate alloc;

pub mod arm;
pub mod calibration;
pub mod contact;
pub mod controller;
pub mod error;
pub mod math;
pub mod sim;
pub mod wrench;

pub use error::{Error, Result};
