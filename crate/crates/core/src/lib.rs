//! Gaze-contingent redirected walking: geometry, foveated compositing,
//! eye-event detection, the redirection controller and a seeded simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod foveation;
pub mod geometry;
pub mod harness;
pub mod simuser;
pub mod suppression;
