//! Symmetry-aware neural surface reconstruction.
//!
//! A signed-distance-field volume renderer with a Phong-factorized appearance
//! model and learnable symmetry transforms applied as soft constraints through
//! the loss. Everything here is pure computation over `alloc`; file formats,
//! the command line and the training driver live in the `symsurf` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod appearance;
pub mod camera;
pub mod init;
pub mod losses;
pub mod math;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod render;
pub mod scene;
pub mod sdf;
pub mod symmetry;
pub mod train;

pub use math::{Mat3, Mat4, Vec3};
