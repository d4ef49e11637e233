//! Signed distance fields: closed-form primitives, the neural field, the
//! joint object + ground field and zero-level-set extraction.

mod analytic;
mod mesh;
mod neural;

use alloc::vec::Vec;
use thiserror::Error;

use crate::math::Vec3;

pub use analytic::{eval_analytic, Shape};
pub use mesh::{extract_mesh, Bounds, Mesh};
pub use neural::{NeuralSdf, NeuralSdfConfig, SdfBatch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdfError {
    #[error("ellipsoid semi-axes must be positive and finite")]
    InvalidAxes,
    #[error("ground up vector must be unit length")]
    InvalidUp,
    #[error("grid resolution must be at least 2")]
    InvalidResolution,
}

/// Field value `δ`, gradient `∇φ` (not necessarily unit) and geometry feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfEval {
    pub delta: f64,
    pub normal: Vec3,
    pub feature: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundPlane {
    pub height: f64,
    pub up: Vec3,
}

impl GroundPlane {
    pub fn new(height: f64, up: Vec3) -> Result<Self, SdfError> {
        if (up.norm() - 1.0).abs() > 1e-9 {
            return Err(SdfError::InvalidUp);
        }
        Ok(GroundPlane { height, up })
    }

    pub fn distance(&self, x: Vec3) -> f64 {
        self.up.dot(x) - self.height
    }
}

/// Ellipsoid prior for the geometric initialization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipsoidInit {
    pub center: Vec3,
    pub semi_axes: Vec3,
}

impl EllipsoidInit {
    pub fn new(center: Vec3, semi_axes: Vec3) -> Result<Self, SdfError> {
        if !(semi_axes.min_elem() > 0.0) || !semi_axes.is_finite() || !center.is_finite() {
            return Err(SdfError::InvalidAxes);
        }
        Ok(EllipsoidInit { center, semi_axes })
    }

    /// Half extents of an axis-aligned box.
    pub fn from_box(min: Vec3, max: Vec3) -> Result<Self, SdfError> {
        EllipsoidInit::new((min + max) * 0.5, (max - min) * 0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointBranch {
    Object,
    Ground,
}

/// Which branch of `min(δ_object, δ_ground)` wins; the object wins ties.
pub fn joint_branch(object_delta: f64, ground_delta: f64) -> JointBranch {
    if ground_delta < object_delta {
        JointBranch::Ground
    } else {
        JointBranch::Object
    }
}

/// Pointwise minimum of the object field and the ground plane. The winning
/// branch supplies the normal and feature; the ground branch emits
/// `ground_feature`.
pub fn eval_joint(object: SdfEval, ground: &GroundPlane, ground_feature: &[f64], x: Vec3) -> (SdfEval, JointBranch) {
    let dg = ground.distance(x);
    match joint_branch(object.delta, dg) {
        JointBranch::Object => (object, JointBranch::Object),
        JointBranch::Ground => (SdfEval { delta: dg, normal: ground.up, feature: ground_feature.to_vec() }, JointBranch::Ground),
    }
}
