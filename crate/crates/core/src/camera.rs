//! Pinhole cameras (OpenCV convention: x right, y down, z forward).

use thiserror::Error;

use crate::math::{Mat3, Mat4, Vec3};
use crate::render::Ray;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("focal lengths must be positive")]
    InvalidFocal,
    #[error("extrinsics are not a rigid transform")]
    NotRigid,
    #[error("image size must be positive")]
    EmptyImage,
    #[error("look-at target coincides with the eye or is parallel to up")]
    DegenerateLookAt,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub intrinsics: Mat3,
    pub world_to_camera: Mat4,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(intrinsics: Mat3, world_to_camera: Mat4, width: usize, height: usize) -> Result<Self, CameraError> {
        if !(intrinsics.m[0][0] > 0.0 && intrinsics.m[1][1] > 0.0) {
            return Err(CameraError::InvalidFocal);
        }
        if width == 0 || height == 0 {
            return Err(CameraError::EmptyImage);
        }
        let r = world_to_camera.linear_part();
        let bottom = world_to_camera.m[3];
        if r.orthonormality_error() > 1e-6 || bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(CameraError::NotRigid);
        }
        Ok(Camera { intrinsics, world_to_camera, width, height })
    }

    pub fn intrinsics_from_fov(width: usize, height: usize, fov_x_degrees: f64) -> Mat3 {
        let f = 0.5 * width as f64 / (0.5 * fov_x_degrees.to_radians()).tan();
        Mat3::from_rows([[f, 0.0, 0.5 * width as f64], [0.0, f, 0.5 * height as f64], [0.0, 0.0, 1.0]])
    }

    /// Camera at `eye` looking at `target`, with image up as close to `up` as
    /// possible.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, intrinsics: Mat3, width: usize, height: usize) -> Result<Self, CameraError> {
        let f = (target - eye).try_normalize().ok_or(CameraError::DegenerateLookAt)?;
        let r = f.cross(up).try_normalize().ok_or(CameraError::DegenerateLookAt)?;
        let d = f.cross(r);
        let rot = Mat3::from_rows([r.to_array(), d.to_array(), f.to_array()]);
        Camera::new(intrinsics, Mat4::affine(rot, -(rot * eye)), width, height)
    }

    pub fn rotation(&self) -> Mat3 {
        self.world_to_camera.linear_part()
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation().transpose() * self.world_to_camera.translation_part())
    }

    /// World-space viewing direction of the optical axis.
    pub fn forward(&self) -> Vec3 {
        self.rotation().row(2)
    }

    /// Ray through continuous pixel coordinates `(u, v)`; pixel `(i, j)` has
    /// its centre at `(i + 0.5, j + 0.5)`.
    pub fn ray_through(&self, u: f64, v: f64) -> Ray {
        let k = &self.intrinsics.m;
        let y = (v - k[1][2]) / k[1][1];
        let x = (u - k[0][2] - k[0][1] * y) / k[0][0];
        let dir = (self.rotation().transpose() * Vec3::new(x, y, 1.0)).normalize();
        Ray::new(self.center(), dir)
    }
}

/// Ray through the centre of pixel `(px, py)`.
pub fn pixel_ray(camera: &Camera, px: usize, py: usize) -> Ray {
    camera.ray_through(px as f64 + 0.5, py as f64 + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_point_ray_is_optical_axis() {
        let k = Mat3::from_rows([[50.0, 0.0, 32.0], [0.0, 50.0, 32.0], [0.0, 0.0, 1.0]]);
        let cam = Camera::new(k, Mat4::IDENTITY, 64, 64).unwrap();
        let r = cam.ray_through(32.0, 32.0);
        assert!((r.direction - Vec3::Z).norm() < 1e-15);
        assert_eq!(r.origin, Vec3::ZERO);
    }

    #[test]
    fn look_at_from_plus_z() {
        let k = Camera::intrinsics_from_fov(64, 64, 40.0);
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::ZERO, Vec3::Y, k, 64, 64).unwrap();
        assert!((cam.center() - Vec3::new(0.0, 0.0, 3.0)).norm() < 1e-12);
        let r = cam.ray_through(32.0, 32.0);
        assert!((r.direction + Vec3::Z).norm() < 1e-12);
        assert!((r.near - 2.0).abs() < 1e-12 && (r.far - 4.0).abs() < 1e-12);
        // Image rows grow downward: a pixel above centre looks up (+y).
        assert!(cam.ray_through(32.0, 10.0).direction.y > 0.0);
    }

    #[test]
    fn rejects_bad_cameras() {
        let k = Mat3::from_rows([[0.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]);
        assert!(Camera::new(k, Mat4::IDENTITY, 4, 4).is_err());
        let k = Camera::intrinsics_from_fov(4, 4, 60.0);
        assert!(Camera::new(k, Mat4::IDENTITY.scale(2.0), 4, 4).is_err());
        assert!(Camera::look_at(Vec3::Z, Vec3::ZERO, Vec3::Z, k, 4, 4).is_err());
    }
}
