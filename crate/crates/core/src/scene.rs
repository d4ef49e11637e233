//! Synthetic ground truth: a car-like analytic scene with controllable
//! asymmetries, orbit cameras with random or sector-withheld splits, and a
//! sphere-tracing renderer independent of the volume renderer.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::appearance::phong_compose;
use crate::camera::{pixel_ray, Camera, CameraError};
use crate::init::PointCloud;
use crate::math::{Mat3, Mat4, Vec3};
use crate::render::{sphere_trace, Ray};
use crate::sdf::{GroundPlane, Shape};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

pub const TRACE_STEPS: usize = 256;
pub const TRACE_EPS: f64 = 1e-5;
const TRACE_FAR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("sector width must lie in (0, 360) degrees, got {0}")]
    InvalidSector(f64),
    #[error("need {needed} frames for the split, have {have}")]
    TooFewFrames { needed: usize, have: usize },
    #[error("orbit needs at least one frame")]
    EmptyOrbit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitConfig {
    pub n_frames: usize,
    pub radius: f64,
    pub elevation_deg: f64,
    /// Uniform azimuth / elevation jitter half-width.
    pub jitter_deg: f64,
    /// Azimuth of frame 0, measured from +x toward +y.
    pub azimuth_offset_deg: f64,
    pub width: usize,
    pub height: usize,
    pub fov_x_deg: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            n_frames: 25,
            radius: 2.6,
            elevation_deg: 20.0,
            jitter_deg: 0.0,
            azimuth_offset_deg: 0.0,
            width: 64,
            height: 64,
            fov_x_deg: 40.0,
        }
    }
}

/// Look-at cameras evenly spaced in azimuth around the origin, z up.
pub fn generate_orbit<R: Rng + ?Sized>(cfg: &OrbitConfig, rng: &mut R) -> Result<Vec<Camera>, SceneError> {
    if cfg.n_frames == 0 {
        return Err(SceneError::EmptyOrbit);
    }
    let k = Camera::intrinsics_from_fov(cfg.width, cfg.height, cfg.fov_x_deg);
    let mut out = Vec::with_capacity(cfg.n_frames);
    for i in 0..cfg.n_frames {
        let mut az = cfg.azimuth_offset_deg + 360.0 * i as f64 / cfg.n_frames as f64;
        let mut el = cfg.elevation_deg;
        if cfg.jitter_deg > 0.0 {
            az += rng.random_range(-cfg.jitter_deg..cfg.jitter_deg);
            el += rng.random_range(-cfg.jitter_deg..cfg.jitter_deg);
        }
        let (a, e) = (az.to_radians(), el.to_radians());
        let eye = Vec3::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin()) * cfg.radius;
        out.push(Camera::look_at(eye, Vec3::ZERO, Vec3::Z, k, cfg.width, cfg.height)?);
    }
    Ok(out)
}

fn wrap_degrees(a: f64) -> f64 {
    let r = a - 360.0 * (a / 360.0).floor();
    if r >= 360.0 { 0.0 } else { r }
}

/// Azimuth of the camera centre in degrees, `[0, 360)`.
pub fn camera_azimuth(camera: &Camera) -> f64 {
    let c = camera.center();
    wrap_degrees(c.y.atan2(c.x).to_degrees())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Split {
    Random,
    /// Withholds every camera whose azimuth lies in
    /// `[center − width/2, center + width/2)`.
    Structured { center_deg: f64, width_deg: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitIds {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Frames held out of training (the whole sector for structured splits).
    pub withheld: Vec<usize>,
}

/// Structured: all sector cameras are withheld and `n_test` evenly indexed
/// ones among them form the test set. Random: a uniform holdout of `n_test`.
pub fn make_split<R: Rng + ?Sized>(cameras: &[Camera], split: Split, n_test: usize, rng: &mut R) -> Result<SplitIds, SceneError> {
    match split {
        Split::Random => {
            if cameras.len() <= n_test {
                return Err(SceneError::TooFewFrames { needed: n_test + 1, have: cameras.len() });
            }
            let mut ids: Vec<usize> = (0..cameras.len()).collect();
            ids.shuffle(rng);
            let mut test = ids[..n_test].to_vec();
            let mut train = ids[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            Ok(SplitIds { train, withheld: test.clone(), test })
        }
        Split::Structured { center_deg, width_deg } => {
            if !(width_deg > 0.0 && width_deg < 360.0) {
                return Err(SceneError::InvalidSector(width_deg));
            }
            let lo = center_deg - 0.5 * width_deg;
            let inside = |c: &Camera| wrap_degrees(camera_azimuth(c) - lo) < width_deg;
            let withheld: Vec<usize> = (0..cameras.len()).filter(|&i| inside(&cameras[i])).collect();
            let train: Vec<usize> = (0..cameras.len()).filter(|&i| !inside(&cameras[i])).collect();
            if withheld.len() < n_test || train.is_empty() {
                return Err(SceneError::TooFewFrames { needed: n_test, have: withheld.len() });
            }
            let test = (0..n_test).map(|i| withheld[i * withheld.len() / n_test]).collect();
            Ok(SplitIds { train, test, withheld })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Light {
    /// Unit vector toward the light.
    pub direction: Vec3,
    pub intensity: f64,
    pub ambient: f64,
    pub specular_power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneConfig {
    pub bump: bool,
    pub decal: bool,
    pub symmetric_light: bool,
    pub ground: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig { bump: true, decal: true, symmetric_light: false, ground: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec3,
    pub radius: f64,
}

/// Analytic scene: object SDF, optional ground, piecewise-constant Phong
/// material, one directional light plus ambient, and a sky gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub object: Shape,
    pub ground: Option<GroundPlane>,
    pub bump: Option<Bump>,
    pub decal: bool,
    pub light: Light,
    pub ground_colour: Vec3,
    pub sky_horizon: Vec3,
    pub sky_zenith: Vec3,
    /// Unit normal of the object's mirror plane through the origin, when the
    /// object (without bump and decal) has one.
    pub symmetry_normal: Option<Vec3>,
}

const BODY_CENTER: Vec3 = Vec3::new(0.0, 0.0, -0.12);
const BODY_HALF: Vec3 = Vec3::new(0.28, 0.62, 0.11);
const CABIN_CENTER: Vec3 = Vec3::new(0.0, -0.05, 0.06);
const CABIN_HALF: Vec3 = Vec3::new(0.22, 0.3, 0.08);
const WHEEL_RADIUS: f64 = 0.12;
const GROUND_HEIGHT: f64 = -0.35;

impl SyntheticScene {
    /// Car-like proxy facing +y, mirror-symmetric about `x = 0` apart from
    /// the optional bump (on the −x side) and roof decal.
    pub fn car_proxy(cfg: &SceneConfig) -> Self {
        let mut parts = Vec::new();
        parts.push(Shape::RoundedBox { center: BODY_CENTER, half: BODY_HALF, radius: 0.04 });
        parts.push(Shape::RoundedBox { center: CABIN_CENTER, half: CABIN_HALF, radius: 0.04 });
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                parts.push(Shape::sphere(Vec3::new(0.26 * sx, 0.38 * sy, GROUND_HEIGHT + WHEEL_RADIUS), WHEEL_RADIUS));
            }
        }
        let bump = cfg.bump.then_some(Bump { center: Vec3::new(-0.3, 0.2, -0.06), radius: 0.1 });
        if let Some(b) = bump {
            parts.push(Shape::sphere(b.center, b.radius));
        }
        let dir = if cfg.symmetric_light { Vec3::new(0.0, 0.45, 0.9) } else { Vec3::new(-0.35, 0.45, 0.85) };
        SyntheticScene {
            object: Shape::Union(parts),
            ground: cfg.ground.then_some(GroundPlane { height: GROUND_HEIGHT, up: Vec3::Z }),
            bump,
            decal: cfg.decal,
            light: Light { direction: dir.normalize(), intensity: 0.75, ambient: 0.35, specular_power: 16.0 },
            ground_colour: Vec3::new(0.42, 0.4, 0.36),
            sky_horizon: Vec3::new(0.85, 0.87, 0.9),
            sky_zenith: Vec3::new(0.45, 0.6, 0.85),
            symmetry_normal: Some(Vec3::X),
        }
    }

    /// A single sphere, no ground, uniform grey material.
    pub fn sphere(radius: f64) -> Self {
        SyntheticScene {
            object: Shape::sphere(Vec3::ZERO, radius),
            ground: None,
            bump: None,
            decal: false,
            light: Light { direction: Vec3::new(0.3, 0.4, 0.87).normalize(), intensity: 0.75, ambient: 0.35, specular_power: 16.0 },
            ground_colour: Vec3::splat(0.4),
            sky_horizon: Vec3::new(0.85, 0.87, 0.9),
            sky_zenith: Vec3::new(0.45, 0.6, 0.85),
            symmetry_normal: Some(Vec3::X),
        }
    }

    pub fn object_distance(&self, x: Vec3) -> f64 {
        self.object.distance(x)
    }

    /// Outermost point of the bump along −x.
    pub fn bump_apex(&self) -> Option<Vec3> {
        self.bump.map(|b| b.center - Vec3::X * b.radius)
    }

    /// The bump apex reflected across the object's mirror plane.
    pub fn mirrored_bump_apex(&self) -> Option<Vec3> {
        let n = self.symmetry_normal?;
        self.bump_apex().map(|p| p - n * (2.0 * n.dot(p)))
    }

    /// `(albedo, reflectivity)` at a surface point.
    pub fn material(&self, x: Vec3) -> (Vec3, f64) {
        if self.ground.is_none() && self.bump.is_none() && matches!(self.object, Shape::Sphere { .. }) {
            return (Vec3::splat(0.6), 0.3);
        }
        let body = Shape::RoundedBox { center: BODY_CENTER, half: BODY_HALF, radius: 0.04 }.distance(x);
        let cabin = Shape::RoundedBox { center: CABIN_CENTER, half: CABIN_HALF, radius: 0.04 }.distance(x);
        let wheel = [-1.0, 1.0]
            .iter()
            .flat_map(|sx| [-1.0, 1.0].map(|sy| Vec3::new(0.26 * sx, 0.38 * sy, GROUND_HEIGHT + WHEEL_RADIUS)))
            .map(|c| (x - c).norm() - WHEEL_RADIUS)
            .fold(f64::INFINITY, f64::min);
        let bump = self.bump.map_or(f64::INFINITY, |b| (x - b.center).norm() - b.radius);
        let nearest = body.min(cabin).min(wheel).min(bump);
        if bump == nearest {
            return (Vec3::new(0.12, 0.12, 0.12), 0.1);
        }
        if wheel == nearest {
            return (Vec3::splat(0.08), 0.05);
        }
        if cabin == nearest {
            if self.decal && x.z > CABIN_CENTER.z + CABIN_HALF.z - 0.005 && x.x < -0.04 && x.y.abs() < 0.18 {
                return (Vec3::new(0.95, 0.8, 0.1), 0.2);
            }
            // Dark glass.
            return (Vec3::new(0.15, 0.22, 0.32), 0.6);
        }
        // Body, with a light side stripe on both sides.
        if x.x.abs() > BODY_HALF.x - 0.02 && (x.z - (BODY_CENTER.z + 0.02)).abs() < 0.025 {
            return (Vec3::new(0.9, 0.9, 0.85), 0.3);
        }
        (Vec3::new(0.7, 0.14, 0.1), 0.35)
    }

    pub fn diffuse_shading(&self, n: Vec3) -> f64 {
        self.light.ambient + self.light.intensity * n.dot(self.light.direction).max(0.0)
    }

    pub fn specular_colour(&self, n: Vec3, d: Vec3) -> Vec3 {
        let l = self.light.direction;
        let r = n * (2.0 * n.dot(l)) - l;
        Vec3::splat(self.light.intensity * r.dot(-d).max(0.0).powf(self.light.specular_power))
    }

    /// Phong colour of an object surface point seen along `d`.
    pub fn shade(&self, x: Vec3, n: Vec3, d: Vec3) -> Vec3 {
        let (albedo, refl) = self.material(x);
        phong_compose(self.diffuse_shading(n), albedo, refl, self.specular_colour(n, d))
    }

    /// Colour of a ray that hits nothing within the unit sphere: the flat
    /// ground colour looking down (when there is a ground), sky otherwise.
    pub fn background(&self, d: Vec3) -> Vec3 {
        if self.ground.is_some() && d.z < 0.0 {
            return self.ground_colour;
        }
        let t = d.z.clamp(0.0, 1.0);
        self.sky_horizon * (1.0 - t) + self.sky_zenith * t
    }

    /// Surface samples by Newton projection of uniform box samples.
    pub fn sample_surface<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec3> {
        let lo = Vec3::new(-0.5, -0.8, -0.4);
        let hi = Vec3::new(0.5, 0.8, 0.3);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n && tries < 200 * n.max(1) {
            tries += 1;
            let mut x = Vec3::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y), rng.random_range(lo.z..hi.z));
            for _ in 0..6 {
                let (d, g) = self.object.eval_parts(x);
                x -= g * d;
            }
            if self.object_distance(x).abs() < 1e-4 {
                out.push(x);
            }
        }
        out
    }

    /// Surface cloud with `outlier_fraction` of all points drawn uniformly
    /// from a cube of half-width `outlier_extent`. Returns the cloud and the
    /// outlier label of each point.
    pub fn sample_cloud<R: Rng + ?Sized>(
        &self,
        n_points: usize,
        outlier_fraction: f64,
        outlier_extent: f64,
        rng: &mut R,
    ) -> (PointCloud, Vec<bool>) {
        let n_out = (n_points as f64 * outlier_fraction).round() as usize;
        let mut pts = self.sample_surface(n_points - n_out, rng);
        let mut labels = alloc::vec![false; pts.len()];
        let e = outlier_extent;
        for _ in 0..n_out {
            pts.push(Vec3::new(rng.random_range(-e..e), rng.random_range(-e..e), rng.random_range(-e..e)));
            labels.push(true);
        }
        (PointCloud { points: pts }, labels)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<Vec3>,
    /// Ray distance to the first hit (object or ground); 0 where nothing is hit.
    pub depth: Vec<f64>,
    /// True where the object is hit.
    pub mask: Vec<bool>,
}

/// Result of tracing one ray against the scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSample {
    pub colour: Vec3,
    pub depth: f64,
    pub object: bool,
}

pub fn oracle_ray(scene: &SyntheticScene, origin: Vec3, dir: Vec3) -> OracleSample {
    let ray = Ray { origin, direction: dir, near: 0.0, far: 0.0 };
    let t_ground = scene.ground.and_then(|g| {
        let denom = g.up.dot(dir);
        if denom < 0.0 {
            let t = (g.height - g.up.dot(origin)) / denom;
            (t > 0.0).then_some(t)
        } else {
            None
        }
    });
    let field = |x: Vec3| scene.object_distance(x);
    let limit = t_ground.unwrap_or(TRACE_FAR);
    if let Some(mut t) = sphere_trace(&field, &ray, limit, TRACE_STEPS, TRACE_EPS) {
        // Newton steps along the ray remove the stopping bias at grazing angles.
        for _ in 0..3 {
            let (d, g) = scene.object.eval_parts(ray.at(t));
            let slope = g.dot(dir);
            if slope > -1e-3 {
                break;
            }
            t -= d / slope;
        }
        let x = ray.at(t);
        let (_, n) = scene.object.eval_parts(x);
        return OracleSample { colour: scene.shade(x, n.normalize(), dir), depth: t, object: true };
    }
    match t_ground {
        Some(t) => OracleSample { colour: scene.ground_colour, depth: t, object: false },
        None => OracleSample { colour: scene.background(dir), depth: 0.0, object: false },
    }
}

/// Sphere-traced render with exact depth and a binary object mask.
pub fn oracle_render(scene: &SyntheticScene, camera: &Camera) -> OracleImage {
    let (w, h) = (camera.width, camera.height);
    let mut img = OracleImage { width: w, height: h, rgb: Vec::with_capacity(w * h), depth: Vec::with_capacity(w * h), mask: Vec::with_capacity(w * h) };
    for py in 0..h {
        for px in 0..w {
            let r = pixel_ray(camera, px, py);
            let s = oracle_ray(scene, r.origin, r.direction);
            img.rgb.push(s.colour);
            img.depth.push(s.depth);
            img.mask.push(s.object);
        }
    }
    img
}

/// Applies a world-space rigid motion `g` to a camera (the camera moves with
/// the scene).
pub fn transform_camera(camera: &Camera, g: &Mat4) -> Result<Camera, CameraError> {
    Camera::new(camera.intrinsics, camera.world_to_camera * g.inverse_rigid(), camera.width, camera.height)
}

/// Camera mirrored across the plane `x = 0`, with its image flipped
/// horizontally so the extrinsics stay a rotation.
pub fn mirror_camera_x(camera: &Camera) -> Result<Camera, CameraError> {
    let flip = Mat4::affine(Mat3::diag(Vec3::new(-1.0, 1.0, 1.0)), Vec3::ZERO);
    Camera::new(camera.intrinsics, flip * camera.world_to_camera * flip, camera.width, camera.height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orbit_azimuths_without_jitter() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = OrbitConfig { n_frames: 4, ..OrbitConfig::default() };
        let cams = generate_orbit(&cfg, &mut rng).unwrap();
        let az: Vec<f64> = cams.iter().map(camera_azimuth).collect();
        for (a, e) in az.iter().zip([0.0, 90.0, 180.0, 270.0]) {
            let d = (a - e).rem_euclid(360.0);
            assert!(d.min(360.0 - d) < 1e-9, "{az:?}");
        }
        for c in &cams {
            // Optical axis passes through the origin.
            let o = c.center();
            let f = c.forward();
            assert!((o - f * o.dot(f)).norm() < 1e-9);
        }
    }

    #[test]
    fn jittered_orbit_is_reproducible() {
        let cfg = OrbitConfig { jitter_deg: 5.0, ..OrbitConfig::default() };
        let a = generate_orbit(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = generate_orbit(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn structured_split_of_360_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = OrbitConfig { n_frames: 360, width: 8, height: 8, ..OrbitConfig::default() };
        let cams = generate_orbit(&cfg, &mut rng).unwrap();
        let s = make_split(&cams, Split::Structured { center_deg: 0.0, width_deg: 130.0 }, 8, &mut rng).unwrap();
        assert_eq!(s.withheld.len(), 130);
        assert_eq!(s.test.len(), 8);
        assert_eq!(s.train.len(), 230);
        assert!(s.test.iter().all(|t| s.withheld.contains(t)));
        assert!(make_split(&cams, Split::Structured { center_deg: 0.0, width_deg: 0.0 }, 8, &mut rng).is_err());
        assert!(make_split(&cams, Split::Structured { center_deg: 0.0, width_deg: 360.0 }, 8, &mut rng).is_err());
    }

    #[test]
    fn random_split_is_reproducible() {
        let cfg = OrbitConfig { n_frames: 30, width: 8, height: 8, ..OrbitConfig::default() };
        let cams = generate_orbit(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let a = make_split(&cams, Split::Random, 8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = make_split(&cams, Split::Random, 8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len() + a.test.len(), 30);
    }

    #[test]
    fn sphere_centre_depth_and_misses() {
        let scene = SyntheticScene::sphere(1.0);
        let k = Camera::intrinsics_from_fov(33, 33, 60.0);
        let cam = Camera::look_at(Vec3::new(0.0, -3.0, 0.0), Vec3::ZERO, Vec3::Z, k, 33, 33).unwrap();
        let img = oracle_render(&scene, &cam);
        let c = 16 * 33 + 16;
        assert!((img.depth[c] - 2.0).abs() < 1e-4);
        assert!(img.mask[c]);
        assert!(!img.mask[0]);
        let r = pixel_ray(&cam, 0, 0);
        assert_eq!(img.rgb[0], scene.background(r.direction));
    }

    #[test]
    fn sphere_depth_matches_closed_form() {
        let scene = SyntheticScene::sphere(0.7);
        let k = Camera::intrinsics_from_fov(24, 24, 50.0);
        let cam = Camera::look_at(Vec3::new(1.5, -2.0, 0.8), Vec3::ZERO, Vec3::Z, k, 24, 24).unwrap();
        let img = oracle_render(&scene, &cam);
        for py in 0..24 {
            for px in 0..24 {
                let r = pixel_ray(&cam, px, py);
                let b = r.origin.dot(r.direction);
                let disc = b * b - (r.origin.norm_squared() - 0.49);
                let i = py * 24 + px;
                if disc > 1e-3 {
                    assert!(img.mask[i]);
                    assert!((img.depth[i] - (-b - disc.sqrt())).abs() < 1e-4);
                } else if disc < -1e-3 {
                    assert!(!img.mask[i]);
                }
            }
        }
    }

    #[test]
    fn mirrored_cameras_give_mirrored_images() {
        let cfg = SceneConfig { bump: false, decal: false, symmetric_light: true, ground: true };
        let scene = SyntheticScene::car_proxy(&cfg);
        let k = Camera::intrinsics_from_fov(32, 32, 45.0);
        let cam = Camera::look_at(Vec3::new(1.8, 1.2, 0.9), Vec3::new(0.0, 0.0, -0.1), Vec3::Z, k, 32, 32).unwrap();
        let mir = mirror_camera_x(&cam).unwrap();
        let a = oracle_render(&scene, &cam);
        let b = oracle_render(&scene, &mir);
        let mut worst = 0.0f64;
        for py in 0..32 {
            for px in 0..32 {
                let i = py * 32 + px;
                let j = py * 32 + (31 - px);
                assert_eq!(a.mask[i], b.mask[j], "pixel {px},{py}");
                worst = worst.max((a.rgb[i] - b.rgb[j]).abs().max_elem());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn car_proxy_fits_in_unit_sphere_and_bump_is_asymmetric() {
        let scene = SyntheticScene::car_proxy(&SceneConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = scene.sample_surface(3000, &mut rng);
        assert!(pts.len() == 3000);
        assert!(pts.iter().all(|p| p.norm() < 0.95));
        let apex = scene.bump_apex().unwrap();
        let mirrored = scene.mirrored_bump_apex().unwrap();
        assert!(scene.object_distance(apex).abs() < 1e-9);
        assert!(scene.object_distance(mirrored) > 0.1);
    }

    #[test]
    fn cloud_has_requested_outlier_fraction() {
        let scene = SyntheticScene::car_proxy(&SceneConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (cloud, labels) = scene.sample_cloud(1000, 0.2, 2.0, &mut rng);
        assert_eq!(cloud.len(), 1000);
        assert_eq!(labels.iter().filter(|l| **l).count(), 200);
    }
}
