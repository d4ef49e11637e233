//! Initial canonical frame from a noisy structure-from-motion point cloud:
//! outlier filtering, up direction from the cameras, a robust 2D line fit on
//! the flattened cloud, and the resulting box, ground height and plane.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::camera::Camera;
use crate::math::{Mat3, Mat4, Vec3};
use crate::sdf::EllipsoidInit;
use crate::symmetry::{RigidFrame, SymmetrySpec};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

pub const FILTER_RADIUS: f64 = 0.2;
pub const MIN_NEIGHBORS: usize = 16;
pub const LINE_THRESHOLD: f64 = 0.05;
pub const RANSAC_ITERS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("filtering removed every point")]
    DegenerateCloud,
    #[error("points are coincident; no line is defined")]
    DegenerateLine,
    #[error("at least one camera is required")]
    NoCameras,
    #[error("camera up vectors cancel out")]
    DegenerateUp,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self, InitError> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(InitError::NonFinite(i));
        }
        Ok(PointCloud { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

type Cell = (i64, i64, i64);

/// Uniform hash grid with cell size equal to the query radius.
struct Grid {
    radius: f64,
    cells: BTreeMap<Cell, Vec<usize>>,
}

impl Grid {
    fn new(points: &[Vec3], radius: f64) -> Self {
        let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::cell(*p, radius)).or_default().push(i);
        }
        Grid { radius, cells }
    }

    fn cell(p: Vec3, r: f64) -> Cell {
        ((p.x / r).floor() as i64, (p.y / r).floor() as i64, (p.z / r).floor() as i64)
    }

    /// Calls `f(j)` for every other point within the radius of point `i`.
    fn for_neighbors(&self, points: &[Vec3], i: usize, mut f: impl FnMut(usize)) {
        let p = points[i];
        let (cx, cy, cz) = Self::cell(p, self.radius);
        let r2 = self.radius * self.radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &j in list {
                            if j != i && (points[j] - p).norm_squared() <= r2 {
                                f(j);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Keeps the largest radius-linked component (ties: the component containing
/// the lowest point index).
fn largest_component(points: &[Vec3], radius: f64) -> Vec<Vec3> {
    let grid = Grid::new(points, radius);
    let mut parent: Vec<usize> = (0..points.len()).collect();
    for i in 0..points.len() {
        grid.for_neighbors(points, i, |j| {
            if j > i {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        });
    }
    let mut size = vec![0usize; points.len()];
    for i in 0..points.len() {
        let r = find(&mut parent, i);
        size[r] += 1;
    }
    let mut best = 0;
    for r in 0..points.len() {
        if size[r] > size[best] {
            best = r;
        }
    }
    (0..points.len()).filter(|&i| find(&mut parent, i) == best).map(|i| points[i]).collect()
}

fn dense_points(points: &[Vec3], radius: f64, min_neighbors: usize) -> Vec<Vec3> {
    let grid = Grid::new(points, radius);
    (0..points.len())
        .filter(|&i| {
            let mut n = 0;
            grid.for_neighbors(points, i, |_| n += 1);
            n >= min_neighbors
        })
        .map(|i| points[i])
        .collect()
}

/// Drops everything outside the largest radius-linked cluster, then points
/// with fewer than `min_neighbors` others within `radius`. Both rules repeat
/// until nothing changes, so the result is a fixed point of the filter.
pub fn filter_cloud(cloud: &PointCloud, radius: f64, min_neighbors: usize) -> Result<PointCloud, InitError> {
    if cloud.is_empty() {
        return Err(InitError::EmptyCloud);
    }
    let mut pts = cloud.points.clone();
    loop {
        let before = pts.len();
        pts = largest_component(&pts, radius);
        pts = dense_points(&pts, radius, min_neighbors);
        if pts.is_empty() {
            return Err(InitError::DegenerateCloud);
        }
        if pts.len() == before {
            return Ok(PointCloud { points: pts });
        }
    }
}

/// Normalized mean of the cameras' image-up axes (`−y` in camera
/// coordinates) expressed in world coordinates.
pub fn estimate_up(cameras: &[Camera]) -> Result<Vec3, InitError> {
    if cameras.is_empty() {
        return Err(InitError::NoCameras);
    }
    let sum = cameras.iter().fold(Vec3::ZERO, |acc, c| acc - c.rotation().row(1));
    sum.try_normalize().ok_or(InitError::DegenerateUp)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line2 {
    pub direction: [f64; 2],
    pub point: [f64; 2],
}

impl Line2 {
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (p[0] - self.point[0], p[1] - self.point[1]);
        (dx * self.direction[1] - dy * self.direction[0]).abs()
    }
}

/// Total-least-squares line through `pts` (principal axis of the covariance).
fn fit_line(pts: &[[f64; 2]]) -> Line2 {
    let n = pts.len() as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for p in pts {
        mx += p[0];
        my += p[1];
    }
    mx /= n;
    my /= n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Line2 { direction: [angle.cos(), angle.sin()], point: [mx, my] }
}

/// RANSAC over two-point samples; the first line reaching the highest inlier
/// count wins, and it is refit to its inliers by least squares.
pub fn ransac_line_2d<R: Rng + ?Sized>(points: &[[f64; 2]], threshold: f64, iters: usize, rng: &mut R) -> Result<Line2, InitError> {
    if points.len() < 2 {
        return Err(InitError::DegenerateLine);
    }
    let first = points[0];
    if points.iter().all(|p| (p[0] - first[0]).abs() < 1e-12 && (p[1] - first[1]).abs() < 1e-12) {
        return Err(InitError::DegenerateLine);
    }
    let mut best: Option<(usize, Line2)> = None;
    for _ in 0..iters {
        let i = rng.random_range(0..points.len());
        let j = rng.random_range(0..points.len());
        let (a, b) = (points[i], points[j]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len < 1e-12 {
            continue;
        }
        let line = Line2 { direction: [dx / len, dy / len], point: a };
        let count = points.iter().filter(|p| line.distance(**p) <= threshold).count();
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, line));
        }
    }
    let (_, line) = best.ok_or(InitError::DegenerateLine)?;
    let inliers: Vec<[f64; 2]> = points.iter().copied().filter(|p| line.distance(*p) <= threshold).collect();
    if inliers.len() < 2 {
        return Ok(line);
    }
    let mut fit = fit_line(&inliers);
    // Keep the sampled orientation so the result does not flip arbitrarily.
    if fit.direction[0] * line.direction[0] + fit.direction[1] * line.direction[1] < 0.0 {
        fit.direction = [-fit.direction[0], -fit.direction[1]];
    }
    Ok(fit)
}

/// Which canonical axis the initial reflection plane is normal to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlaneAxis {
    /// Normal across the fitted line (plane contains the long axis and up);
    /// the right choice for cars.
    #[default]
    X,
    /// Normal along the fitted line.
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalFrame {
    /// World to canonical: `x_c = R x + t`, canonical z is up and canonical y
    /// runs along the fitted line.
    pub world_to_canonical: Mat4,
    pub box_min: Vec3,
    pub box_max: Vec3,
    /// Ground height in canonical coordinates (box bottom).
    pub ground_height: f64,
    /// Reflection plane in canonical coordinates: `n·x = offset`.
    pub plane_normal: Vec3,
    pub plane_offset: f64,
}

impl CanonicalFrame {
    pub fn rotation(&self) -> Mat3 {
        self.world_to_canonical.linear_part()
    }

    pub fn up_world(&self) -> Vec3 {
        self.rotation().row(2)
    }

    pub fn center_world(&self) -> Vec3 {
        let c = (self.box_min + self.box_max) * 0.5;
        self.world_to_canonical.inverse_rigid().transform_point(c)
    }

    pub fn plane_normal_world(&self) -> Vec3 {
        self.rotation().transpose() * self.plane_normal
    }

    /// Ground plane height measured along the world up axis.
    pub fn ground_height_world(&self) -> f64 {
        let origin = self.world_to_canonical.inverse_rigid().transform_point(Vec3::new(0.0, 0.0, self.ground_height));
        origin.dot(self.up_world())
    }

    /// Ellipsoid prior in world coordinates. The box is axis-aligned in the
    /// canonical frame, so it only applies directly when that frame is
    /// axis-aligned with the world; otherwise the bounding sphere of the box
    /// is the conservative choice.
    pub fn ellipsoid_world(&self) -> EllipsoidInit {
        let half = (self.box_max - self.box_min) * 0.5;
        let r = self.rotation();
        // Half-extent of the rotated box along each world axis.
        let rt = r.transpose();
        let ext = Vec3::new(
            rt.row(0).abs().dot(half),
            rt.row(1).abs().dot(half),
            rt.row(2).abs().dot(half),
        );
        EllipsoidInit { center: self.center_world(), semi_axes: ext }
    }

    /// Reflection spec whose canonical frame maps the plane normal to `y`
    /// and up to `z`, centred on the plane.
    pub fn symmetry_spec(&self) -> SymmetrySpec {
        let n = self.plane_normal_world();
        let up = self.up_world();
        let a = n.cross(up).normalize();
        let rot = Mat3::from_rows([a.to_array(), n.to_array(), up.to_array()]);
        let center = self.center_world();
        // Place the plane through the point on it closest to the box centre.
        let on_plane = center - n * (n.dot(center) - self.plane_offset_world());
        let frame = RigidFrame { rotation: rot, translation: -(rot * on_plane) };
        SymmetrySpec::xz_reflection(frame)
    }

    fn plane_offset_world(&self) -> f64 {
        // n_c·(R x + t) = d  ⇔  (Rᵀ n_c)·x = d − n_c·t
        self.plane_offset - self.plane_normal.dot(self.world_to_canonical.translation_part())
    }
}

/// Builds the canonical frame: up from the cameras, RANSAC line on the cloud
/// flattened along up, box fit, ground at the box bottom and the initial
/// reflection plane through the box centre.
pub fn canonical_frame<R: Rng + ?Sized>(
    cloud: &PointCloud,
    cameras: &[Camera],
    axis: PlaneAxis,
    rng: &mut R,
) -> Result<CanonicalFrame, InitError> {
    if cloud.is_empty() {
        return Err(InitError::EmptyCloud);
    }
    let up = estimate_up(cameras)?;
    // Any orthonormal basis of the plane orthogonal to up.
    let helper = if up.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let e1 = (helper - up * helper.dot(up)).normalize();
    let e2 = up.cross(e1);
    let flat: Vec<[f64; 2]> = cloud.points.iter().map(|p| [p.dot(e1), p.dot(e2)]).collect();
    let line = ransac_line_2d(&flat, LINE_THRESHOLD, RANSAC_ITERS, rng)?;
    let mut y = (e1 * line.direction[0] + e2 * line.direction[1]).normalize();
    let mut x = y.cross(up);
    let cam_mean = cameras.iter().fold(Vec3::ZERO, |a, c| a + c.center()) * (1.0 / cameras.len() as f64);
    let centroid = cloud.points.iter().fold(Vec3::ZERO, |a, p| a + *p) * (1.0 / cloud.len() as f64);
    if x.dot(cam_mean - centroid) > 0.0 {
        x = -x;
        y = -y;
    }
    let rot = Mat3::from_rows([x.to_array(), y.to_array(), up.to_array()]);
    let mut lo = Vec3::splat(f64::INFINITY);
    let mut hi = Vec3::splat(f64::NEG_INFINITY);
    for p in &cloud.points {
        let q = rot * *p;
        lo = Vec3::new(lo.x.min(q.x), lo.y.min(q.y), lo.z.min(q.z));
        hi = Vec3::new(hi.x.max(q.x), hi.y.max(q.y), hi.z.max(q.z));
    }
    let c = (lo + hi) * 0.5;
    let world_to_canonical = Mat4::affine(rot, -c);
    let (box_min, box_max) = (lo - c, hi - c);
    let plane_normal = match axis {
        PlaneAxis::X => Vec3::X,
        PlaneAxis::Y => Vec3::Y,
    };
    Ok(CanonicalFrame { world_to_canonical, box_min, box_max, ground_height: box_min.z, plane_normal, plane_offset: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn blob(rng: &mut ChaCha8Rng, n: usize, center: Vec3, sigma: f64) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut *rng);
                let b: f64 = StandardNormal.sample(&mut *rng);
                let c: f64 = StandardNormal.sample(&mut *rng);
                center + Vec3::new(a, b, c) * sigma
            })
            .collect()
    }

    #[test]
    fn distant_clump_is_removed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts = blob(&mut rng, 2000, Vec3::ZERO, 0.1);
        let far = blob(&mut rng, 5, Vec3::new(3.0, 0.0, 0.0), 0.01);
        pts.extend(&far);
        let out = filter_cloud(&PointCloud::new(pts).unwrap(), FILTER_RADIUS, MIN_NEIGHBORS).unwrap();
        assert!(out.points.iter().all(|p| p.x < 1.0));
    }

    #[test]
    fn isolated_point_in_blob_removed_by_neighbor_rule() {
        // A sparse point linked to the blob but with too few neighbours.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = blob(&mut rng, 2000, Vec3::ZERO, 0.05);
        let lone = Vec3::new(0.45, 0.0, 0.0);
        pts.push(lone);
        pts.push(Vec3::new(0.3, 0.0, 0.0));
        let out = filter_cloud(&PointCloud::new(pts).unwrap(), FILTER_RADIUS, MIN_NEIGHBORS).unwrap();
        assert!(!out.points.contains(&lone));
    }

    #[test]
    fn filter_is_idempotent_and_errors_on_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, 800, Vec3::ZERO, 0.2);
        for _ in 0..80 {
            pts.push(Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
        }
        let once = filter_cloud(&PointCloud::new(pts).unwrap(), FILTER_RADIUS, MIN_NEIGHBORS).unwrap();
        let twice = filter_cloud(&once, FILTER_RADIUS, MIN_NEIGHBORS).unwrap();
        assert_eq!(once, twice);
        assert_eq!(filter_cloud(&PointCloud::default(), 0.2, 16), Err(InitError::EmptyCloud));
        let sparse = PointCloud::new(vec![Vec3::ZERO, Vec3::X]).unwrap();
        assert_eq!(filter_cloud(&sparse, 0.2, 16), Err(InitError::DegenerateCloud));
    }

    #[test]
    fn ransac_recovers_collinear_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dir = [0.6f64, 0.8f64];
        let mut pts: Vec<[f64; 2]> = (0..100).map(|i| [1.0 + dir[0] * i as f64 * 0.02, -0.5 + dir[1] * i as f64 * 0.02]).collect();
        pts.push([5.0, -3.0]);
        let line = ransac_line_2d(&pts, LINE_THRESHOLD, RANSAC_ITERS, &mut rng).unwrap();
        let cross = line.direction[0] * dir[1] - line.direction[1] * dir[0];
        assert!(cross.abs() < 1e-6, "{cross}");
    }

    #[test]
    fn ransac_rejects_coincident_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(ransac_line_2d(&[[1.0, 2.0]; 10], 0.05, 100, &mut rng), Err(InitError::DegenerateLine));
        assert_eq!(ransac_line_2d(&[[1.0, 2.0]], 0.05, 100, &mut rng), Err(InitError::DegenerateLine));
    }

    #[test]
    fn ransac_tie_returns_one_of_the_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pts: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 * 0.1, 0.0]).collect();
        pts.extend((0..50).map(|i| [10.0, 5.0 + i as f64 * 0.1]));
        let line = ransac_line_2d(&pts, LINE_THRESHOLD, RANSAC_ITERS, &mut rng).unwrap();
        let horizontal = line.direction[1].abs() < 1e-9;
        let vertical = line.direction[0].abs() < 1e-9;
        assert!(horizontal || vertical);
    }

    fn cams_around(up: Vec3) -> Vec<Camera> {
        let k = Camera::intrinsics_from_fov(64, 64, 40.0);
        let helper = if up.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        let e1 = (helper - up * helper.dot(up)).normalize();
        let e2 = up.cross(e1);
        (0..12)
            .map(|i| {
                let a = i as f64 * core::f64::consts::TAU / 12.0;
                let eye = (e1 * a.cos() + e2 * a.sin()) * 3.0 + up * 1.0;
                Camera::look_at(eye, Vec3::ZERO, up, k, 64, 64).unwrap()
            })
            .collect()
    }

    #[test]
    fn upright_cameras_give_world_up() {
        let up = estimate_up(&cams_around(Vec3::Z)).unwrap();
        // Cameras tilt down toward the target, so their up axes tilt; the
        // orbit average cancels the horizontal part.
        assert!((up - Vec3::Z).norm() < 1e-9, "{up:?}");
        assert_eq!(estimate_up(&[]), Err(InitError::NoCameras));
    }

    fn box_surface(rng: &mut ChaCha8Rng, half: Vec3, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                let face = rng.random_range(0..6);
                let mut p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let axis = face / 2;
                p = Vec3::from_array({
                    let mut a = p.to_array();
                    a[axis] = if face % 2 == 0 { 1.0 } else { -1.0 };
                    a
                });
                p.mul_elem(half)
            })
            .collect()
    }

    #[test]
    fn axis_aligned_box_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = box_surface(&mut rng, Vec3::new(0.3, 0.8, 0.25), 5000);
        let cloud = PointCloud::new(pts).unwrap();
        let f = canonical_frame(&cloud, &cams_around(Vec3::Z), PlaneAxis::X, &mut rng).unwrap();
        assert!((f.up_world() - Vec3::Z).norm() < 1e-9);
        let y = f.rotation().row(1);
        assert!(y.y.abs() > (2.0f64).to_radians().cos(), "{y:?}");
        assert!((f.ground_height - (-0.25)).abs() < 0.02);
        assert!(f.box_min.x < f.box_max.x && f.box_min.y < f.box_max.y && f.box_min.z < f.box_max.z);
    }

    #[test]
    fn rotated_box_frame_undoes_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rz = Mat3::rotation(Vec3::Z, 30f64.to_radians());
        let pts: Vec<Vec3> = box_surface(&mut rng, Vec3::new(0.3, 0.8, 0.25), 5000).into_iter().map(|p| rz * p).collect();
        let f = canonical_frame(&PointCloud::new(pts).unwrap(), &cams_around(Vec3::Z), PlaneAxis::X, &mut rng).unwrap();
        let y = f.rotation().row(1);
        let long = rz * Vec3::Y;
        assert!(y.dot(long).abs() > (2.0f64).to_radians().cos());
        let n = f.plane_normal_world();
        assert!(n.dot(rz * Vec3::X).abs() > (2.0f64).to_radians().cos());
    }

    #[test]
    fn symmetry_spec_reflects_across_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rz = Mat3::rotation(Vec3::Z, 0.4);
        let shift = Vec3::new(0.1, -0.05, 0.0);
        let pts: Vec<Vec3> = box_surface(&mut rng, Vec3::new(0.3, 0.8, 0.25), 4000).into_iter().map(|p| rz * p + shift).collect();
        let f = canonical_frame(&PointCloud::new(pts).unwrap(), &cams_around(Vec3::Z), PlaneAxis::X, &mut rng).unwrap();
        let m = f.symmetry_spec().compose_canonical().unwrap();
        // A point offset across the box's lateral axis maps to its mirror.
        let lateral = rz * Vec3::X;
        let p = shift + lateral * 0.2 + Vec3::Z * 0.1;
        let q = m.transform_point(p);
        assert!((q - (shift - lateral * 0.2 + Vec3::Z * 0.1)).norm() < 0.02, "{q:?}");
    }
}
