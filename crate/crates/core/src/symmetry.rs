//! Symmetry transformations `T_c⁻¹ S T_c`: a canonical-frame symmetry `S`
//! conjugated by a learnable rigid frame `T_c` (world → canonical).
//!
//! Points are transformed with the full homogeneous matrix. Directions are
//! points at infinity, so only the linear part applies and translation has no
//! effect.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::math::{Mat3, Mat4, Vec3};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("invalid rigid frame: orthonormality error {0:.3e}")]
    InvalidFrame(f64),
    #[error("direction has zero length")]
    InvalidDirection,
    #[error("field `{0}` must be a unit vector")]
    NonUnitField(&'static str),
    #[error("invalid parameter `{0}`")]
    InvalidParameter(&'static str),
    #[error("symmetry set is empty")]
    EmptySet,
    #[error("variant `{0}` is random; a draw is required")]
    DrawRequired(&'static str),
    #[error("draw does not match variant `{0}`")]
    DrawMismatch(&'static str),
    #[error("cannot parse symmetry record: {0}")]
    Parse(String),
}

/// World → canonical rigid transform `T_c = [[R_c, t_c], [0, 1]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidFrame {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidFrame {
    fn default() -> Self {
        RigidFrame::identity()
    }
}

impl RigidFrame {
    pub fn identity() -> Self {
        RigidFrame { rotation: Mat3::IDENTITY, translation: Vec3::ZERO }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, SymmetryError> {
        let frame = RigidFrame { rotation, translation };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), SymmetryError> {
        let err = self.rotation.orthonormality_error();
        if err > UNIT_TOL || !self.translation.is_finite() {
            return Err(SymmetryError::InvalidFrame(err));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Mat4 {
        Mat4::affine(self.rotation, self.translation)
    }

    pub fn inverse_matrix(&self) -> Mat4 {
        self.matrix().inverse_rigid()
    }

    /// Composes an axis-angle increment onto the rotation (`R ← exp([ω]×) R`) and
    /// re-orthonormalizes.
    pub fn apply_increment(&mut self, omega: Vec3, translation: Vec3) {
        self.rotation = (Mat3::exp_so3(omega) * self.rotation).orthonormalize();
        self.translation = translation;
    }
}

/// Symmetry type and its canonical-frame parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymmetryVariant {
    /// `x' = x − 2n(nᵀx − Δ)`.
    PlanarReflection { normal: Vec3, offset: f64 },
    /// Reflection through the line with direction `direction` crossing the
    /// perpendicular plane at `plane_offset` (plane coordinates).
    LineReflection { direction: Vec3, plane_offset: [f64; 2] },
    /// `x' = −x + 2p`.
    PointReflection { center: Vec3 },
    /// `order`-fold rotation about an axis; one of the `order` images is drawn.
    Rotation { point: Vec3, axis: Vec3, order: u32 },
    /// Random rotation about a centre.
    Spherical { center: Vec3 },
    Translation { offset: Vec3 },
    Scale { sx: f64, sy: f64 },
}

impl SymmetryVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SymmetryVariant::PlanarReflection { .. } => "planar_reflection",
            SymmetryVariant::LineReflection { .. } => "line_reflection",
            SymmetryVariant::PointReflection { .. } => "point_reflection",
            SymmetryVariant::Rotation { .. } => "rotation",
            SymmetryVariant::Spherical { .. } => "spherical",
            SymmetryVariant::Translation { .. } => "translation",
            SymmetryVariant::Scale { .. } => "scale",
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, SymmetryVariant::Rotation { .. } | SymmetryVariant::Spherical { .. })
    }

    pub fn is_reflection(&self) -> bool {
        matches!(
            self,
            SymmetryVariant::PlanarReflection { .. }
                | SymmetryVariant::LineReflection { .. }
                | SymmetryVariant::PointReflection { .. }
        )
    }

    /// Everything except scaling preserves distances.
    pub fn is_isometry(&self) -> bool {
        !matches!(self, SymmetryVariant::Scale { .. })
    }
}

/// The random choice made for rotation / spherical variants.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum SymmetryDraw {
    #[default]
    Fixed,
    /// Rotation by `k·θ`, `k ∈ {1..order}`.
    RotationStep(u32),
    Angles { alpha: f64, beta: f64 },
}

/// A realized symmetry map (draw already taken).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryTransform {
    pub matrix: Mat4,
    pub renormalize_directions: bool,
}

impl SymmetryTransform {
    pub fn identity() -> Self {
        SymmetryTransform { matrix: Mat4::IDENTITY, renormalize_directions: false }
    }

    pub fn point(&self, x: Vec3) -> Vec3 {
        self.matrix.transform_point(x)
    }

    pub fn direction(&self, d: Vec3) -> Vec3 {
        let v = self.matrix.transform_direction(d);
        if self.renormalize_directions {
            v.normalize()
        } else {
            v
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetrySpec {
    pub variant: SymmetryVariant,
    pub frame: RigidFrame,
}

fn check_unit(v: Vec3, name: &'static str) -> Result<(), SymmetryError> {
    if (v.norm() - 1.0).abs() > UNIT_TOL {
        Err(SymmetryError::NonUnitField(name))
    } else {
        Ok(())
    }
}

/// Deterministic rotation with `R·(0,0,1)ᵀ = n`: the minimal rotation taking
/// `e_z` to `n`, or a half turn about `x` when `n = −e_z`.
pub fn rotation_from_normal(n: Vec3) -> Mat3 {
    let n = n.normalize();
    let axis = Vec3::Z.cross(n);
    let s = axis.norm();
    let c = n.z;
    if s < 1e-12 {
        if c > 0.0 {
            Mat3::IDENTITY
        } else {
            Mat3::diag(Vec3::new(1.0, -1.0, -1.0))
        }
    } else {
        Mat3::rotation(axis * (1.0 / s), s.atan2(c))
    }
}

fn rot_x(alpha: f64) -> Mat3 {
    let (s, c) = alpha.sin_cos();
    Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
}

fn rot_y(beta: f64) -> Mat3 {
    let (s, c) = beta.sin_cos();
    Mat3::from_rows([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
}

fn rot_z(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3::from_rows([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// `x' = A(x − p) + p` as a homogeneous matrix.
fn about_point(a: Mat3, p: Vec3) -> Mat4 {
    Mat4::affine(a, p - a * p)
}

impl SymmetrySpec {
    pub fn new(variant: SymmetryVariant, frame: RigidFrame) -> Result<Self, SymmetryError> {
        let spec = SymmetrySpec { variant, frame };
        spec.validate()?;
        Ok(spec)
    }

    /// Variant in the canonical frame with an identity world → canonical map.
    pub fn canonical(variant: SymmetryVariant) -> Result<Self, SymmetryError> {
        SymmetrySpec::new(variant, RigidFrame::identity())
    }

    /// Reflection about the canonical `XZ` plane, i.e. `S = I − 2e₂e₂ᵀ`.
    pub fn xz_reflection(frame: RigidFrame) -> Self {
        SymmetrySpec {
            variant: SymmetryVariant::PlanarReflection { normal: Vec3::Y, offset: 0.0 },
            frame,
        }
    }

    pub fn validate(&self) -> Result<(), SymmetryError> {
        self.frame.validate()?;
        match self.variant {
            SymmetryVariant::PlanarReflection { normal, offset } => {
                check_unit(normal, "normal")?;
                if !offset.is_finite() {
                    return Err(SymmetryError::InvalidParameter("offset"));
                }
            }
            SymmetryVariant::LineReflection { direction, .. } => check_unit(direction, "direction")?,
            SymmetryVariant::Rotation { axis, order, .. } => {
                check_unit(axis, "axis")?;
                if order < 1 {
                    return Err(SymmetryError::InvalidParameter("order"));
                }
            }
            SymmetryVariant::Scale { sx, sy } => {
                if !(sx > 0.0 && sy > 0.0 && sx.is_finite() && sy.is_finite()) {
                    return Err(SymmetryError::InvalidParameter("scale"));
                }
            }
            SymmetryVariant::PointReflection { .. }
            | SymmetryVariant::Spherical { .. }
            | SymmetryVariant::Translation { .. } => {}
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SymmetryDraw {
        match self.variant {
            SymmetryVariant::Rotation { order, .. } => SymmetryDraw::RotationStep(rng.random_range(1..=order)),
            SymmetryVariant::Spherical { .. } => SymmetryDraw::Angles {
                alpha: rng.random_range(0.0..TAU),
                beta: rng.random_range(0.0..TAU),
            },
            _ => SymmetryDraw::Fixed,
        }
    }

    /// Canonical-frame matrix `S` for a given draw.
    pub fn canonical_matrix(&self, draw: SymmetryDraw) -> Result<Mat4, SymmetryError> {
        let name = self.variant.name();
        let mismatch = || SymmetryError::DrawMismatch(name);
        let s = match (self.variant, draw) {
            (SymmetryVariant::PlanarReflection { normal, offset }, SymmetryDraw::Fixed) => {
                Mat4::affine(Mat3::IDENTITY - Mat3::outer(normal, normal).scale(2.0), normal * (2.0 * offset))
            }
            (SymmetryVariant::LineReflection { direction, plane_offset }, SymmetryDraw::Fixed) => {
                let r = rotation_from_normal(direction);
                let p = r * Vec3::new(plane_offset[0], plane_offset[1], 0.0);
                about_point(r * Mat3::diag(Vec3::new(-1.0, -1.0, 1.0)) * r.transpose(), p)
            }
            (SymmetryVariant::PointReflection { center }, SymmetryDraw::Fixed) => {
                Mat4::affine(Mat3::IDENTITY.scale(-1.0), center * 2.0)
            }
            (SymmetryVariant::Rotation { point, axis, order }, SymmetryDraw::RotationStep(k)) => {
                if k < 1 || k > order {
                    return Err(mismatch());
                }
                let theta = 2.0 * PI / f64::from(order + 1);
                let r = rotation_from_normal(axis);
                about_point(r * rot_z(f64::from(k) * theta) * r.transpose(), point)
            }
            (SymmetryVariant::Spherical { center }, SymmetryDraw::Angles { alpha, beta }) => {
                about_point(rot_x(alpha) * rot_y(beta), center)
            }
            (SymmetryVariant::Translation { offset }, SymmetryDraw::Fixed) => Mat4::affine(Mat3::IDENTITY, offset),
            (SymmetryVariant::Scale { sx, sy }, SymmetryDraw::Fixed) => {
                Mat4::affine(Mat3::diag(Vec3::new(sx, sy, 1.0)), Vec3::ZERO)
            }
            (v, SymmetryDraw::Fixed) if v.is_random() => return Err(SymmetryError::DrawRequired(name)),
            _ => return Err(mismatch()),
        };
        Ok(s)
    }

    /// World-space matrix `T_c⁻¹ S T_c` for a given draw.
    pub fn compose(&self, draw: SymmetryDraw) -> Result<Mat4, SymmetryError> {
        self.frame.validate()?;
        let s = self.canonical_matrix(draw)?;
        Ok(self.frame.inverse_matrix() * s * self.frame.matrix())
    }

    /// `T_c⁻¹ S T_c` for deterministic variants.
    pub fn compose_canonical(&self) -> Result<Mat4, SymmetryError> {
        self.compose(SymmetryDraw::Fixed)
    }

    pub fn realize(&self, draw: SymmetryDraw) -> Result<SymmetryTransform, SymmetryError> {
        Ok(SymmetryTransform {
            matrix: self.compose(draw)?,
            renormalize_directions: !self.variant.is_isometry(),
        })
    }

    /// Maps a point, drawing a random image for rotation / spherical variants.
    pub fn apply_to_point<R: Rng + ?Sized>(&self, x: Vec3, rng: &mut R) -> Vec3 {
        let draw = self.draw(rng);
        // Draws always match their own variant; an invalid frame degrades to identity.
        self.compose(draw).map(|m| m.transform_point(x)).unwrap_or(x)
    }

    /// Maps a direction (deterministic variants).
    pub fn apply_to_direction(&self, d: Vec3) -> Result<Vec3, SymmetryError> {
        self.apply_to_direction_drawn(d, SymmetryDraw::Fixed)
    }

    pub fn apply_to_direction_drawn(&self, d: Vec3, draw: SymmetryDraw) -> Result<Vec3, SymmetryError> {
        if d.norm() < 1e-300 {
            return Err(SymmetryError::InvalidDirection);
        }
        Ok(self.realize(draw)?.direction(d))
    }

    /// Derivatives of `T_c⁻¹ S T_c` with respect to the frame parameters
    /// `(ω_x, ω_y, ω_z, t_x, t_y, t_z)`, where the rotation is perturbed as
    /// `exp([ω]×) R_c` around `ω = 0`.
    pub fn frame_jacobians(&self, draw: SymmetryDraw) -> Result<[Mat4; 6], SymmetryError> {
        let s = self.canonical_matrix(draw)?;
        let t = self.frame.matrix();
        let t_inv = self.frame.inverse_matrix();
        let r = self.frame.rotation;
        let axes = [Vec3::X, Vec3::Y, Vec3::Z];
        let mut out = [Mat4::ZERO; 6];
        for (a, e) in axes.iter().enumerate() {
            let mut d_rot = Mat4::affine(Mat3::skew(*e) * r, Vec3::ZERO);
            d_rot.m[3][3] = 0.0;
            let mut d_trans = Mat4::ZERO;
            d_trans.m[a][3] = 1.0;
            for (slot, dt) in [(a, d_rot), (a + 3, d_trans)] {
                let d_inv = (t_inv * dt * t_inv).scale(-1.0);
                out[slot] = d_inv * s * t + t_inv * s * dt;
            }
        }
        Ok(out)
    }

    /// World-space plane normal of a planar reflection.
    pub fn plane_normal_world(&self) -> Option<Vec3> {
        match self.variant {
            SymmetryVariant::PlanarReflection { normal, .. } => Some(self.frame.rotation.transpose() * normal),
            _ => None,
        }
    }

    /// One-line text record: variant name, its numeric fields, then the frame
    /// (`frame r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz`).
    pub fn to_record(&self) -> String {
        let mut s = String::from(self.variant.name());
        let mut push = |v: f64| {
            let _ = write!(s, " {v:?}");
        };
        match self.variant {
            SymmetryVariant::PlanarReflection { normal, offset } => {
                normal.to_array().into_iter().for_each(&mut push);
                push(offset);
            }
            SymmetryVariant::LineReflection { direction, plane_offset } => {
                direction.to_array().into_iter().for_each(&mut push);
                plane_offset.into_iter().for_each(&mut push);
            }
            SymmetryVariant::PointReflection { center } | SymmetryVariant::Spherical { center } => {
                center.to_array().into_iter().for_each(&mut push)
            }
            SymmetryVariant::Rotation { point, axis, order } => {
                point.to_array().into_iter().for_each(&mut push);
                axis.to_array().into_iter().for_each(&mut push);
                push(f64::from(order));
            }
            SymmetryVariant::Translation { offset } => offset.to_array().into_iter().for_each(&mut push),
            SymmetryVariant::Scale { sx, sy } => {
                push(sx);
                push(sy);
            }
        }
        s.push_str(" frame");
        for row in self.frame.rotation.m {
            for v in row {
                let _ = write!(s, " {v:?}");
            }
        }
        for v in self.frame.translation.to_array() {
            let _ = write!(s, " {v:?}");
        }
        s
    }

    pub fn from_record(line: &str) -> Result<Self, SymmetryError> {
        let bad = |m: &str| SymmetryError::Parse(format!("{m}: `{line}`"));
        let mut parts = line.split_whitespace();
        let name = parts.next().ok_or_else(|| bad("empty record"))?;
        let rest: Vec<&str> = parts.collect();
        let split = rest.iter().position(|t| *t == "frame").unwrap_or(rest.len());
        let nums = rest[..split]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<Vec<f64>, _>>()?;
        let want = |n: usize| if nums.len() == n { Ok(()) } else { Err(bad("wrong field count")) };
        let v3 = |i: usize| Vec3::new(nums[i], nums[i + 1], nums[i + 2]);
        let variant = match name {
            "planar_reflection" => {
                want(4)?;
                SymmetryVariant::PlanarReflection { normal: v3(0), offset: nums[3] }
            }
            "line_reflection" => {
                want(5)?;
                SymmetryVariant::LineReflection { direction: v3(0), plane_offset: [nums[3], nums[4]] }
            }
            "point_reflection" => {
                want(3)?;
                SymmetryVariant::PointReflection { center: v3(0) }
            }
            "rotation" => {
                want(7)?;
                if nums[6] < 1.0 || nums[6].fract() != 0.0 {
                    return Err(bad("rotation order must be a positive integer"));
                }
                SymmetryVariant::Rotation { point: v3(0), axis: v3(3), order: nums[6] as u32 }
            }
            "spherical" => {
                want(3)?;
                SymmetryVariant::Spherical { center: v3(0) }
            }
            "translation" => {
                want(3)?;
                SymmetryVariant::Translation { offset: v3(0) }
            }
            "scale" => {
                want(2)?;
                SymmetryVariant::Scale { sx: nums[0], sy: nums[1] }
            }
            _ => return Err(bad("unknown variant")),
        };
        let frame = if split < rest.len() {
            let f = rest[split + 1..]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| bad("bad frame number")))
                .collect::<Result<Vec<f64>, _>>()?;
            if f.len() != 12 {
                return Err(bad("frame needs 12 numbers"));
            }
            let rotation = Mat3::from_rows([[f[0], f[1], f[2]], [f[3], f[4], f[5]], [f[6], f[7], f[8]]]);
            RigidFrame { rotation, translation: Vec3::new(f[9], f[10], f[11]) }
        } else {
            RigidFrame::identity()
        };
        SymmetrySpec::new(variant, frame)
    }
}

/// Orthogonality relation between two specs of a set (by index).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Orthogonality {
    pub first: usize,
    pub second: usize,
}

/// Nonempty set of symmetries; one is chosen uniformly each time a
/// transformation is applied.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrySet {
    specs: Vec<SymmetrySpec>,
    pub relations: Vec<Orthogonality>,
}

impl SymmetrySet {
    pub fn new(specs: Vec<SymmetrySpec>) -> Result<Self, SymmetryError> {
        if specs.is_empty() {
            return Err(SymmetryError::EmptySet);
        }
        for s in &specs {
            s.validate()?;
        }
        Ok(SymmetrySet { specs, relations: Vec::new() })
    }

    pub fn single(spec: SymmetrySpec) -> Self {
        SymmetrySet { specs: alloc::vec![spec], relations: Vec::new() }
    }

    pub fn specs(&self) -> &[SymmetrySpec] {
        &self.specs
    }

    pub fn specs_mut(&mut self) -> &mut [SymmetrySpec] {
        &mut self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Index of a uniformly chosen spec.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.specs.len())
    }

    pub fn sample_symmetry<R: Rng + ?Sized>(&self, rng: &mut R) -> &SymmetrySpec {
        &self.specs[self.sample_index(rng)]
    }

    /// Largest `|n_a · n_b|` over the declared orthogonal pairs of planar
    /// reflections (0 when all relations hold).
    pub fn orthogonality_violation(&self) -> f64 {
        self.relations
            .iter()
            .filter_map(|r| {
                let a = self.specs.get(r.first)?.plane_normal_world()?;
                let b = self.specs.get(r.second)?.plane_normal_world()?;
                Some(a.dot(b).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Sample from a possibly-empty list (the spec-level operation).
pub fn sample_symmetry<'a, R: Rng + ?Sized>(
    specs: &'a [SymmetrySpec],
    rng: &mut R,
) -> Result<&'a SymmetrySpec, SymmetryError> {
    if specs.is_empty() {
        return Err(SymmetryError::EmptySet);
    }
    Ok(&specs[rng.random_range(0..specs.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn planar(n: Vec3, offset: f64) -> SymmetrySpec {
        SymmetrySpec::canonical(SymmetryVariant::PlanarReflection { normal: n, offset }).unwrap()
    }

    #[test]
    fn canonical_xz_reflection_is_diagonal() {
        let m = SymmetrySpec::xz_reflection(RigidFrame::identity()).compose_canonical().unwrap();
        let mut want = Mat4::IDENTITY;
        want.m[1][1] = -1.0;
        assert_eq!(m, want);
    }

    #[test]
    fn zero_translation_is_identity_in_any_frame() {
        let frame = RigidFrame::new(Mat3::rotation(Vec3::new(1.0, 1.0, 0.0), 0.4), Vec3::new(0.3, 0.0, -1.0)).unwrap();
        let spec = SymmetrySpec::new(SymmetryVariant::Translation { offset: Vec3::ZERO }, frame).unwrap();
        assert!(spec.compose_canonical().unwrap().max_abs_diff(&Mat4::IDENTITY) < 1e-15);
    }

    #[test]
    fn rotated_frame_matches_explicit_product() {
        // Frame rotating 90° about z: the canonical XZ plane becomes the world YZ plane.
        let r = Mat3::from_rows([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let spec = SymmetrySpec::xz_reflection(RigidFrame::new(r, Vec3::ZERO).unwrap());
        let m = spec.compose_canonical().unwrap();
        // T⁻¹ S T worked by hand: Rᵀ diag(1,−1,1) R = diag(−1, 1, 1).
        let mut want = Mat4::IDENTITY;
        want.m[0][0] = -1.0;
        assert!(m.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn point_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = planar(Vec3::Y, 0.0).apply_to_point(Vec3::new(1.0, 2.0, 3.0), &mut rng);
        assert!(close(p, Vec3::new(1.0, -2.0, 3.0), 1e-15));
        let p = planar(Vec3::Y, 1.0).apply_to_point(Vec3::new(0.0, 3.0, 0.0), &mut rng);
        assert!(close(p, Vec3::new(0.0, -1.0, 0.0), 1e-15));
        let pr = SymmetrySpec::canonical(SymmetryVariant::PointReflection { center: Vec3::X }).unwrap();
        assert!(close(pr.apply_to_point(Vec3::new(2.0, 0.0, 0.0), &mut rng), Vec3::ZERO, 1e-15));
        let rot = SymmetrySpec::canonical(SymmetryVariant::Rotation { point: Vec3::ZERO, axis: Vec3::Z, order: 1 })
            .unwrap();
        assert!(close(rot.apply_to_point(Vec3::X, &mut rng), Vec3::new(-1.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn direction_examples() {
        let d = planar(Vec3::Y, 5.0).apply_to_direction(Vec3::Y).unwrap();
        assert!(close(d, -Vec3::Y, 1e-15));
        let t = SymmetrySpec::canonical(SymmetryVariant::Translation { offset: Vec3::splat(9.0) }).unwrap();
        assert!(close(t.apply_to_direction(Vec3::X).unwrap(), Vec3::X, 1e-15));
        let line =
            SymmetrySpec::canonical(SymmetryVariant::LineReflection { direction: Vec3::Z, plane_offset: [0.0, 0.0] })
                .unwrap();
        assert!(close(line.apply_to_direction(Vec3::X).unwrap(), -Vec3::X, 1e-15));
        assert_eq!(t.apply_to_direction(Vec3::ZERO), Err(SymmetryError::InvalidDirection));
    }

    #[test]
    fn scale_renormalizes_directions() {
        let s = SymmetrySpec::canonical(SymmetryVariant::Scale { sx: 2.0, sy: 0.5 }).unwrap();
        let d = s.apply_to_direction(Vec3::new(1.0, 1.0, 0.0).normalize()).unwrap();
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_variants_need_draws() {
        let sph = SymmetrySpec::canonical(SymmetryVariant::Spherical { center: Vec3::ZERO }).unwrap();
        assert_eq!(sph.compose_canonical(), Err(SymmetryError::DrawRequired("spherical")));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Vec3::new(0.3, 0.1, -0.2);
        let y = sph.apply_to_point(x, &mut rng);
        assert!((y.norm() - x.norm()).abs() < 1e-12);
    }

    #[test]
    fn rotation_draw_covers_all_steps() {
        let rot = SymmetrySpec::canonical(SymmetryVariant::Rotation { point: Vec3::ZERO, axis: Vec3::Z, order: 3 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = [false; 4];
        for _ in 0..200 {
            if let SymmetryDraw::RotationStep(k) = rot.draw(&mut rng) {
                seen[k as usize] = true;
            }
        }
        assert_eq!(seen, [false, true, true, true]);
    }

    #[test]
    fn rotation_from_normal_examples() {
        assert_eq!(rotation_from_normal(Vec3::Z), Mat3::IDENTITY);
        let r = rotation_from_normal(-Vec3::Z);
        assert!(close(r.col(2), -Vec3::Z, 1e-15));
        assert!(r.orthonormality_error() < 1e-12);
        let r = rotation_from_normal(Vec3::X);
        assert!(close(r * Vec3::Z, Vec3::X, 1e-12));
        assert!(r.orthonormality_error() < 1e-12);
    }

    #[test]
    fn set_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = planar(Vec3::Y, 0.0);
        let b = planar(Vec3::X, 0.0);
        assert_eq!(SymmetrySet::single(a).sample_symmetry(&mut rng), &a);
        assert_eq!(SymmetrySet::new(Vec::new()), Err(SymmetryError::EmptySet));
        assert!(sample_symmetry(&[], &mut rng).is_err());
        let set = SymmetrySet::new(alloc::vec![a, b]).unwrap();
        let n = 10_000;
        let hits = (0..n).filter(|_| set.sample_index(&mut rng) == 0).count();
        let freq = hits as f64 / n as f64;
        assert!((0.45..=0.55).contains(&freq), "freq {freq}");
    }

    #[test]
    fn orthogonality_violation_measures_normals() {
        let mut set = SymmetrySet::new(alloc::vec![planar(Vec3::Y, 0.0), planar(Vec3::X, 0.0)]).unwrap();
        set.relations.push(Orthogonality { first: 0, second: 1 });
        assert!(set.orthogonality_violation() < 1e-15);
    }

    #[test]
    fn invalid_frame_is_rejected() {
        let mut bad = Mat3::IDENTITY;
        bad.m[0][0] = 1.1;
        assert!(matches!(RigidFrame::new(bad, Vec3::ZERO), Err(SymmetryError::InvalidFrame(_))));
        let spec = SymmetrySpec {
            variant: SymmetryVariant::PlanarReflection { normal: Vec3::Y, offset: 0.0 },
            frame: RigidFrame { rotation: bad, translation: Vec3::ZERO },
        };
        assert!(matches!(spec.compose_canonical(), Err(SymmetryError::InvalidFrame(_))));
    }

    #[test]
    fn record_round_trip() {
        let frame = RigidFrame::new(Mat3::rotation(Vec3::Z, 0.3), Vec3::new(0.1, 0.2, 0.3)).unwrap();
        let specs = [
            SymmetrySpec::xz_reflection(frame),
            SymmetrySpec::new(SymmetryVariant::Rotation { point: Vec3::X, axis: Vec3::Z, order: 4 }, frame).unwrap(),
            SymmetrySpec::new(SymmetryVariant::Scale { sx: 1.5, sy: 0.5 }, frame).unwrap(),
        ];
        for s in specs {
            assert_eq!(SymmetrySpec::from_record(&s.to_record()).unwrap(), s);
        }
        assert!(SymmetrySpec::from_record("planar_reflection 0 1 0").is_err());
        assert!(SymmetrySpec::from_record("wobble 1 2 3").is_err());
    }

    #[test]
    fn frame_jacobians_match_finite_differences() {
        let frame = RigidFrame::new(Mat3::rotation(Vec3::new(0.2, 1.0, -0.3), 0.8), Vec3::new(0.1, -0.2, 0.3)).unwrap();
        let spec = SymmetrySpec::xz_reflection(frame);
        let jac = spec.frame_jacobians(SymmetryDraw::Fixed).unwrap();
        let h = 1e-6;
        for a in 0..6 {
            let eval = |s: f64| {
                let mut f = frame;
                let mut omega = Vec3::ZERO;
                let mut t = frame.translation;
                if a < 3 {
                    omega[a] = s;
                } else {
                    t[a - 3] += s;
                }
                f.rotation = Mat3::exp_so3(omega) * frame.rotation;
                f.translation = t;
                SymmetrySpec { frame: f, ..spec }.compose_canonical().unwrap()
            };
            let fd = (eval(h) + eval(-h).scale(-1.0)).scale(0.5 / h);
            assert!(fd.max_abs_diff(&jac[a]) < 1e-8, "param {a}");
        }
    }
}
