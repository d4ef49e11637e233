//! Phong-factorized appearance: `c = γ^d c^a + γ^r c^s`.
//!
//! The material head sees only position and geometry feature. The diffuse
//! head adds the normal, the specular head adds the normal and view
//! direction. Lighting heads exist in two weight sets (source and
//! transformed); the caller picks the parameter slice.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Vec3;
use crate::nn::{Activation, Matrix, Mlp, MlpCache, MlpConfig, NnError, PositionalEncoding};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialOut {
    pub albedo: Vec3,
    pub reflectivity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightingOut {
    pub diffuse: f64,
    pub specular: Vec3,
}

/// `c[j][k]`: geometry/material from path `j`, lighting from path `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathColours {
    pub c: [[Vec3; 2]; 2],
}

/// `γ^d c^a + γ^r c^s`, clamped to `[0, 1]` per channel.
pub fn phong_compose(diffuse: f64, albedo: Vec3, reflectivity: f64, specular: Vec3) -> Vec3 {
    (albedo * diffuse + specular * reflectivity).map(|v| v.clamp(0.0, 1.0))
}

/// Gradient of `phong_compose` given the upstream colour gradient:
/// `(∂γ^d, ∂c^a, ∂γ^r, ∂c^s)`. Clamped channels pass no gradient.
pub fn phong_compose_backward(diffuse: f64, albedo: Vec3, reflectivity: f64, specular: Vec3, grad: Vec3) -> (f64, Vec3, f64, Vec3) {
    let raw = albedo * diffuse + specular * reflectivity;
    let g = Vec3::new(
        if (0.0..=1.0).contains(&raw.x) { grad.x } else { 0.0 },
        if (0.0..=1.0).contains(&raw.y) { grad.y } else { 0.0 },
        if (0.0..=1.0).contains(&raw.z) { grad.z } else { 0.0 },
    );
    (g.dot(albedo), g * diffuse, g.dot(specular), g * reflectivity)
}

/// `c_jk = γ^d_k c^a_j + γ^r_j c^s_k`.
pub fn hybrid_colours(material: [MaterialOut; 2], lighting: [LightingOut; 2]) -> PathColours {
    let mut c = [[Vec3::ZERO; 2]; 2];
    for (j, m) in material.iter().enumerate() {
        for (k, l) in lighting.iter().enumerate() {
            c[j][k] = phong_compose(l.diffuse, m.albedo, m.reflectivity, l.specular);
        }
    }
    PathColours { c }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    /// `(x, f) → (c^a, γ^r)`.
    Material,
    /// `(x, n, f) → γ^d ∈ [0, 2]`.
    Diffuse,
    /// `(x, n, d, f) → c^s`.
    Specular,
}

impl HeadKind {
    fn output_dim(self) -> usize {
        match self {
            HeadKind::Material => 4,
            HeadKind::Diffuse => 1,
            HeadKind::Specular => 3,
        }
    }

    fn uses_normal(self) -> bool {
        !matches!(self, HeadKind::Material)
    }

    fn uses_view(self) -> bool {
        matches!(self, HeadKind::Specular)
    }

    /// Upper end of the sigmoid squasher.
    fn scale(self) -> f64 {
        if matches!(self, HeadKind::Diffuse) {
            2.0
        } else {
            1.0
        }
    }
}

/// Per-point inputs of an appearance head; unused fields may be empty.
#[derive(Clone, Copy, Debug)]
pub struct HeadInputs<'a> {
    pub x: &'a [Vec3],
    pub n: &'a [Vec3],
    pub d: &'a [Vec3],
    pub f: &'a Matrix,
}

#[derive(Clone, Debug, Default)]
pub struct HeadInputGrads {
    pub x: Vec<Vec3>,
    pub n: Vec<Vec3>,
    pub d: Vec<Vec3>,
    pub f: Option<Matrix>,
}

#[derive(Clone, Debug)]
pub struct HeadForward {
    /// Squashed outputs, one row per point.
    pub out: Matrix,
    cache: MlpCache,
    nhat: Vec<f64>,
    nlen: Vec<f64>,
    dhat: Vec<f64>,
    dlen: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Head {
    kind: HeadKind,
    mlp: Mlp,
    enc: PositionalEncoding,
    feature_dim: usize,
}

fn unit_parts(v: &[Vec3]) -> (Vec<f64>, Vec<f64>) {
    let mut hat = Vec::with_capacity(3 * v.len());
    let mut len = Vec::with_capacity(v.len());
    for a in v {
        let l = a.norm().max(1e-12);
        hat.extend((*a * (1.0 / l)).to_array());
        len.push(l);
    }
    (hat, len)
}

/// Chain rule through `v ↦ v/‖v‖`.
fn unit_backward(hat: &[f64], len: f64, g: [f64; 3]) -> Vec3 {
    let h = Vec3::new(hat[0], hat[1], hat[2]);
    let g = Vec3::from_array(g);
    (g - h * h.dot(g)) * (1.0 / len)
}

impl Head {
    pub fn new(kind: HeadKind, hidden: Vec<usize>, dir_freqs: usize, feature_dim: usize) -> Result<Self, NnError> {
        let enc = PositionalEncoding::new(dir_freqs, true);
        let mut input_dim = 3 + feature_dim;
        if kind.uses_normal() {
            input_dim += enc.output_dim(3);
        }
        if kind.uses_view() {
            input_dim += enc.output_dim(3);
        }
        let mlp = Mlp::new(MlpConfig { input_dim, hidden, output_dim: kind.output_dim(), skip: None, activation: Activation::Relu })?;
        Ok(Head { kind, mlp, enc, feature_dim })
    }

    pub fn kind(&self) -> HeadKind {
        self.kind
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn param_count(&self) -> usize {
        self.mlp.param_count()
    }

    pub fn forward(&self, params: &[f64], inp: &HeadInputs) -> Result<HeadForward, NnError> {
        let b = inp.x.len();
        if inp.f.rows() != b || inp.f.cols() != self.feature_dim {
            return Err(NnError::DimensionMismatch { what: "head feature", expected: self.feature_dim, got: inp.f.cols() });
        }
        let mut input = Matrix::zeros(b, self.mlp.input_dim());
        let ed = self.enc.output_dim(3);
        let (mut nhat, mut nlen, mut dhat, mut dlen) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut col = 3;
        if self.kind.uses_normal() {
            (nhat, nlen) = unit_parts(inp.n);
            self.enc.encode_batch(&nhat, 3, false, &mut input, col);
            col += ed;
        }
        if self.kind.uses_view() {
            (dhat, dlen) = unit_parts(inp.d);
            self.enc.encode_batch(&dhat, 3, false, &mut input, col);
            col += ed;
        }
        for r in 0..b {
            let row = input.row_mut(r);
            row[..3].copy_from_slice(&inp.x[r].to_array());
            row[col..].copy_from_slice(inp.f.row(r));
        }
        let (mut out, cache) = self.mlp.forward(params, &input, 1)?;
        let s = self.kind.scale();
        for v in out.as_mut_slice() {
            *v = s * sigmoid(*v);
        }
        Ok(HeadForward { out, cache, nhat, nlen, dhat, dlen })
    }

    /// `grad_out` is the gradient with respect to the squashed outputs.
    pub fn backward(&self, params: &[f64], fwd: &HeadForward, grad_out: &Matrix, grad_params: &mut [f64]) -> Result<HeadInputGrads, NnError> {
        let b = fwd.out.rows();
        let s = self.kind.scale();
        let mut g = grad_out.clone();
        for (gv, &o) in g.as_mut_slice().iter_mut().zip(fwd.out.as_slice()) {
            let sg = o / s;
            *gv *= s * sg * (1.0 - sg);
        }
        let gin = self.mlp.backward(params, &fwd.cache, &g, grad_params)?;
        let ed = self.enc.output_dim(3);
        let mut out = HeadInputGrads { x: (0..b).map(|r| Vec3::from_array([gin.get(r, 0), gin.get(r, 1), gin.get(r, 2)])).collect(), ..Default::default() };
        let mut col = 3;
        if self.kind.uses_normal() {
            let mut gh = vec![0.0; 3 * b];
            self.enc.backward_batch(&fwd.nhat, 3, false, &gin, col, &mut gh);
            out.n = (0..b).map(|r| unit_backward(&fwd.nhat[3 * r..3 * r + 3], fwd.nlen[r], [gh[3 * r], gh[3 * r + 1], gh[3 * r + 2]])).collect();
            col += ed;
        }
        if self.kind.uses_view() {
            let mut gh = vec![0.0; 3 * b];
            self.enc.backward_batch(&fwd.dhat, 3, false, &gin, col, &mut gh);
            out.d = (0..b).map(|r| unit_backward(&fwd.dhat[3 * r..3 * r + 3], fwd.dlen[r], [gh[3 * r], gh[3 * r + 1], gh[3 * r + 2]])).collect();
            col += ed;
        }
        let mut gf = Matrix::zeros(b, self.feature_dim);
        for r in 0..b {
            gf.row_mut(r).copy_from_slice(&gin.row(r)[col..]);
        }
        out.f = Some(gf);
        Ok(out)
    }
}

#[inline]
fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Network widths of the three heads.
#[derive(Clone, Debug, PartialEq)]
pub struct AppearanceConfig {
    pub material_hidden: Vec<usize>,
    pub diffuse_hidden: Vec<usize>,
    pub specular_hidden: Vec<usize>,
    pub dir_freqs: usize,
}

impl Default for AppearanceConfig {
    fn default() -> Self {
        AppearanceConfig { material_hidden: vec![256; 4], diffuse_hidden: vec![256; 2], specular_hidden: vec![256; 4], dir_freqs: 4 }
    }
}

/// The material head and the shared architecture of both lighting weight sets.
#[derive(Clone, Debug)]
pub struct AppearanceHeads {
    pub material: Head,
    pub diffuse: Head,
    pub specular: Head,
}

impl AppearanceHeads {
    pub fn new(cfg: &AppearanceConfig, feature_dim: usize) -> Result<Self, NnError> {
        Ok(AppearanceHeads {
            material: Head::new(HeadKind::Material, cfg.material_hidden.clone(), cfg.dir_freqs, feature_dim)?,
            diffuse: Head::new(HeadKind::Diffuse, cfg.diffuse_hidden.clone(), cfg.dir_freqs, feature_dim)?,
            specular: Head::new(HeadKind::Specular, cfg.specular_hidden.clone(), cfg.dir_freqs, feature_dim)?,
        })
    }

    pub fn material_head(&self, params: &[f64], x: Vec3, feature: &[f64]) -> Result<MaterialOut, NnError> {
        let f = Matrix::from_vec(1, feature.len(), feature.to_vec());
        let o = self.material.forward(params, &HeadInputs { x: &[x], n: &[], d: &[], f: &f })?.out;
        Ok(MaterialOut { albedo: Vec3::new(o.get(0, 0), o.get(0, 1), o.get(0, 2)), reflectivity: o.get(0, 3) })
    }

    pub fn diffuse_head(&self, params: &[f64], x: Vec3, n: Vec3, feature: &[f64]) -> Result<f64, NnError> {
        let f = Matrix::from_vec(1, feature.len(), feature.to_vec());
        Ok(self.diffuse.forward(params, &HeadInputs { x: &[x], n: &[n], d: &[], f: &f })?.out.get(0, 0))
    }

    pub fn specular_head(&self, params: &[f64], x: Vec3, n: Vec3, d: Vec3, feature: &[f64]) -> Result<Vec3, NnError> {
        let f = Matrix::from_vec(1, feature.len(), feature.to_vec());
        let o = self.specular.forward(params, &HeadInputs { x: &[x], n: &[n], d: &[d], f: &f })?.out;
        Ok(Vec3::new(o.get(0, 0), o.get(0, 1), o.get(0, 2)))
    }
}
