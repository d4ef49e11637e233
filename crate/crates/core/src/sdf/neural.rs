use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::math::Vec3;
use crate::nn::{Activation, Matrix, Mlp, MlpCache, MlpConfig, NnError, PositionalEncoding};

use super::{EllipsoidInit, SdfEval};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

const INV_SQRT2: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug, PartialEq)]
pub struct NeuralSdfConfig {
    /// Hidden layer widths of the trunk.
    pub hidden: Vec<usize>,
    /// Linear layer that also receives the encoded input.
    pub skip: Option<usize>,
    pub num_freqs: usize,
    pub feature_dim: usize,
    pub softplus_beta: f64,
}

impl Default for NeuralSdfConfig {
    fn default() -> Self {
        NeuralSdfConfig { hidden: vec![256; 8], skip: Some(4), num_freqs: 6, feature_dim: 256, softplus_beta: 100.0 }
    }
}

/// Positional-encoded MLP returning `(δ, f)`; normals are the exact input
/// gradient of `δ`, carried through the network as tangent streams.
#[derive(Clone, Debug)]
pub struct NeuralSdf {
    config: NeuralSdfConfig,
    encoding: PositionalEncoding,
    mlp: Mlp,
}

/// Result of a batched evaluation, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct SdfBatch {
    points: Vec<f64>,
    batch: usize,
    streams: usize,
    out: Matrix,
    cache: MlpCache,
}

impl SdfBatch {
    pub fn len(&self) -> usize {
        self.batch
    }

    pub fn is_empty(&self) -> bool {
        self.batch == 0
    }

    pub fn has_normals(&self) -> bool {
        self.streams == 4
    }

    pub fn delta(&self, b: usize) -> f64 {
        self.out.get(b, 0)
    }

    /// `∇δ` at point `b`; requires a forward pass with normals.
    pub fn normal(&self, b: usize) -> Vec3 {
        assert!(self.has_normals(), "forward pass ran without normals");
        let n = self.batch;
        Vec3::new(self.out.get(n + b, 0), self.out.get(2 * n + b, 0), self.out.get(3 * n + b, 0))
    }

    pub fn feature(&self, b: usize) -> &[f64] {
        &self.out.row(b)[1..]
    }
}

impl NeuralSdf {
    pub fn new(config: NeuralSdfConfig) -> Result<Self, NnError> {
        let encoding = PositionalEncoding::new(config.num_freqs, true);
        let mlp = Mlp::new(MlpConfig {
            input_dim: encoding.output_dim(3),
            hidden: config.hidden.clone(),
            output_dim: 1 + config.feature_dim,
            skip: config.skip,
            activation: Activation::Softplus { beta: config.softplus_beta },
        })?;
        Ok(NeuralSdf { config, encoding, mlp })
    }

    pub fn config(&self) -> &NeuralSdfConfig {
        &self.config
    }

    pub fn param_count(&self) -> usize {
        self.mlp.param_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn forward(&self, params: &[f64], points: &[Vec3], normals: bool) -> Result<SdfBatch, NnError> {
        let batch = points.len();
        let streams = if normals { 4 } else { 1 };
        let flat: Vec<f64> = points.iter().flat_map(|p| p.to_array()).collect();
        let mut input = Matrix::zeros(streams * batch, self.mlp.input_dim());
        self.encoding.encode_batch(&flat, 3, normals, &mut input, 0);
        let (out, cache) = self.mlp.forward(params, &input, streams)?;
        Ok(SdfBatch { points: flat, batch, streams, out, cache })
    }

    /// Backward pass for upstream gradients on `δ`, the normals and the
    /// features (each optional). Accumulates into `grad_params` and returns
    /// the gradient with respect to each point.
    pub fn backward(
        &self,
        params: &[f64],
        fwd: &SdfBatch,
        grad_delta: &[f64],
        grad_normal: Option<&[Vec3]>,
        grad_feature: Option<&Matrix>,
        grad_params: &mut [f64],
    ) -> Result<Vec<Vec3>, NnError> {
        let n = fwd.batch;
        let mut g = Matrix::zeros(fwd.streams * n, self.mlp.output_dim());
        for b in 0..n {
            g.set(b, 0, grad_delta[b]);
        }
        if let Some(gf) = grad_feature {
            for b in 0..n {
                g.row_mut(b)[1..].copy_from_slice(gf.row(b));
            }
        }
        if let Some(gn) = grad_normal {
            assert!(fwd.has_normals(), "normal gradient without normal streams");
            for b in 0..n {
                for t in 0..3 {
                    g.set((1 + t) * n + b, 0, gn[b][t]);
                }
            }
        }
        let gin = self.mlp.backward(params, &fwd.cache, &g, grad_params)?;
        let mut gp = vec![0.0; 3 * n];
        self.encoding.backward_batch(&fwd.points, 3, fwd.has_normals(), &gin, 0, &mut gp);
        Ok((0..n).map(|b| Vec3::new(gp[3 * b], gp[3 * b + 1], gp[3 * b + 2])).collect())
    }

    pub fn eval(&self, params: &[f64], x: Vec3) -> Result<SdfEval, NnError> {
        let f = self.forward(params, &[x], true)?;
        Ok(SdfEval { delta: f.delta(0), normal: f.normal(0), feature: f.feature(0).to_vec() })
    }

    /// Signed distances only, in chunks to bound memory.
    pub fn distances(&self, params: &[f64], points: &[Vec3]) -> Result<Vec<f64>, NnError> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(4096) {
            let f = self.forward(params, chunk, false)?;
            out.extend((0..chunk.len()).map(|b| f.delta(b)));
        }
        Ok(out)
    }

    /// Geometric initialization: the fresh network approximates
    /// `s·(‖(x − c)/a‖ − 1)` for the ellipsoid with centre `c`, semi-axes `a`
    /// and mean semi-axis `s`.
    ///
    /// Starts from the standard sphere initialization (only the raw `xyz`
    /// columns of the encoding are active), then folds the affine squash into
    /// the raw-coordinate weights of the first and skip layers.
    pub fn geometric_init<R: Rng + ?Sized>(&self, ellipsoid: &EllipsoidInit, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.mlp.param_count()];
        let layers = self.mlp.layers();
        let depth = layers.len();
        let enc_dim = self.mlp.input_dim();
        let a = ellipsoid.semi_axes;
        let c = ellipsoid.center;
        for (l, layer) in layers.iter().enumerate() {
            let (nin, nout) = (layer.input, layer.output);
            let w = &mut p[layer.weights..layer.bias];
            if l + 1 == depth {
                let mean = (core::f64::consts::PI).sqrt() / (nin as f64).sqrt();
                let dn = Normal::new(mean, 1e-4).expect("finite");
                let fn_ = Normal::new(0.0, 1.0 / (nin as f64).sqrt()).expect("finite");
                for o in 0..nout {
                    for i in 0..nin {
                        w[o * nin + i] = if o == 0 { dn.sample(rng) } else { fn_.sample(rng) };
                    }
                }
                continue;
            }
            let dist = Normal::new(0.0, 2f64.sqrt() / (nout as f64).sqrt()).expect("finite");
            // Columns of the encoded input in this layer, if any.
            let raw_start = if l == 0 {
                Some(0)
            } else if self.config.skip == Some(l) {
                Some(nin - enc_dim)
            } else {
                None
            };
            for o in 0..nout {
                for i in 0..nin {
                    let active = match raw_start {
                        Some(s) => i < s || i >= s + enc_dim || i < s + 3,
                        None => true,
                    };
                    w[o * nin + i] = if active { dist.sample(rng) } else { 0.0 };
                }
            }
        }
        // Squash: a layer reading raw x through gain g sees (x − c)/a instead.
        for (l, layer) in layers.iter().enumerate() {
            let start = if l == 0 {
                0
            } else if self.config.skip == Some(l) {
                layer.input - enc_dim
            } else {
                continue;
            };
            let gain = if l == 0 { 1.0 } else { INV_SQRT2 };
            for o in 0..layer.output {
                let mut shift = 0.0;
                for k in 0..3 {
                    let idx = layer.weights + o * layer.input + start + k;
                    p[idx] /= a[k];
                    shift += p[idx] * c[k] * gain;
                }
                p[layer.bias + o] -= shift;
            }
        }
        let last = layers[depth - 1];
        let s = (a.x + a.y + a.z) / 3.0;
        for i in 0..last.input {
            p[last.weights + i] *= s;
        }
        p[last.bias] = -s;
        self.refit_distance_row(&mut p, ellipsoid, rng);
        p
    }

    /// Ridge least-squares refit of the `δ` row of the output layer onto the
    /// ellipsoid target, keeping every hidden weight. Narrow trunks only
    /// approximate the radial profile after the sphere initialization; this
    /// pins the zero-level set to the prior.
    fn refit_distance_row<R: Rng + ?Sized>(&self, p: &mut [f64], e: &EllipsoidInit, rng: &mut R) {
        let hidden = &self.config.hidden;
        let depth = hidden.len();
        if depth == 0 || self.config.skip.is_some_and(|s| s >= depth) {
            return;
        }
        let trunk = Mlp::new(MlpConfig {
            input_dim: self.mlp.input_dim(),
            hidden: hidden[..depth - 1].to_vec(),
            output_dim: hidden[depth - 1],
            skip: self.config.skip,
            activation: Activation::Softplus { beta: self.config.softplus_beta },
        })
        .expect("prefix of a valid config");
        let s = (e.semi_axes.x + e.semi_axes.y + e.semi_axes.z) / 3.0;
        let mut pts = Vec::with_capacity(2048);
        let mut target = Vec::with_capacity(2048);
        while pts.len() < 2048 {
            let u = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let r = u.norm();
            if r < 1e-3 || r > 1.0 {
                continue;
            }
            // Half the probes on the unit shell, half spread out to radius 2.
            let radius = if pts.len() % 2 == 0 { 1.0 } else { 2.0 * r };
            let q = u * (radius / r);
            pts.push(e.center + q.mul_elem(e.semi_axes));
            target.push(s * (radius - 1.0));
        }
        let flat: Vec<f64> = pts.iter().flat_map(|x| x.to_array()).collect();
        let mut input = Matrix::zeros(pts.len(), self.mlp.input_dim());
        self.encoding.encode_batch(&flat, 3, false, &mut input, 0);
        let (z, _) = trunk.forward(&p[..trunk.param_count()], &input, 1).expect("shapes match");
        let act = Activation::Softplus { beta: self.config.softplus_beta };
        let w = hidden[depth - 1] + 1;
        let mut ata = vec![0.0; w * w];
        let mut atb = vec![0.0; w];
        let mut feat = vec![0.0; w];
        for (r, t) in target.iter().enumerate() {
            for (fv, zv) in feat.iter_mut().zip(z.row(r)) {
                *fv = act.eval(*zv).0;
            }
            feat[w - 1] = 1.0;
            for i in 0..w {
                atb[i] += feat[i] * t;
                for j in 0..w {
                    ata[i * w + j] += feat[i] * feat[j];
                }
            }
        }
        let trace: f64 = (0..w).map(|i| ata[i * w + i]).sum();
        for i in 0..w {
            ata[i * w + i] += 1e-8 * trace / w as f64;
        }
        if !solve_spd(&mut ata, &mut atb, w) {
            return;
        }
        let last = self.mlp.layers()[depth];
        p[last.weights..last.weights + w - 1].copy_from_slice(&atb[..w - 1]);
        p[last.bias] = atb[w - 1];
    }
}

/// Solves `A x = b` in place for symmetric positive definite `A` (row-major
/// `n×n`) by Cholesky; `b` receives `x`. Returns `false` if `A` is not
/// positive definite.
fn solve_spd(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * n + k] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= a[k * n + i] * b[k];
        }
        b[i] = v / a[i * n + i];
    }
    true
}
