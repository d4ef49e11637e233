use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::matrix::{gemm, Strides};
use super::{Matrix, NnError};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

const INV_SQRT2: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Relu,
    /// `ln(1 + e^{βz}) / β`.
    Softplus { beta: f64 },
    Identity,
}

impl Activation {
    /// Value and first two derivatives at `z`.
    #[inline]
    pub fn eval(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    (z, 1.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            Activation::Softplus { beta } => {
                let y = beta * z;
                // Beyond |y| = 40 the correction terms are below f64 resolution.
                if y > 40.0 {
                    return (z, 1.0, 0.0);
                }
                if y < -40.0 {
                    return (0.0, 0.0, 0.0);
                }
                let e = (-y.abs()).exp();
                let value = (y.max(0.0) + e.ln_1p()) / beta;
                let s = if y >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                (value, s, beta * s * (1.0 - s))
            }
            Activation::Identity => (z, 1.0, 0.0),
        }
    }
}

/// Layer widths and wiring of a fully connected network.
///
/// `hidden.len()` hidden layers followed by a linear output layer. With
/// `skip = Some(l)` the input of linear layer `l` is `[h, input] / √2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub skip: Option<usize>,
    pub activation: Activation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub input: usize,
    pub output: usize,
    pub weights: usize,
    pub bias: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<LayerShape>,
    param_count: usize,
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    streams: usize,
    batch: usize,
    fingerprint: u64,
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    /// First and second activation derivatives over the value block.
    derivs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl MlpCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn streams(&self) -> usize {
        self.streams
    }
}

/// Order-sensitive hash of the parameter bits, used to detect stale caches.
pub(crate) fn fingerprint(params: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ params.len() as u64;
    for v in params {
        h = (h ^ v.to_bits()).wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl Mlp {
    pub fn new(config: MlpConfig) -> Result<Self, NnError> {
        if config.input_dim == 0 || config.output_dim == 0 || config.hidden.contains(&0) {
            return Err(NnError::InvalidConfig("layer widths must be positive"));
        }
        let depth = config.hidden.len() + 1;
        if let Some(s) = config.skip {
            if s == 0 || s >= depth {
                return Err(NnError::InvalidConfig("skip index must be within the hidden layers"));
            }
        }
        let mut layers = Vec::with_capacity(depth);
        let mut offset = 0;
        let mut prev = config.input_dim;
        for l in 0..depth {
            let input = if config.skip == Some(l) { prev + config.input_dim } else { prev };
            let output = if l + 1 == depth { config.output_dim } else { config.hidden[l] };
            let weights = offset;
            let bias = offset + input * output;
            offset = bias + output;
            layers.push(LayerShape { input, output, weights, bias });
            prev = output;
        }
        Ok(Mlp { config, layers, param_count: offset })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim
    }

    /// He-normal weights and zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = alloc::vec![0.0; self.param_count];
        for layer in &self.layers {
            let std = (2.0 / layer.input as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            for w in &mut p[layer.weights..layer.bias] {
                *w = normal.sample(rng);
            }
        }
        p
    }

    fn check_input(&self, params: &[f64], input: &Matrix, streams: usize) -> Result<usize, NnError> {
        if params.len() != self.param_count {
            return Err(NnError::DimensionMismatch { what: "parameters", expected: self.param_count, got: params.len() });
        }
        if input.cols() != self.config.input_dim {
            return Err(NnError::DimensionMismatch { what: "input width", expected: self.config.input_dim, got: input.cols() });
        }
        if streams == 0 || !input.rows().is_multiple_of(streams) {
            return Err(NnError::DimensionMismatch { what: "input rows", expected: streams, got: input.rows() });
        }
        Ok(input.rows() / streams)
    }

    /// Forward pass over `streams` stacked row blocks: block 0 holds values and
    /// blocks `1..streams` hold tangents (directional derivatives) of the
    /// input. Bias terms enter the value block only; tangent blocks are
    /// propagated through the Jacobian of each layer.
    ///
    /// The output is the raw linear output layer.
    pub fn forward(&self, params: &[f64], input: &Matrix, streams: usize) -> Result<(Matrix, MlpCache), NnError> {
        let batch = self.check_input(params, input, streams)?;
        let rows = input.rows();
        let depth = self.layers.len();
        let mut inputs = Vec::with_capacity(depth);
        let mut pre = Vec::with_capacity(depth - 1);
        let mut derivs = Vec::with_capacity(depth - 1);
        let mut h = input.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let a = if self.config.skip == Some(l) {
                let mut cat = Matrix::zeros(rows, layer.input);
                let hw = h.cols();
                for r in 0..rows {
                    let dst = cat.row_mut(r);
                    for (d, s) in dst[..hw].iter_mut().zip(h.row(r)) {
                        *d = s * INV_SQRT2;
                    }
                    for (d, s) in dst[hw..].iter_mut().zip(input.row(r)) {
                        *d = s * INV_SQRT2;
                    }
                }
                cat
            } else {
                h
            };
            let mut z = Matrix::zeros(rows, layer.output);
            gemm(
                rows,
                layer.input,
                layer.output,
                1.0,
                a.as_slice(),
                Strides::row_major(layer.input),
                &params[layer.weights..layer.bias],
                Strides::transposed(layer.input),
                0.0,
                z.as_mut_slice(),
                Strides::row_major(layer.output),
            );
            let bias = &params[layer.bias..layer.bias + layer.output];
            for r in 0..batch {
                for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
                    *v += b;
                }
            }
            inputs.push(a);
            if l + 1 == depth {
                return Ok((z, MlpCache { streams, batch, fingerprint: fingerprint(params), inputs, pre, derivs }));
            }
            let act = self.config.activation;
            let width = layer.output;
            let mut out = Matrix::zeros(rows, width);
            let mut d1 = alloc::vec![0.0; batch * width];
            let mut d2 = alloc::vec![0.0; batch * width];
            {
                let zs = z.as_slice();
                let os = out.as_mut_slice();
                let (value_z, tangent_z) = zs.split_at(batch * width);
                let (value_o, tangent_o) = os.split_at_mut(batch * width);
                for i in 0..batch * width {
                    let (v, a1, a2) = act.eval(value_z[i]);
                    value_o[i] = v;
                    d1[i] = a1;
                    d2[i] = a2;
                }
                for s in 0..streams - 1 {
                    let tz = &tangent_z[s * batch * width..(s + 1) * batch * width];
                    let to = &mut tangent_o[s * batch * width..(s + 1) * batch * width];
                    for ((o, &zt), &a1) in to.iter_mut().zip(tz).zip(&d1) {
                        *o = a1 * zt;
                    }
                }
            }
            derivs.push((d1, d2));
            pre.push(z);
            h = out;
        }
        unreachable!("network has at least one layer")
    }

    /// Backward pass: `grad_out` is the gradient with respect to every output
    /// row (value and tangent blocks). Parameter gradients are accumulated into
    /// `grad_params`; the gradient with respect to every input row is returned.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &MlpCache,
        grad_out: &Matrix,
        grad_params: &mut [f64],
    ) -> Result<Matrix, NnError> {
        if cache.inputs.len() != self.layers.len() || fingerprint(params) != cache.fingerprint {
            return Err(NnError::StaleCache);
        }
        let rows = cache.streams * cache.batch;
        if grad_out.rows() != rows || grad_out.cols() != self.config.output_dim {
            return Err(NnError::DimensionMismatch { what: "upstream gradient", expected: rows, got: grad_out.rows() });
        }
        if grad_params.len() != self.param_count {
            return Err(NnError::DimensionMismatch { what: "gradient buffer", expected: self.param_count, got: grad_params.len() });
        }
        let batch = cache.batch;
        let depth = self.layers.len();
        let mut grad_input = Matrix::zeros(rows, self.config.input_dim);
        let mut g = grad_out.clone();
        for l in (0..depth).rev() {
            let layer = self.layers[l];
            let width = layer.output;
            if l + 1 != depth {
                // g is the gradient w.r.t. the activation output; turn it into the
                // gradient w.r.t. the pre-activation, including the curvature term
                // coupling tangent rows back into the value rows.
                let z = cache.pre[l].as_slice();
                let gs = g.as_mut_slice();
                let (_, tangent_z) = z.split_at(batch * width);
                let (value_g, tangent_g) = gs.split_at_mut(batch * width);
                let (dd1, dd2) = &cache.derivs[l];
                for i in 0..batch * width {
                    let (d1, d2) = (dd1[i], dd2[i]);
                    let mut acc = value_g[i] * d1;
                    for s in 0..cache.streams - 1 {
                        let j = s * batch * width + i;
                        acc += tangent_g[j] * d2 * tangent_z[j];
                        tangent_g[j] *= d1;
                    }
                    value_g[i] = acc;
                }
            }
            let a = &cache.inputs[l];
            let (w_grad, b_grad) = grad_params[layer.weights..layer.bias + width].split_at_mut(layer.input * width);
            gemm(
                width,
                rows,
                layer.input,
                1.0,
                g.as_slice(),
                Strides::transposed(width),
                a.as_slice(),
                Strides::row_major(layer.input),
                1.0,
                w_grad,
                Strides::row_major(layer.input),
            );
            for r in 0..batch {
                for (bg, v) in b_grad.iter_mut().zip(g.row(r)) {
                    *bg += v;
                }
            }
            let mut ga = Matrix::zeros(rows, layer.input);
            gemm(
                rows,
                width,
                layer.input,
                1.0,
                g.as_slice(),
                Strides::row_major(width),
                &params[layer.weights..layer.bias],
                Strides::row_major(layer.input),
                0.0,
                ga.as_mut_slice(),
                Strides::row_major(layer.input),
            );
            if self.config.skip == Some(l) {
                let hw = layer.input - self.config.input_dim;
                let mut gh = Matrix::zeros(rows, hw);
                for r in 0..rows {
                    let src = ga.row(r);
                    for (d, s) in gh.row_mut(r).iter_mut().zip(&src[..hw]) {
                        *d = s * INV_SQRT2;
                    }
                    for (d, s) in grad_input.row_mut(r).iter_mut().zip(&src[hw..]) {
                        *d += s * INV_SQRT2;
                    }
                }
                g = gh;
            } else if l == 0 {
                for (d, s) in grad_input.as_mut_slice().iter_mut().zip(ga.as_slice()) {
                    *d += s;
                }
            } else {
                g = ga;
            }
        }
        Ok(grad_input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(act: Activation, skip: Option<usize>) -> Mlp {
        Mlp::new(MlpConfig { input_dim: 3, hidden: vec![5, 4, 6], output_dim: 2, skip, activation: act }).unwrap()
    }

    /// Straightforward per-sample re-implementation used as an oracle.
    fn oracle_forward(mlp: &Mlp, p: &[f64], x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (l, layer) in mlp.layers().iter().enumerate() {
            let a: Vec<f64> = if mlp.config().skip == Some(l) {
                h.iter().chain(x.iter()).map(|v| v * INV_SQRT2).collect()
            } else {
                h.clone()
            };
            let mut z = vec![0.0; layer.output];
            for o in 0..layer.output {
                z[o] = p[layer.bias + o] + (0..layer.input).map(|i| p[layer.weights + o * layer.input + i] * a[i]).sum::<f64>();
            }
            h = if l + 1 == mlp.layers().len() { z } else { z.iter().map(|&v| mlp.config().activation.eval(v).0).collect() };
        }
        h
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mlp = net(Activation::Relu, None);
        let p = vec![0.0; mlp.param_count()];
        let (out, _) = mlp.forward(&p, &Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]), 1).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer() {
        let mlp = Mlp::new(MlpConfig { input_dim: 1, hidden: vec![], output_dim: 1, skip: None, activation: Activation::Relu }).unwrap();
        let p = vec![2.0, 1.0];
        let (out, cache) = mlp.forward(&p, &Matrix::from_vec(1, 1, vec![3.0]), 1).unwrap();
        assert_eq!(out.get(0, 0), 7.0);
        let mut g = vec![0.0; 2];
        let gx = mlp.backward(&p, &cache, &Matrix::from_vec(1, 1, vec![1.0]), &mut g).unwrap();
        assert_eq!(g, vec![3.0, 1.0]);
        assert_eq!(gx.get(0, 0), 2.0);
    }

    #[test]
    fn matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for skip in [None, Some(2)] {
            let mlp = net(Activation::Softplus { beta: 100.0 }, skip);
            let p = mlp.init_params(&mut rng);
            let xs: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (out, _) = mlp.forward(&p, &Matrix::from_vec(4, 3, xs.clone()), 1).unwrap();
            for b in 0..4 {
                let want = oracle_forward(&mlp, &p, &xs[b * 3..b * 3 + 3]);
                for j in 0..2 {
                    assert!((out.get(b, j) - want[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mlp = net(Activation::Relu, Some(1));
        let p = mlp.init_params(&mut rng);
        let (_, cache) = mlp.forward(&p, &Matrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, -0.3, 0.2, 0.9]), 1).unwrap();
        let mut g = vec![0.0; p.len()];
        let gx = mlp.backward(&p, &cache, &Matrix::zeros(2, 2), &mut g).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert!(gx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = net(Activation::Relu, None);
        let mut p = mlp.init_params(&mut rng);
        let (_, cache) = mlp.forward(&p, &Matrix::from_vec(1, 3, vec![0.1, 0.2, 0.3]), 1).unwrap();
        p[0] += 1.0;
        let mut g = vec![0.0; p.len()];
        assert!(matches!(mlp.backward(&p, &cache, &Matrix::zeros(1, 2), &mut g), Err(NnError::StaleCache)));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mlp = net(Activation::Relu, None);
        let p = vec![0.0; mlp.param_count()];
        assert!(matches!(mlp.forward(&p, &Matrix::zeros(1, 4), 1), Err(NnError::DimensionMismatch { .. })));
        assert!(matches!(mlp.forward(&p[1..], &Matrix::zeros(1, 3), 1), Err(NnError::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_configs() {
        let bad = MlpConfig { input_dim: 3, hidden: vec![4, 4], output_dim: 1, skip: Some(3), activation: Activation::Relu };
        assert!(Mlp::new(bad).is_err());
        let bad = MlpConfig { input_dim: 3, hidden: vec![0], output_dim: 1, skip: None, activation: Activation::Relu };
        assert!(Mlp::new(bad).is_err());
    }

    /// Loss over values and tangents: Σ c·out + Σ e·tangent_out², which
    /// exercises the curvature path of the backward pass.
    fn tangent_loss(mlp: &Mlp, p: &[f64], x: &Matrix, coef: &[f64]) -> (f64, Matrix) {
        let (out, _) = mlp.forward(p, x, 4).unwrap();
        let batch = x.rows() / 4;
        let mut loss = 0.0;
        let mut g = Matrix::zeros(out.rows(), out.cols());
        for r in 0..out.rows() {
            for j in 0..out.cols() {
                let c = coef[(r * out.cols() + j) % coef.len()];
                let v = out.get(r, j);
                if r < batch {
                    loss += c * v;
                    g.set(r, j, c);
                } else {
                    loss += c * v * v;
                    g.set(r, j, 2.0 * c * v);
                }
            }
        }
        (loss, g)
    }

    #[test]
    fn gradients_with_tangent_streams_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..50 {
            let act = if case % 2 == 0 { Activation::Softplus { beta: 3.0 } } else { Activation::Identity };
            let skip = if case % 3 == 0 { Some(2) } else { None };
            let mlp = net(act, skip);
            let p = mlp.init_params(&mut rng);
            let batch = 2;
            let mut x = Matrix::zeros(4 * batch, 3);
            for v in x.as_mut_slice() {
                *v = rng.random_range(-1.0..1.0);
            }
            let coef: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = tangent_loss(&mlp, &p, &x, &coef);
            let (_, cache) = mlp.forward(&p, &x, 4).unwrap();
            let mut gp = vec![0.0; p.len()];
            let gx = mlp.backward(&p, &cache, &g, &mut gp).unwrap();
            let h = 1e-5;
            for i in 0..p.len() {
                let mut pp = p.clone();
                pp[i] += h;
                let lp = tangent_loss(&mlp, &pp, &x, &coef).0;
                pp[i] -= 2.0 * h;
                let lm = tangent_loss(&mlp, &pp, &x, &coef).0;
                let fd = (lp - lm) / (2.0 * h);
                let err = (fd - gp[i]).abs() / fd.abs().max(gp[i].abs()).max(1e-3);
                assert!(err < 1e-4, "case {case} param {i}: fd {fd} analytic {}", gp[i]);
            }
            for i in 0..x.as_slice().len() {
                let mut xp = x.clone();
                xp.as_mut_slice()[i] += h;
                let lp = tangent_loss(&mlp, &p, &xp, &coef).0;
                xp.as_mut_slice()[i] -= 2.0 * h;
                let lm = tangent_loss(&mlp, &p, &xp, &coef).0;
                let fd = (lp - lm) / (2.0 * h);
                let an = gx.as_slice()[i];
                let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
                assert!(err < 1e-4, "case {case} input {i}: fd {fd} analytic {an}");
            }
        }
    }
}
