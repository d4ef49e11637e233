//! Ray sampling, SDF-to-opacity conversion and weight accumulation.
//!
//! Sample parameters `t_0 < … < t_{n−1}` define `n − 1` sections. Each section
//! is evaluated at its midpoint; the field value and directional derivative
//! there give the signed distances at both section endpoints, which yield the
//! section opacity through a τ-sharpened sigmoid.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::{Mat4, Vec3};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

/// Depth normalization floor for `Σw`.
pub const DEPTH_EPS: f64 = 1e-6;
/// Sections shorter than this are treated as empty.
pub const MIN_SECTION: f64 = 1e-9;
const ALPHA_MAX: f64 = 1.0 - f64::EPSILON;

/// `x(t) = o + t d` with the foreground interval `[near, far]` inside the
/// unit sphere. Rays missing the sphere have `near == far` and no foreground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub near: f64,
    pub far: f64,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        let direction = direction.normalize();
        let (near, far) = unit_sphere_interval(origin, direction).unwrap_or((0.0, 0.0));
        Ray { origin, direction, near, far }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    pub fn has_foreground(&self) -> bool {
        self.far > self.near
    }
}

/// Intersection of the ray with the unit sphere, clipped to `t ≥ 0`.
pub fn unit_sphere_interval(o: Vec3, d: Vec3) -> Option<(f64, f64)> {
    let b = o.dot(d);
    let c = o.norm_squared() - 1.0;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let (t0, t1) = (-b - s, -b + s);
    if t1 <= 0.0 {
        return None;
    }
    Some((t0.max(0.0), t1))
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

/// `ln σ(y)`, stable for large `|y|`.
#[inline]
fn log_sigmoid(y: f64) -> f64 {
    -((-y).max(0.0) + (-y.abs()).exp().ln_1p())
}

/// Stratified samples: one uniform draw per equal-width bin of `[near, far]`
/// (bin midpoints when `rng` is `None`).
pub fn coarse_samples<R: Rng + ?Sized>(near: f64, far: f64, n: usize, rng: Option<&mut R>) -> Vec<f64> {
    let w = (far - near) / n as f64;
    match rng {
        Some(r) => (0..n).map(|i| near + (i as f64 + r.random::<f64>()) * w).collect(),
        None => (0..n).map(|i| near + (i as f64 + 0.5) * w).collect(),
    }
}

/// Inverse-CDF draws from the piecewise-constant density that puts mass
/// `weights[i]` uniformly on `[ts[i], ts[i+1]]`. Uses stratified uniforms
/// (midpoints when `rng` is `None`). Zero total weight falls back to uniform.
pub fn importance_samples<R: Rng + ?Sized>(ts: &[f64], weights: &[f64], n: usize, rng: Option<&mut R>) -> Vec<f64> {
    assert_eq!(weights.len() + 1, ts.len(), "one weight per section");
    if n == 0 || weights.is_empty() {
        return Vec::new();
    }
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(weights.len() + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += if total > 0.0 { w.max(0.0) / total } else { (ts[i + 1] - ts[i]) / (ts[ts.len() - 1] - ts[0]) };
        cdf.push(acc);
    }
    let top = acc;
    let us: Vec<f64> = match rng {
        Some(r) => (0..n).map(|k| (k as f64 + r.random::<f64>()) / n as f64 * top).collect(),
        None => (0..n).map(|k| (k as f64 + 0.5) / n as f64 * top).collect(),
    };
    let mut out = Vec::with_capacity(n);
    let mut bin = 0;
    for u in us {
        // Draws are increasing, so the bin pointer only moves forward.
        while bin + 1 < weights.len() && cdf[bin + 1] <= u {
            bin += 1;
        }
        while bin + 1 < weights.len() && cdf[bin + 1] - cdf[bin] <= 0.0 {
            bin += 1;
        }
        let mass = cdf[bin + 1] - cdf[bin];
        let f = if mass > 0.0 { ((u - cdf[bin]) / mass).clamp(0.0, 1.0) } else { 0.5 };
        out.push(ts[bin] + f * (ts[bin + 1] - ts[bin]));
    }
    out
}

/// Sorted union of two sample lists with exact duplicates removed.
pub fn merge_samples(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.total_cmp(y));
    all.dedup();
    all
}

/// Section midpoints `(t_i + t_{i+1}) / 2`.
pub fn midpoints(ts: &[f64]) -> Vec<f64> {
    ts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Endpoint estimates for one section from the midpoint value and the
/// directional derivative `∇φ·d`.
#[inline]
pub fn section_endpoints(delta_mid: f64, slope: f64, length: f64) -> (f64, f64) {
    let h = 0.5 * length * slope;
    (delta_mid - h, delta_mid + h)
}

/// Endpoint signed distances for every section of `ts`, evaluating `field`
/// (value and gradient) at the section midpoints.
pub fn section_deltas(field: impl Fn(Vec3) -> (f64, Vec3), ray: &Ray, ts: &[f64]) -> Vec<(f64, f64)> {
    ts.windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            let (d, g) = field(ray.at(m));
            section_endpoints(d, g.dot(ray.direction), w[1] - w[0])
        })
        .collect()
}

/// Section opacity `max{0, (σ(τδ_i) − σ(τδ_{i+1})) / σ(τδ_i)}`, kept below 1.
pub fn alpha(delta_i: f64, delta_next: f64, tau: f64) -> f64 {
    alpha_with_grad(delta_i, delta_next, tau).0
}

/// Opacity and its partial derivatives `(α, ∂α/∂δ_i, ∂α/∂δ_{i+1}, ∂α/∂τ)`.
///
/// Written as `α = 1 − exp(ln σ(τδ_{i+1}) − ln σ(τδ_i))` so that neither
/// saturated sigmoid loses precision.
pub fn alpha_with_grad(delta_i: f64, delta_next: f64, tau: f64) -> (f64, f64, f64, f64) {
    let (y0, y1) = (tau * delta_i, tau * delta_next);
    let log_ratio = log_sigmoid(y1) - log_sigmoid(y0);
    if log_ratio >= 0.0 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let a = -log_ratio.exp_m1();
    if a >= ALPHA_MAX {
        return (ALPHA_MAX, 0.0, 0.0, 0.0);
    }
    // dα/d(log_ratio) = −(1 − α); d ln σ(y)/dy = σ(−y).
    let da = -(1.0 - a);
    let (s0, s1) = (sigmoid(-y0), sigmoid(-y1));
    (a, da * -tau * s0, da * tau * s1, da * (delta_next * s1 - delta_i * s0))
}

/// `w_i = α_i Π_{j<i}(1 − α_j)`; also returns the final transmittance.
pub fn accumulate(alphas: &[f64]) -> (Vec<f64>, f64) {
    let mut t = 1.0;
    let w = alphas
        .iter()
        .map(|&a| {
            let w = a * t;
            t *= 1.0 - a;
            w
        })
        .collect();
    (w, t)
}

/// Gradient of a scalar through `accumulate`: `dL/dα_i = T_i (g_i − R_i)` with
/// `R_i = Σ_{k>i} g_k α_k Π_{i<j<k}(1 − α_j)`, computed by a backward sweep
/// without dividing by `1 − α_i`.
pub fn accumulate_backward(alphas: &[f64], grad_weights: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    let mut trans = vec![1.0; n];
    for i in 1..n {
        trans[i] = trans[i - 1] * (1.0 - alphas[i - 1]);
    }
    let mut out = vec![0.0; n];
    let mut r = 0.0;
    for i in (0..n).rev() {
        out[i] = trans[i] * (grad_weights[i] - r);
        r = grad_weights[i] * alphas[i] + (1.0 - alphas[i]) * r;
    }
    out
}

/// `Σ w_i c_i + (1 − Σ w_i) c_bg`.
pub fn render_pixel(weights: &[f64], colours: &[Vec3], background: Vec3) -> Vec3 {
    let mut c = Vec3::ZERO;
    let mut sum = 0.0;
    for (w, ci) in weights.iter().zip(colours) {
        c += *ci * *w;
        sum += w;
    }
    c + background * (1.0 - sum)
}

/// Expected depth `Σ w_i t_i / max(Σ w_i, ε)`; `None` for rays with no
/// accumulated weight.
pub fn render_depth(weights: &[f64], ts: &[f64]) -> Option<f64> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    Some(weights.iter().zip(ts).map(|(w, t)| w * t).sum::<f64>() / sum.max(DEPTH_EPS))
}

pub fn render_mask(weights: &[f64]) -> f64 {
    weights.iter().sum()
}

/// Samples along a ray with their section quantities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RaySampleSet {
    pub ts: Vec<f64>,
    pub deltas: Vec<(f64, f64)>,
    pub alphas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RaySampleSet {
    pub fn from_deltas(ts: Vec<f64>, deltas: Vec<(f64, f64)>, tau: f64) -> Self {
        let alphas = ts
            .windows(2)
            .zip(&deltas)
            .map(|(w, &(d0, d1))| if w[1] - w[0] < MIN_SECTION { 0.0 } else { alpha(d0, d1, tau) })
            .collect::<Vec<_>>();
        let (weights, _) = accumulate(&alphas);
        RaySampleSet { ts, deltas, alphas, weights }
    }

    /// Opacities from field values at the sample points themselves (no
    /// gradient correction); used for the coarse pass.
    pub fn from_point_values(ts: Vec<f64>, values: &[f64], tau: f64) -> Self {
        let deltas = values.windows(2).map(|v| (v[0], v[1])).collect();
        RaySampleSet::from_deltas(ts, deltas, tau)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        midpoints(&self.ts)
    }
}

/// Applies a homogeneous symmetry map to a ray's midpoint samples. Returns
/// the mapped points, the mapped (unnormalized) direction and, per sample,
/// whether the image stays inside the unit sphere.
pub fn transformed_path(ray: &Ray, mids: &[f64], m: &Mat4) -> (Vec<Vec3>, Vec3, Vec<bool>) {
    let pts: Vec<Vec3> = mids.iter().map(|&t| m.transform_point(ray.at(t))).collect();
    let inside = pts.iter().map(|p| p.norm_squared() <= 1.0).collect();
    (pts, m.transform_direction(ray.direction), inside)
}

/// Sample counts and sharpness for an analytic render.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub tau: f64,
}

/// Colour, depth and mask of one ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelSample {
    pub colour: Vec3,
    pub depth: Option<f64>,
    pub mask: f64,
}

/// Hierarchical render of an analytic field: stratified coarse pass from
/// point values, one importance round, midpoint evaluation with gradient
/// correction. `shade(x, n, d)` gives the colour at a section midpoint.
pub fn render_ray<R: Rng + ?Sized>(
    field: &dyn Fn(Vec3) -> (f64, Vec3),
    shade: &dyn Fn(Vec3, Vec3, Vec3) -> Vec3,
    ray: &Ray,
    background: Vec3,
    cfg: SamplingConfig,
    mut rng: Option<&mut R>,
) -> PixelSample {
    if !ray.has_foreground() {
        return PixelSample { colour: background, depth: None, mask: 0.0 };
    }
    let coarse = coarse_samples(ray.near, ray.far, cfg.n_coarse, rng.as_deref_mut());
    let values: Vec<f64> = coarse.iter().map(|&t| field(ray.at(t)).0).collect();
    let set = RaySampleSet::from_point_values(coarse.clone(), &values, cfg.tau);
    let fine = importance_samples(&coarse, &set.weights, cfg.n_fine, rng);
    let ts = merge_samples(&coarse, &fine);
    let mids = midpoints(&ts);
    let deltas = section_deltas(field, ray, &ts);
    let set = RaySampleSet::from_deltas(ts, deltas, cfg.tau);
    let colours: Vec<Vec3> = mids
        .iter()
        .map(|&t| {
            let x = ray.at(t);
            shade(x, field(x).1, ray.direction)
        })
        .collect();
    PixelSample {
        colour: render_pixel(&set.weights, &colours, background),
        depth: render_depth(&set.weights, &mids),
        mask: render_mask(&set.weights),
    }
}

/// Dense-quadrature reference: `n` uniform samples over the foreground, with
/// opacities from exact point values and colours at section midpoints.
pub fn render_ray_dense(
    field: &dyn Fn(Vec3) -> (f64, Vec3),
    shade: &dyn Fn(Vec3, Vec3, Vec3) -> Vec3,
    ray: &Ray,
    background: Vec3,
    n: usize,
    tau: f64,
) -> PixelSample {
    if !ray.has_foreground() {
        return PixelSample { colour: background, depth: None, mask: 0.0 };
    }
    let step = (ray.far - ray.near) / (n - 1) as f64;
    let ts: Vec<f64> = (0..n).map(|i| ray.near + i as f64 * step).collect();
    let values: Vec<f64> = ts.iter().map(|&t| field(ray.at(t)).0).collect();
    let set = RaySampleSet::from_point_values(ts, &values, tau);
    let mids = set.midpoints();
    let colours: Vec<Vec3> = mids
        .iter()
        .map(|&t| {
            let x = ray.at(t);
            shade(x, field(x).1, ray.direction)
        })
        .collect();
    PixelSample {
        colour: render_pixel(&set.weights, &colours, background),
        depth: render_depth(&set.weights, &mids),
        mask: render_mask(&set.weights),
    }
}

/// First hit of `o + t d` with the zero-level set by sphere tracing.
pub fn sphere_trace(field: &dyn Fn(Vec3) -> f64, ray: &Ray, t_max: f64, max_steps: usize, eps: f64) -> Option<f64> {
    let mut t = 0.0;
    for _ in 0..max_steps {
        let d = field(ray.at(t));
        if d < eps {
            return Some(t);
        }
        t += d;
        if t > t_max {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdf::Shape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Rng8 = ChaCha8Rng;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(0.3, 0.3, 20.0), 0.0);
        assert_eq!(alpha(-0.1, 0.1, 20.0), 0.0);
        let s = |x: f64| 1.0 / (1.0 + (-x).exp());
        let want = (s(2.0) - s(-2.0)) / s(2.0);
        assert!((alpha(0.1, -0.1, 20.0) - want).abs() < 1e-15);
        assert!((alpha(0.1, -0.1, 20.0) - 0.86466).abs() < 1e-4);
        // Far inside a saturated surface the opacity stays below one.
        assert!(alpha(0.001, -50.0, 1e4) < 1.0);
    }

    #[test]
    fn alpha_gradients_match_fd() {
        let h = 1e-6;
        for &(d0, d1, tau) in &[(0.1, -0.1, 20.0), (0.03, 0.01, 80.0), (-0.02, -0.05, 30.0), (0.5, 0.2, 5.0)] {
            let (_, g0, g1, gt) = alpha_with_grad(d0, d1, tau);
            let fd0 = (alpha(d0 + h, d1, tau) - alpha(d0 - h, d1, tau)) / (2.0 * h);
            let fd1 = (alpha(d0, d1 + h, tau) - alpha(d0, d1 - h, tau)) / (2.0 * h);
            let fdt = (alpha(d0, d1, tau + h) - alpha(d0, d1, tau - h)) / (2.0 * h);
            for (a, b) in [(g0, fd0), (g1, fd1), (gt, fdt)] {
                assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn accumulate_examples_and_identity() {
        let (w, t) = accumulate(&[0.5, 0.5]);
        assert_eq!(w, vec![0.5, 0.25]);
        assert_eq!(t, 0.25);
        let (w, _) = accumulate(&[1.0 - 1e-12, 0.5, 0.3]);
        assert!((w[0] - 1.0).abs() < 1e-11 && w[1] < 1e-11);
        let mut rng = Rng8::seed_from_u64(1);
        for _ in 0..100 {
            let a: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..0.999)).collect();
            let (w, t) = accumulate(&a);
            let prod: f64 = a.iter().map(|x| 1.0 - x).product();
            assert!((w.iter().sum::<f64>() - (1.0 - prod)).abs() < 1e-12);
            assert!((w.iter().sum::<f64>() + t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn accumulate_backward_matches_fd() {
        let mut rng = Rng8::seed_from_u64(2);
        let a: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..0.95)).collect();
        let g: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |a: &[f64]| accumulate(a).0.iter().zip(&g).map(|(w, g)| w * g).sum::<f64>();
        let an = accumulate_backward(&a, &g);
        for i in 0..7 {
            let mut p = a.clone();
            p[i] += 1e-6;
            let lp = f(&p);
            p[i] -= 2e-6;
            let fd = (lp - f(&p)) / 2e-6;
            assert!((fd - an[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn render_pixel_cases() {
        let red = Vec3::X;
        let blue = Vec3::Z;
        assert_eq!(render_pixel(&[1.0], &[red], blue), red);
        assert_eq!(render_pixel(&[0.0, 0.0], &[red, red], blue), blue);
        assert_eq!(render_depth(&[0.0], &[2.0]), None);
        let d = render_depth(&[1.0 - 1e-9], &[2.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_is_stratified() {
        let mut rng = Rng8::seed_from_u64(3);
        let ts = coarse_samples(0.0, 1.0, 4, Some(&mut rng));
        for (i, t) in ts.iter().enumerate() {
            assert!(*t >= i as f64 * 0.25 && *t < (i + 1) as f64 * 0.25);
        }
    }

    #[test]
    fn importance_concentrates_and_matches_pdf() {
        let ts = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut rng = Rng8::seed_from_u64(4);
        let s = importance_samples(&ts, &[0.0, 0.0, 0.7, 0.0], 16, Some(&mut rng));
        assert!(s.iter().all(|&t| (0.5..=0.75).contains(&t)));
        // Histogram of many stratified draws vs the target piecewise density.
        let w = [0.1, 0.4, 0.2, 0.3];
        let draws = importance_samples(&ts, &w, 100_000, Some(&mut rng));
        let bins = 40;
        let mut hist = vec![0.0; bins];
        for t in &draws {
            hist[((t * bins as f64) as usize).min(bins - 1)] += 1.0 / draws.len() as f64;
        }
        let tv: f64 = (0..bins).map(|b| (hist[b] - w[b * 4 / bins] / (bins / 4) as f64).abs()).sum::<f64>() * 0.5;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn section_deltas_cases() {
        let plane = Shape::plane(Vec3::new(0.0, 0.0, 1.0), 0.2);
        let ray = Ray::new(Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.1, 0.0, -1.0));
        let ts = [2.0, 2.3, 2.35, 2.9];
        let d = section_deltas(|x| plane.eval_parts(x), &ray, &ts);
        for (k, w) in ts.windows(2).enumerate() {
            assert!((d[k].0 - plane.distance(ray.at(w[0]))).abs() < 1e-12);
            assert!((d[k].1 - plane.distance(ray.at(w[1]))).abs() < 1e-12);
        }
        let d = section_deltas(|_| (0.4, Vec3::ZERO), &ray, &ts);
        assert!(d.iter().all(|&(a, b)| a == 0.4 && b == 0.4));
        // Sphere: error shrinks quadratically with the section length.
        let sphere = Shape::sphere(Vec3::ZERO, 0.5);
        let err = |h: f64| {
            let ts = [2.2, 2.2 + h];
            let d = section_deltas(|x| sphere.eval_parts(x), &ray, &ts);
            (d[0].1 - sphere.distance(ray.at(2.2 + h))).abs()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e2 < e1 * 0.3 && e1 < 1e-3, "{e1} {e2}");
    }

    #[test]
    fn sphere_interval_cases() {
        let r = Ray::new(Vec3::new(0.0, 0.0, 3.0), -Vec3::Z);
        assert!((r.near - 2.0).abs() < 1e-12 && (r.far - 4.0).abs() < 1e-12);
        let miss = Ray::new(Vec3::new(0.0, 2.0, 3.0), -Vec3::Z);
        assert!(!miss.has_foreground());
    }

    fn sphere_scene() -> (Shape, impl Fn(Vec3, Vec3, Vec3) -> Vec3) {
        let s = Shape::sphere(Vec3::new(0.1, 0.0, 0.0), 0.5);
        let shade = |x: Vec3, n: Vec3, _d: Vec3| {
            let n = n.normalize();
            Vec3::new(0.5 + 0.4 * n.x, 0.5 + 0.4 * n.y, 0.3 + 0.5 * x.z.abs())
        };
        (s, shade)
    }

    #[test]
    fn hierarchical_matches_dense_and_concentrates() {
        let (s, shade) = sphere_scene();
        let field = |x: Vec3| s.eval_parts(x);
        let bg = Vec3::new(0.2, 0.3, 0.9);
        let mut rng = Rng8::seed_from_u64(5);
        let cfg = SamplingConfig { n_coarse: 64, n_fine: 64, tau: 320.0 };
        let mut err = 0.0;
        for i in 0..40 {
            let a = i as f64 * 0.15;
            let ray = Ray::new(Vec3::new(3.0 * a.cos(), 0.4 * a.sin(), 3.0 * a.sin()), Vec3::new(-a.cos(), 0.05, -a.sin()));
            let h = render_ray(&field, &shade, &ray, bg, cfg, Some(&mut rng));
            let d = render_ray_dense(&field, &shade, &ray, bg, 4096, 320.0);
            err += (h.colour - d.colour).abs().max_elem();
        }
        assert!(err / 40.0 < 0.01, "mean error {}", err / 40.0);

        let ray = Ray::new(Vec3::new(0.1, 0.0, 3.0), -Vec3::Z);
        let truth = 2.5;
        let mut last = f64::INFINITY;
        for tau in [20.0, 80.0, 320.0] {
            let ts = coarse_samples::<Rng8>(ray.near, ray.far, 2048, None);
            let deltas = section_deltas(field, &ray, &ts);
            let set = RaySampleSet::from_deltas(ts, deltas, tau);
            let mids = set.midpoints();
            let best = set.weights.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let depth_err = (render_depth(&set.weights, &mids).unwrap() - truth).abs();
            assert!((mids[best] - truth).abs() < 0.01);
            assert!(depth_err < last);
            last = depth_err;
        }
    }

    #[test]
    fn transformed_identity_and_fixed_points() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.1, 0.2, -1.0));
        let mids = [2.2, 2.5, 3.0];
        let (p, d, inside) = transformed_path(&ray, &mids, &Mat4::IDENTITY);
        for (k, t) in mids.iter().enumerate() {
            assert_eq!(p[k], ray.at(*t));
        }
        assert_eq!(d, ray.direction);
        assert!(inside.iter().all(|&b| b));
        let reflect = Mat4::affine(crate::math::Mat3::diag(Vec3::new(1.0, -1.0, 1.0)), Vec3::ZERO);
        let flat = Ray::new(Vec3::new(0.0, 0.0, 3.0), -Vec3::Z);
        let (p, _, _) = transformed_path(&flat, &[2.5], &reflect);
        assert_eq!(p[0], flat.at(2.5));
    }

    #[test]
    fn sphere_trace_hits_sphere() {
        let s = Shape::sphere(Vec3::ZERO, 1.0);
        let ray = Ray { origin: Vec3::new(0.0, 0.0, 3.0), direction: -Vec3::Z, near: 0.0, far: 0.0 };
        let t = sphere_trace(&|x| s.distance(x), &ray, 10.0, 256, 1e-5).unwrap();
        assert!((t - 2.0).abs() < 1e-4);
    }
}
