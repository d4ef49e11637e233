//! The full reconstruction model: neural SDF (+ ground plane), appearance
//! heads, direction-only background, opacity sharpness τ and the learnable
//! symmetry frames, with the batched loss and its exact gradient.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::appearance::{phong_compose, phong_compose_backward, AppearanceConfig, AppearanceHeads, HeadForward, HeadInputs};
use crate::losses::{colour_loss, colour_loss_grad, LossError, LossReport, LossSwitches, LossWeights};
use crate::math::{Mat3, Mat4, Vec3};
use crate::nn::{Activation, Matrix, Mlp, MlpConfig, NnError, ParamGroup, ParameterStore, PositionalEncoding};
use crate::render::{
    accumulate, accumulate_backward, alpha_with_grad, coarse_samples, importance_samples, merge_samples, section_endpoints, Ray,
    RaySampleSet, MIN_SECTION,
};
use crate::sdf::{joint_branch, EllipsoidInit, GroundPlane, JointBranch, NeuralSdf, NeuralSdfConfig};
use crate::symmetry::{SymmetryDraw, SymmetryError, SymmetrySet, SymmetrySpec};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub sdf: NeuralSdfConfig,
    pub appearance: AppearanceConfig,
    pub background_hidden: Vec<usize>,
    pub background_freqs: usize,
    pub tau_init: f64,
    pub n_coarse: usize,
    pub n_fine: usize,
    /// Background samples per ray; with a direction-only background all of
    /// them would evaluate the same network, so one evaluation is used.
    pub n_background: usize,
}

impl ModelConfig {
    /// Network shapes and sample counts of the reference configuration.
    pub fn reference() -> Self {
        ModelConfig {
            sdf: NeuralSdfConfig::default(),
            appearance: AppearanceConfig::default(),
            background_hidden: vec![128; 2],
            background_freqs: 4,
            tau_init: 20.0,
            n_coarse: 64,
            n_fine: 64,
            n_background: 32,
        }
    }

    /// Small networks and sample counts sized for single-core CPU training.
    pub fn desk() -> Self {
        ModelConfig {
            sdf: NeuralSdfConfig { hidden: vec![64; 4], skip: Some(2), num_freqs: 6, feature_dim: 32, softplus_beta: 100.0 },
            appearance: AppearanceConfig { material_hidden: vec![32; 4], diffuse_hidden: vec![32; 2], specular_hidden: vec![32; 4], dir_freqs: 4 },
            background_hidden: vec![32; 2],
            background_freqs: 4,
            tau_init: 20.0,
            n_coarse: 32,
            n_fine: 32,
            n_background: 32,
        }
    }
}

/// Offsets of every parameter block in the store.
#[derive(Clone, Debug, PartialEq)]
struct Slices {
    sdf: Range<usize>,
    ground_height: Option<usize>,
    ground_feature: Range<usize>,
    material: Range<usize>,
    diffuse: [Range<usize>; 2],
    specular: [Range<usize>; 2],
    log_tau: usize,
    background: Range<usize>,
    symmetry: Vec<Range<usize>>,
}

/// Sample positions and symmetry draws for one batch, fixed before the
/// differentiable evaluation (sample placement is not differentiated).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SamplePlan {
    pub ts: Vec<Vec<f64>>,
    pub draws: Vec<(usize, SymmetryDraw)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossOptions {
    pub weights: LossWeights,
    pub switches: LossSwitches,
}

/// Per-ray render of the source path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOutput {
    pub colour: Vec3,
    pub depth: Option<f64>,
    /// `Σ w` over all sections.
    pub opacity: f64,
    /// `Σ w` over sections where the object (not the ground) wins.
    pub object_mask: f64,
    pub albedo: Vec3,
    pub diffuse: Vec3,
    pub specular: Vec3,
}

#[derive(Clone, Debug)]
pub struct SceneModel {
    config: ModelConfig,
    sdf: NeuralSdf,
    heads: AppearanceHeads,
    background: Mlp,
    bg_enc: PositionalEncoding,
    pub store: ParameterStore,
    /// Symmetry specs; the optimizer's rotation increment lives in the store
    /// until `fold_symmetry` applies it.
    pub symmetry: SymmetrySet,
    ground_up: Option<Vec3>,
    slices: Slices,
}

/// Evaluated samples of one path (source or transformed).
struct PathData {
    pts: Vec<Vec3>,
    /// Direction per ray (unnormalized for the transformed path).
    dirs: Vec<Vec3>,
    delta: Vec<f64>,
    normal: Vec<Vec3>,
    branch: Vec<JointBranch>,
    valid: Vec<bool>,
    alpha: Vec<f64>,
    /// `(∂α/∂δ⁻, ∂α/∂δ⁺, ∂α/∂τ)`.
    dalpha: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

fn add_outer(m: &mut Mat4, a: Vec3, b: [f64; 4]) {
    for i in 0..3 {
        for (j, bj) in b.iter().enumerate() {
            m.m[i][j] += a[i] * bj;
        }
    }
}

impl SceneModel {
    /// Builds a model with geometric SDF initialization. `ground` adds a
    /// learnable-height ground plane with fixed up vector to the field.
    pub fn new<R: Rng + ?Sized>(
        config: ModelConfig,
        ellipsoid: &EllipsoidInit,
        ground: Option<GroundPlane>,
        symmetry: SymmetrySet,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if config.n_coarse < 2 {
            return Err(ModelError::Invalid("at least two coarse samples are required"));
        }
        if !(config.tau_init > 0.0) {
            return Err(ModelError::Invalid("initial tau must be positive"));
        }
        let sdf = NeuralSdf::new(config.sdf.clone())?;
        let fdim = sdf.feature_dim();
        let heads = AppearanceHeads::new(&config.appearance, fdim)?;
        let bg_enc = PositionalEncoding::new(config.background_freqs, true);
        let background = Mlp::new(MlpConfig {
            input_dim: bg_enc.output_dim(3),
            hidden: config.background_hidden.clone(),
            output_dim: 3,
            skip: None,
            activation: Activation::Relu,
        })?;
        let mut store = ParameterStore::new();
        let sdf_r = store.push("sdf", ParamGroup::Sdf, &sdf.geometric_init(ellipsoid, rng));
        let ground_height = ground.map(|g| store.push("ground_height", ParamGroup::Sdf, &[g.height]).start);
        let gf: Vec<f64> = (0..fdim).map(|_| 0.0).collect();
        let ground_feature = store.push("ground_feature", ParamGroup::Sdf, &gf);
        let material = store.push("material", ParamGroup::Material, &heads.material.mlp().init_params(rng));
        let d0 = heads.diffuse.mlp().init_params(rng);
        let s0 = heads.specular.mlp().init_params(rng);
        // Both lighting weight sets start identical so the transformed path
        // initially predicts the same lighting as the source path.
        let diffuse = [store.push("diffuse0", ParamGroup::Diffuse, &d0), store.push("diffuse1", ParamGroup::Diffuse, &d0)];
        let specular = [store.push("specular0", ParamGroup::Specular, &s0), store.push("specular1", ParamGroup::Specular, &s0)];
        let log_tau = store.push("log_tau", ParamGroup::Tau, &[config.tau_init.ln()]).start;
        let background_r = store.push("background", ParamGroup::Background, &background.init_params(rng));
        let mut sym = Vec::new();
        for (i, spec) in symmetry.specs().iter().enumerate() {
            let t = spec.frame.translation;
            let name = alloc::format!("symmetry{i}");
            sym.push(store.push(&name, ParamGroup::Symmetry, &[0.0, 0.0, 0.0, t.x, t.y, t.z]));
        }
        let slices = Slices {
            sdf: sdf_r,
            ground_height,
            ground_feature,
            material,
            diffuse,
            specular,
            log_tau,
            background: background_r,
            symmetry: sym,
        };
        Ok(SceneModel { config, sdf, heads, background, bg_enc, store, symmetry, ground_up: ground.map(|g| g.up), slices })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Changes per-ray sample counts; the networks are unaffected.
    pub fn set_sample_counts(&mut self, n_coarse: usize, n_fine: usize, n_background: usize) -> Result<(), ModelError> {
        if n_coarse < 2 {
            return Err(ModelError::Invalid("at least two coarse samples are required"));
        }
        self.config.n_coarse = n_coarse;
        self.config.n_fine = n_fine;
        self.config.n_background = n_background;
        Ok(())
    }

    pub fn sdf(&self) -> &NeuralSdf {
        &self.sdf
    }

    pub fn heads(&self) -> &AppearanceHeads {
        &self.heads
    }

    pub fn tau(&self) -> f64 {
        self.store.values()[self.slices.log_tau].exp()
    }

    pub fn ground(&self) -> Option<GroundPlane> {
        let up = self.ground_up?;
        let h = self.store.values()[self.slices.ground_height?];
        Some(GroundPlane { height: h, up })
    }

    pub fn ground_feature(&self) -> &[f64] {
        &self.store.values()[self.slices.ground_feature.clone()]
    }

    pub fn sdf_params(&self) -> &[f64] {
        &self.store.values()[self.slices.sdf.clone()]
    }

    pub fn material_params(&self) -> &[f64] {
        &self.store.values()[self.slices.material.clone()]
    }

    pub fn diffuse_params(&self, k: usize) -> &[f64] {
        &self.store.values()[self.slices.diffuse[k].clone()]
    }

    pub fn specular_params(&self, k: usize) -> &[f64] {
        &self.store.values()[self.slices.specular[k].clone()]
    }

    /// Symmetry specs with the pending rotation increment and translation
    /// from the store applied.
    pub fn effective_specs(&self) -> Vec<SymmetrySpec> {
        let v = self.store.values();
        self.symmetry
            .specs()
            .iter()
            .zip(&self.slices.symmetry)
            .map(|(spec, r)| {
                let p = &v[r.clone()];
                let mut s = *spec;
                s.frame.rotation = (Mat3::exp_so3(Vec3::new(p[0], p[1], p[2])) * spec.frame.rotation).orthonormalize();
                s.frame.translation = Vec3::new(p[3], p[4], p[5]);
                s
            })
            .collect()
    }

    /// Moves the rotation increments into the frames and zeroes them.
    pub fn fold_symmetry(&mut self) {
        let specs = self.effective_specs();
        for (i, s) in specs.into_iter().enumerate() {
            self.symmetry.specs_mut()[i] = s;
            let r = self.slices.symmetry[i].clone();
            self.store.values_mut()[r.start..r.start + 3].fill(0.0);
        }
    }

    /// Restricts the rotation-increment gradient to the canonical up axis,
    /// keeping reflection planes that contain the up direction vertical.
    pub fn project_symmetry_gradient(&self, grads: &mut [f64]) {
        let Some(up) = self.ground_up else { return };
        for (spec, r) in self.symmetry.specs().iter().zip(&self.slices.symmetry) {
            let u = spec.frame.rotation * up;
            let g = Vec3::new(grads[r.start], grads[r.start + 1], grads[r.start + 2]);
            let p = u * g.dot(u);
            grads[r.start..r.start + 3].copy_from_slice(&p.to_array());
        }
    }

    /// Joint field values (no normals), chunked.
    pub fn field_values(&self, pts: &[Vec3]) -> Result<Vec<f64>, ModelError> {
        let mut v = self.sdf.distances(self.sdf_params(), pts)?;
        if let Some(g) = self.ground() {
            for (d, p) in v.iter_mut().zip(pts) {
                *d = d.min(g.distance(*p));
            }
        }
        Ok(v)
    }

    /// Object field values only (ground excluded).
    pub fn object_values(&self, pts: &[Vec3]) -> Result<Vec<f64>, ModelError> {
        Ok(self.sdf.distances(self.sdf_params(), pts)?)
    }

    /// Chooses sample positions (stratified coarse pass, one importance round
    /// on the coarse weights at the current τ) and the symmetry draw per ray.
    pub fn plan<R: Rng + ?Sized>(&self, rays: &[Ray], stratified: bool, transformed: bool, rng: &mut R) -> Result<SamplePlan, ModelError> {
        let nc = self.config.n_coarse;
        let mut coarse: Vec<Vec<f64>> = Vec::with_capacity(rays.len());
        let mut pts = Vec::new();
        for ray in rays {
            if !ray.has_foreground() {
                coarse.push(Vec::new());
                continue;
            }
            let ts = coarse_samples(ray.near, ray.far, nc, if stratified { Some(&mut *rng) } else { None });
            pts.extend(ts.iter().map(|&t| ray.at(t)));
            coarse.push(ts);
        }
        let values = self.field_values(&pts)?;
        let tau = self.tau();
        let mut off = 0;
        let mut out = SamplePlan::default();
        for ts in coarse {
            if ts.is_empty() {
                out.ts.push(ts);
                continue;
            }
            let v = &values[off..off + ts.len()];
            off += ts.len();
            let set = RaySampleSet::from_point_values(ts.clone(), v, tau);
            let fine = importance_samples(&ts, &set.weights, self.config.n_fine, if stratified { Some(&mut *rng) } else { None });
            out.ts.push(merge_samples(&ts, &fine));
        }
        for _ in rays {
            if transformed {
                let i = self.symmetry.sample_index(rng);
                out.draws.push((i, self.symmetry.specs()[i].draw(rng)));
            } else {
                out.draws.push((0, SymmetryDraw::Fixed));
            }
        }
        Ok(out)
    }

    fn offsets(plan: &SamplePlan) -> Vec<usize> {
        let mut o = Vec::with_capacity(plan.ts.len() + 1);
        o.push(0);
        for ts in &plan.ts {
            let s = ts.len().saturating_sub(1);
            o.push(o.last().unwrap() + s);
        }
        o
    }

    fn background_forward(&self, dirs: &[Vec3]) -> Result<(Matrix, crate::nn::MlpCache, Vec<Vec3>), NnError> {
        let flat: Vec<f64> = dirs.iter().flat_map(|d| d.to_array()).collect();
        let mut input = Matrix::zeros(dirs.len(), self.background.input_dim());
        self.bg_enc.encode_batch(&flat, 3, false, &mut input, 0);
        let (raw, cache) = self.background.forward(&self.store.values()[self.slices.background.clone()], &input, 1)?;
        let colours = (0..dirs.len()).map(|r| Vec3::new(sig(raw.get(r, 0)), sig(raw.get(r, 1)), sig(raw.get(r, 2)))).collect();
        Ok((raw, cache, colours))
    }

    /// Evaluates the joint field (with normals) at `pts` and fills the path.
    fn eval_path(&self, pts: Vec<Vec3>, dirs: Vec<Vec3>, valid: Vec<bool>) -> Result<(PathData, crate::sdf::SdfBatch, Matrix), ModelError> {
        let fwd = self.sdf.forward(self.sdf_params(), &pts, true)?;
        let n = pts.len();
        let fdim = self.sdf.feature_dim();
        let ground = self.ground();
        let gfeat = self.ground_feature();
        let mut delta = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut branch = Vec::with_capacity(n);
        let mut feat = Matrix::zeros(n, fdim);
        for (p, x) in pts.iter().enumerate() {
            let dobj = fwd.delta(p);
            let b = match ground {
                Some(g) => joint_branch(dobj, g.distance(*x)),
                None => JointBranch::Object,
            };
            match b {
                JointBranch::Object => {
                    delta.push(dobj);
                    normal.push(fwd.normal(p));
                    feat.row_mut(p).copy_from_slice(fwd.feature(p));
                }
                JointBranch::Ground => {
                    let g = ground.expect("ground branch implies a ground plane");
                    delta.push(g.distance(*x));
                    normal.push(g.up);
                    feat.row_mut(p).copy_from_slice(gfeat);
                }
            }
            branch.push(b);
        }
        let path = PathData { pts, dirs, delta, normal, branch, valid, alpha: Vec::new(), dalpha: Vec::new(), weights: Vec::new() };
        Ok((path, fwd, feat))
    }

    fn opacities(&self, path: &mut PathData, plan: &SamplePlan, offsets: &[usize]) {
        let tau = self.tau();
        let total = *offsets.last().unwrap();
        path.alpha = vec![0.0; total];
        path.dalpha = vec![[0.0; 3]; total];
        path.weights = vec![0.0; total];
        for (r, ts) in plan.ts.iter().enumerate() {
            let (a, b) = (offsets[r], offsets[r + 1]);
            for (s, p) in (a..b).enumerate() {
                let len = ts[s + 1] - ts[s];
                if len < MIN_SECTION || !path.valid[p] {
                    continue;
                }
                let slope = path.normal[p].dot(path.dirs[r]);
                let (d0, d1) = section_endpoints(path.delta[p], slope, len);
                let (al, g0, g1, gt) = alpha_with_grad(d0, d1, tau);
                path.alpha[p] = al;
                path.dalpha[p] = [g0, g1, gt];
            }
            let (w, _) = accumulate(&path.alpha[a..b]);
            path.weights[a..b].copy_from_slice(&w);
        }
    }

    /// Source-path render of each ray (no transformed path, no gradients).
    pub fn render_rays(&self, rays: &[Ray], plan: &SamplePlan) -> Result<Vec<RenderOutput>, ModelError> {
        let mut out = Vec::with_capacity(rays.len());
        let chunk = 64;
        for start in (0..rays.len()).step_by(chunk) {
            let end = (start + chunk).min(rays.len());
            let sub = SamplePlan { ts: plan.ts[start..end].to_vec(), draws: Vec::new() };
            out.extend(self.render_chunk(&rays[start..end], &sub)?);
        }
        Ok(out)
    }

    fn render_chunk(&self, rays: &[Ray], plan: &SamplePlan) -> Result<Vec<RenderOutput>, ModelError> {
        let offsets = Self::offsets(plan);
        let mut pts = Vec::with_capacity(*offsets.last().unwrap());
        for (r, ts) in plan.ts.iter().enumerate() {
            for w in ts.windows(2) {
                pts.push(rays[r].at(0.5 * (w[0] + w[1])));
            }
        }
        let n = pts.len();
        let dirs: Vec<Vec3> = rays.iter().map(|r| r.direction).collect();
        let (mut path, _, feat) = self.eval_path(pts, dirs.clone(), vec![true; n])?;
        self.opacities(&mut path, plan, &offsets);
        let pdirs: Vec<Vec3> = (0..rays.len()).flat_map(|r| core::iter::repeat_n(dirs[r], offsets[r + 1] - offsets[r])).collect();
        let inp = HeadInputs { x: &path.pts, n: &path.normal, d: &pdirs, f: &feat };
        let mat = self.heads.material.forward(self.material_params(), &inp)?;
        let dif = self.heads.diffuse.forward(self.diffuse_params(0), &inp)?;
        let spe = self.heads.specular.forward(self.specular_params(0), &inp)?;
        let (_, _, bg) = self.background_forward(&dirs)?;
        let mut out = Vec::with_capacity(rays.len());
        for r in 0..rays.len() {
            let mut o = RenderOutput {
                colour: Vec3::ZERO,
                depth: None,
                opacity: 0.0,
                object_mask: 0.0,
                albedo: Vec3::ZERO,
                diffuse: Vec3::ZERO,
                specular: Vec3::ZERO,
            };
            let mut depth = 0.0;
            for (s, p) in (offsets[r]..offsets[r + 1]).enumerate() {
                let w = path.weights[p];
                let (ca, gr) = (row3(&mat.out, p), mat.out.get(p, 3));
                let (gd, cs) = (dif.out.get(p, 0), row3(&spe.out, p));
                o.colour += phong_compose(gd, ca, gr, cs) * w;
                o.albedo += ca * w;
                o.diffuse += (ca * gd).map(|v| v.clamp(0.0, 1.0)) * w;
                o.specular += (cs * gr).map(|v| v.clamp(0.0, 1.0)) * w;
                o.opacity += w;
                if path.branch[p] == JointBranch::Object {
                    o.object_mask += w;
                }
                depth += w * 0.5 * (plan.ts[r][s] + plan.ts[r][s + 1]);
            }
            o.colour += bg[r] * (1.0 - o.opacity);
            if o.opacity > 0.0 {
                o.depth = Some(depth / o.opacity.max(crate::render::DEPTH_EPS));
            }
            out.push(o);
        }
        Ok(out)
    }

    /// Batch loss (mean over rays) and, with `want_grad`, its gradient with
    /// respect to every entry of the store. The rotation-increment gradient is
    /// taken at `ω = 0`, so call `fold_symmetry` after every update.
    pub fn evaluate(
        &self,
        rays: &[Ray],
        targets: &[Vec3],
        plan: &SamplePlan,
        opts: &LossOptions,
        want_grad: bool,
    ) -> Result<(LossReport, Vec<f64>), ModelError> {
        opts.weights.validate()?;
        if rays.len() != targets.len() || plan.ts.len() != rays.len() {
            return Err(ModelError::Invalid("rays, targets and plan must have equal length"));
        }
        let sw = opts.switches;
        let lw = opts.weights;
        let transformed = sw.transformed;
        // A zero-weight lighting term is skipped rather than evaluated.
        let lighting_on = sw.lighting_on() && lw.lighting > 0.0;
        let nr = rays.len();
        let inv_b = 1.0 / nr as f64;
        let offsets = Self::offsets(plan);
        let np = *offsets.last().unwrap();
        let tau = self.tau();

        // Source samples.
        let mut src_pts = Vec::with_capacity(np);
        for (r, ts) in plan.ts.iter().enumerate() {
            for w in ts.windows(2) {
                src_pts.push(rays[r].at(0.5 * (w[0] + w[1])));
            }
        }
        let src_dirs: Vec<Vec3> = rays.iter().map(|r| r.direction).collect();
        let pdir0: Vec<Vec3> = (0..nr).flat_map(|r| core::iter::repeat_n(src_dirs[r], offsets[r + 1] - offsets[r])).collect();

        // Transformed samples.
        let specs = self.effective_specs();
        let mut mats = Vec::new();
        let mut tr_pts = Vec::new();
        let mut tr_dirs = Vec::new();
        let mut tr_valid = Vec::new();
        if transformed {
            for r in 0..nr {
                let (i, draw) = plan.draws[r];
                let m = specs[i].compose(draw)?;
                for p in offsets[r]..offsets[r + 1] {
                    let x = m.transform_point(src_pts[p]);
                    tr_valid.push(x.norm_squared() <= 1.0);
                    tr_pts.push(x);
                }
                tr_dirs.push(m.transform_direction(src_dirs[r]));
                mats.push(m);
            }
        }

        // Joint field on both paths in one batch.
        let mut all_pts = src_pts.clone();
        all_pts.extend_from_slice(&tr_pts);
        let nall = all_pts.len();
        let (joint, sdf_fwd, feat_all) = self.eval_path(all_pts, Vec::new(), vec![true; nall])?;
        let split = |v: &[f64], j: usize| if j == 0 { v[..np].to_vec() } else { v[np..].to_vec() };
        let mk_path = |j: usize, dirs: Vec<Vec3>, valid: Vec<bool>| PathData {
            pts: if j == 0 { joint.pts[..np].to_vec() } else { joint.pts[np..].to_vec() },
            dirs,
            delta: split(&joint.delta, j),
            normal: if j == 0 { joint.normal[..np].to_vec() } else { joint.normal[np..].to_vec() },
            branch: if j == 0 { joint.branch[..np].to_vec() } else { joint.branch[np..].to_vec() },
            valid,
            alpha: Vec::new(),
            dalpha: Vec::new(),
            weights: Vec::new(),
        };
        let mut paths = vec![mk_path(0, src_dirs.clone(), vec![true; np])];
        if transformed {
            paths.push(mk_path(1, tr_dirs.clone(), tr_valid.clone()));
        }
        for p in paths.iter_mut() {
            self.opacities(p, plan, &offsets);
        }

        // Appearance heads.
        let pdir1: Vec<Vec3> = if transformed {
            (0..nr).flat_map(|r| core::iter::repeat_n(tr_dirs[r], offsets[r + 1] - offsets[r])).collect()
        } else {
            Vec::new()
        };
        let mut all_dirs = pdir0.clone();
        all_dirs.extend_from_slice(&pdir1);
        let feat_rows = |j: usize| -> Matrix {
            let (a, b) = if j == 0 { (0, np) } else { (np, nall) };
            let mut m = Matrix::zeros(b - a, feat_all.cols());
            for r in a..b {
                m.row_mut(r - a).copy_from_slice(feat_all.row(r));
            }
            m
        };
        let feats = [feat_rows(0), if transformed { feat_rows(1) } else { Matrix::zeros(0, feat_all.cols()) }];
        let mat_fwd =
            self.heads.material.forward(self.material_params(), &HeadInputs { x: &joint.pts, n: &joint.normal, d: &all_dirs, f: &feat_all })?;
        let head_inputs = |j: usize| -> HeadInputs<'_> {
            let p = &paths[j];
            HeadInputs { x: &p.pts, n: &p.normal, d: if j == 0 { &pdir0 } else { &pdir1 }, f: &feats[j] }
        };
        let npaths = paths.len();
        let mut light: Vec<(HeadForward, HeadForward)> = Vec::new();
        for k in 0..npaths {
            let inp = head_inputs(k);
            light.push((self.heads.diffuse.forward(self.diffuse_params(k), &inp)?, self.heads.specular.forward(self.specular_params(k), &inp)?));
        }
        // Source lighting weights evaluated on the transformed inputs.
        let cross = if lighting_on {
            let inp = head_inputs(1);
            Some((self.heads.diffuse.forward(self.diffuse_params(0), &inp)?, self.heads.specular.forward(self.specular_params(0), &inp)?))
        } else {
            None
        };
        let (_, bg_cache, bg) = self.background_forward(&src_dirs)?;

        // Per-sample optical quantities.
        let albedo = |j: usize, p: usize| row3(&mat_fwd.out, j * np + p);
        let refl = |j: usize, p: usize| mat_fwd.out.get(j * np + p, 3);
        // Lighting source for (path-k heads) or the cross evaluation: index 2
        // means "θ₀ at the other path's inputs" for material path j.
        let lighting_at = |k: usize, j: usize, p: usize| -> (f64, Vec3) {
            if k < 2 {
                (light[k].0.out.get(p, 0), row3(&light[k].1.out, p))
            } else if j == 0 {
                let c = cross.as_ref().expect("lighting term enabled");
                (c.0.out.get(p, 0), row3(&c.1.out, p))
            } else {
                (light[0].0.out.get(p, 0), row3(&light[0].1.out, p))
            }
        };

        let mut report = LossReport::default();
        // Gradients w.r.t. per-sample quantities.
        let mut g_w = vec![vec![0.0; np]; npaths];
        let mut g_albedo = vec![Vec3::ZERO; nall];
        let mut g_refl = vec![0.0; nall];
        let mut g_light: Vec<(Vec<f64>, Vec<Vec3>)> = (0..npaths).map(|_| (vec![0.0; np], vec![Vec3::ZERO; np])).collect();
        let mut g_cross = (vec![0.0; np], vec![Vec3::ZERO; np]);
        let mut g_bg = vec![Vec3::ZERO; nr];

        // Each entry: (j, lighting selector, use specular, coefficient, slot).
        enum Slot {
            Colour(usize, usize),
            Diffuse(usize, usize),
            Lighting(usize),
        }
        let mut terms: Vec<(usize, usize, bool, f64, Slot)> = Vec::new();
        for j in 0..npaths {
            let f = lw.path_factor(j);
            for k in 0..npaths {
                if sw.colour(j, k) {
                    terms.push((j, k, true, f * inv_b, Slot::Colour(j, k)));
                }
                if sw.diffuse_on(j, k) {
                    terms.push((j, k, false, f * lw.diffuse * inv_b, Slot::Diffuse(j, k)));
                }
            }
            if lighting_on {
                terms.push((j, 2, true, 2.0 * f * lw.lighting * inv_b, Slot::Lighting(j)));
            }
        }

        for (j, k, specular, coef, slot) in &terms {
            let (j, k) = (*j, *k);
            let mut sum = 0.0;
            for r in 0..nr {
                let (a, b) = (offsets[r], offsets[r + 1]);
                let path = &paths[j];
                let mut c = Vec3::ZERO;
                let mut wsum = 0.0;
                for p in a..b {
                    let (gd, cs) = lighting_at(k, j, p);
                    let gr = if *specular { refl(j, p) } else { 0.0 };
                    c += phong_compose(gd, albedo(j, p), gr, cs) * path.weights[p];
                    wsum += path.weights[p];
                }
                c += bg[r] * (1.0 - wsum);
                let l = colour_loss(c, targets[r]);
                sum += l;
                if !want_grad || *coef == 0.0 {
                    continue;
                }
                let g = colour_loss_grad(c, targets[r]) * *coef;
                g_bg[r] += g * (1.0 - wsum);
                for p in a..b {
                    let w = path.weights[p];
                    let (gd, cs) = lighting_at(k, j, p);
                    let gr = if *specular { refl(j, p) } else { 0.0 };
                    let ca = albedo(j, p);
                    g_w[j][p] += g.dot(phong_compose(gd, ca, gr, cs) - bg[r]);
                    let (dgd, dca, dgr, dcs) = phong_compose_backward(gd, ca, gr, cs, g * w);
                    g_albedo[j * np + p] += dca;
                    if *specular {
                        g_refl[j * np + p] += dgr;
                    }
                    let (tgd, tcs) = if k < 2 {
                        let gl = &mut g_light[k];
                        (&mut gl.0[p], &mut gl.1[p])
                    } else if j == 0 {
                        (&mut g_cross.0[p], &mut g_cross.1[p])
                    } else {
                        let gl = &mut g_light[0];
                        (&mut gl.0[p], &mut gl.1[p])
                    };
                    *tgd += dgd;
                    if *specular {
                        *tcs += dcs;
                    }
                }
            }
            let mean = sum * inv_b;
            match slot {
                Slot::Colour(j, k) => report.colour[*j][*k] = mean,
                Slot::Diffuse(j, k) => report.diffuse[*j][*k] = mean,
                Slot::Lighting(j) => report.lighting[*j] = [mean, mean],
            }
        }

        // Eikonal over valid samples of each path.
        let mut g_n = vec![vec![Vec3::ZERO; np]; npaths];
        for j in 0..npaths {
            if !sw.eikonal_on(j) {
                continue;
            }
            let path = &paths[j];
            let count = path.valid.iter().filter(|&&v| v).count();
            if count == 0 {
                continue;
            }
            let mut sum = 0.0;
            let coef = 2.0 * lw.path_factor(j) * lw.eikonal / count as f64;
            for p in 0..np {
                if !path.valid[p] {
                    continue;
                }
                let nn = path.normal[p].norm();
                sum += (nn - 1.0) * (nn - 1.0);
                if want_grad && nn > 0.0 {
                    g_n[j][p] += path.normal[p] * (coef * 2.0 * (nn - 1.0) / nn);
                }
            }
            report.eikonal[j] = sum / count as f64;
        }
        report.finish(&lw);
        if !want_grad {
            return Ok((report, Vec::new()));
        }

        let mut grads = vec![0.0; self.store.len()];
        let mut g_tau = 0.0;
        let mut g_delta = vec![0.0; nall];
        let mut g_dir1 = vec![Vec3::ZERO; nr];
        // Weights → opacities → endpoint distances → (δ, n, d, τ).
        for j in 0..npaths {
            let path = &paths[j];
            for (r, ts) in plan.ts.iter().enumerate() {
                let (a, b) = (offsets[r], offsets[r + 1]);
                if a == b {
                    continue;
                }
                let ga = accumulate_backward(&path.alpha[a..b], &g_w[j][a..b]);
                for (s, p) in (a..b).enumerate() {
                    let [d0, d1, dt] = path.dalpha[p];
                    let g = ga[s];
                    if g == 0.0 || (d0 == 0.0 && d1 == 0.0 && dt == 0.0) {
                        continue;
                    }
                    let len = ts[s + 1] - ts[s];
                    g_delta[j * np + p] += g * (d0 + d1);
                    let g_slope = 0.5 * len * g * (d1 - d0);
                    g_n[j][p] += path.dirs[r] * g_slope;
                    if j == 1 {
                        g_dir1[r] += path.normal[p] * g_slope;
                    }
                    g_tau += g * dt;
                }
            }
        }
        grads[self.slices.log_tau] += g_tau * tau;

        // Head backward passes.
        let mut g_x = vec![Vec3::ZERO; nall];
        let mut g_f = Matrix::zeros(nall, feat_all.cols());
        let mut g_pdir1 = vec![Vec3::ZERO; if transformed { np } else { 0 }];
        {
            let mut gm = Matrix::zeros(nall, 4);
            for p in 0..nall {
                let row = gm.row_mut(p);
                row[..3].copy_from_slice(&g_albedo[p].to_array());
                row[3] = g_refl[p];
            }
            let r = self.slices.material.clone();
            let gi = self.heads.material.backward(self.material_params(), &mat_fwd, &gm, &mut grads[r])?;
            for p in 0..nall {
                g_x[p] += gi.x[p];
                add_row(&mut g_f, p, gi.f.as_ref().unwrap().row(p));
            }
        }
        let mut lighting_backward = |k_params: usize,
                                     path: usize,
                                     fwd: &(HeadForward, HeadForward),
                                     gd: &[f64],
                                     gs: &[Vec3],
                                     grads: &mut [f64],
                                     g_n: &mut [Vec<Vec3>]|
         -> Result<(), ModelError> {
            let gdm = Matrix::from_vec(np, 1, gd.to_vec());
            let gsm = Matrix::from_vec(np, 3, gs.iter().flat_map(|v| v.to_array()).collect());
            let dr = self.slices.diffuse[k_params].clone();
            let sr = self.slices.specular[k_params].clone();
            let a = self.heads.diffuse.backward(&self.store.values()[dr.clone()], &fwd.0, &gdm, &mut grads[dr])?;
            let b = self.heads.specular.backward(&self.store.values()[sr.clone()], &fwd.1, &gsm, &mut grads[sr])?;
            for p in 0..np {
                let q = path * np + p;
                g_x[q] += a.x[p] + b.x[p];
                g_n[path][p] += a.n[p] + b.n[p];
                add_row(&mut g_f, q, a.f.as_ref().unwrap().row(p));
                add_row(&mut g_f, q, b.f.as_ref().unwrap().row(p));
                if path == 1 {
                    g_pdir1[p] += b.d[p];
                }
            }
            Ok(())
        };
        for k in 0..npaths {
            lighting_backward(k, k, &light[k], &g_light[k].0, &g_light[k].1, &mut grads, &mut g_n)?;
        }
        if let Some(c) = &cross {
            lighting_backward(0, 1, c, &g_cross.0, &g_cross.1, &mut grads, &mut g_n)?;
        }

        // Background.
        {
            let mut gb = Matrix::zeros(nr, 3);
            for r in 0..nr {
                for c in 0..3 {
                    let s = bg[r][c];
                    gb.set(r, c, g_bg[r][c] * s * (1.0 - s));
                }
            }
            let br = self.slices.background.clone();
            self.background.backward(&self.store.values()[br.clone()], &bg_cache, &gb, &mut grads[br])?;
        }

        // Joint field routing and SDF backward.
        let mut obj_gd = vec![0.0; nall];
        let mut obj_gn = vec![Vec3::ZERO; nall];
        let mut obj_gf = Matrix::zeros(nall, feat_all.cols());
        for q in 0..nall {
            let (j, p) = (q / np.max(1), q % np.max(1));
            let gn = if j < npaths { g_n[j][p] } else { Vec3::ZERO };
            match joint.branch[q] {
                JointBranch::Object => {
                    obj_gd[q] = g_delta[q];
                    obj_gn[q] = gn;
                    obj_gf.row_mut(q).copy_from_slice(g_f.row(q));
                }
                JointBranch::Ground => {
                    let up = self.ground_up.expect("ground branch");
                    g_x[q] += up * g_delta[q];
                    if let Some(h) = self.slices.ground_height {
                        grads[h] -= g_delta[q];
                    }
                    let gr = self.slices.ground_feature.clone();
                    for (gv, v) in grads[gr].iter_mut().zip(g_f.row(q)) {
                        *gv += v;
                    }
                }
            }
        }
        {
            let r = self.slices.sdf.clone();
            let gx = self.sdf.backward(self.sdf_params(), &sdf_fwd, &obj_gd, Some(&obj_gn), Some(&obj_gf), &mut grads[r])?;
            for q in 0..nall {
                g_x[q] += gx[q];
            }
        }

        // Transformed points and directions → symmetry matrix → frame parameters.
        if transformed {
            let mut g_m = vec![Mat4::ZERO; nr];
            for r in 0..nr {
                for p in offsets[r]..offsets[r + 1] {
                    let x0 = src_pts[p];
                    add_outer(&mut g_m[r], g_x[np + p], [x0.x, x0.y, x0.z, 1.0]);
                    g_dir1[r] += g_pdir1[p];
                }
                let d0 = src_dirs[r];
                add_outer(&mut g_m[r], g_dir1[r], [d0.x, d0.y, d0.z, 0.0]);
            }
            for r in 0..nr {
                let (i, draw) = plan.draws[r];
                let jac = specs[i].frame_jacobians(draw)?;
                let sr = self.slices.symmetry[i].clone();
                for (k, jk) in jac.iter().enumerate() {
                    grads[sr.start + k] += g_m[r].frobenius_dot(jk);
                }
            }
            let _ = &mats;
        }
        Ok((report, grads))
    }
}

fn add_row(m: &mut Matrix, r: usize, v: &[f64]) {
    for (a, b) in m.row_mut(r).iter_mut().zip(v) {
        *a += b;
    }
}

fn row3(m: &Matrix, r: usize) -> Vec3 {
    let row = m.row(r);
    Vec3::new(row[0], row[1], row[2])
}

#[inline]
fn sig(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}
