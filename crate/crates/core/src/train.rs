//! Optimization loop, image rendering from a trained model, and evaluation.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::camera::{pixel_ray, Camera};
use crate::losses::{LossReport, LossSwitches, LossWeights};
use crate::math::Vec3;
use crate::metrics::{depth_mae, flatten, mask_iou, mse, psnr_from_mse, FrameMetrics, MetricsError, MetricsReport};
use crate::model::{LossOptions, ModelError, RenderOutput, SceneModel};
use crate::nn::{Adam, AdamConfig, NnError, ParamGroup, ScheduleConfig};
use crate::render::Ray;
use crate::sdf::{extract_mesh, Bounds, Mesh, SdfError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sdf(#[from] SdfError),
    #[error("non-finite loss at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("no training views")]
    NoViews,
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub rays_per_batch: usize,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub n_background: usize,
    pub weights: LossWeights,
    pub switches: LossSwitches,
    pub base_lr: f64,
    pub warmup_iters: usize,
    pub final_lr_fraction: f64,
    pub seed: u64,
    /// Validation render period (0 disables).
    pub validate_every: usize,
    pub checkpoint_every: usize,
}

impl TrainConfig {
    /// Reference optimization settings. The lighting loss is off: it trades
    /// image accuracy for plausible shading on unseen sides, so quantitative
    /// runs leave it out.
    pub fn reference() -> Self {
        TrainConfig {
            iterations: 300_000,
            rays_per_batch: 1024,
            n_coarse: 64,
            n_fine: 64,
            n_background: 32,
            weights: LossWeights { lighting: 0.0, ..LossWeights::default() },
            switches: LossSwitches::default(),
            base_lr: 5e-4,
            warmup_iters: 5000,
            final_lr_fraction: 0.05,
            seed: 0,
            validate_every: 10_000,
            checkpoint_every: 10_000,
        }
    }

    /// Desk-scale settings for 64×64 synthetic scenes.
    pub fn desk() -> Self {
        TrainConfig {
            iterations: 20_000,
            rays_per_batch: 256,
            n_coarse: 32,
            n_fine: 32,
            n_background: 32,
            warmup_iters: 500,
            validate_every: 2000,
            checkpoint_every: 5000,
            ..TrainConfig::reference()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.rays_per_batch == 0 || self.n_coarse < 2 {
            return Err(TrainError::Invalid("ray batch and coarse sample count must be positive"));
        }
        self.weights.validate().map_err(ModelError::from)?;
        if self.iterations > 0 {
            self.schedule().validate()?;
        }
        Ok(())
    }

    pub fn schedule(&self) -> ScheduleConfig {
        ScheduleConfig {
            base_lr: self.base_lr,
            total_iters: self.iterations.max(self.warmup_iters + 1),
            warmup_iters: self.warmup_iters,
            final_fraction: self.final_lr_fraction,
            ramped_groups: ScheduleConfig::default_ramped(),
        }
    }

    /// The source-path-only baseline: symmetricity factor zero and every
    /// transformed-path term off.
    pub fn without_symmetry(mut self) -> Self {
        self.weights.symmetricity = 0.0;
        self.switches.transformed = false;
        self
    }
}

/// One calibrated training image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainView {
    pub camera: Camera,
    pub rgb: Vec<Vec3>,
}

#[derive(Clone, Debug)]
pub struct Trainer {
    pub model: SceneModel,
    pub adam: Adam,
    pub config: TrainConfig,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
}

impl Trainer {
    /// The model's sample counts are overridden by the config.
    pub fn new(mut model: SceneModel, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        model.set_sample_counts(config.n_coarse, config.n_fine, config.n_background)?;
        let adam = Adam::new(AdamConfig::default(), model.store.len());
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Trainer { model, adam, config, iteration: 0, rng })
    }

    fn options(&self) -> LossOptions {
        LossOptions { weights: self.config.weights, switches: self.config.switches }
    }

    /// Uniformly random training pixels.
    pub fn sample_batch(&mut self, views: &[TrainView]) -> (Vec<Ray>, Vec<Vec3>) {
        let mut rays = Vec::with_capacity(self.config.rays_per_batch);
        let mut targets = Vec::with_capacity(self.config.rays_per_batch);
        for _ in 0..self.config.rays_per_batch {
            let v = &views[self.rng.random_range(0..views.len())];
            let (w, h) = (v.camera.width, v.camera.height);
            let (px, py) = (self.rng.random_range(0..w), self.rng.random_range(0..h));
            rays.push(pixel_ray(&v.camera, px, py));
            targets.push(v.rgb[py * w + px]);
        }
        (rays, targets)
    }

    /// One optimizer step. On error the parameters are left untouched.
    pub fn step(&mut self, views: &[TrainView]) -> Result<LossReport, TrainError> {
        if views.is_empty() {
            return Err(TrainError::NoViews);
        }
        let (rays, targets) = self.sample_batch(views);
        let opts = self.options();
        let plan = self.model.plan(&rays, true, opts.switches.transformed, &mut self.rng)?;
        let (report, mut grads) = self.model.evaluate(&rays, &targets, &plan, &opts, true)?;
        if !report.total.is_finite() {
            return Err(TrainError::NonFiniteLoss(self.iteration));
        }
        self.model.project_symmetry_gradient(&mut grads);
        let sched = self.config.schedule();
        self.adam.adam_step(&mut self.model.store, &grads, &sched, self.iteration)?;
        self.model.fold_symmetry();
        self.iteration += 1;
        Ok(report)
    }

    /// Runs until `config.iterations`, calling `on_step` after every step.
    pub fn run(&mut self, views: &[TrainView], mut on_step: impl FnMut(&Trainer, &LossReport)) -> Result<(), TrainError> {
        while self.iteration < self.config.iterations {
            let r = self.step(views)?;
            on_step(self, &r);
        }
        Ok(())
    }

    pub fn learning_rate(&self, group: ParamGroup) -> f64 {
        self.config.schedule().lr_at(group, self.iteration)
    }
}

/// Rendered maps of one camera, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<RenderOutput>,
    /// Far bound per pixel, used for depth where nothing was accumulated.
    far: Vec<f64>,
}

impl RenderedImage {
    pub fn rgb(&self) -> Vec<Vec3> {
        self.pixels.iter().map(|p| p.colour).collect()
    }

    pub fn depth(&self) -> Vec<f64> {
        self.pixels.iter().zip(&self.far).map(|(p, f)| p.depth.unwrap_or(*f)).collect()
    }

    pub fn object_mask(&self) -> Vec<f64> {
        self.pixels.iter().map(|p| p.object_mask).collect()
    }
}

/// Deterministic render (unstratified samples, source path only).
pub fn render_image(model: &SceneModel, camera: &Camera, scale: usize) -> Result<RenderedImage, TrainError> {
    let s = scale.max(1);
    let (w, h) = (camera.width / s, camera.height / s);
    let mut rays = Vec::with_capacity(w * h);
    for py in 0..h {
        for px in 0..w {
            let u = (px as f64 + 0.5) * s as f64;
            let v = (py as f64 + 0.5) * s as f64;
            rays.push(camera.ray_through(u, v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let plan = model.plan(&rays, false, false, &mut rng)?;
    let pixels = model.render_rays(&rays, &plan)?;
    let far = rays.iter().map(|r| r.far).collect();
    Ok(RenderedImage { width: w, height: h, pixels, far })
}

/// Ground-truth maps of one evaluation frame.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalView {
    pub frame: usize,
    pub camera: Camera,
    pub rgb: Vec<Vec3>,
    pub depth: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Metrics of one prediction against one ground-truth frame; colour and depth
/// errors use the ground-truth object mask.
pub fn frame_metrics(
    frame: usize,
    pred_rgb: &[Vec3],
    pred_depth: &[f64],
    pred_mask: &[f64],
    gt: &EvalView,
) -> Result<FrameMetrics, TrainError> {
    let m = mse(&flatten(pred_rgb), &flatten(&gt.rgb), 3, Some(&gt.mask))?;
    Ok(FrameMetrics {
        frame,
        psnr: psnr_from_mse(m),
        mse: m,
        depth_mae: depth_mae(pred_depth, &gt.depth, &gt.mask)?,
        iou: mask_iou(pred_mask, &gt.mask)?,
    })
}

pub fn evaluate_model(model: &SceneModel, views: &[EvalView]) -> Result<MetricsReport, TrainError> {
    let mut report = MetricsReport::default();
    for v in views {
        let img = render_image(model, &v.camera, 1)?;
        report.frames.push(frame_metrics(v.frame, &img.rgb(), &img.depth(), &img.object_mask(), v)?);
    }
    Ok(report)
}

/// Zero level set of the object field (ground excluded) inside the unit cube.
pub fn extract_object_mesh(model: &SceneModel, resolution: usize) -> Result<Mesh, TrainError> {
    let mut err = None;
    let mesh = extract_mesh(
        |pts: &[Vec3]| match model.object_values(pts) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                alloc::vec![1.0; pts.len()]
            }
        },
        resolution,
        Bounds::cube(1.0),
    )?;
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(mesh)
}
