//! The car-proxy completion experiment: one synthetic dataset, the
//! initialization pipeline, and paired runs with and without the
//! transformed-path losses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symsurf_core::camera::Camera;
use symsurf_core::init::{canonical_frame, filter_cloud, CanonicalFrame, PlaneAxis, PointCloud, FILTER_RADIUS, MIN_NEIGHBORS};
use symsurf_core::model::{ModelConfig, SceneModel};
use symsurf_core::scene::{generate_orbit, make_split, oracle_render, OracleImage, OrbitConfig, SceneConfig, Split, SplitIds, SyntheticScene};
use symsurf_core::sdf::{GroundPlane, Mesh};
use symsurf_core::symmetry::SymmetrySet;
use symsurf_core::train::{evaluate_model, extract_object_mesh, EvalView, TrainConfig, TrainView, Trainer};
use symsurf_core::metrics::MetricsReport;
use symsurf_core::Vec3;

use crate::Error;

pub const CLOUD_POINTS: usize = 6000;
pub const CLOUD_OUTLIERS: f64 = 0.2;
pub const CLOUD_EXTENT: f64 = 1.5;

/// A generated dataset held in memory.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub cameras: Vec<Camera>,
    pub images: Vec<OracleImage>,
    pub cloud: Option<PointCloud>,
    pub split: SplitIds,
}

impl Dataset {
    pub fn train_views(&self) -> Vec<TrainView> {
        self.split.train.iter().map(|&i| TrainView { camera: self.cameras[i], rgb: self.images[i].rgb.clone() }).collect()
    }

    pub fn eval_views(&self, ids: &[usize]) -> Vec<EvalView> {
        ids.iter()
            .map(|&i| EvalView {
                frame: i,
                camera: self.cameras[i],
                rgb: self.images[i].rgb.clone(),
                depth: self.images[i].depth.clone(),
                mask: self.images[i].mask.clone(),
            })
            .collect()
    }

    pub fn test_views(&self) -> Vec<EvalView> {
        self.eval_views(&self.split.test)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub scene: SceneConfig,
    pub orbit: OrbitConfig,
    pub split: Split,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    /// 25 frames 14.4° apart; the 130° sector facing the +x side holds 9 of
    /// them, leaving 16 training views on the remaining arc.
    fn default() -> Self {
        DatasetConfig {
            scene: SceneConfig::default(),
            orbit: OrbitConfig::default(),
            split: Split::Structured { center_deg: 0.0, width_deg: 130.0 },
            n_test: 8,
            seed: 0,
        }
    }
}

pub fn generate_dataset(cfg: &DatasetConfig) -> Result<(SyntheticScene, Dataset), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scene = SyntheticScene::car_proxy(&cfg.scene);
    let cameras = generate_orbit(&cfg.orbit, &mut rng)?;
    let images = cameras.iter().map(|c| oracle_render(&scene, c)).collect();
    let (cloud, _) = scene.sample_cloud(CLOUD_POINTS, CLOUD_OUTLIERS, CLOUD_EXTENT, &mut rng);
    let split = make_split(&cameras, cfg.split, cfg.n_test, &mut rng)?;
    Ok((scene, Dataset { cameras, images, cloud: Some(cloud), split }))
}

/// Filters the cloud and fits the canonical frame. Every calibrated pose is
/// used for the up direction (withheld images are not touched): on a partial
/// arc the mean camera up is biased by the orbit's downward pitch.
pub fn initial_frame(data: &Dataset, seed: u64) -> Result<CanonicalFrame, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud = data.cloud.as_ref().ok_or_else(|| Error::Format("dataset has no point cloud".into()))?;
    let filtered = filter_cloud(cloud, FILTER_RADIUS, MIN_NEIGHBORS)?;
    Ok(canonical_frame(&filtered, &data.cameras, PlaneAxis::X, &mut rng)?)
}

pub fn initial_model(config: ModelConfig, frame: &CanonicalFrame, ground: bool, seed: u64) -> Result<SceneModel, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground = if ground { Some(GroundPlane::new(frame.ground_height_world(), frame.up_world())?) } else { None };
    let sym = SymmetrySet::single(frame.symmetry_spec());
    Ok(SceneModel::new(config, &frame.ellipsoid_world(), ground, sym, &mut rng)?)
}

/// Outcome of one training run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub model: SceneModel,
    pub metrics: MetricsReport,
    /// Colour loss averaged over each logging window.
    pub colour_curve: Vec<f64>,
}

pub fn train_and_evaluate(
    model: SceneModel,
    config: TrainConfig,
    train: &[TrainView],
    test: &[EvalView],
    mut progress: impl FnMut(usize, f64),
) -> Result<RunResult, Error> {
    let window = 100;
    let mut trainer = Trainer::new(model, config)?;
    let mut curve = Vec::new();
    let mut acc = 0.0;
    trainer.run(train, |t, r| {
        acc += r.colour[0][0];
        if t.iteration % window == 0 {
            curve.push(acc / window as f64);
            progress(t.iteration, acc / window as f64);
            acc = 0.0;
        }
    })?;
    let metrics = evaluate_model(&trainer.model, test)?;
    Ok(RunResult { model: trainer.model, metrics, colour_curve: curve })
}

pub fn object_mesh(model: &SceneModel, resolution: usize) -> Result<Mesh, Error> {
    Ok(extract_object_mesh(model, resolution)?)
}

/// Distance from `p` to the nearest mesh vertex (infinite for an empty mesh).
pub fn nearest_vertex_distance(mesh: &Mesh, p: Vec3) -> f64 {
    mesh.vertices.iter().map(|v| (*v - p).norm()).fold(f64::INFINITY, f64::min)
}
