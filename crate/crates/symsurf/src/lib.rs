//! File formats, dataset IO, the command line and the experiment driver for
//! `symsurf-core`.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod formats;

pub use symsurf_core as core;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Camera(#[from] symsurf_core::camera::CameraError),
    #[error(transparent)]
    Scene(#[from] symsurf_core::scene::SceneError),
    #[error(transparent)]
    Init(#[from] symsurf_core::init::InitError),
    #[error(transparent)]
    Sdf(#[from] symsurf_core::sdf::SdfError),
    #[error(transparent)]
    Model(#[from] symsurf_core::model::ModelError),
    #[error(transparent)]
    Train(#[from] symsurf_core::train::TrainError),
    #[error(transparent)]
    Loss(#[from] symsurf_core::losses::LossError),
    #[error(transparent)]
    Metrics(#[from] symsurf_core::metrics::MetricsError),
}
