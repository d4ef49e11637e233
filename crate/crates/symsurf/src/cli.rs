//! Command-line surface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use symsurf_core::init::CanonicalFrame;
use symsurf_core::losses::{LossReport, LossSwitches, LossWeights};
use symsurf_core::model::{ModelConfig, SceneModel};
use symsurf_core::nn::ParamGroup;
use symsurf_core::sdf::{EllipsoidInit, GroundPlane};
use symsurf_core::symmetry::SymmetrySet;
use symsurf_core::train::{evaluate_model, frame_metrics, render_image, TrainConfig, TrainError, Trainer};
use symsurf_core::metrics::MetricsReport;
use symsurf_core::Vec3;

use crate::config::{apply_dataset, apply_model, apply_train, model_text, set_split, train_text, KeyValues};
use crate::experiment::{generate_dataset, initial_frame, object_mesh, Dataset, DatasetConfig};
use crate::formats::{
    load_checkpoint, load_dataset, read_text, read_pfm, read_png_mask, read_png_rgb, save_checkpoint, save_dataset, write_obj, write_pfm,
    write_ply, write_png_mask, write_png_rgb,
};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "symsurf", version, about = "Symmetry-aware neural surface reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Key-value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub split: Option<SplitKind>,
    /// Width of the withheld sector for structured splits.
    #[arg(long, global = true)]
    pub sector_degrees: Option<f64>,
    /// Loss term to switch off: colour01, colour10, colour11, diffuse, lighting.
    #[arg(long, global = true)]
    pub disable_loss: Vec<String>,
    #[arg(long, global = true)]
    pub symmetricity: Option<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitKind {
    Random,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render the synthetic car-proxy dataset.
    GenerateScene,
    /// Filter the point cloud and fit the initial frame and symmetry plane.
    InitSymmetry,
    /// Optimize a model on the training split.
    Train,
    /// Render the test frames of a dataset from a checkpoint.
    Render,
    /// Marching cubes on the object field of a checkpoint.
    ExtractMesh {
        #[arg(long, default_value_t = 128)]
        resolution: usize,
    },
    /// Metrics on the test frames, from a checkpoint or a directory of
    /// predictions laid out like a dataset.
    Eval {
        #[arg(long)]
        pred: Option<PathBuf>,
    },
    /// Train with the given loss switches, then evaluate.
    Ablate,
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Error> {
    p.as_deref().ok_or_else(|| Error::Format(format!("missing --{flag}")))
}

fn read_config(cli: &Cli) -> Result<KeyValues, Error> {
    match &cli.config {
        Some(p) => KeyValues::parse(&read_text(p)?),
        None => Ok(KeyValues::default()),
    }
}

/// Training and model configs from the desk presets, the config file and
/// the command-line overrides.
pub fn configs(cli: &Cli) -> Result<(TrainConfig, ModelConfig), Error> {
    let mut kv = read_config(cli)?;
    let mut train = TrainConfig::desk();
    let mut model = ModelConfig::desk();
    apply_train(&mut train, &mut kv)?;
    apply_model(&mut model, &mut kv)?;
    let mut scene = DatasetConfig::default();
    apply_dataset(&mut scene, &mut kv)?;
    kv.finish()?;
    if let Some(s) = cli.seed {
        train.seed = s;
    }
    if let Some(l) = cli.symmetricity {
        train.weights.symmetricity = l;
    }
    for term in &cli.disable_loss {
        train.switches.disable(term)?;
    }
    train.validate()?;
    Ok((train, model))
}

pub fn run(cli: &Cli) -> Result<String, Error> {
    match &cli.command {
        Command::GenerateScene => generate(cli),
        Command::InitSymmetry => init_symmetry(cli),
        Command::Train => train(cli).map(|(msg, _)| msg),
        Command::Render => render(cli),
        Command::ExtractMesh { resolution } => extract(cli, *resolution),
        Command::Eval { pred } => eval(cli, pred.as_deref()),
        Command::Ablate => ablate(cli),
    }
}

fn generate(cli: &Cli) -> Result<String, Error> {
    let out = need(&cli.out, "out")?;
    let mut kv = read_config(cli)?;
    let mut cfg = DatasetConfig::default();
    apply_dataset(&mut cfg, &mut kv)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let kind = match cli.split {
        Some(SplitKind::Random) => "random",
        Some(SplitKind::Structured) | None => "structured",
    };
    set_split(&mut cfg, kind, cli.sector_degrees)?;
    let (_, data) = generate_dataset(&cfg)?;
    save_dataset(out, &data)?;
    Ok(format!(
        "wrote {} frames to {} ({} train, {} test)",
        data.cameras.len(),
        out.display(),
        data.split.train.len(),
        data.split.test.len()
    ))
}

const INIT_FILE: &str = "init.txt";

fn vec_text(v: Vec3) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

fn parse_floats(line: &str, key: &str, n: usize) -> Result<Vec<f64>, Error> {
    let rest = line.strip_prefix(key).ok_or_else(|| Error::Format(format!("{INIT_FILE}: expected `{key}`")))?;
    let v: Vec<f64> = rest.split_whitespace().map(|t| t.parse().map_err(|_| Error::Format(format!("{INIT_FILE}: bad number")))).collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(Error::Format(format!("{INIT_FILE}: `{key}` needs {n} numbers")));
    }
    Ok(v)
}

/// Ellipsoid prior, ground plane and symmetry of an initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct Initialization {
    pub ellipsoid: EllipsoidInit,
    pub ground: GroundPlane,
    pub symmetry: SymmetrySet,
}

impl Initialization {
    pub fn from_frame(f: &CanonicalFrame) -> Result<Self, Error> {
        Ok(Initialization {
            ellipsoid: f.ellipsoid_world(),
            ground: GroundPlane::new(f.ground_height_world(), f.up_world())?,
            symmetry: SymmetrySet::single(f.symmetry_spec()),
        })
    }

    fn text(&self) -> String {
        let s = self.symmetry.specs()[0];
        let r = s.frame.rotation;
        format!(
            "ellipsoid {} {}\nground {} {}\nframe {} {} {} {}\n",
            vec_text(self.ellipsoid.center),
            vec_text(self.ellipsoid.semi_axes),
            self.ground.height,
            vec_text(self.ground.up),
            vec_text(r.row(0)),
            vec_text(r.row(1)),
            vec_text(r.row(2)),
            vec_text(s.frame.translation)
        )
    }

    fn parse(text: &str) -> Result<Self, Error> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != 3 {
            return Err(Error::Format(format!("{INIT_FILE}: expected 3 lines")));
        }
        let e = parse_floats(lines[0], "ellipsoid", 6)?;
        let g = parse_floats(lines[1], "ground", 4)?;
        let f = parse_floats(lines[2], "frame", 12)?;
        let rot = symsurf_core::Mat3::from_rows([[f[0], f[1], f[2]], [f[3], f[4], f[5]], [f[6], f[7], f[8]]]);
        let frame = symsurf_core::symmetry::RigidFrame::new(rot, Vec3::new(f[9], f[10], f[11]))
            .map_err(|e| Error::Format(format!("{INIT_FILE}: {e}")))?;
        Ok(Initialization {
            ellipsoid: EllipsoidInit::new(Vec3::new(e[0], e[1], e[2]), Vec3::new(e[3], e[4], e[5]))?,
            ground: GroundPlane::new(g[0], Vec3::new(g[1], g[2], g[3]).normalize())?,
            symmetry: SymmetrySet::single(symsurf_core::symmetry::SymmetrySpec::xz_reflection(frame)),
        })
    }
}

fn init_symmetry(cli: &Cli) -> Result<String, Error> {
    let dir = need(&cli.dataset, "dataset")?;
    let data = load_dataset(dir)?;
    let frame = initial_frame(&data, cli.seed.unwrap_or(0))?;
    let init = Initialization::from_frame(&frame)?;
    let out = cli.out.as_deref().unwrap_or(dir);
    fs::create_dir_all(out)?;
    fs::write(out.join(INIT_FILE), init.text())?;
    let n = frame.plane_normal_world();
    Ok(format!("symmetry plane normal ({:.4}, {:.4}, {:.4}); wrote {}", n.x, n.y, n.z, out.join(INIT_FILE).display()))
}

fn initialization(dir: &Path, data: &Dataset, seed: u64) -> Result<Initialization, Error> {
    let p = dir.join(INIT_FILE);
    if p.exists() {
        Initialization::parse(&read_text(&p)?)
    } else {
        Initialization::from_frame(&initial_frame(data, seed)?)
    }
}

pub const LOG_HEADER_PREFIX: &str = "iteration,tau,lr_ramped,lr_constant";

/// One training-log row; rates are those the step used.
fn log_line(iter: usize, tau: f64, lr: (f64, f64), r: &LossReport) -> String {
    let vals: Vec<String> = r.csv_values().iter().map(|v| format!("{v:.8e}")).collect();
    format!("{iter},{tau:.6},{:.6e},{:.6e},{}\n", lr.0, lr.1, vals.join(","))
}

fn train(cli: &Cli) -> Result<(String, SceneModel), Error> {
    let dir = need(&cli.dataset, "dataset")?;
    let out = need(&cli.out, "out")?;
    let (tc, mc) = configs(cli)?;
    let data = load_dataset(dir)?;
    let init = initialization(dir, &data, tc.seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(tc.seed);
    let model = SceneModel::new(mc.clone(), &init.ellipsoid, Some(init.ground), init.symmetry.clone(), &mut rng)?;
    fs::create_dir_all(out.join("val"))?;
    fs::write(out.join("config.txt"), format!("{}{}", train_text(&tc), model_text(&mc)))?;
    let views = data.train_views();
    let val_cam = data.split.test.first().or(data.split.train.first()).map(|&i| data.cameras[i]);
    let mut trainer = Trainer::new(model, tc.clone())?;
    let ckpt = out.join("checkpoint.txt");
    save_checkpoint(&ckpt, &trainer.model, 0)?;
    let mut log = format!("{LOG_HEADER_PREFIX},{}\n", LossReport::csv_header());
    while trainer.iteration < tc.iterations {
        let lr = (trainer.learning_rate(ParamGroup::Sdf), trainer.learning_rate(ParamGroup::Background));
        let report = match trainer.step(&views) {
            Ok(r) => r,
            Err(e @ (TrainError::NonFiniteLoss(_) | TrainError::Nn(_))) => {
                // The failed step left the parameters untouched.
                save_checkpoint(&ckpt, &trainer.model, trainer.iteration)?;
                fs::write(out.join("train_log.csv"), &log)?;
                return Err(Error::Format(format!("{e}; last good checkpoint saved to {}", ckpt.display())));
            }
            Err(e) => return Err(e.into()),
        };
        log.push_str(&log_line(trainer.iteration, trainer.model.tau(), lr, &report));
        let it = trainer.iteration;
        if tc.checkpoint_every > 0 && it % tc.checkpoint_every == 0 {
            save_checkpoint(&ckpt, &trainer.model, it)?;
            fs::write(out.join("train_log.csv"), &log)?;
        }
        if let (Some(cam), true) = (val_cam, tc.validate_every > 0 && it % tc.validate_every == 0) {
            let img = render_image(&trainer.model, &cam, 4)?;
            write_png_rgb(&out.join("val").join(format!("iter{it:06}.png")), img.width, img.height, &img.rgb())?;
        }
    }
    save_checkpoint(&ckpt, &trainer.model, trainer.iteration)?;
    fs::write(out.join("train_log.csv"), &log)?;
    Ok((format!("trained {} iterations; checkpoint {}", trainer.iteration, ckpt.display()), trainer.model))
}

fn render(cli: &Cli) -> Result<String, Error> {
    let dir = need(&cli.dataset, "dataset")?;
    let out = need(&cli.out, "out")?;
    let (model, _) = load_checkpoint(need(&cli.checkpoint, "checkpoint")?)?;
    let data = load_dataset(dir)?;
    for sub in ["rgb", "depth", "mask"] {
        fs::create_dir_all(out.join(sub))?;
    }
    for &i in &data.split.test {
        let img = render_image(&model, &data.cameras[i], 1)?;
        let name = format!("frame{i:06}");
        write_png_rgb(&out.join("rgb").join(format!("{name}.png")), img.width, img.height, &img.rgb())?;
        write_pfm(&out.join("depth").join(format!("{name}.pfm")), img.width, img.height, &img.depth())?;
        let mask: Vec<bool> = img.object_mask().iter().map(|m| *m >= 0.5).collect();
        write_png_mask(&out.join("mask").join(format!("{name}.png")), img.width, img.height, &mask)?;
    }
    Ok(format!("rendered {} test frames to {}", data.split.test.len(), out.display()))
}

fn extract(cli: &Cli, resolution: usize) -> Result<String, Error> {
    let out = need(&cli.out, "out")?;
    let (model, _) = load_checkpoint(need(&cli.checkpoint, "checkpoint")?)?;
    let mesh = object_mesh(&model, resolution)?;
    fs::create_dir_all(out)?;
    write_obj(&out.join("mesh.obj"), &mesh)?;
    write_ply(&out.join("mesh.ply"), &mesh.vertices, &mesh.triangles)?;
    Ok(format!("{} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len()))
}

fn report_output(cli: &Cli, report: &MetricsReport) -> Result<String, Error> {
    if let Some(out) = &cli.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("metrics.csv"), report.csv())?;
    }
    Ok(report.to_string())
}

fn eval(cli: &Cli, pred: Option<&Path>) -> Result<String, Error> {
    let data = load_dataset(need(&cli.dataset, "dataset")?)?;
    let gt = data.test_views();
    let report = match (pred, &cli.checkpoint) {
        (Some(p), _) => {
            let mut r = MetricsReport::default();
            for v in &gt {
                let name = format!("frame{:06}", v.frame);
                let (_, _, rgb) = read_png_rgb(&p.join("rgb").join(format!("{name}.png")))?;
                let (_, _, depth) = read_pfm(&p.join("depth").join(format!("{name}.pfm")))?;
                let (_, _, mask) = read_png_mask(&p.join("mask").join(format!("{name}.png")))?;
                let mask: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
                r.frames.push(frame_metrics(v.frame, &rgb, &depth, &mask, v)?);
            }
            r
        }
        (None, Some(c)) => evaluate_model(&load_checkpoint(c)?.0, &gt)?,
        (None, None) => return Err(Error::Format("eval needs --checkpoint or --pred".into())),
    };
    report_output(cli, &report)
}

/// Names of the loss terms a configuration optimizes (zero-weight terms
/// are left out).
pub fn active_terms(s: &LossSwitches, w: &LossWeights) -> Vec<String> {
    let mut t = Vec::new();
    for j in 0..2 {
        if w.path_factor(j) == 0.0 {
            continue;
        }
        for k in 0..2 {
            if s.colour(j, k) {
                t.push(format!("col{j}{k}"));
            }
            if s.diffuse_on(j, k) && w.diffuse > 0.0 {
                t.push(format!("diff{j}{k}"));
            }
            if s.lighting_on() && w.lighting > 0.0 {
                t.push(format!("light{j}{k}"));
            }
        }
        if s.eikonal_on(j) && w.eikonal > 0.0 {
            t.push(format!("eik{j}"));
        }
    }
    t
}

fn ablate(cli: &Cli) -> Result<String, Error> {
    let (tc, _) = configs(cli)?;
    let (msg, model) = train(cli)?;
    let data = load_dataset(need(&cli.dataset, "dataset")?)?;
    let report = evaluate_model(&model, &data.test_views())?;
    let mut s = String::new();
    let _ = writeln!(s, "{msg}");
    let _ = writeln!(s, "terms: {}", active_terms(&tc.switches, &tc.weights).join(" "));
    s.push_str(&report_output(cli, &report)?);
    Ok(s)
}
