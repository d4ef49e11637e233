//! Plain-text `key = value` configuration.
//!
//! Training keys are the `TrainConfig` field names (`weights.*` and
//! `switches.*` for the nested ones), network keys carry a `model.` prefix and
//! scene generation keys a `scene.` prefix. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use symsurf_core::model::ModelConfig;
use symsurf_core::scene::Split;
use symsurf_core::train::TrainConfig;

use crate::experiment::DatasetConfig;
use crate::Error;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {}: expected `key = value`", n + 1)))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Format(format!("config line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Removes and parses `key`, leaving `slot` alone when it is absent.
    pub fn take<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), Error> {
        if let Some(v) = self.entries.remove(key) {
            *slot = v.parse().map_err(|_| Error::Format(format!("config key `{key}`: cannot parse `{v}`")))?;
        }
        Ok(())
    }

    pub fn take_list(&mut self, key: &str, slot: &mut Vec<usize>) -> Result<(), Error> {
        if let Some(v) = self.entries.remove(key) {
            *slot = parse_list(&v).ok_or_else(|| Error::Format(format!("config key `{key}`: cannot parse list `{v}`")))?;
        }
        Ok(())
    }

    /// Errors on the first key nobody consumed.
    pub fn finish(self) -> Result<(), Error> {
        match self.entries.keys().next() {
            Some(k) => Err(Error::Format(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn parse_list(v: &str) -> Option<Vec<usize>> {
    if v.trim().is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn list(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn apply_train(cfg: &mut TrainConfig, kv: &mut KeyValues) -> Result<(), Error> {
    kv.take("iterations", &mut cfg.iterations)?;
    kv.take("rays_per_batch", &mut cfg.rays_per_batch)?;
    kv.take("n_coarse", &mut cfg.n_coarse)?;
    kv.take("n_fine", &mut cfg.n_fine)?;
    kv.take("n_background", &mut cfg.n_background)?;
    kv.take("weights.symmetricity", &mut cfg.weights.symmetricity)?;
    kv.take("weights.diffuse", &mut cfg.weights.diffuse)?;
    kv.take("weights.lighting", &mut cfg.weights.lighting)?;
    kv.take("weights.eikonal", &mut cfg.weights.eikonal)?;
    kv.take("switches.colour01", &mut cfg.switches.colour01)?;
    kv.take("switches.colour10", &mut cfg.switches.colour10)?;
    kv.take("switches.colour11", &mut cfg.switches.colour11)?;
    kv.take("switches.diffuse", &mut cfg.switches.diffuse)?;
    kv.take("switches.lighting", &mut cfg.switches.lighting)?;
    kv.take("switches.transformed", &mut cfg.switches.transformed)?;
    kv.take("base_lr", &mut cfg.base_lr)?;
    kv.take("warmup_iters", &mut cfg.warmup_iters)?;
    kv.take("final_lr_fraction", &mut cfg.final_lr_fraction)?;
    kv.take("seed", &mut cfg.seed)?;
    kv.take("validate_every", &mut cfg.validate_every)?;
    kv.take("checkpoint_every", &mut cfg.checkpoint_every)?;
    Ok(())
}

pub fn train_text(c: &TrainConfig) -> String {
    let mut s = String::new();
    let w = &c.weights;
    let sw = &c.switches;
    let _ = writeln!(s, "iterations = {}\nrays_per_batch = {}", c.iterations, c.rays_per_batch);
    let _ = writeln!(s, "n_coarse = {}\nn_fine = {}\nn_background = {}", c.n_coarse, c.n_fine, c.n_background);
    let _ = writeln!(s, "weights.symmetricity = {}\nweights.diffuse = {}", w.symmetricity, w.diffuse);
    let _ = writeln!(s, "weights.lighting = {}\nweights.eikonal = {}", w.lighting, w.eikonal);
    let _ = writeln!(s, "switches.colour01 = {}\nswitches.colour10 = {}", sw.colour01, sw.colour10);
    let _ = writeln!(s, "switches.colour11 = {}\nswitches.diffuse = {}", sw.colour11, sw.diffuse);
    let _ = writeln!(s, "switches.lighting = {}\nswitches.transformed = {}", sw.lighting, sw.transformed);
    let _ = writeln!(s, "base_lr = {}\nwarmup_iters = {}\nfinal_lr_fraction = {}", c.base_lr, c.warmup_iters, c.final_lr_fraction);
    let _ = writeln!(s, "seed = {}\nvalidate_every = {}\ncheckpoint_every = {}", c.seed, c.validate_every, c.checkpoint_every);
    s
}

pub fn apply_model(cfg: &mut ModelConfig, kv: &mut KeyValues) -> Result<(), Error> {
    kv.take_list("model.sdf.hidden", &mut cfg.sdf.hidden)?;
    if let Some(v) = kv.entries.remove("model.sdf.skip") {
        cfg.sdf.skip = match v.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|_| Error::Format(format!("config key `model.sdf.skip`: cannot parse `{s}`")))?),
        };
    }
    kv.take("model.sdf.num_freqs", &mut cfg.sdf.num_freqs)?;
    kv.take("model.sdf.feature_dim", &mut cfg.sdf.feature_dim)?;
    kv.take("model.sdf.softplus_beta", &mut cfg.sdf.softplus_beta)?;
    kv.take_list("model.appearance.material_hidden", &mut cfg.appearance.material_hidden)?;
    kv.take_list("model.appearance.diffuse_hidden", &mut cfg.appearance.diffuse_hidden)?;
    kv.take_list("model.appearance.specular_hidden", &mut cfg.appearance.specular_hidden)?;
    kv.take("model.appearance.dir_freqs", &mut cfg.appearance.dir_freqs)?;
    kv.take_list("model.background_hidden", &mut cfg.background_hidden)?;
    kv.take("model.background_freqs", &mut cfg.background_freqs)?;
    kv.take("model.tau_init", &mut cfg.tau_init)?;
    kv.take("model.n_coarse", &mut cfg.n_coarse)?;
    kv.take("model.n_fine", &mut cfg.n_fine)?;
    kv.take("model.n_background", &mut cfg.n_background)?;
    Ok(())
}

pub fn model_text(c: &ModelConfig) -> String {
    let mut s = String::new();
    let skip = c.sdf.skip.map_or("none".to_string(), |k| k.to_string());
    let _ = writeln!(s, "model.sdf.hidden = {}\nmodel.sdf.skip = {skip}", list(&c.sdf.hidden));
    let _ = writeln!(s, "model.sdf.num_freqs = {}\nmodel.sdf.feature_dim = {}", c.sdf.num_freqs, c.sdf.feature_dim);
    let _ = writeln!(s, "model.sdf.softplus_beta = {}", c.sdf.softplus_beta);
    let a = &c.appearance;
    let _ = writeln!(s, "model.appearance.material_hidden = {}", list(&a.material_hidden));
    let _ = writeln!(s, "model.appearance.diffuse_hidden = {}", list(&a.diffuse_hidden));
    let _ = writeln!(s, "model.appearance.specular_hidden = {}", list(&a.specular_hidden));
    let _ = writeln!(s, "model.appearance.dir_freqs = {}", a.dir_freqs);
    let _ = writeln!(s, "model.background_hidden = {}\nmodel.background_freqs = {}", list(&c.background_hidden), c.background_freqs);
    let _ = writeln!(s, "model.tau_init = {}", c.tau_init);
    let _ = writeln!(s, "model.n_coarse = {}\nmodel.n_fine = {}\nmodel.n_background = {}", c.n_coarse, c.n_fine, c.n_background);
    s
}

pub fn apply_dataset(cfg: &mut DatasetConfig, kv: &mut KeyValues) -> Result<(), Error> {
    let o = &mut cfg.orbit;
    kv.take("scene.frames", &mut o.n_frames)?;
    kv.take("scene.radius", &mut o.radius)?;
    kv.take("scene.elevation_deg", &mut o.elevation_deg)?;
    kv.take("scene.jitter_deg", &mut o.jitter_deg)?;
    kv.take("scene.azimuth_offset_deg", &mut o.azimuth_offset_deg)?;
    kv.take("scene.width", &mut o.width)?;
    kv.take("scene.height", &mut o.height)?;
    kv.take("scene.fov_x_deg", &mut o.fov_x_deg)?;
    kv.take("scene.bump", &mut cfg.scene.bump)?;
    kv.take("scene.decal", &mut cfg.scene.decal)?;
    kv.take("scene.symmetric_light", &mut cfg.scene.symmetric_light)?;
    kv.take("scene.ground", &mut cfg.scene.ground)?;
    kv.take("scene.n_test", &mut cfg.n_test)?;
    if let Some(v) = kv.entries.remove("scene.sector_center_deg") {
        let c: f64 = v.parse().map_err(|_| Error::Format(format!("config key `scene.sector_center_deg`: cannot parse `{v}`")))?;
        if let Split::Structured { center_deg, .. } = &mut cfg.split {
            *center_deg = c;
        }
    }
    Ok(())
}

/// Sets the split kind, keeping the sector centre of a structured split.
pub fn set_split(cfg: &mut DatasetConfig, kind: &str, sector_degrees: Option<f64>) -> Result<(), Error> {
    let center = match cfg.split {
        Split::Structured { center_deg, .. } => center_deg,
        Split::Random => 0.0,
    };
    let width = match cfg.split {
        Split::Structured { width_deg, .. } => width_deg,
        Split::Random => 130.0,
    };
    cfg.split = match kind {
        "random" => Split::Random,
        "structured" => Split::Structured { center_deg: center, width_deg: sector_degrees.unwrap_or(width) },
        other => return Err(Error::Format(format!("unknown split `{other}`"))),
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_config_round_trips() {
        let mut c = TrainConfig::desk();
        c.weights.symmetricity = 0.25;
        c.switches.colour10 = false;
        c.base_lr = 1.0 / 3.0;
        let mut kv = KeyValues::parse(&train_text(&c)).unwrap();
        let mut back = TrainConfig::reference();
        apply_train(&mut back, &mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn model_config_round_trips() {
        let c = ModelConfig::desk();
        let mut kv = KeyValues::parse(&model_text(&c)).unwrap();
        let mut back = ModelConfig::reference();
        apply_model(&mut back, &mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_unknown_and_duplicate_keys() {
        let mut kv = KeyValues::parse("# header\niterations = 5 # trailing\n\n").unwrap();
        let mut c = TrainConfig::desk();
        apply_train(&mut c, &mut kv).unwrap();
        assert_eq!(c.iterations, 5);
        assert!(KeyValues::parse("a = 1\na = 2").is_err());
        assert!(KeyValues::parse("nonsense").is_err());
        assert!(KeyValues::parse("bogus = 1").unwrap().finish().is_err());
        let mut kv = KeyValues::parse("iterations = many").unwrap();
        assert!(apply_train(&mut c, &mut kv).is_err());
    }
}
