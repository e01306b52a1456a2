use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::datasets::{gaussian_ring, load_idx, load_idx_pair, synthetic_shapes, Dataset, ShapesConfig};
use crate::error::{Error, Result};
use crate::gan::{AblationMode, GanHyper};
use crate::memory::MemoryParams;

/// Where the training data comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Ring,
    Shapes,
    Idx,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Ring => "ring",
            DatasetKind::Shapes => "shapes",
            DatasetKind::Idx => "idx",
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(DatasetKind::Ring),
            "shapes" => Ok(DatasetKind::Shapes),
            "idx" => Ok(DatasetKind::Idx),
            _ => Err(invalid("dataset", format!("unknown dataset `{s}`"))),
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Every knob of a run. Serialized as flat `key = value` text.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dataset: DatasetKind,
    pub ring_modes: usize,
    pub ring_radius: f64,
    pub ring_std: f64,
    pub ring_samples: usize,
    pub shapes_side: usize,
    pub shapes_per_class: usize,
    pub shapes_jitter: bool,
    pub idx_images: Option<PathBuf>,
    pub idx_labels: Option<PathBuf>,
    /// Size of the held-out real set used by the likelihood probe.
    pub held_out: usize,

    pub n_slots: usize,
    pub key_dim: usize,
    pub noise_dim: usize,
    pub top_k: usize,
    pub kappa: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub em_iters: usize,

    pub batch_size: usize,
    pub learning_rate: f64,
    /// Linearly decay the learning rate to zero over the run.
    pub lr_decay: bool,
    pub non_saturating: bool,
    pub iterations: u64,
    pub seed: u64,
    pub ablation: AblationMode,

    pub eval_every: u64,
    pub eval_samples: usize,
    pub coverage_sigmas: f64,
    pub coverage_min_share: f64,

    /// Relative paths resolve against the output root. Not part of the fingerprint.
    pub output_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let memory = MemoryParams::default();
        let hyper = GanHyper::default();
        Self {
            dataset: DatasetKind::Ring,
            ring_modes: 8,
            ring_radius: 2.0,
            ring_std: 0.05,
            ring_samples: 8000,
            shapes_side: 8,
            shapes_per_class: 250,
            shapes_jitter: true,
            idx_images: None,
            idx_labels: None,
            held_out: 1000,
            n_slots: 256,
            key_dim: 16,
            noise_dim: hyper.noise_dim,
            top_k: 32,
            kappa: memory.kappa,
            beta: memory.beta,
            epsilon: memory.epsilon,
            alpha: memory.alpha,
            lambda: hyper.lambda,
            em_iters: memory.em_iters,
            batch_size: hyper.batch_size,
            learning_rate: hyper.learning_rate,
            lr_decay: false,
            non_saturating: hyper.non_saturating,
            iterations: 3000,
            seed: 0,
            ablation: AblationMode::Full,
            eval_every: 250,
            eval_samples: 2000,
            coverage_sigmas: 4.0,
            coverage_min_share: 0.02,
            output_dir: PathBuf::from("run"),
        }
    }
}

fn parse<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(field, format!("cannot parse `{value}`")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(field, format!("expected a boolean, got `{value}`"))),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl TrainConfig {
    /// Named starting points; see the README for what each one targets.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "ring" => Ok(base),
            "ring-ablation" => Ok(Self {
                n_slots: 256,
                key_dim: 16,
                top_k: 16,
                kappa: 3.0,
                lambda: 0.3,
                learning_rate: 1e-3,
                non_saturating: true,
                iterations: 3500,
                eval_every: 25,
                ..base
            }),
            "shapes" => Ok(Self {
                dataset: DatasetKind::Shapes,
                n_slots: 256,
                key_dim: 16,
                top_k: 32,
                iterations: 1500,
                eval_every: 500,
                ..base
            }),
            "fashion" => Ok(Self {
                dataset: DatasetKind::Idx,
                n_slots: 4096,
                key_dim: 256,
                top_k: 128,
                lambda: 0.01,
                ..base
            }),
            "large" => Ok(Self {
                dataset: DatasetKind::Idx,
                n_slots: 16384,
                key_dim: 512,
                noise_dim: 16,
                top_k: 256,
                ..base
            }),
            _ => Err(invalid("preset", format!("unknown preset `{name}`"))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "dataset" => self.dataset = v.parse()?,
            "ring_modes" => self.ring_modes = parse(key, v)?,
            "ring_radius" => self.ring_radius = parse(key, v)?,
            "ring_std" => self.ring_std = parse(key, v)?,
            "ring_samples" => self.ring_samples = parse(key, v)?,
            "shapes_side" => self.shapes_side = parse(key, v)?,
            "shapes_per_class" => self.shapes_per_class = parse(key, v)?,
            "shapes_jitter" => self.shapes_jitter = parse_bool(key, v)?,
            "idx_images" => self.idx_images = optional_path(v),
            "idx_labels" => self.idx_labels = optional_path(v),
            "held_out" => self.held_out = parse(key, v)?,
            "n_slots" => self.n_slots = parse(key, v)?,
            "key_dim" => self.key_dim = parse(key, v)?,
            "noise_dim" => self.noise_dim = parse(key, v)?,
            "top_k" => self.top_k = parse(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "lambda" => self.lambda = parse(key, v)?,
            "em_iters" => self.em_iters = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "lr_decay" => self.lr_decay = parse_bool(key, v)?,
            "non_saturating" => self.non_saturating = parse_bool(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "ablation" => self.ablation = v.parse()?,
            "eval_every" => self.eval_every = parse(key, v)?,
            "eval_samples" => self.eval_samples = parse(key, v)?,
            "coverage_sigmas" => self.coverage_sigmas = parse(key, v)?,
            "coverage_min_share" => self.coverage_min_share = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(invalid(key, "unknown field")),
        }
        Ok(())
    }

    /// Every field except `output_dir`, keyed by name.
    pub fn to_pairs(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("dataset", self.dataset.as_str().to_string());
        m.insert("ring_modes", self.ring_modes.to_string());
        m.insert("ring_radius", self.ring_radius.to_string());
        m.insert("ring_std", self.ring_std.to_string());
        m.insert("ring_samples", self.ring_samples.to_string());
        m.insert("shapes_side", self.shapes_side.to_string());
        m.insert("shapes_per_class", self.shapes_per_class.to_string());
        m.insert("shapes_jitter", self.shapes_jitter.to_string());
        m.insert("idx_images", path_text(&self.idx_images));
        m.insert("idx_labels", path_text(&self.idx_labels));
        m.insert("held_out", self.held_out.to_string());
        m.insert("n_slots", self.n_slots.to_string());
        m.insert("key_dim", self.key_dim.to_string());
        m.insert("noise_dim", self.noise_dim.to_string());
        m.insert("top_k", self.top_k.to_string());
        m.insert("kappa", self.kappa.to_string());
        m.insert("beta", self.beta.to_string());
        m.insert("epsilon", self.epsilon.to_string());
        m.insert("alpha", self.alpha.to_string());
        m.insert("lambda", self.lambda.to_string());
        m.insert("em_iters", self.em_iters.to_string());
        m.insert("batch_size", self.batch_size.to_string());
        m.insert("learning_rate", self.learning_rate.to_string());
        m.insert("lr_decay", self.lr_decay.to_string());
        m.insert("non_saturating", self.non_saturating.to_string());
        m.insert("iterations", self.iterations.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("ablation", self.ablation.as_str().to_string());
        m.insert("eval_every", self.eval_every.to_string());
        m.insert("eval_samples", self.eval_samples.to_string());
        m.insert("coverage_sigmas", self.coverage_sigmas.to_string());
        m.insert("coverage_min_share", self.coverage_min_share.to_string());
        m
    }

    /// Sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Hex SHA-256 of [`TrainConfig::canonical`].
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid("config", format!("line {} is not `key = value`", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn memory_params(&self) -> MemoryParams {
        MemoryParams {
            kappa: self.kappa,
            beta: self.beta,
            epsilon: self.epsilon,
            alpha: self.alpha,
            top_k: self.top_k,
            em_iters: self.em_iters,
        }
    }

    pub fn hyper(&self) -> GanHyper {
        GanHyper {
            mode: self.ablation,
            lambda: self.lambda,
            noise_dim: self.noise_dim,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            non_saturating: self.non_saturating,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.memory_params()
            .validate(self.n_slots)
            .map_err(|e| match e {
                Error::InvalidParams { name, reason } => invalid(name, reason),
                other => other,
            })?;
        let positive = [
            ("key_dim", self.key_dim),
            ("noise_dim", self.noise_dim),
            ("batch_size", self.batch_size),
            ("eval_samples", self.eval_samples),
            ("held_out", self.held_out),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(invalid(name, "must be positive"));
        }
        if self.eval_every == 0 {
            return Err(invalid("eval_every", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be non-negative"));
        }
        if !(self.coverage_sigmas > 0.0) {
            return Err(invalid("coverage_sigmas", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.coverage_min_share) {
            return Err(invalid("coverage_min_share", "must lie in [0, 1]"));
        }
        if self.dataset == DatasetKind::Idx && self.idx_images.is_none() {
            return Err(invalid("idx_images", "required for the idx dataset"));
        }
        Ok(())
    }

    /// Training data and a disjoint held-out draw.
    pub fn load_data(&self) -> Result<(Dataset, Dataset)> {
        let held_seed = self.seed.wrapping_add(0x5eed);
        match self.dataset {
            DatasetKind::Ring => Ok((
                gaussian_ring(self.ring_modes, self.ring_radius, self.ring_std, self.ring_samples, self.seed)?,
                gaussian_ring(self.ring_modes, self.ring_radius, self.ring_std, self.held_out, held_seed)?,
            )),
            DatasetKind::Shapes => {
                let mut train = ShapesConfig::new(self.shapes_side, self.shapes_per_class);
                let mut held = ShapesConfig::new(self.shapes_side, self.held_out.div_ceil(4));
                if !self.shapes_jitter {
                    train = train.without_jitter();
                    held = held.without_jitter();
                }
                Ok((synthetic_shapes(&train, self.seed)?, synthetic_shapes(&held, held_seed)?))
            }
            DatasetKind::Idx => {
                let images = self
                    .idx_images
                    .as_ref()
                    .ok_or_else(|| invalid("idx_images", "required for the idx dataset"))?;
                let all = match &self.idx_labels {
                    Some(labels) => load_idx_pair(images, labels)?,
                    None => load_idx(images)?,
                };
                split_tail(all, self.held_out)
            }
        }
    }
}

/// Moves the last `n` rows into a held-out set (keeping at least one for training).
fn split_tail(all: Dataset, n: usize) -> Result<(Dataset, Dataset)> {
    if all.len() < 2 {
        return Err(invalid("idx_images", "need at least two samples"));
    }
    let n = n.min(all.len() - 1);
    let cut = all.len() - n;
    let (head, tail) = all.samples.split_rows(cut);
    let (head_l, tail_l) = match all.labels {
        Some(mut l) => {
            let t = l.split_off(cut);
            (Some(l), Some(t))
        }
        None => (None, None),
    };
    Ok((Dataset::new(head, head_l, None)?, Dataset::new(tail, tail_l, None)?))
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())?;
        writeln!(f, "output_dir = {}", self.output_dir.display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = TrainConfig::preset("fashion").unwrap();
        c.idx_images = Some("a/b.idx".into());
        c.seed = 42;
        c.kappa = 0.1 + 0.2;
        let back = TrainConfig::from_text(&c.to_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
    }

    #[test]
    fn fingerprint_ignores_order_and_output() {
        let a = TrainConfig::from_text("seed = 3\nkappa = 2\n").unwrap();
        let mut b = TrainConfig::from_text("# note\n\nkappa=2\n  seed=3").unwrap();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), TrainConfig::default().fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn errors_name_the_field() {
        let err = TrainConfig::from_text("kappa = fast").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "kappa"));
        let err = TrainConfig::from_text("colour = blue").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "colour"));
        let c = TrainConfig::from_text("top_k = 999").unwrap();
        assert!(matches!(c.validate(), Err(Error::InvalidConfig { ref field, .. }) if field == "top_k"));
        let c = TrainConfig::from_text("dataset = idx").unwrap();
        assert!(matches!(c.validate(), Err(Error::InvalidConfig { ref field, .. }) if field == "idx_images"));
    }

    #[test]
    fn presets_follow_the_documented_scales() {
        let f = TrainConfig::preset("fashion").unwrap();
        assert_eq!((f.n_slots, f.key_dim, f.top_k, f.lambda), (4096, 256, 128, 0.01));
        let l = TrainConfig::preset("large").unwrap();
        assert_eq!((l.n_slots, l.key_dim, l.noise_dim), (16384, 512, 16));
        let d = TrainConfig::default();
        assert_eq!((d.batch_size, d.learning_rate), (64, 2e-4));
        assert!(TrainConfig::preset("huge").is_err());
    }

    #[test]
    fn ring_data_is_split() {
        let c = TrainConfig::from_text("ring_samples = 100\nheld_out = 20").unwrap();
        let (train, held) = c.load_data().unwrap();
        assert_eq!((train.len(), held.len()), (100, 20));
        assert_ne!(train.samples.row(0), held.samples.row(0));
    }
}
