use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DatasetKind, TrainConfig};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::eval::{
    avg_biased_loglik, cluster_purity, interpolate_keys, mode_coverage, nearest_training_neighbors, prior_entropy,
    queries, real_slot_fraction, write_grid_csv, write_grid_pgm, write_metrics_csv, write_metrics_jsonl,
    InterpolationGrid, MetricsRecord, ZPolicy, FINGERPRINT_KEY,
};
use crate::gan::{
    discriminator_loss, generator_loss, sample_latents, train_step, AblationMode, Bounds, GanLosses, GanModel,
    Optimizers,
};
use crate::memory::{Label, Query};

/// Environment variable naming the directory relative output paths live under.
pub const OUTPUT_ROOT_ENV: &str = "MEMORYGAN_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn resolve_output(dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        dir.to_path_buf()
    } else {
        output_root().join(dir)
    }
}

/// A self-contained snapshot: config, networks, optimizer state, memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_sha256: String,
    pub config: BTreeMap<String, String>,
    pub iteration: u64,
    pub model: GanModel,
    pub optimizers: Optimizers,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut ck: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        ck.model.generator.validate()?;
        ck.model.discriminator.validate()?;
        ck.model.memory.check_invariants()?;
        Ok(ck)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        for (k, v) in &self.config {
            c.set(k, v)?;
        }
        Ok(c)
    }
}

/// A training run in memory: model, optimizers, data, and random streams.
pub struct Trainer {
    pub config: TrainConfig,
    pub model: GanModel,
    pub optimizers: Optimizers,
    pub train: Dataset,
    pub held_out: Dataset,
    /// Extremes of every probability and agreement term seen in training
    /// steps and evaluations.
    pub bounds: Bounds,
    rng: ChaCha8Rng,
    iteration: u64,
    last_losses: Option<GanLosses>,
    fingerprint: String,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let (train, held_out) = config.load_data()?;
        let model = GanModel::new(
            config.ablation,
            train.dim(),
            config.noise_dim,
            config.n_slots,
            config.key_dim,
            config.memory_params(),
            config.seed,
        )?;
        let optimizers = Optimizers::new(&model, config.learning_rate);
        Ok(Self {
            fingerprint: config.fingerprint(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            model,
            optimizers,
            train,
            held_out,
            bounds: Bounds::default(),
            iteration: 0,
            last_losses: None,
        })
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn step(&mut self) -> Result<GanLosses> {
        if self.config.lr_decay {
            let left = 1.0 - self.iteration as f64 / self.config.iterations.max(1) as f64;
            self.optimizers.set_rate(self.config.learning_rate * left.max(0.0));
        }
        let real = self.train.sample_batch(self.config.batch_size, &mut self.rng);
        let losses = train_step(
            &mut self.model,
            &mut self.optimizers,
            &real,
            &mut self.rng,
            &self.config.hyper(),
            &mut self.bounds,
        )?;
        self.iteration += 1;
        self.last_losses = Some(losses);
        Ok(losses)
    }

    /// A random stream for evaluation at the current iteration, independent
    /// of the training stream.
    fn eval_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(self.iteration + 1);
        rng
    }

    /// Losses of the most recent step; before any step, losses on a fresh
    /// batch without updating anything.
    fn current_losses(&mut self, rng: &mut ChaCha8Rng) -> Result<GanLosses> {
        if let Some(l) = self.last_losses {
            return Ok(l);
        }
        let hyper = self.config.hyper();
        let real = self.train.sample_batch(self.config.batch_size, rng);
        let d_lat = sample_latents(self.model.mode, &self.model.memory, rng, hyper.batch_size, self.model.noise_dim())?;
        let fake = self.model.generator.predict(&d_lat.inputs)?;
        let d = discriminator_loss(&self.model, &real, &fake, d_lat.keys.as_ref(), &hyper)?;
        let g_lat = sample_latents(self.model.mode, &self.model.memory, rng, hyper.batch_size, self.model.noise_dim())?;
        let g = generator_loss(&self.model, &g_lat, &hyper)?;
        for v in [&d, &g] {
            self.bounds.observe_probs(&v.probs);
            self.bounds.observe_info(v.info);
        }
        Ok(GanLosses {
            d_loss: d.loss,
            g_loss: g.loss,
            info_term: g.info,
        })
    }

    pub fn evaluate(&mut self) -> Result<MetricsRecord> {
        let mut rng = self.eval_rng();
        let losses = self.current_losses(&mut rng)?;
        let samples = self.model.generate(&mut rng, self.config.eval_samples)?;
        let mode_coverage = match &self.train.mode_centers {
            Some(centers) => Some(
                mode_coverage(
                    &samples,
                    centers,
                    self.config.ring_std,
                    self.config.coverage_sigmas,
                    self.config.coverage_min_share,
                )?
                .coverage,
            ),
            None => None,
        };
        let avg_biased_loglik = if self.model.mode.uses_memory() {
            Some(avg_biased_loglik(&self.model.memory, &self.model.discriminator, &self.held_out.samples)?)
        } else {
            None
        };
        Ok(MetricsRecord {
            iteration: self.iteration,
            d_loss: losses.d_loss,
            g_loss: losses.g_loss,
            info_term: losses.info_term,
            avg_biased_loglik,
            prior_entropy: prior_entropy(&self.model.memory),
            mode_coverage,
            real_slot_fraction: real_slot_fraction(&self.model.memory),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config_sha256: self.fingerprint.clone(),
            config: self
                .config
                .to_pairs()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            iteration: self.iteration,
            model: self.model.clone(),
            optimizers: self.optimizers.clone(),
        }
    }

    /// Runs the configured iterations, evaluating at iteration 0, every
    /// `eval_every` iterations, and at the end. `on_record` sees each record
    /// as soon as it exists.
    pub fn run<F>(&mut self, mut on_record: F) -> Result<Vec<MetricsRecord>>
    where
        F: FnMut(&Trainer, &MetricsRecord) -> Result<()>,
    {
        let mut records = Vec::new();
        let first = self.evaluate()?;
        on_record(self, &first)?;
        records.push(first);
        while self.iteration < self.config.iterations {
            self.step()?;
            if self.iteration % self.config.eval_every == 0 || self.iteration == self.config.iterations {
                let r = self.evaluate()?;
                on_record(self, &r)?;
                records.push(r);
            }
        }
        Ok(records)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub fingerprint: String,
    pub records: Vec<MetricsRecord>,
    pub bounds: Bounds,
}

fn metrics_name(mode: AblationMode, ext: &str) -> String {
    format!("metrics-{mode}.{ext}")
}

/// Trains per `config`, writing the config, metrics (JSONL and CSV), and a
/// checkpoint refreshed at every evaluation into the run's output directory.
pub fn run_train(config: &TrainConfig) -> Result<RunSummary> {
    config.validate()?;
    let dir = resolve_output(&config.output_dir);
    fs::create_dir_all(&dir)?;
    let mut trainer = Trainer::new(config.clone())?;
    let fp = trainer.fingerprint().to_string();
    fs::write(dir.join("config.txt"), format!("# {FINGERPRINT_KEY}={fp}\n{config}"))?;

    let jsonl_path = dir.join(metrics_name(config.ablation, "jsonl"));
    let mut jsonl = BufWriter::new(File::create(&jsonl_path)?);
    write_metrics_jsonl(&mut jsonl, &fp, &[])?;
    let ckpt_path = dir.join("checkpoint.json");
    let records = trainer.run(|t, r| {
        write_metrics_jsonl_line(&mut jsonl, r)?;
        jsonl.flush()?;
        t.checkpoint().save(&ckpt_path)
    })?;
    drop(jsonl);
    write_metrics_csv(
        BufWriter::new(File::create(dir.join(metrics_name(config.ablation, "csv")))?),
        &fp,
        &records,
    )?;
    Ok(RunSummary {
        dir,
        fingerprint: fp,
        records,
        bounds: trainer.bounds,
    })
}

fn write_metrics_jsonl_line<W: Write>(w: &mut W, r: &MetricsRecord) -> Result<()> {
    serde_json::to_writer(&mut *w, r)?;
    writeln!(w)?;
    Ok(())
}

/// Probes available to [`run_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EvalProbe {
    ModeCoverage,
    Loglik,
    PriorEntropy,
    Purity,
    Neighbors,
}

impl EvalProbe {
    pub const ALL: [EvalProbe; 5] = [
        EvalProbe::ModeCoverage,
        EvalProbe::Loglik,
        EvalProbe::PriorEntropy,
        EvalProbe::Purity,
        EvalProbe::Neighbors,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalProbe::ModeCoverage => "mode_coverage",
            EvalProbe::Loglik => "loglik",
            EvalProbe::PriorEntropy => "prior_entropy",
            EvalProbe::Purity => "purity",
            EvalProbe::Neighbors => "neighbors",
        }
    }
}

impl FromStr for EvalProbe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvalProbe::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig {
                field: "probes".into(),
                reason: format!("unknown probe `{s}`"),
            })
    }
}

fn check_compatible(ck: &Checkpoint, config: &TrainConfig, data_dim: usize) -> Result<()> {
    let m = &ck.model;
    let checks = [
        ("key_dim", m.memory.key_dim(), config.key_dim),
        ("n_slots", m.memory.n_slots(), config.n_slots),
        ("noise_dim", m.noise_dim(), config.noise_dim),
        ("data dimension", m.data_dim(), data_dim),
    ];
    for (what, have, want) in checks {
        if have != want {
            return Err(Error::IncompatibleCheckpoint(format!(
                "{what} is {have} in the checkpoint but {want} was requested"
            )));
        }
    }
    if m.mode != config.ablation {
        return Err(Error::IncompatibleCheckpoint(format!(
            "checkpoint mode {} differs from requested {}",
            m.mode, config.ablation
        )));
    }
    Ok(())
}

fn require_memory(model: &GanModel, probe: EvalProbe) -> Result<()> {
    if model.mode.uses_memory() {
        Ok(())
    } else {
        Err(Error::IncompatibleCheckpoint(format!(
            "probe {} needs a memory discriminator",
            probe.as_str()
        )))
    }
}

/// Runs `probes` on a frozen checkpoint and writes `eval.csv` (`probe,value`)
/// under `out_dir`. `config` overrides the checkpoint's own config for data
/// and shape expectations; any shape disagreement is an error.
pub fn run_eval(
    checkpoint: &Path,
    config: Option<&TrainConfig>,
    probes: &[EvalProbe],
    out_dir: &Path,
) -> Result<Vec<(String, f64)>> {
    let ck = Checkpoint::load(checkpoint)?;
    let config = match config {
        Some(c) => c.clone(),
        None => ck.train_config()?,
    };
    let (train, held_out) = config.load_data()?;
    check_compatible(&ck, &config, train.dim())?;
    let model = &ck.model;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let mut rows: Vec<(String, f64)> = Vec::new();
    let mut probes = probes.to_vec();
    probes.sort();
    probes.dedup();
    for probe in probes {
        match probe {
            EvalProbe::ModeCoverage => {
                let centers = train.mode_centers.as_ref().ok_or_else(|| Error::InvalidConfig {
                    field: "probes".into(),
                    reason: "mode coverage needs a dataset with known modes".into(),
                })?;
                let samples = model.generate(&mut rng, config.eval_samples)?;
                let report = mode_coverage(
                    &samples,
                    centers,
                    config.ring_std,
                    config.coverage_sigmas,
                    config.coverage_min_share,
                )?;
                rows.push(("mode_coverage".into(), report.coverage));
                for (k, share) in report.shares.iter().enumerate() {
                    rows.push((format!("mode_share_{k}"), *share));
                }
            }
            EvalProbe::Loglik => {
                require_memory(model, probe)?;
                rows.push((
                    "avg_biased_loglik".into(),
                    avg_biased_loglik(&model.memory, &model.discriminator, &held_out.samples)?,
                ));
            }
            EvalProbe::PriorEntropy => {
                rows.push(("prior_entropy".into(), prior_entropy(&model.memory)));
                rows.push(("real_slot_fraction".into(), real_slot_fraction(&model.memory)));
            }
            EvalProbe::Purity => {
                require_memory(model, probe)?;
                let labels = train.labels.as_ref().ok_or_else(|| Error::InvalidConfig {
                    field: "probes".into(),
                    reason: "purity needs labeled data".into(),
                })?;
                let qs = queries(&model.discriminator, &train.samples)?;
                rows.push(("cluster_purity".into(), cluster_purity(&model.memory, &qs, labels)?));
            }
            EvalProbe::Neighbors => {
                require_memory(model, probe)?;
                let sample = model.generate(&mut rng, 1)?;
                let ranked = nearest_training_neighbors(&model.discriminator, sample.row(0), &train.samples, 7)?;
                for (rank, (idx, score)) in ranked.into_iter().enumerate() {
                    rows.push((format!("neighbor_{rank}_index"), idx as f64));
                    rows.push((format!("neighbor_{rank}_cosine"), score));
                }
            }
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut f = BufWriter::new(File::create(out_dir.join("eval.csv"))?);
    writeln!(f, "# {FINGERPRINT_KEY}={}", ck.config_sha256)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["probe", "value"])?;
    for (name, value) in &rows {
        w.write_record([name.as_str(), &value.to_string()])?;
    }
    w.flush()?;
    Ok(rows)
}

/// How [`run_interpolate`] picks its four corner slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotPolicy {
    /// Four distinct real slots drawn under the seed, preferring slots whose
    /// own key is their most probable slot.
    Random,
    /// Top-left, top-right, bottom-left, bottom-right.
    Given([usize; 4]),
}

#[derive(Debug, Clone)]
pub struct InterpolateRequest {
    pub checkpoint: PathBuf,
    pub slots: SlotPolicy,
    pub grid: usize,
    /// Blend a noise vector per corner instead of freezing one.
    pub corner_noise: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn self_maximal(model: &GanModel, slot: usize) -> Result<bool> {
    let q = Query::normalized(model.memory.key(slot).to_vec())?;
    Ok(model.memory.argmax_posterior(&q)? == slot)
}

/// Chooses four corner slots for `model` per `policy`.
pub fn pick_slots(model: &GanModel, policy: SlotPolicy, rng: &mut ChaCha8Rng) -> Result<[usize; 4]> {
    let memory = &model.memory;
    let real: Vec<usize> = (0..memory.n_slots())
        .filter(|&i| memory.values()[i] == Label::Real && memory.is_written(i))
        .collect();
    if real.len() < 4 {
        return Err(Error::InsufficientRealSlots {
            needed: 4,
            found: real.len(),
        });
    }
    match policy {
        SlotPolicy::Given(slots) => {
            let mut sorted = slots.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() < 4 {
                return Err(Error::DuplicateSlots(slots.to_vec()));
            }
            Ok(slots)
        }
        SlotPolicy::Random => {
            let mut pool = Vec::new();
            for &s in &real {
                if self_maximal(model, s)? {
                    pool.push(s);
                }
            }
            if pool.len() < 4 {
                pool = real;
            }
            let picked = sample(rng, pool.len(), 4);
            Ok([
                pool[picked.index(0)],
                pool[picked.index(1)],
                pool[picked.index(2)],
                pool[picked.index(3)],
            ])
        }
    }
}

/// Builds an interpolation grid from a checkpoint and writes it (`grid.pgm`
/// for square images, otherwise `grid.csv`) plus `snapped.csv`.
pub fn run_interpolate(req: &InterpolateRequest) -> Result<(InterpolationGrid, [usize; 4])> {
    let ck = Checkpoint::load(&req.checkpoint)?;
    let model = &ck.model;
    if !model.mode.conditions_generator() {
        return Err(Error::IncompatibleCheckpoint(format!(
            "mode {} has no memory-conditioned generator",
            model.mode
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let slots = pick_slots(model, req.slots, &mut rng)?;
    let mut noise = || -> Vec<f64> { (0..model.noise_dim()).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let policy = if req.corner_noise {
        ZPolicy::Corners([noise(), noise(), noise(), noise()])
    } else {
        ZPolicy::Frozen(noise())
    };
    let grid = interpolate_keys(&model.memory, &model.generator, slots, req.grid, &policy)?;

    fs::create_dir_all(&req.out_dir)?;
    let fp = &ck.config_sha256;
    let dim = model.data_dim();
    let side = (dim as f64).sqrt().round() as usize;
    let config = ck.train_config()?;
    if side * side == dim && config.dataset != DatasetKind::Ring {
        write_grid_pgm(BufWriter::new(File::create(req.out_dir.join("grid.pgm"))?), fp, &grid, side)?;
    } else {
        write_grid_csv(BufWriter::new(File::create(req.out_dir.join("grid.csv"))?), fp, &grid)?;
    }
    let mut f = BufWriter::new(File::create(req.out_dir.join("snapped.csv"))?);
    writeln!(f, "# {FINGERPRINT_KEY}={fp}")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["row", "col", "slot"])?;
    for r in 0..grid.grid {
        for c in 0..grid.grid {
            w.write_record([r.to_string(), c.to_string(), grid.cell(r, c).0.to_string()])?;
        }
    }
    w.flush()?;
    Ok((grid, slots))
}

#[derive(Debug, Clone)]
pub struct AblationSummary {
    /// `(mode, final coverage per seed)`; coverage is NaN when the data has no modes.
    pub coverage: Vec<(AblationMode, Vec<f64>)>,
    pub bounds: Bounds,
}

impl AblationSummary {
    pub fn median(&self, mode: AblationMode) -> Option<f64> {
        let (_, v) = self.coverage.iter().find(|(m, _)| *m == mode)?;
        median(v)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Trains every ablation mode for `seeds` consecutive seeds starting at
/// `config.seed`. Runs land in `<output_dir>/<mode>/seed-<s>/` and a
/// `summary.csv` of final coverages is written to `<output_dir>`.
pub fn run_ablate(config: &TrainConfig, seeds: u64) -> Result<AblationSummary> {
    config.validate()?;
    let base = resolve_output(&config.output_dir);
    fs::create_dir_all(&base)?;
    let mut coverage = Vec::new();
    let mut bounds = Bounds::default();
    let mut rows = Vec::new();
    for mode in AblationMode::ALL {
        let mut finals = Vec::new();
        for s in 0..seeds {
            let mut c = config.clone();
            c.ablation = mode;
            c.seed = config.seed + s;
            c.output_dir = base.join(mode.as_str()).join(format!("seed-{}", c.seed));
            let run = run_train(&c)?;
            bounds.merge(&run.bounds);
            let last = run.records.last().and_then(|r| r.mode_coverage).unwrap_or(f64::NAN);
            rows.push((mode, c.seed, last, run.fingerprint));
            finals.push(last);
        }
        coverage.push((mode, finals));
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(base.join("summary.csv"))?));
    w.write_record(["mode", "seed", "final_coverage", FINGERPRINT_KEY])?;
    for (mode, seed, cov, fp) in rows {
        w.write_record([mode.as_str(), &seed.to_string(), &cov.to_string(), &fp])?;
    }
    w.flush()?;
    Ok(AblationSummary { coverage, bounds })
}
