use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memorygan::cli::{
    output_root, resolve_output, run_ablate, run_eval, run_interpolate, run_train, EvalProbe, InterpolateRequest,
    SlotPolicy, TrainConfig, OUTPUT_ROOT_ENV,
};
use memorygan::gan::AblationMode;
use memorygan::{Error, Result};

#[derive(Parser)]
#[command(name = "memorygan", version, about = "Train and probe a memory-augmented GAN at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write metrics, config, and checkpoint.
    Train(ConfigArgs),
    /// Run probes on a saved checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated: mode_coverage, loglik, prior_entropy, purity, neighbors.
        #[arg(long, default_value = "prior_entropy")]
        probes: String,
        /// Defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render a key-space interpolation grid from a saved checkpoint.
    Interpolate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Four comma-separated slot indices (TL,TR,BL,BR); random real slots when omitted.
        #[arg(long)]
        slots: Option<String>,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        /// Interpolate noise between four corner draws instead of freezing one.
        #[arg(long)]
        corner_noise: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train every ablation mode over several seeds and summarize coverage.
    Ablate {
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ring, shapes, fashion, or large.
    #[arg(long)]
    preset: Option<String>,
    /// Field overrides as `--field value` or `--field=value`, applied last.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--FIELD VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn is_empty(&self) -> bool {
        self.config.is_none() && self.preset.is_none() && self.overrides.is_empty()
    }

    fn build(&self) -> Result<TrainConfig> {
        let mut c = match &self.preset {
            Some(p) => TrainConfig::preset(p)?,
            None => TrainConfig::default(),
        };
        if let Some(path) = &self.config {
            c.apply_text(&std::fs::read_to_string(path)?)?;
        }
        for (k, v) in parse_overrides(&self.overrides)? {
            c.set(&k, &v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(Error::InvalidConfig {
                field: arg.clone(),
                reason: "expected `--field value`".into(),
            });
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Error::InvalidConfig {
                    field: flag.to_string(),
                    reason: "missing value".into(),
                })?;
                (flag.to_string(), v.clone())
            }
        };
        out.push((key.replace('-', "_"), value));
    }
    Ok(out)
}

fn default_out(checkpoint: &Path, out: Option<PathBuf>) -> PathBuf {
    match out {
        Some(p) => resolve_output(&p),
        None => checkpoint.parent().map(Path::to_path_buf).unwrap_or_default(),
    }
}

fn parse_slots(text: &str) -> Result<[usize; 4]> {
    let parsed: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidConfig {
            field: "slots".into(),
            reason: format!("cannot parse `{text}`"),
        })?;
    parsed.try_into().map_err(|v: Vec<usize>| Error::InvalidConfig {
        field: "slots".into(),
        reason: format!("need exactly 4 indices, got {}", v.len()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let config = args.build()?;
            let summary = run_train(&config)?;
            if let Some(last) = summary.records.last() {
                println!(
                    "iteration {} d_loss {:.4} g_loss {:.4} coverage {}",
                    last.iteration,
                    last.d_loss,
                    last.g_loss,
                    last.mode_coverage.map_or("n/a".to_string(), |c| format!("{c:.3}"))
                );
            }
            println!("wrote {}", summary.dir.display());
        }
        Command::Eval {
            checkpoint,
            probes,
            out,
            config,
        } => {
            let probes: Vec<EvalProbe> = probes
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse())
                .collect::<Result<_>>()?;
            let cfg = if config.is_empty() { None } else { Some(config.build()?) };
            let out = default_out(&checkpoint, out);
            for (name, value) in run_eval(&checkpoint, cfg.as_ref(), &probes, &out)? {
                println!("{name} {value}");
            }
        }
        Command::Interpolate {
            checkpoint,
            slots,
            grid,
            corner_noise,
            seed,
            out,
        } => {
            let slots = match slots {
                Some(s) => SlotPolicy::Given(parse_slots(&s)?),
                None => SlotPolicy::Random,
            };
            let out_dir = default_out(&checkpoint, out);
            let (_, corners) = run_interpolate(&InterpolateRequest {
                checkpoint,
                slots,
                grid,
                corner_noise,
                seed,
                out_dir: out_dir.clone(),
            })?;
            println!("corners {corners:?}; wrote {}", out_dir.display());
        }
        Command::Ablate { seeds, config } => {
            let config = config.build()?;
            let summary = run_ablate(&config, seeds)?;
            for mode in AblationMode::ALL {
                let median = summary.median(mode).unwrap_or(f64::NAN);
                println!("{mode} median_coverage {median:.3}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Io(_) = e {
                eprintln!("(relative outputs go under {}; set {OUTPUT_ROOT_ENV} to change)", output_root().display());
            }
            ExitCode::FAILURE
        }
    }
}
