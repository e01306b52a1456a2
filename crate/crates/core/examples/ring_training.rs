//! Trains on the 8-mode Gaussian ring and prints coverage as it goes.
//!
//! ```text
//! cargo run --release --example ring_training -- [preset] [--field value ...]
//! cargo run --release --example ring_training -- ring-ablation --ablation no_em --seed 3
//! ```

use std::time::Instant;

use memorygan::cli::{TrainConfig, Trainer};

fn main() -> memorygan::Result<()> {
    let mut args = std::env::args().skip(1).peekable();
    let mut config = match args.peek() {
        Some(a) if !a.starts_with("--") => TrainConfig::preset(&args.next().unwrap())?,
        _ => TrainConfig::preset("ring-ablation")?,
    };
    while let (Some(k), Some(v)) = (args.next(), args.next()) {
        config.set(k.trim_start_matches("--"), &v)?;
    }
    config.eval_every = config.eval_every.max(250);
    println!("{}", config.canonical());

    let start = Instant::now();
    let mut trainer = Trainer::new(config)?;
    trainer.run(|t, r| {
        let written_real = (0..t.model.memory.n_slots())
            .filter(|&i| t.model.memory.is_written(i) && t.model.memory.values()[i] == memorygan::Label::Real)
            .count();
        println!(
            "{:>6}  d {:.3}  g {:.3}  info {:+.3}  coverage {}  loglik {}  entropy {:.3}  real slots {}  {:.1}s",
            r.iteration,
            r.d_loss,
            r.g_loss,
            r.info_term,
            r.mode_coverage.map_or("-".into(), |c| format!("{c:.3}")),
            r.avg_biased_loglik.map_or("-".into(), |l| format!("{l:.3}")),
            r.prior_entropy,
            written_real,
            start.elapsed().as_secs_f64()
        );
        Ok(())
    })?;
    Ok(())
}
