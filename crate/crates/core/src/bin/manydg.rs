use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manydg::eval::{EmbeddingDump, ProbeConfig};
use manydg::harness::{
    export_embeddings, probe_report, run_continual, run_experiment, run_small_data_sweep, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "manydg", version, about = "Train and analyze many-domain generalization models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one scenario/model cell for every configured seed.
    Run(ConfigArgs),
    /// Repeat a run with fewer and fewer training domains.
    Sweep(ConfigArgs),
    /// Pretrain, then fine-tune on new domains step by step.
    Continual(ConfigArgs),
    /// Dump v, z and the projections of every sample for a trained paired model.
    ExportEmbeddings {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        dump: PathBuf,
    },
    /// Linear-probe weight cosines, z similarity and norm scatter of a dump.
    ProbeReport {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = ProbeConfig::default().steps)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

macro_rules! config_flags {
    ($($field:ident),* $(,)?) => {
        /// Config file first, then one flag per config field on top.
        #[derive(Args)]
        struct ConfigArgs {
            /// key = value file; flags override it.
            #[arg(long)]
            config: Option<PathBuf>,
            /// Output directory.
            #[arg(long)]
            out: Option<String>,
            $(
                #[arg(long, value_name = "VALUE")]
                $field: Option<String>,
            )*
        }

        impl ConfigArgs {
            fn resolve(&self) -> manydg::Result<ExperimentConfig> {
                let mut cfg = match &self.config {
                    Some(path) => ExperimentConfig::load(path)?,
                    None => ExperimentConfig::default(),
                };
                if let Some(out) = &self.out {
                    cfg.set("out_dir", out)?;
                }
                $(
                    if let Some(v) = &self.$field {
                        cfg.set(stringify!($field), v)?;
                    }
                )*
                cfg.validate()?;
                Ok(cfg)
            }
        }
    };
}

config_flags!(
    scenario,
    model,
    epochs,
    batch_size,
    hidden_dim,
    backbone_width,
    temperature,
    lambda_mmd,
    lambda_rec,
    lambda_sim,
    lr,
    weight_decay,
    seed,
    num_seeds,
    data_seed,
    train_size,
    test_size,
    train_images,
    train_labels,
    test_images,
    test_labels,
    num_waves,
    alpha,
    val_fraction,
    domain_limit,
    continual_pretrain,
    continual_step,
    continual_steps,
    continual_replay,
    continual_epochs,
    sweep_counts,
    save_checkpoint,
);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> manydg::Result<()> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let r = run_experiment(&cfg)?;
            println!(
                "{} on {}: test accuracy {:.4} ± {:.4}, kappa {:.4}, macro-F1 {:.4} ({} seeds) -> {}",
                cfg.model,
                cfg.scenario,
                r.test.accuracy.mean,
                r.test.accuracy.std,
                r.test.kappa.mean,
                r.test.macro_f1.mean,
                r.runs.len(),
                cfg.out_dir.display()
            );
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let sweep = run_small_data_sweep(&cfg, &cfg.sweep_counts)?;
            for row in &sweep.rows {
                println!(
                    "{:>5} domains {:>6} samples: test accuracy {:.4} ± {:.4}",
                    row.domains, row.train_samples, row.test_accuracy_mean, row.test_accuracy_std
                );
            }
        }
        Command::Continual(args) => {
            let cfg = args.resolve()?;
            for row in run_continual(&cfg)?.rows {
                println!(
                    "seed {} step {:>2} ({} domains): test accuracy {:.4}",
                    row.seed, row.step, row.domains_seen, row.test_accuracy
                );
            }
        }
        Command::ExportEmbeddings { config, checkpoint, dump } => {
            let cfg = config.resolve()?;
            let d = export_embeddings(&cfg, &checkpoint, &dump)?;
            println!("{} rows of width {} -> {}", d.len(), d.dim(), dump.display());
        }
        Command::ProbeReport { dump, out, steps, seed } => {
            let d = EmbeddingDump::load(&dump)?;
            let probe = ProbeConfig {
                steps,
                seed,
                ..ProbeConfig::default()
            };
            let s = probe_report(&d, &probe, &out)?;
            for (name, v) in s.probe.rows() {
                println!("{name:<32} {v:+.4}");
            }
            println!("z within {:.4} cross {:.4}", s.z_similarity.within, s.z_similarity.cross);
        }
    }
    Ok(())
}
