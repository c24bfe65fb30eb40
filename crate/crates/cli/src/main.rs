use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paraqa::cli::{
    cmd_evaluate, cmd_generate, cmd_mine_rules, cmd_stats, cmd_train, ExperimentConfig, DEFAULT_MIN_COOCCUR,
    DEFAULT_MIN_SUPPORT, STATS_TEXT_FILE,
};
use paraqa::Error;

#[derive(Parser)]
#[command(name = "paraqa", version, about = "Paraphrase-weighted question answering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine template rewrite rules from clusters of paraphrased questions.
    MineRules {
        /// One cluster per line, questions separated by tabs.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_SUPPORT)]
        min_support: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_COOCCUR)]
        min_cooccur: usize,
    },
    /// Write the paraphrase candidates of every question.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the configured system and write a checkpoint and logs.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Also write per-question paraphrase weights.
        #[arg(long)]
        dump_weights: bool,
    },
    /// Report length, coverage, BLEU and TER of each generator.
    Stats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::MineRules {
            corpus,
            out,
            min_support,
            min_cooccur,
        } => {
            let n = cmd_mine_rules(&corpus, &out, min_support, min_cooccur)?;
            println!("{n} rules written to {}", out.display());
        }
        Command::Generate { config, questions, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let n = cmd_generate(&questions, &cfg, &out)?;
            println!("{n} candidates written to {}", out.display());
        }
        Command::Train { config, train, dev } => {
            let cfg = ExperimentConfig::load(&config)?;
            let t = cmd_train(&train, &dev, &cfg)?;
            let best = &t.log.records[t.log.best_epoch - 1];
            println!(
                "best epoch {} dev {:.4}; checkpoint {}",
                t.log.best_epoch,
                best.dev_metric,
                t.checkpoint.display()
            );
        }
        Command::Evaluate {
            config,
            checkpoint,
            data,
            dump_weights,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let e = cmd_evaluate(&checkpoint, &data, &cfg, dump_weights)?;
            print!("{}", e.text);
        }
        Command::Stats { config, data } => {
            let cfg = ExperimentConfig::load(&config)?;
            cmd_stats(&data, &cfg)?;
            let text = cfg.output_dir.join(STATS_TEXT_FILE);
            print!("{}", std::fs::read_to_string(&text).map_err(|e| Error::io(&text, e))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error\t{}\t{e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
