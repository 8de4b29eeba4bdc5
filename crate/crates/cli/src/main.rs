//! `leafball`: build the labyrinth, run the induction, trace leaves and emit report tables.
//!
//! Exit status: 0 when every certificate passed, 1 when a run or check failed,
//! 2 on configuration or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafball_core::pipeline::{emit_plot_data, load_state, load_summary, run_labyrinth, run_pipeline, run_traces, RunConfig};
use leafball_core::Result;

#[derive(Parser)]
#[command(name = "leafball", version, about = "Foliations of the ball by complete holomorphic discs, stage by stage")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `out`, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Build and certify the labyrinth; writes labyrinth.json.
    Labyrinth(Common),
    /// Full pipeline: labyrinth, induction, leaves, summary and plot tables.
    Run(Common),
    /// Re-trace the configured leaves from a finished run's state.json.
    Trace(Common),
    /// Write plot tables from a finished run's summary.json.
    Report(Common),
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn labyrinth(cfg: &RunConfig, out: &Path) -> Result<ExitCode> {
    let lab = run_labyrinth(cfg, out)?;
    for (k, s) in lab.shells.iter().enumerate() {
        println!(
            "shell {} ({}, {}): {} plates, delta {:.6}, margin {:.3e}",
            s.index, s.inner, s.outer, lab.plates[k].len(), lab.deltas[k], lab.margins[k]
        );
    }
    Ok(status(lab.margins.iter().all(|m| *m > 0.0)))
}

fn run(cfg: &RunConfig, out: &Path) -> Result<ExitCode> {
    let outcome = run_pipeline(cfg, out)?;
    emit_plot_data(out)?;
    let s = &outcome.summary;
    println!("stages completed: {}/{}", s.stages_completed, s.stages_requested);
    for m in &s.margins {
        let margin = match m.margin {
            Some(x) => format!("{x:.6e}"),
            None if m.pass => "vacuous".to_string(),
            None => "n/a".to_string(),
        };
        println!("stage {} check {}: {} {}", m.stage, m.check, margin, if m.pass { "ok" } else { "FAIL" });
    }
    for l in &s.leaf_lengths {
        println!("leaf {} stage {}: length {:.6}", l.leaf_id, l.stage, l.length);
    }
    for e in &s.leaf_errors {
        println!("leaf problem: {e}");
    }
    if let Some(f) = &s.failure {
        println!("failure: {f}");
    }
    println!("{}", if s.pass { "PASS" } else { "FAIL" });
    Ok(status(s.pass))
}

fn trace(cfg: &RunConfig, out: &Path) -> Result<ExitCode> {
    let state = load_state(out)?;
    let (lengths, errors) = run_traces(cfg, &state, out)?;
    for l in &lengths {
        println!("leaf {} stage {}: length {:.6}, residual {:.3e}", l.leaf_id, l.stage, l.length, l.invariance_residual);
    }
    for e in &errors {
        println!("leaf problem: {e}");
    }
    Ok(status(errors.is_empty()))
}

fn report(out: &Path) -> Result<ExitCode> {
    let summary = load_summary(out)?;
    for p in emit_plot_data(out)? {
        println!("wrote {}", p.display());
    }
    Ok(status(summary.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (Verb::Labyrinth(c) | Verb::Run(c) | Verb::Trace(c) | Verb::Report(c)) = &cli.verb;
    let result = RunConfig::load(&c.config).and_then(|cfg| {
        let out = out_dir(c, &cfg);
        match &cli.verb {
            Verb::Labyrinth(_) => labyrinth(&cfg, &out),
            Verb::Run(_) => run(&cfg, &out),
            Verb::Trace(_) => trace(&cfg, &out),
            Verb::Report(_) => report(&out),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
