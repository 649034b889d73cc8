//! Pipeline stages behind the `newsflow` command.
//!
//! Every stage reads plain files, writes plain files plus a
//! `<stage>.manifest.json`, and is a pure function of its inputs and the
//! configuration: rerunning it reproduces its outputs byte for byte,
//! whatever the thread count.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod report;
pub mod stages;

use std::path::Path;

use newsflow::synth::{generate_corpus, write_sides_csv, SynthConfig};

pub use config::{Overrides, PipelineConfig};
pub use error::CliError;
pub use report::{run_report, run_shifts, Report};
pub use stages::{run_stage, Stage};

use artifacts::StageRun;

/// Generate a synthetic corpus with its catalog and ground-truth sides
/// into `dir`.
pub fn run_synth(config: &SynthConfig, dir: &Path) -> Result<(), CliError> {
    config.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let out = generate_corpus(config).map_err(|e| CliError::Input(e.to_string()))?;
    let mut run = StageRun::new(dir, "synth")?;
    let mut bytes = Vec::new();
    out.corpus.write_jsonl(&mut bytes).map_err(|e| CliError::input("corpus", e))?;
    run.write(stages::CORPUS_FILE, &bytes)?;
    let mut cat = Vec::new();
    out.catalog.write_csv(&mut cat).map_err(|e| CliError::input("catalog", e))?;
    run.write(stages::CATALOG_FILE, &cat)?;
    for (file, sides) in [("user_sides.csv", &out.user_sides), ("influencer_sides.csv", &out.influencer_sides)] {
        let mut b = Vec::new();
        write_sides_csv(sides, &mut b).map_err(|e| CliError::input(file, e))?;
        run.write(file, &b)?;
    }
    run.finish(config.seed, config)?;
    Ok(())
}

/// Run every per-period stage for the selected period (all periods when
/// `period` is `None`), then the cross-period stages and the report.
pub fn run_pipeline(cfg: &PipelineConfig, period: Option<&str>) -> Result<Option<Report>, CliError> {
    cfg.validate()?;
    let names: Vec<String> = match period {
        Some(p) => vec![cfg.period(Some(p))?.name.clone()],
        None => cfg.periods.iter().map(|p| p.name.clone()).collect(),
    };
    if names.is_empty() {
        return Err(CliError::Input("config defines no period".into()));
    }
    for name in &names {
        for stage in Stage::ALL {
            run_stage(stage, cfg, Some(name))?;
        }
    }
    if period.is_some() {
        return Ok(None);
    }
    if cfg.periods.len() >= 2 {
        run_shifts(cfg)?;
    }
    run_report(cfg).map(Some)
}
