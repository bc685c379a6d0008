//! The synthetic end-to-end benchmark as a library call.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use tsanet::eval::EvalReport;
use tsanet::pipeline::{evaluate_stage, propose_stage, train_detector_stage, train_phi_stage};
use tsanet::proposal::format_proposals;
use tsanet::synth::{generate_dataset, train_val_split};
use tsanet::RunConfig;

pub fn benchmark_config() -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmark.toml");
    RunConfig::load(&path).unwrap()
}

pub struct BenchmarkRun {
    pub report: EvalReport,
    /// Proposal file contents for the validation split.
    pub proposals: String,
    pub report_text: String,
    pub elapsed: Duration,
}

/// Generates the data, trains both networks on the train split, and
/// evaluates proposals on the validation split.
pub fn run_benchmark(cfg: &RunConfig) -> BenchmarkRun {
    let started = Instant::now();
    let data = generate_dataset(&cfg.synth).unwrap();
    let (train_idx, val_idx) =
        train_val_split(data.len(), cfg.split.train_fraction, cfg.synth.seed);
    let train: Vec<_> = train_idx.iter().map(|&i| data[i].clone()).collect();
    let val: Vec<_> = val_idx.iter().map(|&i| &data[i]).collect();

    let (detector, _) = train_detector_stage(cfg, &train).unwrap();
    let (phi, _) = train_phi_stage(cfg, &detector, &train).unwrap();
    let features: Vec<_> = val.iter().map(|(f, _)| f).collect();
    let proposals = propose_stage(cfg, &detector, &phi, &features).unwrap();
    let annotations: Vec<_> = val.iter().map(|(_, a)| a.clone()).collect();
    let report = evaluate_stage(cfg, &proposals, &annotations).unwrap();
    BenchmarkRun {
        proposals: format_proposals(&proposals),
        report_text: format!(
            "{}{}{}",
            report.to_text(),
            report.ar_an_csv(),
            report.recall_iou_csv()
        ),
        report,
        elapsed: started.elapsed(),
    }
}
