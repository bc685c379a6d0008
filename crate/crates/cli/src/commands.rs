use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tsanet::eval::parse_curve_csv;
use tsanet::labeling::{read_annotations, write_annotations, AnnotationSet};
use tsanet::pipeline::{
    assign_oracle_classes, evaluate_stage, join_annotations, load_detector, load_phi,
    propose_stage, save_detector, save_phi, train_detector_stage, train_phi_stage,
};
use tsanet::proposal::{read_proposals, write_proposals};
use tsanet::synth::{generate_dataset, read_features, train_val_split, write_features};
use tsanet::{Error, Result, RunConfig};

use crate::svg;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| Error::io(format!("creating directory {}", path.display()), e))
}

fn loss_csv(losses: &[f64]) -> String {
    let mut s = String::from("epoch,loss\n");
    for (epoch, loss) in losses.iter().enumerate() {
        writeln!(s, "{epoch},{loss}").unwrap();
    }
    s
}

fn default_loss_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".loss.csv");
    out.with_file_name(name)
}

fn load_labeled(
    features: &Path,
    annotations: &Path,
) -> Result<Vec<(tsanet::synth::FeatureSequence, AnnotationSet)>> {
    join_annotations(read_features(features)?, read_annotations(annotations)?)
}

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = generate_dataset(&cfg.synth)?;
    let (train, val) = train_val_split(data.len(), cfg.split.train_fraction, cfg.synth.seed);
    create_dir(out)?;
    for (name, idx) in [("train", &train), ("val", &val)] {
        let feats: Vec<_> = idx.iter().map(|&i| data[i].0.clone()).collect();
        let anns: Vec<_> = idx.iter().map(|&i| data[i].1.clone()).collect();
        write_features(&out.join(format!("{name}.feat")), &feats)?;
        write_annotations(&out.join(format!("{name}.ann")), &anns)?;
    }
    log::info!(
        "wrote {} train and {} val videos to {}",
        train.len(),
        val.len(),
        out.display()
    );
    Ok(())
}

pub fn train_detector(
    cfg: &RunConfig,
    features: &Path,
    annotations: &Path,
    out: &Path,
    loss_path: Option<PathBuf>,
) -> Result<()> {
    let videos = load_labeled(features, annotations)?;
    let (detector, report) = train_detector_stage(cfg, &videos)?;
    save_detector(out, &detector)?;
    write_text(
        &loss_path.unwrap_or_else(|| default_loss_path(out)),
        &loss_csv(&report.epoch_losses),
    )
}

pub fn train_phi(
    cfg: &RunConfig,
    features: &Path,
    annotations: &Path,
    detector: &Path,
    out: &Path,
    loss_path: Option<PathBuf>,
) -> Result<()> {
    let videos = load_labeled(features, annotations)?;
    let detector = load_detector(detector, &cfg.detector)?;
    let (model, report) = train_phi_stage(cfg, &detector, &videos)?;
    save_phi(out, &model, &cfg.detector)?;
    write_text(
        &loss_path.unwrap_or_else(|| default_loss_path(out)),
        &loss_csv(&report.epoch_losses),
    )
}

pub fn propose(
    cfg: &RunConfig,
    features: &Path,
    detector: &Path,
    phi: &Path,
    out: &Path,
    oracle_classes: Option<&Path>,
) -> Result<()> {
    let sequences = read_features(features)?;
    let detector = load_detector(detector, &cfg.detector)?;
    let phi = load_phi(phi, &cfg.detector)?;
    let refs: Vec<_> = sequences.iter().collect();
    let mut proposals = propose_stage(cfg, &detector, &phi, &refs)?;
    if let Some(path) = oracle_classes {
        assign_oracle_classes(&mut proposals, &read_annotations(path)?);
    }
    proposals.sort_by(|a, b| a.0.cmp(&b.0));
    write_proposals(out, &proposals)
}

pub fn eval(cfg: &RunConfig, proposals: &Path, annotations: &Path, out: &Path) -> Result<()> {
    let proposals = read_proposals(proposals)?;
    let annotations = read_annotations(annotations)?;
    let report = evaluate_stage(cfg, &proposals, &annotations)?;
    create_dir(out)?;
    write_text(&out.join("report.txt"), &report.to_text())?;
    write_text(&out.join("ar_an.csv"), &report.ar_an_csv())?;
    write_text(&out.join("recall_iou.csv"), &report.recall_iou_csv())?;
    print!("{}", report.to_text());
    Ok(())
}

pub fn plot(csv: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| Error::io(format!("reading {}", csv.display()), e))?;
    let curve = parse_curve_csv(&text, csv)?;
    write_text(out, &svg::line_chart(&curve))
}
