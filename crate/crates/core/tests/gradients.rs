mod common;

use common::grad_cases::{run_all, CASES};

const TOLERANCE: f64 = 1e-4;

#[test]
fn every_case_matches_central_differences() {
    let mut failures = Vec::new();
    for (name, worst, checked) in run_all() {
        println!("{name:<22} max rel error {worst:.3e} over {checked} coordinates");
        if worst.is_nan() || worst >= TOLERANCE {
            failures.push(name);
        }
    }
    assert!(failures.is_empty(), "gradient mismatch in {failures:?}");
}

#[test]
fn case_list_covers_every_op() {
    let names: Vec<&str> = CASES.iter().map(|c| c.0).collect();
    for op in [
        "conv1d_dilated",
        "fully_connected",
        "relu",
        "sigmoid",
        "add",
        "average",
        "binary_cross_entropy",
        "smooth_l1_mean",
        "detector",
        "phi_network",
    ] {
        assert!(names.contains(&op), "{op} missing");
    }
}
