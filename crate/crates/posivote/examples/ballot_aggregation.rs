//! Aggregates a ballot file on one dimension and prints the decomposed
//! distributions.
//!
//!     cargo run --example ballot_aggregation -- crates/posivote/fixtures/three_ballots.json 0

use std::path::PathBuf;

use posivote::ballot::decompose_and_aggregate;
use posivote::formats::load_ballots;
use posivote::{classify_ballots, BudgetRule, Histogram, MethodSpec};

fn summary(name: &str, h: &Histogram) {
    let mean = h.mean.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
    println!("  {name:<18} mass {:>8.3}  mean {mean}", h.mass);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/three_ballots.json"));
    let dim: usize = args.next().map(|d| d.parse()).transpose()?.unwrap_or(0);

    let ballots = load_ballots(&path)?;
    let rule = BudgetRule::quadratic(16.0)?;
    let classified = classify_ballots(&ballots, &rule, 0.8)?;
    println!(
        "{} ballots, {} minority, k = {}",
        classified.len(),
        classified.minority.len(),
        classified.k
    );

    for method in [MethodSpec::Q_NW, MethodSpec::Q_SW, MethodSpec::Q_LW] {
        let r = decompose_and_aggregate(&classified, dim, method, &rule)?;
        println!(
            "\n{method}: mu = {}  (mu_o_hat {}, mu_m_hat {:?}, w_eff {:.3})",
            r.mu, r.mu_o_hat, r.mu_m_hat, r.w_eff
        );
        let d = &r.distributions;
        summary("weighted_all", &d.weighted_all);
        summary("original_1p1v", &d.original_1p1v);
        summary("majority", &d.majority);
        summary("mirror", &d.mirror);
        summary("minority_original", &d.minority_original);
        summary("minority_weighted", &d.minority_weighted);
    }
    Ok(())
}
