//! Mean-ratio curves for every method over k ∈ {1, 3, 5} and
//! s ∈ {0.2, 0.5, 0.8}, written as CSV.
//!
//!     cargo run --example curve_sweep > curves.csv

use posivote::analytic::{DEFAULT_K_VALUES, DEFAULT_S_VALUES};
use posivote::{curve_grid, write_curves_csv, MethodSpec, RGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = curve_grid(&MethodSpec::ALL, &DEFAULT_K_VALUES, &DEFAULT_S_VALUES, &RGrid::default())?;
    write_curves_csv(&series, std::io::stdout().lock())?;

    eprintln!("{} series, {} points each", series.len(), series[0].points.len());
    for cs in series.iter().filter(|cs| cs.k == 3 && cs.s == 0.5) {
        eprintln!("  {} k=3 s=0.5  ratio at r=0.5: {:.4}", cs.method, cs.ratio_at(0.5).unwrap());
    }
    Ok(())
}
