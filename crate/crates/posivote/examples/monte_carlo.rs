//! Samples populations, runs them through classification and aggregation,
//! and checks the result against the closed form.
//!
//!     cargo run --release --example monte_carlo -- 100000 20

use posivote::{run_trials, MethodSpec, PopulationParams, SimConfig};

fn main() -> Result<(), posivote::Error> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let n = args.next().unwrap_or(20_000);
    let trials = args.next().unwrap_or(10) as usize;

    // mu_o = 1, sigma_o = 0.5, minority of 20% centered at 0.5
    let params = PopulationParams::new(n, n / 5, 3, 9.0, 1.0, 0.5, 0.5)?;
    for method in [MethodSpec::Q_NW, MethodSpec::Q_LW] {
        let report = run_trials(&SimConfig::new(params, method, 7, trials)?)?;
        print!("{}", report.to_table());
        println!();
    }
    Ok(())
}
