//! The five methods side by side at k = 3, s = 0.5, with the minority
//! fraction set by the cap at each r.

use posivote::{coefficient, curve_grid, minority_cap, MethodSpec, RGrid};

fn main() -> Result<(), posivote::Error> {
    let k = 3;
    let s = 0.5;
    let series = curve_grid(&MethodSpec::ALL, &[k], &[s], &RGrid::new(0.0, 2.0, 0.25)?)?;

    print!("{:>5}  {:>6}", "r", "m/n");
    for cs in &series {
        print!("  {:>7}", cs.method.to_string());
    }
    println!();
    for (i, point) in series[0].points.iter().enumerate() {
        print!("{:>5.2}  {:>6.4}", point.r, point.m_over_n_used);
        for cs in &series {
            print!("  {:>7.4}", cs.points[i].ratio);
        }
        println!();
    }

    // how strongly each method pulls the mean toward the minority
    let q = minority_cap(0.5, s)?;
    println!("\ncoefficient c at r=0.5 (q={q:.4}); mu/mu_o = (1 + c·r)/(1 + c)");
    for method in MethodSpec::ALL {
        println!("  {method}  c = {:.4}", coefficient(method, k, q));
    }
    Ok(())
}
