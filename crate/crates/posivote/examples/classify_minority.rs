//! Budget validation and minority detection for hand-written ballots.

use posivote::{classify_ballots, validate_ballot, Ballot, BudgetRule};

fn main() -> Result<(), posivote::Error> {
    let rule = BudgetRule::quadratic(9.0)?;
    let ballots = vec![
        Ballot::from_pairs("spreader", &[(0.4, 1.0), (0.6, 2.0), (0.5, 2.0)]),
        Ballot::from_pairs("focused", &[(0.9, 3.0), (0.5, 0.0), (0.5, 0.0)]),
        Ballot::from_pairs("leaning", &[(0.7, 2.5), (0.5, 1.0), (0.5, 1.0)]),
    ];

    for b in &ballots {
        let v = validate_ballot(b, &rule)?;
        let (dim, share) = v.max_share();
        println!("{:<9} cost {:>5.2}  largest share {share:.3} on dim {dim}", b.voter_id, v.cost);
    }

    let over = Ballot::from_pairs("greedy", &[(0.5, 3.0), (0.5, 1.0), (0.5, 0.0)]);
    match validate_ballot(&over, &rule) {
        Err(e) => println!("greedy    rejected: {e}"),
        Ok(_) => unreachable!(),
    }

    for tau in [0.8, 0.5] {
        let c = classify_ballots(&ballots, &rule, tau)?;
        let minority: Vec<_> = c
            .minority
            .iter()
            .zip(&c.minority_dimension)
            .map(|(b, d)| format!("{} (dim {d})", b.voter_id))
            .collect();
        println!("tau {tau}: minority = [{}]", minority.join(", "));
    }
    Ok(())
}
