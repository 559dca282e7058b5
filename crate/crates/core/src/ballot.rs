//! Ballot validation, minority extraction, and the mirror-image weighted
//! aggregation of one dimension.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::analytic::weighted_mean;
use crate::error::{Error, Result};
use crate::histogram::{range_of, Histogram};
use crate::model::{
    check_positive, method_params, AggregateResult, Ballot, Distributions, MethodParams,
    MethodSpec, VotingRule,
};

/// Slack allowed when comparing a ballot's cost against the budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;
/// Default point-share threshold above which a ballot counts as concentrated.
pub const DEFAULT_TAU: f64 = 0.8;
pub const DEFAULT_BINS: usize = 40;

/// Point budget and the cost function that applies to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRule {
    pub voting: VotingRule,
    pub p: f64,
}

impl BudgetRule {
    pub fn new(voting: VotingRule, p: f64) -> Result<Self> {
        check_positive("p", p)?;
        Ok(BudgetRule { voting, p })
    }

    pub fn quadratic(p: f64) -> Result<Self> {
        BudgetRule::new(VotingRule::Quadratic, p)
    }

    pub fn linear(p: f64) -> Result<Self> {
        BudgetRule::new(VotingRule::Linear, p)
    }

    /// Total points a ballot spends.
    pub fn cost(&self, ballot: &Ballot) -> f64 {
        ballot
            .allocations
            .iter()
            .map(|a| self.voting.cost(a.votes))
            .sum()
    }
}

/// A ballot that passed validation, with its cost and per-dimension share of
/// the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedBallot {
    pub ballot: Ballot,
    pub cost: f64,
    pub shares: Vec<f64>,
}

impl ValidatedBallot {
    /// Largest share and its dimension; ties go to the lowest index.
    pub fn max_share(&self) -> (usize, f64) {
        self.shares
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, s)| if s > best.1 { (i, s) } else { best })
    }
}

/// Checks structure and budget; rejects anything spending more than `p`.
pub fn validate_ballot(ballot: &Ballot, rule: &BudgetRule) -> Result<ValidatedBallot> {
    let malformed = |reason: &str| Error::MalformedBallot {
        voter_id: ballot.voter_id.clone(),
        reason: reason.to_string(),
    };
    if ballot.allocations.is_empty() {
        return Err(malformed("no allocations"));
    }
    for (dim, a) in ballot.allocations.iter().enumerate() {
        if !(a.votes.is_finite() && a.votes >= 0.0) {
            return Err(Error::NegativeVotes {
                voter_id: ballot.voter_id.clone(),
                dim,
            });
        }
        if !a.position.is_finite() {
            return Err(malformed("non-finite position"));
        }
    }
    if !ballot.allocations.iter().any(|a| a.votes > 0.0) {
        return Err(malformed("no votes cast"));
    }

    let cost = rule.cost(ballot);
    if cost > rule.p + BUDGET_TOLERANCE {
        return Err(Error::OverBudget {
            voter_id: ballot.voter_id.clone(),
            cost,
            budget: rule.p,
            excess: cost - rule.p,
        });
    }
    let shares = ballot
        .allocations
        .iter()
        .map(|a| rule.voting.cost(a.votes) / rule.p)
        .collect();
    Ok(ValidatedBallot {
        ballot: ballot.clone(),
        cost,
        shares,
    })
}

/// Ballots split into the evenly spreading majority and the concentrating
/// minority. Both lists are ordered by voter id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedBallots {
    pub k: usize,
    pub tau: f64,
    pub majority: Vec<Ballot>,
    pub minority: Vec<Ballot>,
    /// Focal dimension of each entry in `minority`.
    pub minority_dimension: Vec<usize>,
}

impl ClassifiedBallots {
    pub fn len(&self) -> usize {
        self.majority.len() + self.minority.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Minority members focused on `dim`.
    pub fn minority_on(&self, dim: usize) -> impl Iterator<Item = &Ballot> {
        self.minority
            .iter()
            .zip(&self.minority_dimension)
            .filter(move |(_, &d)| d == dim)
            .map(|(b, _)| b)
    }

    /// Active voters on `dim` that are not minority members focused on it.
    pub fn majority_on(&self, dim: usize) -> impl Iterator<Item = &Ballot> {
        let focused_elsewhere = self
            .minority
            .iter()
            .zip(&self.minority_dimension)
            .filter(move |(_, &d)| d != dim)
            .map(|(b, _)| b);
        self.majority
            .iter()
            .chain(focused_elsewhere)
            .filter(move |b| b.is_active_on(dim))
    }
}

/// Marks a ballot as minority when one dimension takes at least `tau` of the
/// budget. With a single dimension every ballot is majority.
pub fn classify_ballots(ballots: &[Ballot], rule: &BudgetRule, tau: f64) -> Result<ClassifiedBallots> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::validation("tau", format!("{tau} outside (0, 1]")));
    }
    let Some(first) = ballots.first() else {
        return Err(Error::validation("ballots", "no ballots to classify"));
    };
    let k = first.k();

    let mut seen = HashSet::with_capacity(ballots.len());
    let mut validated = Vec::with_capacity(ballots.len());
    for ballot in ballots {
        if ballot.k() != k {
            return Err(Error::MalformedBallot {
                voter_id: ballot.voter_id.clone(),
                reason: format!("{} allocations, expected {k}", ballot.k()),
            });
        }
        if !seen.insert(ballot.voter_id.as_str()) {
            return Err(Error::DuplicateVoter(ballot.voter_id.clone()));
        }
        validated.push(validate_ballot(ballot, rule)?);
    }
    validated.sort_by(|a, b| a.ballot.voter_id.cmp(&b.ballot.voter_id));

    let mut out = ClassifiedBallots {
        k,
        tau,
        majority: Vec::new(),
        minority: Vec::new(),
        minority_dimension: Vec::new(),
    };
    for v in validated {
        let (dim, share) = v.max_share();
        if k > 1 && share >= tau {
            out.minority.push(v.ballot);
            out.minority_dimension.push(dim);
        } else {
            out.majority.push(v.ballot);
        }
    }
    Ok(out)
}

/// One-person-one-vote view of a dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnePersonOneVote {
    pub histogram: Histogram,
    pub mean: f64,
    pub count: usize,
}

/// Every voter active on `dim` counts once at their position, regardless of
/// how many votes they cast there.
pub fn one_person_one_vote(ballots: &[Ballot], dim: usize, bins: usize) -> Result<OnePersonOneVote> {
    if bins == 0 {
        return Err(Error::validation("bins", "need at least one bin"));
    }
    let positions: Vec<f64> = ballots
        .iter()
        .filter(|b| b.is_active_on(dim))
        .map(|b| b.allocations[dim].position)
        .collect();
    let (lo, hi) = range_of(positions.iter().copied()).ok_or(Error::EmptyDistribution(dim))?;
    let points: Vec<(f64, f64)> = positions.iter().map(|&x| (x, 1.0)).collect();
    Ok(OnePersonOneVote {
        histogram: Histogram::from_points(&points, lo, hi, bins),
        mean: mean(&positions),
        count: positions.len(),
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// [`decompose_and_aggregate_with_bins`] with [`DEFAULT_BINS`].
pub fn decompose_and_aggregate(
    classified: &ClassifiedBallots,
    dim: usize,
    method: MethodSpec,
    rule: &BudgetRule,
) -> Result<AggregateResult> {
    decompose_and_aggregate_with_bins(classified, dim, method, rule, DEFAULT_BINS)
}

/// Splits dimension `dim` into majority and minority components and
/// recombines them with the minority weighted by `method`.
///
/// The majority keeps mass `a(n - 2m)` at its observed mean, the minority is
/// mirrored about that mean with mass `a·m`, and the minority itself enters
/// with mass `b·m·w_eff`. `a` and `b` are the mean votes observed on the
/// dimension for each group.
pub fn decompose_and_aggregate_with_bins(
    classified: &ClassifiedBallots,
    dim: usize,
    method: MethodSpec,
    rule: &BudgetRule,
    bins: usize,
) -> Result<AggregateResult> {
    if dim >= classified.k {
        return Err(Error::DimensionOutOfRange {
            dim,
            k: classified.k,
        });
    }
    let majority: Vec<(f64, f64)> = classified
        .majority_on(dim)
        .map(|b| (b.allocations[dim].position, b.allocations[dim].votes))
        .collect();
    let minority: Vec<(f64, f64)> = classified
        .minority_on(dim)
        .map(|b| (b.allocations[dim].position, b.allocations[dim].votes))
        .collect();

    let m = minority.len();
    let n = majority.len() + m;
    if n == 0 {
        return Err(Error::EmptyDistribution(dim));
    }
    let (nf, mf) = (n as f64, m as f64);
    if 2 * m > n {
        return Err(Error::MirrorUndefined { n: nf, m: mf });
    }

    let maj_positions: Vec<f64> = majority.iter().map(|p| p.0).collect();
    let maj_votes: Vec<f64> = majority.iter().map(|p| p.1).collect();
    let min_positions: Vec<f64> = minority.iter().map(|p| p.0).collect();
    let mu_o_hat = mean(&maj_positions);
    let a = mean(&maj_votes);

    let (mu_m_hat, b, w_eff, fallback) = if m == 0 {
        (None, a, 1.0, method.is_weighted())
    } else {
        let b = mean(&minority.iter().map(|p| p.1).collect::<Vec<_>>());
        let w_eff = method_params(method, rule.p, classified.k as u64, nf, mf)?.w_eff;
        (Some(mean(&min_positions)), b, w_eff, false)
    };
    let params = MethodParams { a, b, w_eff };
    let mu = weighted_mean(&params, nf, mf, mu_o_hat, mu_m_hat.unwrap_or(mu_o_hat))?;

    let remainder_weight = a * (nf - 2.0 * mf) / (nf - mf);
    let majority_pts: Vec<(f64, f64)> = maj_positions.iter().map(|&x| (x, remainder_weight)).collect();
    let mirror_pts: Vec<(f64, f64)> = min_positions.iter().map(|&x| (2.0 * mu_o_hat - x, a)).collect();
    let min_orig_pts: Vec<(f64, f64)> = min_positions.iter().map(|&x| (x, b)).collect();
    let min_weighted_pts: Vec<(f64, f64)> = min_positions.iter().map(|&x| (x, b * w_eff)).collect();
    let all_pts: Vec<(f64, f64)> = majority_pts
        .iter()
        .chain(&mirror_pts)
        .chain(&min_weighted_pts)
        .copied()
        .collect();
    let one_pts: Vec<(f64, f64)> = maj_positions
        .iter()
        .chain(&min_positions)
        .map(|&x| (x, 1.0))
        .collect();

    let total: f64 = all_pts.iter().map(|p| p.1).sum();
    let variance = all_pts.iter().map(|&(x, w)| w * (x - mu).powi(2)).sum::<f64>() / total;

    let (lo, hi) = range_of(all_pts.iter().chain(&one_pts).map(|p| p.0)).expect("n > 0");
    let hist = |pts: &[(f64, f64)]| Histogram::from_points(pts, lo, hi, bins);
    let distributions = Distributions {
        weighted_all: hist(&all_pts),
        original_1p1v: hist(&one_pts),
        majority: hist(&majority_pts),
        mirror: hist(&mirror_pts),
        minority_original: hist(&min_orig_pts),
        minority_weighted: hist(&min_weighted_pts),
    };

    Ok(AggregateResult {
        dimension: dim,
        method,
        mu,
        mu_o_hat,
        mu_m_hat,
        m_hat: m,
        n,
        a,
        b,
        w_eff,
        sigma_hat: variance.sqrt(),
        fallback_non_weighted: fallback,
        distributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Allocation;

    fn q16() -> BudgetRule {
        BudgetRule::quadratic(16.0).unwrap()
    }

    /// Two even spreaders around 1.0 and one voter concentrating on dim 0 at 0.5.
    fn three_ballots() -> Vec<Ballot> {
        vec![
            Ballot::from_pairs("a", &[(0.9, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0)]),
            Ballot::from_pairs("b", &[(1.1, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0)]),
            Ballot::from_pairs("c", &[(0.5, 4.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]),
        ]
    }

    #[test]
    fn budget_examples() {
        let even = Ballot::from_pairs("v", &[(0.0, 2.0); 4]);
        assert_eq!(validate_ballot(&even, &q16()).unwrap().cost, 16.0);
        let conc = Ballot::from_pairs("v", &[(0.0, 4.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let v = validate_ballot(&conc, &q16()).unwrap();
        assert_eq!(v.cost, 16.0);
        assert_eq!(v.shares, vec![1.0, 0.0, 0.0, 0.0]);

        let over = Ballot::from_pairs("v", &[(0.0, 5.0); 3]);
        match validate_ballot(&over, &BudgetRule::linear(12.0).unwrap()) {
            Err(Error::OverBudget { cost, excess, .. }) => {
                assert_eq!(cost, 15.0);
                assert_eq!(excess, 3.0);
            }
            other => panic!("expected over-budget, got {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_and_empty() {
        let neg = Ballot::from_pairs("v", &[(0.0, 1.0), (0.0, -1.0)]);
        assert!(matches!(
            validate_ballot(&neg, &q16()),
            Err(Error::NegativeVotes { dim: 1, .. })
        ));
        let zero = Ballot::from_pairs("v", &[(0.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(validate_ballot(&zero, &q16()), Err(Error::MalformedBallot { .. })));
        let none = Ballot::new("v", vec![]);
        assert!(matches!(validate_ballot(&none, &q16()), Err(Error::MalformedBallot { .. })));
    }

    #[test]
    fn budget_tolerance() {
        let just = Ballot::from_pairs("v", &[(0.0, 12.0 + 5e-10)]);
        assert!(validate_ballot(&just, &BudgetRule::linear(12.0).unwrap()).is_ok());
        let over = Ballot::from_pairs("v", &[(0.0, 12.0 + 2e-9)]);
        assert!(validate_ballot(&over, &BudgetRule::linear(12.0).unwrap()).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = classify_ballots(&three_ballots(), &q16(), DEFAULT_TAU).unwrap();
        assert_eq!(c.majority.len(), 2);
        assert_eq!(c.minority.len(), 1);
        assert_eq!(c.minority_dimension, vec![0]);

        let single = vec![
            Ballot::from_pairs("x", &[(0.2, 4.0)]),
            Ballot::from_pairs("y", &[(0.4, 1.0)]),
        ];
        let c = classify_ballots(&single, &q16(), 0.1).unwrap();
        assert!(c.minority.is_empty());
        assert_eq!(c.majority.len(), 2);
    }

    #[test]
    fn ties_go_to_lowest_dimension() {
        let b = Ballot::from_pairs("t", &[(0.0, 0.0), (0.0, 2.0), (0.0, 2.0)]);
        let c = classify_ballots(&[b], &BudgetRule::quadratic(8.0).unwrap(), 0.5).unwrap();
        assert_eq!(c.minority_dimension, vec![1]);
    }

    #[test]
    fn classification_input_errors() {
        let mut ballots = three_ballots();
        ballots.push(Ballot::from_pairs("a", &[(0.0, 1.0); 4]));
        assert!(matches!(
            classify_ballots(&ballots, &q16(), 0.8),
            Err(Error::DuplicateVoter(_))
        ));
        let mixed = vec![
            Ballot::from_pairs("a", &[(0.0, 1.0); 4]),
            Ballot::from_pairs("b", &[(0.0, 1.0); 3]),
        ];
        assert!(classify_ballots(&mixed, &q16(), 0.8).is_err());
        assert!(classify_ballots(&three_ballots(), &q16(), 0.0).is_err());
        assert!(classify_ballots(&[], &q16(), 0.8).is_err());
    }

    #[test]
    fn one_person_one_vote_ignores_vote_counts() {
        let ballots = vec![
            Ballot::from_pairs("a", &[(0.0, 1.0)]),
            Ballot::from_pairs("b", &[(1.0, 9.0)]),
            Ballot::from_pairs("c", &[(2.0, 4.0)]),
        ];
        let r = one_person_one_vote(&ballots, 0, 3).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.histogram.weights, vec![1.0, 1.0, 1.0]);
        assert_eq!(r.count, 3);

        let one = one_person_one_vote(&[Ballot::from_pairs("a", &[(0.7, 1.0)])], 0, 5).unwrap();
        assert_eq!(one.mean, 0.7);

        let idle = vec![Ballot::from_pairs("a", &[(0.7, 1.0), (0.1, 0.0)])];
        assert!(matches!(
            one_person_one_vote(&idle, 1, 5),
            Err(Error::EmptyDistribution(1))
        ));
        assert!(one_person_one_vote(&ballots, 0, 0).is_err());
    }

    #[test]
    fn three_ballot_fixture() {
        let c = classify_ballots(&three_ballots(), &q16(), DEFAULT_TAU).unwrap();
        let lw = decompose_and_aggregate(&c, 0, MethodSpec::Q_LW, &q16()).unwrap();
        assert!((lw.mu_o_hat - 1.0).abs() < 1e-15);
        assert_eq!(lw.mu_m_hat, Some(0.5));
        assert_eq!((lw.a, lw.b, lw.w_eff), (2.0, 4.0, 3.0));
        assert!((lw.mu - 0.6875).abs() < 1e-12);
        assert!(!lw.fallback_non_weighted);

        let nw = decompose_and_aggregate(&c, 0, MethodSpec::Q_NW, &q16()).unwrap();
        assert!((nw.mu - 0.875).abs() < 1e-12);

        // masses: majority a(n-2m) = 2, mirror a·m = 2, weighted minority 12
        let d = &lw.distributions;
        assert!((d.majority.mass - 2.0).abs() < 1e-12);
        assert!((d.mirror.mass - 2.0).abs() < 1e-12);
        assert!((d.minority_weighted.mass - 12.0).abs() < 1e-12);
        assert!((d.minority_original.mass - 4.0).abs() < 1e-12);
        assert_eq!(d.original_1p1v.mass, 3.0);
        assert!((d.weighted_all.mean.unwrap() - lw.mu).abs() < 1e-12);
        assert!((d.mirror.mean.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn other_dimensions_see_no_minority() {
        let c = classify_ballots(&three_ballots(), &q16(), DEFAULT_TAU).unwrap();
        let r = decompose_and_aggregate(&c, 2, MethodSpec::Q_LW, &q16()).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.m_hat, 0);
        assert!(r.fallback_non_weighted);
        assert_eq!(r.mu, r.mu_o_hat);
        assert!(matches!(
            decompose_and_aggregate(&c, 4, MethodSpec::Q_LW, &q16()),
            Err(Error::DimensionOutOfRange { .. })
        ));
    }

    #[test]
    fn minority_votes_elsewhere_count_as_majority_there() {
        let rule = BudgetRule::quadratic(16.0).unwrap();
        let ballots = vec![
            Ballot::from_pairs("a", &[(1.0, 2.0), (2.0, 2.0), (1.0, 2.0), (1.0, 2.0)]),
            Ballot::from_pairs("b", &[(1.0, 2.0), (2.0, 2.0), (1.0, 2.0), (1.0, 2.0)]),
            // spends 15 of 16 points on dim 0 and 1 point on dim 1
            Ballot::from_pairs("c", &[(0.5, 15f64.sqrt()), (4.0, 1.0), (1.0, 0.0), (1.0, 0.0)]),
        ];
        let c = classify_ballots(&ballots, &rule, 0.9).unwrap();
        assert_eq!(c.minority.len(), 1);
        let r = decompose_and_aggregate(&c, 1, MethodSpec::Q_NW, &rule).unwrap();
        assert_eq!((r.n, r.m_hat), (3, 0));
        assert!((r.mu - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_majority_returns_majority_mean() {
        let ballots: Vec<Ballot> = (0..5)
            .map(|i| Ballot::new(format!("v{i}"), vec![Allocation::new(i as f64 * 0.3, 1.0); 2]))
            .collect();
        let rule = BudgetRule::linear(2.0).unwrap();
        let c = classify_ballots(&ballots, &rule, 0.8).unwrap();
        let r = decompose_and_aggregate(&c, 0, MethodSpec::L_NW, &rule).unwrap();
        assert_eq!(r.mu, r.mu_o_hat);
        assert!(!r.fallback_non_weighted);
        assert!(r.mu_m_hat.is_none());
    }

    #[test]
    fn too_many_concentrators() {
        let ballots = vec![
            Ballot::from_pairs("a", &[(1.0, 2.0); 4]),
            Ballot::from_pairs("b", &[(0.5, 4.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]),
            Ballot::from_pairs("c", &[(0.4, 4.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]),
        ];
        let c = classify_ballots(&ballots, &q16(), 0.8).unwrap();
        assert!(matches!(
            decompose_and_aggregate(&c, 0, MethodSpec::Q_NW, &q16()),
            Err(Error::MirrorUndefined { .. })
        ));
    }
}
