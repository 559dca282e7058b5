//! Monte Carlo populations drawn from the normal majority/minority model,
//! used to check the closed forms against the ballot pipeline.
//!
//! Each trial owns a `ChaCha8Rng` seeded with `seed + trial` and draws
//! normals with `rand_distr::Normal`, so a given seed reproduces the same
//! ballots on every platform.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{coefficient, mean_ratio, weighted_mean};
use crate::ballot::{classify_ballots, decompose_and_aggregate, BudgetRule};
use crate::error::{Error, Result};
use crate::model::{method_params, Allocation, Ballot, MethodParams, MethodSpec, PopulationParams};

/// Threshold used when re-extracting the minority from ideal populations.
pub const SIMULATION_TAU: f64 = 0.99;
/// Agreement required between the pipeline mean and the closed form at the
/// sampled component means.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;
/// Fraction of trials whose mean must land within three standard errors.
pub const COVERAGE_REQUIRED: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: PopulationParams,
    pub method: MethodSpec,
    pub seed: u64,
    pub trials: usize,
}

impl SimConfig {
    pub fn new(params: PopulationParams, method: MethodSpec, seed: u64, trials: usize) -> Result<Self> {
        let config = SimConfig {
            params,
            method,
            seed,
            trials,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::validation("trials", "at least one trial is required"));
        }
        let PopulationParams { n, m, k, .. } = self.params;
        if 2 * m > n {
            return Err(Error::MirrorUndefined {
                n: n as f64,
                m: m as f64,
            });
        }
        if m > 0 && k < 2 {
            return Err(Error::validation(
                "k",
                "a minority can only be recognized with at least two dimensions",
            ));
        }
        Ok(())
    }

    fn rule(&self) -> BudgetRule {
        BudgetRule {
            voting: self.method.voting(),
            p: self.params.p,
        }
    }
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::validation("sigma", e.to_string()))
}

fn population_with_seed(config: &SimConfig, seed: u64) -> Result<Vec<Ballot>> {
    let PopulationParams {
        n,
        m,
        k,
        p,
        mu_o,
        sigma_o,
        mu_m,
        sigma_m,
    } = config.params;
    let voting = config.method.voting();
    let a = voting.votes_for(p / k as f64);
    let b = voting.votes_for(p);
    let original = normal(mu_o, sigma_o)?;
    let concentrated = normal(mu_m, sigma_m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len();

    let mut ballots = Vec::with_capacity(n as usize);
    for i in 0..(n - m) {
        let allocations = (0..k)
            .map(|_| Allocation::new(original.sample(&mut rng), a))
            .collect();
        ballots.push(Ballot::new(format!("v{i:0width$}"), allocations));
    }
    for i in (n - m)..n {
        let mut allocations = vec![Allocation::new(mu_o, 0.0); k as usize];
        allocations[0] = Allocation::new(concentrated.sample(&mut rng), b);
        ballots.push(Ballot::new(format!("v{i:0width$}"), allocations));
    }
    Ok(ballots)
}

/// Draws one population: `n - m` voters spreading `a` votes over every
/// dimension at positions from `N(mu_o, sigma_o²)`, then `m` voters putting
/// `b` votes on dimension 0 at positions from `N(mu_m, sigma_m²)`.
pub fn sample_population(config: &SimConfig) -> Result<Vec<Ballot>> {
    config.validate()?;
    population_with_seed(config, config.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// Mean produced by classification + decomposition of the sampled ballots.
    pub empirical_mu: f64,
    /// Closed form evaluated at the sampled component means.
    pub formula_mu: f64,
    pub mu_o_hat: f64,
    pub mu_m_hat: Option<f64>,
    pub standard_error: f64,
    /// `empirical_mu - analytic_mu`.
    pub deviation: f64,
    pub consistent: bool,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    /// Prediction from the population parameters alone.
    pub analytic_mu: f64,
    pub trials: Vec<TrialOutcome>,
    pub max_abs_deviation: f64,
    /// Mean of the per-trial standard errors.
    pub standard_error: f64,
    pub consistency_failures: usize,
    pub within_3se: usize,
    pub required_within_3se: usize,
    pub passed: bool,
}

fn sample_sd(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn analytic_mu(config: &SimConfig) -> Result<f64> {
    let pp = &config.params;
    if pp.m == 0 {
        return Ok(pp.mu_o);
    }
    let r = pp.mean_ratio_input()?;
    Ok(pp.mu_o * mean_ratio(config.method, pp.k, pp.minority_fraction(), r)?)
}

fn run_trial(config: &SimConfig, trial: usize, analytic: f64) -> Result<TrialOutcome> {
    let pp = &config.params;
    let seed = config.seed.wrapping_add(trial as u64);
    let ballots = population_with_seed(config, seed)?;
    let rule = config.rule();
    let classified = classify_ballots(&ballots, &rule, SIMULATION_TAU)?;
    let found = classified.minority.len();
    if found != pp.m as usize || classified.minority_dimension.iter().any(|&d| d != 0) {
        return Err(Error::ClassificationMismatch {
            trial,
            expected: pp.m as usize,
            found,
        });
    }
    let result = decompose_and_aggregate(&classified, 0, config.method, &rule)?;

    let (n, m) = (pp.n as f64, pp.m as f64);
    let ideal = if pp.m == 0 {
        method_params(MethodSpec::Q_NW, pp.p, pp.k, n, m)?
    } else {
        method_params(config.method, pp.p, pp.k, n, m)?
    };
    let formula_mu = weighted_mean(
        &ideal,
        n,
        m,
        result.mu_o_hat,
        result.mu_m_hat.unwrap_or(result.mu_o_hat),
    )?;

    let majority: Vec<f64> = classified
        .majority_on(0)
        .map(|b| b.allocations[0].position)
        .collect();
    let sd_o = sample_sd(&majority, result.mu_o_hat);
    let standard_error = match result.mu_m_hat {
        None => sd_o / (majority.len() as f64).sqrt(),
        Some(mu_m_hat) => {
            let minority: Vec<f64> = classified
                .minority_on(0)
                .map(|b| b.allocations[0].position)
                .collect();
            let sd_m = sample_sd(&minority, mu_m_hat);
            let c = coefficient(config.method, pp.k, pp.minority_fraction());
            let wo = 1.0 / (1.0 + c);
            let wm = c / (1.0 + c);
            ((wo * sd_o).powi(2) / majority.len() as f64 + (wm * sd_m).powi(2) / minority.len() as f64)
                .sqrt()
        }
    };

    let deviation = result.mu - analytic;
    Ok(TrialOutcome {
        trial,
        seed,
        empirical_mu: result.mu,
        formula_mu,
        mu_o_hat: result.mu_o_hat,
        mu_m_hat: result.mu_m_hat,
        standard_error,
        deviation,
        consistent: (result.mu - formula_mu).abs()
            <= CONSISTENCY_TOLERANCE * formula_mu.abs().max(1.0),
        within_3se: deviation.abs() <= 3.0 * standard_error,
    })
}

/// Runs every trial (in parallel) and compares the pipeline against the
/// closed forms.
///
/// A trial whose ideal ballots are not all classified correctly aborts the
/// run with [`Error::ClassificationMismatch`].
pub fn run_trials(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let analytic = analytic_mu(config)?;
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t, analytic))
        .collect::<Result<Vec<_>>>()?;

    let max_abs_deviation = trials.iter().map(|t| t.deviation.abs()).fold(0.0, f64::max);
    let standard_error = trials.iter().map(|t| t.standard_error).sum::<f64>() / trials.len() as f64;
    let consistency_failures = trials.iter().filter(|t| !t.consistent).count();
    let within_3se = trials.iter().filter(|t| t.within_3se).count();
    let required_within_3se = (COVERAGE_REQUIRED * config.trials as f64).ceil() as usize;
    Ok(SimReport {
        config: *config,
        analytic_mu: analytic,
        max_abs_deviation,
        standard_error,
        consistency_failures,
        within_3se,
        required_within_3se,
        passed: consistency_failures == 0 && within_3se >= required_within_3se,
        trials,
    })
}

impl SimReport {
    /// Plain-text summary with one row per trial.
    pub fn to_table(&self) -> String {
        let pp = &self.config.params;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "method {}  n {}  m {}  k {}  p {}  mu_o {}  sigma_o {}  mu_m {}  sigma_m {}  seed {}",
            self.config.method, pp.n, pp.m, pp.k, pp.p, pp.mu_o, pp.sigma_o, pp.mu_m, pp.sigma_m,
            self.config.seed
        );
        let _ = writeln!(out, "analytic mu {:.9}", self.analytic_mu);
        let _ = writeln!(
            out,
            "{:>5}  {:>14}  {:>14}  {:>12}  {:>12}  {:>10}  {:>6}",
            "trial", "empirical_mu", "formula_mu", "deviation", "std_error", "consistent", "<3se"
        );
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{:>5}  {:>14.9}  {:>14.9}  {:>12.3e}  {:>12.3e}  {:>10}  {:>6}",
                t.trial, t.empirical_mu, t.formula_mu, t.deviation, t.standard_error, t.consistent,
                t.within_3se
            );
        }
        let _ = writeln!(
            out,
            "max |deviation| {:.3e}  mean std error {:.3e}  within 3se {}/{} (need {})  consistency failures {}",
            self.max_abs_deviation,
            self.standard_error,
            self.within_3se,
            self.trials.len(),
            self.required_within_3se,
            self.consistency_failures
        );
        let _ = writeln!(out, "{}", if self.passed { "PASS" } else { "FAIL" });
        out
    }

    /// Trial rows as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,seed,empirical_mu,formula_mu,analytic_mu,deviation,standard_error,consistent,within_3se\n",
        );
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                t.trial,
                t.seed,
                t.empirical_mu,
                t.formula_mu,
                self.analytic_mu,
                t.deviation,
                t.standard_error,
                t.consistent,
                t.within_3se
            );
        }
        out
    }
}

/// Ideal parameters for a scenario: `(a, b)` from the voting rule and the
/// weighting multiplier for the configured minority.
pub fn ideal_params(config: &SimConfig) -> Result<MethodParams> {
    let pp = &config.params;
    method_params(config.method, pp.p, pp.k, pp.n as f64, pp.m as f64)
}
