//! Domain types shared by every layer: the five aggregation methods, the
//! analytic population scenario, ballots, and aggregation results.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::Histogram;

/// How points are converted into votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotingRule {
    /// `v` votes cost `v²` points.
    Quadratic,
    /// `v` votes cost `v` points.
    Linear,
}

impl VotingRule {
    /// Points spent to cast `votes` on one dimension.
    pub fn cost(self, votes: f64) -> f64 {
        match self {
            VotingRule::Quadratic => votes * votes,
            VotingRule::Linear => votes,
        }
    }

    /// Votes bought with `points` on one dimension.
    pub fn votes_for(self, points: f64) -> f64 {
        match self {
            VotingRule::Quadratic => points.sqrt(),
            VotingRule::Linear => points,
        }
    }
}

impl FromStr for VotingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quadratic" | "q" => Ok(VotingRule::Quadratic),
            "linear" | "l" => Ok(VotingRule::Linear),
            other => Err(Error::validation("voting", format!("unknown voting rule `{other}`"))),
        }
    }
}

/// Multiplier scheme applied to the minority's votes during aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    NonWeighted,
    SquareRootWeighted,
    LinearWeighted,
}

/// One of the five supported voting × weighting combinations.
///
/// Linear voting with square-root weighting is not a supported method and
/// cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    voting: VotingRule,
    weighting: Weighting,
}

impl MethodSpec {
    /// Quadratic voting, no weighting.
    pub const Q_NW: MethodSpec = MethodSpec::raw(VotingRule::Quadratic, Weighting::NonWeighted);
    /// Quadratic voting, square-root weighting.
    pub const Q_SW: MethodSpec =
        MethodSpec::raw(VotingRule::Quadratic, Weighting::SquareRootWeighted);
    /// Quadratic voting, linear weighting.
    pub const Q_LW: MethodSpec = MethodSpec::raw(VotingRule::Quadratic, Weighting::LinearWeighted);
    /// Linear voting, linear weighting.
    pub const L_LW: MethodSpec = MethodSpec::raw(VotingRule::Linear, Weighting::LinearWeighted);
    /// Linear voting, no weighting.
    pub const L_NW: MethodSpec = MethodSpec::raw(VotingRule::Linear, Weighting::NonWeighted);

    /// All five methods in presentation order.
    pub const ALL: [MethodSpec; 5] = [
        MethodSpec::Q_NW,
        MethodSpec::Q_SW,
        MethodSpec::Q_LW,
        MethodSpec::L_LW,
        MethodSpec::L_NW,
    ];

    const fn raw(voting: VotingRule, weighting: Weighting) -> Self {
        MethodSpec { voting, weighting }
    }

    pub fn new(voting: VotingRule, weighting: Weighting) -> Result<Self> {
        match (voting, weighting) {
            (VotingRule::Linear, Weighting::SquareRootWeighted) => Err(Error::UnsupportedMethod(
                "linear voting with square-root weighting".into(),
            )),
            _ => Ok(MethodSpec::raw(voting, weighting)),
        }
    }

    pub fn voting(&self) -> VotingRule {
        self.voting
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn is_weighted(&self) -> bool {
        self.weighting != Weighting::NonWeighted
    }

    /// Canonical lower-case code, e.g. `q-lw`.
    pub fn code(&self) -> &'static str {
        match (self.voting, self.weighting) {
            (VotingRule::Quadratic, Weighting::NonWeighted) => "q-nw",
            (VotingRule::Quadratic, Weighting::SquareRootWeighted) => "q-sw",
            (VotingRule::Quadratic, Weighting::LinearWeighted) => "q-lw",
            (VotingRule::Linear, Weighting::LinearWeighted) => "l-lw",
            (VotingRule::Linear, Weighting::NonWeighted) => "l-nw",
            (VotingRule::Linear, Weighting::SquareRootWeighted) => unreachable!(),
        }
    }

    /// Parses a comma-separated list of method codes; `all` expands to every method.
    pub fn parse_list(s: &str) -> Result<Vec<MethodSpec>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(MethodSpec::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::validation("methods", "empty method list"));
        }
        Ok(out)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        MethodSpec::ALL
            .into_iter()
            .find(|m| m.code() == lower || m.code().replace('-', "_") == lower)
            .ok_or_else(|| Error::UnsupportedMethod(s.to_string()))
    }
}

impl Serialize for MethodSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for MethodSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Analytic population scenario.
///
/// `sigma_m` defaults to `sigma_o` when omitted from JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPopulationParams")]
pub struct PopulationParams {
    pub n: u64,
    pub m: u64,
    pub k: u64,
    pub p: f64,
    pub mu_o: f64,
    pub sigma_o: f64,
    pub mu_m: f64,
    pub sigma_m: f64,
}

#[derive(Deserialize)]
struct RawPopulationParams {
    n: u64,
    m: u64,
    k: u64,
    p: f64,
    mu_o: f64,
    sigma_o: f64,
    mu_m: f64,
    sigma_m: Option<f64>,
}

impl TryFrom<RawPopulationParams> for PopulationParams {
    type Error = Error;

    fn try_from(raw: RawPopulationParams) -> Result<Self> {
        let params = PopulationParams {
            n: raw.n,
            m: raw.m,
            k: raw.k,
            p: raw.p,
            mu_o: raw.mu_o,
            sigma_o: raw.sigma_o,
            mu_m: raw.mu_m,
            sigma_m: raw.sigma_m.unwrap_or(raw.sigma_o),
        };
        params.validate()?;
        Ok(params)
    }
}

impl PopulationParams {
    /// Builds a scenario with `sigma_m = sigma_o`.
    pub fn new(n: u64, m: u64, k: u64, p: f64, mu_o: f64, sigma_o: f64, mu_m: f64) -> Result<Self> {
        let params = PopulationParams {
            n,
            m,
            k,
            p,
            mu_o,
            sigma_o,
            mu_m,
            sigma_m: sigma_o,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_sigma_m(mut self, sigma_m: f64) -> Result<Self> {
        self.sigma_m = sigma_m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("n", "voter count must be positive"));
        }
        if self.m > self.n {
            return Err(Error::validation("m", "minority count exceeds n"));
        }
        if self.k == 0 {
            return Err(Error::validation("k", "at least one dimension is required"));
        }
        check_positive("p", self.p)?;
        check_positive("sigma_o", self.sigma_o)?;
        check_positive("sigma_m", self.sigma_m)?;
        if !self.mu_o.is_finite() {
            return Err(Error::validation("mu_o", "must be finite"));
        }
        if !self.mu_m.is_finite() {
            return Err(Error::validation("mu_m", "must be finite"));
        }
        Ok(())
    }

    /// Minority fraction `m / n`.
    pub fn minority_fraction(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// `mu_m / mu_o`; fails when `mu_o` is zero.
    pub fn mean_ratio_input(&self) -> Result<f64> {
        if self.mu_o == 0.0 {
            return Err(Error::ZeroOriginalMean);
        }
        Ok(self.mu_m / self.mu_o)
    }
}

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be a positive finite number, got {value}")))
    }
}

/// Per-method vote counts and minority multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    /// Votes each majority voter casts on one dimension when spreading evenly.
    pub a: f64,
    /// Votes a minority voter casts when concentrating on one dimension.
    pub b: f64,
    /// Effective multiplier applied to the minority's votes (always ≥ 1).
    pub w_eff: f64,
}

impl MethodParams {
    pub fn vote_ratio(&self) -> f64 {
        self.b / self.a
    }
}

/// Voting and weighting parameters for `method` with budget `p` over `k`
/// dimensions and observed counts `n`, `m`.
///
/// The weighting is expressed as a multiplier on the minority side:
/// `sqrt(n/m)` for square-root weighting and `n/m` for linear weighting. At
/// `k = 1` the minority cannot be told apart from the majority, so the
/// multiplier is always 1.
pub fn method_params(method: MethodSpec, p: f64, k: u64, n: f64, m: f64) -> Result<MethodParams> {
    if k == 0 {
        return Err(Error::validation("k", "at least one dimension is required"));
    }
    check_positive("p", p)?;
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::validation("n", "voter count must be positive"));
    }
    if !(m.is_finite() && m >= 0.0 && m <= n) {
        return Err(Error::validation("m", format!("minority count {m} outside [0, {n}]")));
    }

    let kf = k as f64;
    let (a, b) = match method.voting() {
        VotingRule::Quadratic => ((p / kf).sqrt(), p.sqrt()),
        VotingRule::Linear => (p / kf, p),
    };
    let w_eff = if k == 1 {
        1.0
    } else {
        match method.weighting() {
            Weighting::NonWeighted => 1.0,
            _ if m == 0.0 => return Err(Error::NoMinority),
            Weighting::SquareRootWeighted => (n / m).sqrt(),
            Weighting::LinearWeighted => n / m,
        }
    };
    Ok(MethodParams { a, b, w_eff })
}

/// One dimension of a ballot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Cardinal coordinate the voter supports on this dimension.
    pub position: f64,
    pub votes: f64,
}

impl Allocation {
    pub fn new(position: f64, votes: f64) -> Self {
        Allocation { position, votes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter_id: String,
    pub allocations: Vec<Allocation>,
}

impl Ballot {
    pub fn new(voter_id: impl Into<String>, allocations: Vec<Allocation>) -> Self {
        Ballot {
            voter_id: voter_id.into(),
            allocations,
        }
    }

    /// Builds a ballot from `(position, votes)` pairs.
    pub fn from_pairs(voter_id: impl Into<String>, pairs: &[(f64, f64)]) -> Self {
        Ballot::new(
            voter_id,
            pairs.iter().map(|&(x, v)| Allocation::new(x, v)).collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.allocations.len()
    }

    /// True when the voter cast a positive number of votes on `dim`.
    pub fn is_active_on(&self, dim: usize) -> bool {
        self.allocations.get(dim).is_some_and(|a| a.votes > 0.0)
    }
}

/// The component distributions of one dimension's aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distributions {
    /// Weighted aggregate of all members: majority + mirror + weighted minority.
    pub weighted_all: Histogram,
    /// Every active voter with weight 1.
    pub original_1p1v: Histogram,
    /// Majority remainder after setting aside the mirror slots.
    pub majority: Histogram,
    /// Mirror image of the minority about the majority mean.
    pub mirror: Histogram,
    pub minority_original: Histogram,
    pub minority_weighted: Histogram,
}

/// Aggregate of one dimension under one method. Never carries voter ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub dimension: usize,
    pub method: MethodSpec,
    /// Weighted aggregate mean.
    pub mu: f64,
    /// Estimated original (majority) mean.
    pub mu_o_hat: f64,
    /// Estimated minority mean; absent when no minority was detected.
    pub mu_m_hat: Option<f64>,
    pub m_hat: usize,
    pub n: usize,
    /// Observed mean majority votes on the dimension.
    pub a: f64,
    /// Observed mean minority votes on the dimension (equals `a` with no minority).
    pub b: f64,
    pub w_eff: f64,
    /// Empirical standard deviation of the weighted mixture.
    pub sigma_hat: f64,
    /// Set when a weighted method found no minority and fell back to no weighting.
    pub fallback_non_weighted: bool,
    pub distributions: Distributions,
}
