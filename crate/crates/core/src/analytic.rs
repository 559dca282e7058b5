//! Closed-form aggregate means, the minority-size cap, and curve sweeps.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::erf::erfc_approx;
use crate::error::{Error, Result};
use crate::model::{check_positive, MethodParams, MethodSpec, VotingRule, Weighting};

/// Lower clamp applied to the minority fraction in sweeps.
pub const MIN_MINORITY_FRACTION: f64 = 1e-12;

/// Aggregate mean from the three-component mixture: the majority remainder
/// at `mu_o` with mass `a(n - 2m)`, the mirror image at `2mu_o - mu_m` with
/// mass `a·m`, and the weighted minority at `mu_m` with mass `b·m·w_eff`.
///
/// Requires `2m <= n` so the majority remainder has non-negative mass.
pub fn weighted_mean(params: &MethodParams, n: f64, m: f64, mu_o: f64, mu_m: f64) -> Result<f64> {
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::validation("n", "voter count must be positive"));
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::validation("m", "minority count must be non-negative"));
    }
    if 2.0 * m > n {
        return Err(Error::MirrorUndefined { n, m });
    }
    check_positive("a", params.a)?;
    check_positive("b", params.b)?;
    if m == 0.0 {
        return Ok(mu_o);
    }
    let MethodParams { a, b, w_eff } = *params;
    let majority = a * (n - 2.0 * m);
    let mirror = a * m;
    let minority = b * m * w_eff;
    let numerator = majority * mu_o + mirror * (2.0 * mu_o - mu_m) + minority * mu_m;
    Ok(numerator / (majority + mirror + minority))
}

/// Reduced-form coefficient `c = ((b/a)·w_eff - 1)·(m/n)` for `method`.
///
/// Always zero at `k = 1`, where weighting is inert.
pub fn coefficient(method: MethodSpec, k: u64, q: f64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let kf = k as f64;
    match (method.voting(), method.weighting()) {
        (VotingRule::Quadratic, Weighting::NonWeighted) => (kf.sqrt() - 1.0) * q,
        (VotingRule::Quadratic, Weighting::SquareRootWeighted) => {
            q.sqrt() * (kf.sqrt() - q.sqrt())
        }
        (VotingRule::Quadratic, Weighting::LinearWeighted) => kf.sqrt() - q,
        (VotingRule::Linear, Weighting::LinearWeighted) => kf - q,
        (VotingRule::Linear, Weighting::NonWeighted) => (kf - 1.0) * q,
        (VotingRule::Linear, Weighting::SquareRootWeighted) => unreachable!(),
    }
}

/// `(1 + c·r) / (1 + c)`.
pub fn ratio_from_coefficient(c: f64, r: f64) -> f64 {
    (1.0 + c * r) / (1.0 + c)
}

/// Ratio `mu / mu_o` of the aggregate mean to the original mean for minority
/// fraction `q = m/n` and `r = mu_m / mu_o`.
pub fn mean_ratio(method: MethodSpec, k: u64, q: f64, r: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::validation("k", "at least one dimension is required"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::validation("m_over_n", format!("{q} outside (0, 1]")));
    }
    if !r.is_finite() {
        return Err(Error::validation("r", "must be finite"));
    }
    Ok(ratio_from_coefficient(coefficient(method, k, q), r))
}

/// Upper bound on the minority fraction whose mean sits at `r = mu_m/mu_o`
/// when the original distribution has relative spread `s = sigma_o/mu_o`:
/// twice the normal tail mass beyond `r`.
pub fn minority_cap(r: f64, s: f64) -> Result<f64> {
    check_positive("s", s)?;
    if !r.is_finite() {
        return Err(Error::validation("r", "must be finite"));
    }
    let x = (r - 1.0) / (std::f64::consts::SQRT_2 * s);
    // 1 + erf(x) for x < 0 and 1 - erf(x) for x >= 0 are both erfc(|x|)
    Ok(erfc_approx(x.abs()).clamp(0.0, 1.0))
}

/// Evenly spaced grid `lo..=hi`; written `lo:hi:step` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for RGrid {
    fn default() -> Self {
        RGrid {
            lo: 0.0,
            hi: 2.0,
            step: 0.01,
        }
    }
}

impl RGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let grid = RGrid { lo, hi, step };
        grid.intervals()?;
        Ok(grid)
    }

    fn intervals(&self) -> Result<usize> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::validation("r", "range needs lo < hi"));
        }
        check_positive("step", self.step)?;
        let n = ((self.hi - self.lo) / self.step).round();
        if n > 1e7 {
            return Err(Error::validation("step", "too many grid points"));
        }
        Ok((n as usize).max(1))
    }

    /// Grid points. The step is snapped so the range divides evenly and both
    /// endpoints are hit exactly.
    pub fn points(&self) -> Result<Vec<f64>> {
        let n = self.intervals()?;
        let span = self.hi - self.lo;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    self.hi
                } else {
                    self.lo + span * i as f64 / n as f64
                }
            })
            .collect())
    }
}

impl FromStr for RGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation("r", format!("bad number `{p}` in `{s}`")))
        };
        match parts.as_slice() {
            [lo, hi, step] => RGrid::new(parse(lo)?, parse(hi)?, parse(step)?),
            [lo, hi] => RGrid::new(parse(lo)?, parse(hi)?, RGrid::default().step),
            _ => Err(Error::validation("r", format!("expected lo:hi:step, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// `mu_m / mu_o`.
    pub r: f64,
    /// `mu / mu_o`.
    pub ratio: f64,
    /// Minority fraction the point was evaluated at.
    pub m_over_n_used: f64,
}

/// One line of the sweep: `mu/mu_o` against `mu_m/mu_o` for a fixed method,
/// dimension count and relative spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub method: MethodSpec,
    pub k: u64,
    /// `sigma_o / mu_o`.
    pub s: f64,
    pub points: Vec<CurvePoint>,
}

impl CurveSeries {
    pub fn ratio_at(&self, r: f64) -> Option<f64> {
        self.points.iter().find(|p| p.r == r).map(|p| p.ratio)
    }
}

/// Default dimension counts and spreads of the published sweep.
pub const DEFAULT_K_VALUES: [u64; 3] = [1, 3, 5];
pub const DEFAULT_S_VALUES: [f64; 3] = [0.2, 0.5, 0.8];

/// Evaluates every `(method, k, s)` series over `grid`, with the minority
/// fraction at each point set to its cap. Methods keep their given order;
/// `k` and `s` are sorted ascending.
pub fn curve_grid(
    methods: &[MethodSpec],
    k_values: &[u64],
    s_values: &[f64],
    grid: &RGrid,
) -> Result<Vec<CurveSeries>> {
    let rs = grid.points()?;
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut ss = s_values.to_vec();
    for &s in &ss {
        check_positive("s", s)?;
    }
    ss.sort_by(f64::total_cmp);
    ss.dedup();
    let mut seen = Vec::new();

    let mut out = Vec::with_capacity(methods.len() * ks.len() * ss.len());
    for &method in methods {
        if seen.contains(&method) {
            continue;
        }
        seen.push(method);
        for &k in &ks {
            for &s in &ss {
                let points = rs
                    .iter()
                    .map(|&r| {
                        let q = minority_cap(r, s)?.clamp(MIN_MINORITY_FRACTION, 1.0);
                        Ok(CurvePoint {
                            r,
                            ratio: mean_ratio(method, k, q, r)?,
                            m_over_n_used: q,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.push(CurveSeries {
                    method,
                    k,
                    s,
                    points,
                });
            }
        }
    }
    Ok(out)
}

/// Rounds to nine significant digits and prints the shortest decimal that
/// reads back as that value.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:?}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("valid float");
    format!("{rounded:?}")
}

pub const CURVE_CSV_HEADER: &str = "method,k,s,r,m_over_n,ratio";

/// Writes series as CSV with header `method,k,s,r,m_over_n,ratio`.
pub fn write_curves_csv<W: Write>(series: &[CurveSeries], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for cs in series {
        for p in &cs.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                cs.method,
                cs.k,
                format_sig9(cs.s),
                format_sig9(p.r),
                format_sig9(p.m_over_n_used),
                format_sig9(p.ratio)
            )?;
        }
    }
    Ok(())
}
