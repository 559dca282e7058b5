use serde::{Deserialize, Serialize};

/// Equal-width weighted histogram.
///
/// `mass` and `mean` are accumulated from the raw points rather than from
/// bin centres, so they are exact up to floating-point summation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub weights: Vec<f64>,
    pub mass: f64,
    /// Weighted mean of the points; `None` when the mass is zero.
    pub mean: Option<f64>,
}

impl Histogram {
    /// Bins `(position, weight)` pairs over `[lo, hi]` using `bins` equal-width
    /// bins. Points outside the range are clamped into the end bins.
    pub fn from_points(points: &[(f64, f64)], lo: f64, hi: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();

        let mut weights = vec![0.0; bins];
        let mut mass = 0.0;
        let mut moment = 0.0;
        for &(x, w) in points {
            let idx = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            weights[idx] += w;
            mass += w;
            moment += w * x;
        }
        let mean = (mass > 0.0).then(|| moment / mass);
        Histogram {
            edges,
            weights,
            mass,
            mean,
        }
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }
}

/// Smallest and largest position in `xs`, or `None` when empty.
pub(crate) fn range_of(xs: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    xs.into_iter().fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    })
}
