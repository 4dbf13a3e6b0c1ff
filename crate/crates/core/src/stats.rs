//! Streaming moments and binned statistics.

use serde::Serialize;

use crate::error::Error;

/// Count, sum, and sum of squares; enough for mean, sample variance, and
/// standard error, and mergeable across work units.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    /// Absorb another accumulator. Merge order affects the float result, so
    /// callers merge partials in a fixed order.
    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    /// Sample variance (n-1 denominator), clamped at zero against rounding.
    pub fn sample_var(&self) -> Option<f64> {
        (self.n > 1).then(|| {
            let n = self.n as f64;
            let mean = self.sum / n;
            ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0)
        })
    }

    /// Standard error of the mean: sample std-dev / sqrt(n).
    pub fn stderr(&self) -> Option<f64> {
        self.sample_var().map(|v| (v / self.n as f64).sqrt())
    }
}

/// One half-open bin `[lo, hi)` with the statistics of its values.
#[derive(Debug, Clone, Serialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub count: u64,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BinnedStats {
    pub bins: Vec<BinStat>,
    /// Samples whose key fell outside every bin.
    pub outside: u64,
}

/// Bin `(key, value)` samples into the half-open bins defined by `edges`.
/// Keys outside all bins are counted separately and excluded.
pub fn bin_statistics(samples: &[(f64, f64)], edges: &[f64]) -> Result<BinnedStats, Error> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadBinEdges);
    }
    let n_bins = edges.len() - 1;
    let mut acc = vec![Moments::default(); n_bins];
    let mut outside = 0u64;
    for &(key, value) in samples {
        match bin_index(key, edges) {
            Some(i) => acc[i].push(value),
            None => outside += 1,
        }
    }
    let bins = acc
        .iter()
        .enumerate()
        .map(|(i, m)| BinStat {
            lo: edges[i],
            hi: edges[i + 1],
            center: 0.5 * (edges[i] + edges[i + 1]),
            count: m.count(),
            mean: m.mean(),
            stderr: m.stderr(),
        })
        .collect();
    Ok(BinnedStats { bins, outside })
}

/// Index of the half-open bin containing `key`, or `None` when outside.
pub fn bin_index(key: f64, edges: &[f64]) -> Option<usize> {
    if !key.is_finite() || key < edges[0] || key >= edges[edges.len() - 1] {
        return None;
    }
    // first edge strictly greater than key, minus one
    let idx = edges.partition_point(|&e| e <= key);
    Some(idx - 1)
}

/// Pearson correlation of a point set. `None` when either coordinate is
/// degenerate (zero variance) or fewer than 2 points.
pub fn pearson(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Least-squares slope of y on x. `None` when x is degenerate.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}
