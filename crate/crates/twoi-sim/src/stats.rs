//! Histogram accumulation and the comparison metrics used by every scenario:
//! least-squares curve scaling, Pearson correlation, total-variation distance,
//! fringe visibility and fringe counting, and a KS statistic for uniformity
//! checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("reference curve is identically zero")]
    DegenerateCurve,
    #[error("histogram holds no in-range samples")]
    EmptyHistogram,
    #[error("bin count mismatch: histogram has {hist}, curve has {curve}")]
    BinMismatch { hist: usize, curve: usize },
}

/// Fixed-width binned counts over a transverse coordinate.
///
/// Merging is commutative and associative over the integer counts, so any
/// grouping of partial histograms produces identical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    /// `hi > lo` and `bins >= 1` are required.
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo, "histogram domain must be non-empty");
        assert!(bins >= 1, "histogram needs at least one bin");
        Histogram { lo, hi, counts: vec![0; bins], underflow: 0, overflow: 0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.bins()).map(|i| self.bin_center(i)).collect()
    }

    /// Samples accumulated in range (excludes under/overflow).
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// All samples ever added, including under/overflow.
    pub fn samples_added(&self) -> u64 {
        self.total() + self.underflow + self.overflow
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            // hi itself lands in the last bin only via the x == hi edge below
            if x == self.hi {
                *self.counts.last_mut().unwrap() += 1;
            } else {
                self.overflow += 1;
            }
        } else {
            let i = ((x - self.lo) / self.bin_width()) as usize;
            let i = i.min(self.counts.len() - 1);
            self.counts[i] += 1;
        }
    }

    /// Merge another histogram with identical binning into this one.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.lo, other.lo, "histogram domains differ");
        assert_eq!(self.hi, other.hi, "histogram domains differ");
        assert_eq!(self.bins(), other.bins(), "histogram bin counts differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    /// Center of mass of the in-range counts.
    pub fn center_of_mass(&self) -> Result<f64, StatsError> {
        let total = self.total();
        if total == 0 {
            return Err(StatsError::EmptyHistogram);
        }
        let s: f64 = (0..self.bins()).map(|i| self.bin_center(i) * self.counts[i] as f64).sum();
        Ok(s / total as f64)
    }
}

/// Least-squares scale factor for a reference curve against histogram counts:
/// the unique minimizer of sum_i (h_i - s I_i)^2.
pub fn scale_to_match(hist: &Histogram, curve: &[f64]) -> Result<(f64, Vec<f64>), StatsError> {
    if hist.bins() != curve.len() {
        return Err(StatsError::BinMismatch { hist: hist.bins(), curve: curve.len() });
    }
    let ss: f64 = curve.iter().map(|i| i * i).sum();
    if ss <= 0.0 {
        return Err(StatsError::DegenerateCurve);
    }
    let sh: f64 = hist.counts().iter().zip(curve).map(|(&h, &i)| h as f64 * i).sum();
    let s = sh / ss;
    Ok((s, curve.iter().map(|i| i * s).collect()))
}

/// Pearson correlation between bin counts and a per-bin curve.
pub fn pearson(hist: &Histogram, curve: &[f64]) -> Result<f64, StatsError> {
    if hist.bins() != curve.len() {
        return Err(StatsError::BinMismatch { hist: hist.bins(), curve: curve.len() });
    }
    if hist.total() == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let n = curve.len() as f64;
    let hm: f64 = hist.counts().iter().map(|&h| h as f64).sum::<f64>() / n;
    let cm: f64 = curve.iter().sum::<f64>() / n;
    let mut shc = 0.0;
    let mut shh = 0.0;
    let mut scc = 0.0;
    for (&h, &c) in hist.counts().iter().zip(curve) {
        let dh = h as f64 - hm;
        let dc = c - cm;
        shc += dh * dc;
        shh += dh * dh;
        scc += dc * dc;
    }
    if shh == 0.0 || scc == 0.0 {
        return Err(StatsError::DegenerateCurve);
    }
    Ok(shc / (shh * scc).sqrt())
}

/// Total-variation distance in [0, 1] between the normalized histogram and a
/// normalized per-bin density.
pub fn total_variation(hist: &Histogram, density: &[f64]) -> Result<f64, StatsError> {
    if hist.bins() != density.len() {
        return Err(StatsError::BinMismatch { hist: hist.bins(), curve: density.len() });
    }
    let ht = hist.total();
    if ht == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let dt: f64 = density.iter().sum();
    if dt <= 0.0 {
        return Err(StatsError::DegenerateCurve);
    }
    let sum: f64 = hist
        .counts()
        .iter()
        .zip(density)
        .map(|(&h, &d)| (h as f64 / ht as f64 - d / dt).abs())
        .sum();
    Ok(0.5 * sum)
}

/// 3-bin moving average used before extremum extraction; ends use the
/// available neighbors.
fn smooth3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Fringe visibility (max - min)/(max + min) of smoothed bin counts within a
/// window of the coordinate. `window = None` takes the central 50% of the
/// domain.
pub fn visibility(hist: &Histogram, window: Option<(f64, f64)>) -> Result<f64, StatsError> {
    if hist.total() == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let (wlo, whi) = window.unwrap_or_else(|| {
        let span = hist.hi() - hist.lo();
        (hist.lo() + 0.25 * span, hist.hi() - 0.25 * span)
    });
    let values: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
    let smoothed = smooth3(&values);
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for i in 0..hist.bins() {
        let c = hist.bin_center(i);
        if c >= wlo && c <= whi {
            max = max.max(smoothed[i]);
            min = min.min(smoothed[i]);
        }
    }
    if !max.is_finite() || !min.is_finite() {
        return Err(StatsError::EmptyHistogram);
    }
    if max + min == 0.0 {
        return Ok(0.0);
    }
    Ok((max - min) / (max + min))
}

/// Count local maxima of the smoothed values whose bin centers fall inside
/// `window` and whose height is at least `rel_threshold` of the window
/// maximum. A maximum must strictly dominate both 2-bin neighborhoods.
pub fn fringe_count(
    values: &[f64],
    centers: &[f64],
    window: (f64, f64),
    rel_threshold: f64,
) -> usize {
    assert_eq!(values.len(), centers.len());
    let smoothed = smooth3(values);
    let in_window: Vec<usize> =
        (0..centers.len()).filter(|&i| centers[i] >= window.0 && centers[i] <= window.1).collect();
    let peak = in_window.iter().map(|&i| smoothed[i]).fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return 0;
    }
    let floor = peak * rel_threshold;
    let n = smoothed.len();
    let mut count = 0;
    for &i in &in_window {
        if smoothed[i] < floor {
            continue;
        }
        let lo = i.saturating_sub(2);
        let hi = (i + 3).min(n);
        let is_max = (lo..hi).all(|j| j == i || smoothed[j] < smoothed[i]);
        if is_max {
            count += 1;
        }
    }
    count
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against the uniform
/// distribution on [lo, hi].
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    assert!(!samples.is_empty());
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        let d_plus = (i as f64 + 1.0) / n - f;
        let d_minus = f - i as f64 / n;
        d = d.max(d_plus).max(d_minus);
    }
    d
}
