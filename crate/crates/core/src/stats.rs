//! Sample statistics shared by the capital and portfolio engines.
//!
//! Quantiles use linear interpolation between order statistics (the
//! "type 7" rule): for sorted samples `x[0..n]` and level `p`, with
//! `h = (n - 1) p`, the quantile is `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample set")]
    Empty,
    #[error("quantile level {0} outside [0, 1]")]
    Level(f64),
}

/// Type-7 quantile. Does not require sorted input; the slice is copied.
pub fn quantile(samples: &[f64], level: f64) -> Result<f64, StatsError> {
    let mut buf = samples.to_vec();
    quantile_in_place(&mut buf, level)
}

/// Type-7 quantile using selection; reorders `buf`.
pub fn quantile_in_place(buf: &mut [f64], level: f64) -> Result<f64, StatsError> {
    if buf.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(0.0..=1.0).contains(&level) || level.is_nan() {
        return Err(StatsError::Level(level));
    }
    let n = buf.len();
    let h = (n - 1) as f64 * level;
    let lo = (h.floor() as usize).min(n - 1);
    let frac = h - lo as f64;
    let (_, lo_val, upper) = buf.select_nth_unstable_by(lo, f64::total_cmp);
    let lo_val = *lo_val;
    if lo + 1 >= n || frac == 0.0 {
        return Ok(lo_val);
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(lo_val + frac * (hi_val - lo_val))
}

pub fn mean(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Unbiased sample variance; zero for a single sample.
pub fn variance(samples: &[f64]) -> Result<f64, StatsError> {
    let m = mean(samples)?;
    if samples.len() < 2 {
        return Ok(0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(ss / (samples.len() - 1) as f64)
}

pub fn std_dev(samples: &[f64]) -> Result<f64, StatsError> {
    variance(samples).map(f64::sqrt)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(StatsError::Empty);
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Average ranks (ties share the mean rank).
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = r;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    pearson(&ranks(xs), &ranks(ys))
}

/// A quantity tabulated on an ascending grid of participation shares,
/// read off by linear interpolation and held flat past either end.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShareSchedule {
    pub shares: Vec<f64>,
    pub values: Vec<f64>,
}

impl ShareSchedule {
    pub fn new(shares: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(shares.len(), values.len());
        debug_assert!(shares.windows(2).all(|w| w[0] < w[1]));
        ShareSchedule { shares, values }
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// Zero when empty.
    pub fn at(&self, share: f64) -> f64 {
        let (xs, ys) = (&self.shares, &self.values);
        match xs.len() {
            0 => 0.0,
            _ if share <= xs[0] => ys[0],
            n if share >= xs[n - 1] => ys[n - 1],
            _ => {
                let i = xs.partition_point(|x| *x <= share);
                let t = (share - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + t * (ys[i] - ys[i - 1])
            }
        }
    }
}
