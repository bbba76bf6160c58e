//! Exponent statistics: histogram, entropy, and the rank-vs-value fit.
//!
//! Model-weight exponents concentrate in a narrow band and their frequency
//! ranking falls almost linearly with the exponent value. These statistics
//! drive the parameter tuner and the `analyze` subcommand.

use crate::error::{Error, Result};

/// Exponent frequency distribution over `2^E` bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentHistogram {
    counts: Vec<u64>,
    total: u64,
    min_exp: u16,
    max_exp: u16,
    exp_bits: u32,
}

impl ExponentHistogram {
    /// Count a non-empty exponent sequence into `2^exp_bits` bins.
    pub fn build(exponents: &[u16], exp_bits: u32) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::EmptyInput);
        }
        let bins = 1usize << exp_bits;
        let mut counts = vec![0u64; bins];
        for &e in exponents {
            if (e as usize) >= bins {
                return Err(Error::Range {
                    value: e,
                    bits: exp_bits,
                });
            }
            counts[e as usize] += 1;
        }
        Self::from_counts(counts, exp_bits)
    }

    /// Wrap precomputed bin counts (e.g. merged across blocks).
    pub fn from_counts(counts: Vec<u64>, exp_bits: u32) -> Result<Self> {
        if counts.len() != 1usize << exp_bits {
            return Err(Error::Shape("histogram needs 2^E bins"));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput);
        }
        let min_exp = counts.iter().position(|&c| c > 0).unwrap() as u16;
        let max_exp = counts.iter().rposition(|&c| c > 0).unwrap() as u16;
        Ok(ExponentHistogram {
            counts,
            total,
            min_exp,
            max_exp,
            exp_bits,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Smallest exponent present.
    pub fn min_exp(&self) -> u16 {
        self.min_exp
    }

    /// Largest exponent present.
    pub fn max_exp(&self) -> u16 {
        self.max_exp
    }

    pub fn exp_bits(&self) -> u32 {
        self.exp_bits
    }

    pub fn probability(&self, exponent: u16) -> f64 {
        self.counts[exponent as usize] as f64 / self.total as f64
    }

    /// Occupied exponents with their probabilities, ascending by value.
    pub fn occupied(&self) -> impl Iterator<Item = (u16, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(x, &c)| (x as u16, c as f64 / self.total as f64))
    }

    pub fn distinct_values(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Shannon entropy of the histogram in bits.
pub fn entropy(hist: &ExponentHistogram) -> f64 {
    hist.occupied()
        .map(|(_, p)| -p * p.log2())
        .sum()
}

/// Least-squares line of frequency rank against exponent value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit rank (1 = most frequent, ties broken by smaller exponent value)
/// against exponent value over the occupied bins.
pub fn rank_fit(hist: &ExponentHistogram) -> Result<RankFit> {
    let mut occupied: Vec<(u16, u64)> = hist
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(x, &c)| (x as u16, c))
        .collect();
    if occupied.len() < 2 {
        return Err(Error::DegenerateInput);
    }
    occupied.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let n = occupied.len() as f64;
    let points: Vec<(f64, f64)> = occupied
        .iter()
        .enumerate()
        .map(|(rank0, &(x, _))| (x as f64, (rank0 + 1) as f64))
        .collect();

    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RankFit {
        slope,
        intercept,
        r_squared,
    })
}
