//! Dyadic-block summaries of nonnegative series.
//!
//! Term `m` of a slice is attributed to index `n = m + 1`, and block `k`
//! collects `n ∈ [2^k, 2^{k+1})`. Only complete blocks are reported.
//! Every verdict derived from these summaries is a heuristic: finite data
//! cannot decide convergence.

use serde::{Deserialize, Serialize};

/// Number of trailing blocks used by the fits.
pub const FIT_BLOCKS: usize = 6;

/// Sums over complete dyadic blocks.
pub fn block_sums(terms: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let lo = (1usize << k) - 1;
        let hi = (1usize << (k + 1)) - 1;
        if hi > terms.len() {
            break;
        }
        out.push(terms[lo..hi].iter().sum());
        k += 1;
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn tail(blocks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let start = blocks.len().saturating_sub(FIT_BLOCKS);
    let ks = (start..blocks.len()).map(|k| k as f64).collect();
    let ls = blocks[start..].iter().map(|b| b.max(1e-300).log2()).collect();
    (ks, ls)
}

/// Fitted per-block growth factor `2^{slope}`, or `None` with fewer than 3 blocks.
pub fn geometric_ratio(blocks: &[f64]) -> Option<f64> {
    if blocks.len() < 3 {
        return None;
    }
    if blocks[blocks.len().saturating_sub(FIT_BLOCKS)..].iter().all(|&b| b <= 1e-300) {
        return Some(0.0);
    }
    let (ks, ls) = tail(blocks);
    ls_slope(&ks, &ls).map(|s| s.exp2())
}

/// Fitted exponent `p` in `B_k ≈ C·k^{−p}` over the trailing blocks.
pub fn power_exponent(blocks: &[f64]) -> Option<f64> {
    if blocks.len() < 4 {
        return None;
    }
    let start = blocks.len().saturating_sub(FIT_BLOCKS).max(1);
    let ks: Vec<f64> = (start..blocks.len()).map(|k| (k as f64).ln()).collect();
    let ls: Vec<f64> = blocks[start..].iter().map(|b| b.max(1e-300).ln()).collect();
    ls_slope(&ks, &ls).map(|s| -s)
}

/// Three-valued convergence verdict for a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Summary of a nonnegative series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub terms: usize,
    pub partial_sum: f64,
    /// Partial sums at `n = 2^{k+1} − 1`, one per complete block.
    pub dyadic_partial_sums: Vec<f64>,
    pub block_sums: Vec<f64>,
    pub geometric_ratio: Option<f64>,
    pub power_exponent: Option<f64>,
    pub verdict: SeriesVerdict,
}

/// Convergence test by block decay: geometric (`ratio < 0.9`) or
/// polynomial in the block index (`p > 1.5`) means convergent,
/// `p < 0.5` (blocks not decaying like a summable sequence) divergent.
pub fn summarize(terms: &[f64]) -> SeriesReport {
    let blocks = block_sums(terms);
    let mut acc = 0.0;
    let dyadic: Vec<f64> = blocks
        .iter()
        .map(|b| {
            acc += b;
            acc
        })
        .collect();
    let ratio = geometric_ratio(&blocks);
    let p = power_exponent(&blocks);
    let verdict = match (ratio, p) {
        (Some(r), _) if r < 0.9 => SeriesVerdict::Converges,
        (_, Some(p)) if p > 1.5 => SeriesVerdict::Converges,
        (_, Some(p)) if p < 0.5 => SeriesVerdict::Diverges,
        _ => SeriesVerdict::Inconclusive,
    };
    SeriesReport {
        terms: terms.len(),
        partial_sum: terms.iter().sum(),
        dyadic_partial_sums: dyadic,
        block_sums: blocks,
        geometric_ratio: ratio,
        power_exponent: p,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_dyadic_ranges() {
        let t: Vec<f64> = (1..=10).map(|n| n as f64).collect();
        // blocks: {1}, {2,3}, {4..7}; 8..10 incomplete
        assert_eq!(block_sums(&t), vec![1.0, 5.0, 22.0]);
    }

    #[test]
    fn verdicts_on_classical_series() {
        let harmonic: Vec<f64> = (1..1 << 20).map(|n| 1.0 / n as f64).collect();
        assert_eq!(summarize(&harmonic).verdict, SeriesVerdict::Diverges);
        let squares: Vec<f64> = (1..1 << 20).map(|n| 1.0 / (n as f64).powi(2)).collect();
        assert_eq!(summarize(&squares).verdict, SeriesVerdict::Converges);
        let log2: Vec<f64> = (1..1 << 20)
            .map(|n| {
                let l = (n as f64 + 1.0).ln();
                1.0 / (n as f64 * l * l)
            })
            .collect();
        assert_eq!(summarize(&log2).verdict, SeriesVerdict::Converges);
        let log1: Vec<f64> = (1..1 << 20)
            .map(|n| 1.0 / (n as f64 * (n as f64 + 1.0).ln()))
            .collect();
        assert_ne!(summarize(&log1).verdict, SeriesVerdict::Converges);
    }
}
