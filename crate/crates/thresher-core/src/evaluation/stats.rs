//! Corpus statistics: retention after cleaning, chunk-length histograms,
//! and similarity-score distributions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("domain {domain} has zero original chunks")]
    ZeroOriginal { domain: String },
}

/// One retention row. The percentage is kept in integer basis points
/// (hundredths of a percent) so rounding is exact and reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetentionRow {
    pub domain: String,
    pub original: u64,
    pub retained: u64,
    /// 100 · retained / original in hundredths of a percent, half-up.
    pub percent_bp: u64,
}

impl RetentionRow {
    pub fn percent(&self) -> f64 {
        self.percent_bp as f64 / 100.0
    }

    /// Two-decimal display, e.g. 366 → "3.66".
    pub fn percent_display(&self) -> String {
        format!("{}.{:02}", self.percent_bp / 100, self.percent_bp % 100)
    }
}

fn percent_bp(retained: u64, original: u64) -> u64 {
    // Half-up rounding of 10000·retained/original in exact integer
    // arithmetic: floor((2·10000·retained + original) / (2·original)).
    let num = 20_000u128 * retained as u128 + original as u128;
    (num / (2 * original as u128)) as u64
}

/// Per-domain retention rows plus a trailing "Total" row aggregating the
/// raw sums (not the row percentages).
pub fn retention_stats(rows: &[(String, u64, u64)]) -> Result<Vec<RetentionRow>, StatsError> {
    let mut out = Vec::with_capacity(rows.len() + 1);
    let mut total_original = 0u64;
    let mut total_retained = 0u64;
    for (domain, original, retained) in rows {
        if *original == 0 {
            return Err(StatsError::ZeroOriginal { domain: domain.clone() });
        }
        total_original += original;
        total_retained += retained;
        out.push(RetentionRow {
            domain: domain.clone(),
            original: *original,
            retained: *retained,
            percent_bp: percent_bp(*retained, *original),
        });
    }
    if total_original > 0 {
        out.push(RetentionRow {
            domain: "Total".into(),
            original: total_original,
            retained: total_retained,
            percent_bp: percent_bp(total_retained, total_original),
        });
    }
    Ok(out)
}

/// Default length bin edges: [0,100), [100,200), …, [900,1000), [1000,∞).
pub const DEFAULT_LENGTH_EDGES: [u64; 11] = [0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];

/// Token-length histogram. Bin `i` covers `[edges[i], edges[i+1])`; the
/// last bin is open-ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub edges: Vec<u64>,
    pub counts: Vec<u64>,
    pub total: u64,
    /// Fraction of chunks under 100 tokens, regardless of the edges used.
    pub sub_100_fraction: f64,
}

pub fn length_histogram(token_counts: &[usize], edges: Option<&[u64]>) -> LengthHistogram {
    let edges: Vec<u64> = edges.unwrap_or(&DEFAULT_LENGTH_EDGES).to_vec();
    assert!(!edges.is_empty(), "at least one bin edge");
    assert_eq!(edges[0], 0, "first edge must be 0");
    assert!(edges.windows(2).all(|w| w[0] < w[1]), "edges must be strictly increasing");

    let mut counts = vec![0u64; edges.len()];
    let mut sub_100 = 0u64;
    for &tokens in token_counts {
        let t = tokens as u64;
        if t < 100 {
            sub_100 += 1;
        }
        // partition_point = number of edges ≤ t; bin = that − 1.
        let bin = edges.partition_point(|e| *e <= t) - 1;
        counts[bin] += 1;
    }
    let total = token_counts.len() as u64;
    LengthHistogram {
        edges,
        counts,
        total,
        sub_100_fraction: if total == 0 { 0.0 } else { sub_100 as f64 / total as f64 },
    }
}

/// Histogram of min-max-normalized similarity scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub total: u64,
    pub raw_min: f64,
    pub raw_max: f64,
    /// All raw scores equal: normalization was skipped and raw scores
    /// were clamped to [0,1] instead.
    pub degenerate: bool,
}

/// Bin the pooled query–chunk scores of one retriever run. Scores are
/// min-max normalized over the whole run (so shapes are comparable across
/// retrievers with different score scales), then binned over [0,1] with
/// 1.0 landing in the last bin.
pub fn score_distribution(scores: &[f64], bin_width: f64) -> ScoreHistogram {
    assert!(bin_width > 0.0 && bin_width <= 1.0, "bin width must be in (0, 1]");
    let bins = (1.0 / bin_width).ceil() as usize;
    let mut counts = vec![0u64; bins];
    if scores.is_empty() {
        return ScoreHistogram {
            bin_width,
            counts,
            total: 0,
            raw_min: 0.0,
            raw_max: 0.0,
            degenerate: false,
        };
    }
    let raw_min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = raw_max == raw_min;
    for &s in scores {
        let norm = if degenerate { s.clamp(0.0, 1.0) } else { (s - raw_min) / (raw_max - raw_min) };
        let bin = ((norm / bin_width) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    ScoreHistogram { bin_width, counts, total: scores.len() as u64, raw_min, raw_max, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_retention_rows_reproduce_exactly() {
        let rows = vec![
            ("Biology".to_string(), 57_359u64, 2_102u64),
            ("Earth Science".to_string(), 121_249, 4_321),
            ("Economics".to_string(), 50_220, 1_634),
            ("Psychology".to_string(), 52_835, 2_285),
            ("Robotics".to_string(), 61_961, 2_385),
            ("Stack Overflow".to_string(), 107_081, 3_894),
            ("Sustainable Living".to_string(), 60_792, 1_566),
        ];
        let table = retention_stats(&rows).unwrap();
        let display: Vec<&str> =
            ["3.66", "3.56", "3.25", "4.32", "3.85", "3.64", "2.58", "3.56"].to_vec();
        assert_eq!(table.len(), 8);
        for (row, want) in table.iter().zip(display) {
            assert_eq!(row.percent_display(), want, "{}", row.domain);
        }
        let total = &table[7];
        assert_eq!(total.domain, "Total");
        assert_eq!(total.original, 511_497);
        assert_eq!(total.retained, 18_187);
    }

    #[test]
    fn full_deletion_is_zero_percent() {
        let table = retention_stats(&[("d".into(), 100, 0)]).unwrap();
        assert_eq!(table[0].percent_display(), "0.00");
    }

    #[test]
    fn zero_original_is_an_error() {
        let err = retention_stats(&[("d".into(), 0, 5)]).unwrap_err();
        assert_eq!(err, StatsError::ZeroOriginal { domain: "d".into() });
    }

    #[test]
    fn rounding_is_half_up() {
        // 10000·1/16 = 625.0 exactly; 10000·1/3 = 3333.33→3333;
        // 10000·1/8000 = 1.25 → 1; 10000·3/8000 = 3.75 → 4;
        // 10000·1/8 = 1250; half cases: 10000·1/32000 = 0.3125→0;
        // exact half: 10000·1/20000 = 0.5 → rounds up to 1.
        assert_eq!(percent_bp(1, 16), 625);
        assert_eq!(percent_bp(1, 3), 3333);
        assert_eq!(percent_bp(1, 8000), 1);
        assert_eq!(percent_bp(3, 8000), 4);
        assert_eq!(percent_bp(1, 20000), 1);
    }

    #[test]
    fn length_histogram_bins_directly() {
        let hist = length_histogram(&[50, 150, 850], None);
        assert_eq!(hist.counts[0], 1);
        assert_eq!(hist.counts[1], 1);
        assert_eq!(hist.counts[8], 1);
        assert_eq!(hist.counts.iter().sum::<u64>(), 3);
        assert!((hist.sub_100_fraction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_store_histogram_is_all_zero() {
        let hist = length_histogram(&[], None);
        assert!(hist.counts.iter().all(|c| *c == 0));
        assert_eq!(hist.total, 0);
        assert_eq!(hist.sub_100_fraction, 0.0);
    }

    #[test]
    fn over_1000_tokens_land_in_open_bin() {
        let hist = length_histogram(&[1000, 5000], None);
        assert_eq!(*hist.counts.last().unwrap(), 2);
    }

    #[test]
    fn score_histogram_puts_one_in_last_bin() {
        // Single score: degenerate run, raw value clamped.
        let hist = score_distribution(&[1.0], 0.1);
        assert!(hist.degenerate);
        assert_eq!(hist.counts[9], 1);

        let zeros = score_distribution(&[0.0, 0.0, 0.0], 0.1);
        assert!(zeros.degenerate);
        assert_eq!(zeros.counts[0], 3);
    }

    #[test]
    fn score_histogram_normalizes_over_run() {
        // min 2, max 6: normalized to 0, 0.5, 1.
        let hist = score_distribution(&[2.0, 4.0, 6.0], 0.5);
        assert!(!hist.degenerate);
        assert_eq!(hist.counts, vec![1, 2]);
        assert_eq!(hist.raw_min, 2.0);
        assert_eq!(hist.raw_max, 6.0);
    }

    proptest! {
        /// Independent derivation: bp = q + (2r ≥ orig) where
        /// q, r = divmod(10000·retained, original).
        #[test]
        fn percent_bp_agrees_with_divmod_oracle(retained in 0u64..1_000_000, original in 1u64..1_000_000) {
            let n = 10_000u128 * retained as u128;
            let q = (n / original as u128) as u64;
            let r = n % original as u128;
            let want = q + u64::from(2 * r >= original as u128);
            prop_assert_eq!(percent_bp(retained, original), want);
        }

        #[test]
        fn length_histogram_recount_oracle(
            lengths in proptest::collection::vec(0usize..3000, 0..200),
        ) {
            let hist = length_histogram(&lengths, None);
            prop_assert_eq!(hist.counts.iter().sum::<u64>(), lengths.len() as u64);
            prop_assert_eq!(hist.total, lengths.len() as u64);
            // Recount each bin straight from the definition.
            for (i, &count) in hist.counts.iter().enumerate() {
                let lo = hist.edges[i];
                let hi = hist.edges.get(i + 1).copied().unwrap_or(u64::MAX);
                let want = lengths.iter()
                    .filter(|&&t| (t as u64) >= lo && ((t as u64) < hi || hi == u64::MAX))
                    .count() as u64;
                prop_assert_eq!(count, want, "bin {}", i);
            }
            let sub = lengths.iter().filter(|&&t| t < 100).count();
            if !lengths.is_empty() {
                prop_assert!((hist.sub_100_fraction - sub as f64 / lengths.len() as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn score_histogram_counts_sum(
            scores in proptest::collection::vec(-100.0f64..100.0, 0..200),
            width in prop_oneof![Just(0.1), Just(0.25), Just(0.5)],
        ) {
            let hist = score_distribution(&scores, width);
            prop_assert_eq!(hist.counts.iter().sum::<u64>(), scores.len() as u64);
        }
    }
}
