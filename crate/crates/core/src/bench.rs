//! Per-prediction latency measurement.

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::classifier::{ClassifierError, MacaCcTree};
use crate::seqio::Nucleotide;

/// Per-window prediction time reported for the original classifier, in ms.
pub const PUBLISHED_LATENCY_MS: f64 = 0.02;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    Repetitions,
    #[error("no sequences to time")]
    NoInstances,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// Time each classification (encoding included) individually, single-threaded.
pub fn bench(
    tree: &MacaCcTree,
    sequences: &[&[Nucleotide]],
    repetitions: usize,
) -> Result<LatencyStats, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::Repetitions);
    }
    if sequences.is_empty() {
        return Err(BenchError::NoInstances);
    }
    let mut classifier = tree.classifier();
    let mut samples = Vec::with_capacity(sequences.len() * repetitions);
    for _ in 0..repetitions {
        for s in sequences {
            let t0 = Instant::now();
            let p = classifier.classify(s)?;
            let dt = t0.elapsed();
            std::hint::black_box(p);
            samples.push(dt.as_secs_f64() * 1e3);
        }
    }
    samples.sort_by(f64::total_cmp);
    let count = samples.len();
    let mean_ms = samples.iter().sum::<f64>() / count as f64;
    let median_ms = if count % 2 == 1 {
        samples[count / 2]
    } else {
        (samples[count / 2 - 1] + samples[count / 2]) / 2.0
    };
    let p95_ms = samples[((0.95 * count as f64).ceil() as usize).clamp(1, count) - 1];
    Ok(LatencyStats {
        count,
        mean_ms,
        median_ms,
        p95_ms,
    })
}

/// `x` with `digits` significant digits, no exponent.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit (9.995 -> 10.00)
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded != 0.0 && rounded.abs().log10().floor() as i32 > magnitude && decimals > 0 {
        return format!("{:.*}", decimals - 1, x);
    }
    s
}

impl fmt::Display for LatencyStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "predictions\t{}", self.count)?;
        writeln!(f, "mean\t{} ms", format_sig(self.mean_ms, 3))?;
        writeln!(f, "median\t{} ms", format_sig(self.median_ms, 3))?;
        writeln!(f, "p95\t{} ms", format_sig(self.p95_ms, 3))?;
        writeln!(f, "published\t{PUBLISHED_LATENCY_MS} ms")
    }
}
