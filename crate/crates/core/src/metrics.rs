//! Per-site confusion counts, sensitivity/specificity, and the comparison
//! table against published splice-site predictors.

use std::fmt::Write;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqio::ClassLabel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no prediction pairs to tally")]
    Empty,
    #[error("sensitivity undefined: TP + FN = 0")]
    SensitivityUndefined,
    #[error("specificity undefined: TN + FP = 0")]
    SpecificityUndefined,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedMetrics {
    pub actual_positives: u64,
    pub actual_negatives: u64,
    pub predicted_positives: u64,
    pub predicted_negatives: u64,
    pub sensitivity: Ratio<u64>,
    pub specificity: Ratio<u64>,
}

impl DerivedMetrics {
    pub fn sn(&self) -> f64 {
        ratio_f64(self.sensitivity)
    }

    pub fn sp(&self) -> f64 {
        ratio_f64(self.specificity)
    }
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Donor-set and acceptor-set counts. For each site type an instance is
/// positive iff its label equals that type.
pub fn tally(
    pairs: impl IntoIterator<Item = (ClassLabel, ClassLabel)>,
) -> Result<(ConfusionCounts, ConfusionCounts), MetricsError> {
    let mut donor = ConfusionCounts::default();
    let mut acceptor = ConfusionCounts::default();
    let mut any = false;
    for (predicted, actual) in pairs {
        any = true;
        donor.record(predicted == ClassLabel::Donor, actual == ClassLabel::Donor);
        acceptor.record(
            predicted == ClassLabel::Acceptor,
            actual == ClassLabel::Acceptor,
        );
    }
    if !any {
        return Err(MetricsError::Empty);
    }
    Ok((donor, acceptor))
}

pub fn derive(c: &ConfusionCounts) -> Result<DerivedMetrics, MetricsError> {
    let ap = c.tp + c.fn_;
    let an = c.tn + c.fp;
    if ap == 0 {
        return Err(MetricsError::SensitivityUndefined);
    }
    if an == 0 {
        return Err(MetricsError::SpecificityUndefined);
    }
    Ok(DerivedMetrics {
        actual_positives: ap,
        actual_negatives: an,
        predicted_positives: c.tp + c.fp,
        predicted_negatives: c.tn + c.fn_,
        sensitivity: Ratio::new(c.tp, ap),
        specificity: Ratio::new(c.tn, an),
    })
}

/// Overall three-class accuracy.
pub fn accuracy(pairs: &[(ClassLabel, ClassLabel)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().filter(|(p, a)| p == a).count() as f64 / pairs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    /// percent, printed verbatim
    pub sensitivity: String,
    pub specificity: String,
}

/// Published sensitivity/specificity (percent) of other splice-site tools
/// and of the original MACA-MCC classifier.
pub const REFERENCE_ROWS: [(&str, &str, &str); 5] = [
    ("NNsplice", "66.3", "67.4"),
    ("GENIO", "69.36", "72.2"),
    ("HSPL", "73.3", "76.5"),
    ("SpliceView", "82.3", "84.3"),
    ("MACA-MCC (published)", "88.6", "90.3"),
];

pub fn percent(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

/// The five reference rows followed by measured donor and acceptor rows.
pub fn comparison_rows(donor: &DerivedMetrics, acceptor: &DerivedMetrics) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = REFERENCE_ROWS
        .iter()
        .map(|(m, sn, sp)| ComparisonRow {
            method: m.to_string(),
            sensitivity: sn.to_string(),
            specificity: sp.to_string(),
        })
        .collect();
    for (name, d) in [
        ("MACA-CC donor (measured)", donor),
        ("MACA-CC acceptor (measured)", acceptor),
    ] {
        rows.push(ComparisonRow {
            method: name.to_string(),
            sensitivity: percent(d.sn()),
            specificity: percent(d.sp()),
        });
    }
    rows
}

pub fn comparison_report(donor: &DerivedMetrics, acceptor: &DerivedMetrics) -> String {
    let rows = comparison_rows(donor, acceptor);
    let width = rows
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(6)
        .max("Method".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>11}  {:>11}",
        "Method", "Sensitivity", "Specificity"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>11}  {:>11}",
            r.method, r.sensitivity, r.specificity
        );
    }
    out
}
