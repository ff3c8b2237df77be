//! Sliding-window genome scan with the two-stage tree.

use std::fmt;

use thiserror::Error;

use crate::classifier::{ClassifierError, MacaCcTree, Prediction};
use crate::par::{self, Schedule};
use crate::seqio::{reverse_complement, to_text, ClassLabel, GenomicSequence};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("sequence `{name}` has {len} bases, shorter than the {window}-base window")]
    TooShort {
        name: String,
        len: usize,
        window: usize,
    },
    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strand {
    Direct,
    Reverse,
}

impl Strand {
    pub fn heading(self) -> &'static str {
        match self {
            Strand::Direct => "Direct chain.",
            Strand::Reverse => "Reverse chain.",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strands {
    Direct,
    Reverse,
    #[default]
    Both,
}

impl Strands {
    fn list(self) -> &'static [Strand] {
        match self {
            Strands::Direct => &[Strand::Direct],
            Strands::Reverse => &[Strand::Reverse],
            Strands::Both => &[Strand::Direct, Strand::Reverse],
        }
    }
}

/// One reported window. Coordinates are 1-based and inclusive on the
/// forward strand; `sequence` is the window as read on its own strand.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub start: usize,
    pub end: usize,
    pub score: f64,
    pub sequence: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrandSection {
    pub strand: Strand,
    pub donors: Vec<ScanRow>,
    pub acceptors: Vec<ScanRow>,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub name: String,
    pub length: usize,
    pub threshold: f64,
    pub sections: Vec<StrandSection>,
}

impl ScanReport {
    pub fn section(&self, strand: Strand) -> Option<&StrandSection> {
        self.sections.iter().find(|s| s.strand == strand)
    }
}

/// Classify every window of one strand. Windows are returned in strand order.
pub fn classify_windows(
    tree: &MacaCcTree,
    bases: &[crate::seqio::Nucleotide],
    schedule: Schedule,
) -> Result<Vec<Prediction>, ScanError> {
    let w = tree.window();
    let cells = tree
        .encoder()
        .encode(bases)
        .map_err(ClassifierError::from)?;
    let cells = cells.cells();
    let count = bases.len() + 1 - w;
    Ok(par::map_range_with(
        schedule,
        count,
        || tree.classifier(),
        |c, j| c.classify_config(&cells[j..j + w]),
    ))
}

pub fn scan(
    genome: &GenomicSequence,
    tree: &MacaCcTree,
    threshold: f64,
    strands: Strands,
    schedule: Schedule,
) -> Result<ScanReport, ScanError> {
    let w = tree.window();
    let n = genome.bases.len();
    if n < w {
        return Err(ScanError::TooShort {
            name: genome.name.clone(),
            len: n,
            window: w,
        });
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ScanError::Threshold(threshold));
    }
    let mut sections = Vec::new();
    for &strand in strands.list() {
        let bases = match strand {
            Strand::Direct => genome.bases.clone(),
            Strand::Reverse => reverse_complement(&genome.bases),
        };
        let preds = classify_windows(tree, &bases, schedule)?;
        let mut section = StrandSection {
            strand,
            donors: Vec::new(),
            acceptors: Vec::new(),
            windows: preds.len(),
        };
        for (j, p) in preds.iter().enumerate() {
            if p.score < threshold || p.label == ClassLabel::Neither {
                continue;
            }
            let start = match strand {
                Strand::Direct => j + 1,
                Strand::Reverse => n - j - w + 1,
            };
            let row = ScanRow {
                start,
                end: start + w - 1,
                score: p.score,
                sequence: to_text(&bases[j..j + w]),
            };
            match p.label {
                ClassLabel::Donor => section.donors.push(row),
                _ => section.acceptors.push(row),
            }
        }
        section.donors.sort_by_key(|r| r.start);
        section.acceptors.sort_by_key(|r| r.start);
        sections.push(section);
    }
    Ok(ScanReport {
        name: genome.name.clone(),
        length: n,
        threshold,
        sections,
    })
}

fn write_rows(f: &mut fmt::Formatter<'_>, title: &str, rows: &[ScanRow]) -> fmt::Result {
    writeln!(f, "{title}")?;
    writeln!(f, "Start\tEnd\tScore\tSequence")?;
    for r in rows {
        writeln!(f, "{}\t{}\t{:.4}\t{}", r.start, r.end, r.score, r.sequence)?;
    }
    Ok(())
}

impl fmt::Display for ScanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            ">{} length {} threshold {:.4}",
            self.name, self.length, self.threshold
        )?;
        for s in &self.sections {
            writeln!(f, "{}", s.strand.heading())?;
            write_rows(f, "Donor site predictions", &s.donors)?;
            write_rows(f, "Acceptor site predictions", &s.acceptors)?;
        }
        Ok(())
    }
}
