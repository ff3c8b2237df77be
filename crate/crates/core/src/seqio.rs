//! Sequence input: the UCI splice-junction record format, FASTA, and the
//! fuzzy encoding of nucleotide strings into CA configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fca::FuzzyConfiguration;

/// Window length of every record in the splice-junction dataset.
pub const WINDOW: usize = 60;

#[derive(Debug, Error)]
pub enum SeqIoError {
    #[error("line {line}: expected `CLASS,IDENTIFIER,SEQUENCE`")]
    MalformedRecord { line: usize },
    #[error("line {line}: unknown class token `{token}`")]
    UnknownClass { line: usize, token: String },
    #[error("line {line}: sequence has length {len}, expected {WINDOW}")]
    BadLength { line: usize, len: usize },
    #[error("line {line}: unknown nucleotide code `{symbol}`")]
    UnknownSymbol { line: usize, symbol: char },
    #[error("line {line}: sequence data before any `>` header")]
    MissingHeader { line: usize },
    #[error("line {line}: empty header name")]
    EmptyName { line: usize },
    #[error("record `{name}` has no sequence data")]
    EmptySequence { name: String },
    #[error("test fraction {0} outside [0, 1)")]
    BadFraction(f64),
    #[error("encoder needs at least 4 levels, got {0}")]
    TooFewLevels(usize),
    #[error("symbol `{0}` has no code in this encoder")]
    Unencodable(char),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One position of a nucleotide string.
///
/// The parsers accept exactly `A C G T D N S R`. `Y` and `H` only arise as
/// reverse complements of `R` and `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nucleotide {
    A,
    C,
    G,
    T,
    /// A, G or T
    D,
    /// any base
    N,
    /// C or G
    S,
    /// A or G
    R,
    /// C or T
    Y,
    /// A, C or T
    H,
}

impl Nucleotide {
    pub const ALL: [Nucleotide; 10] = [
        Nucleotide::A,
        Nucleotide::C,
        Nucleotide::G,
        Nucleotide::T,
        Nucleotide::D,
        Nucleotide::N,
        Nucleotide::S,
        Nucleotide::R,
        Nucleotide::Y,
        Nucleotide::H,
    ];

    /// Parse one of the eight codes accepted in input files (case-insensitive).
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c.to_ascii_uppercase() {
            'A' => Nucleotide::A,
            'C' => Nucleotide::C,
            'G' => Nucleotide::G,
            'T' => Nucleotide::T,
            'D' => Nucleotide::D,
            'N' => Nucleotide::N,
            'S' => Nucleotide::S,
            'R' => Nucleotide::R,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
            Nucleotide::T => 'T',
            Nucleotide::D => 'D',
            Nucleotide::N => 'N',
            Nucleotide::S => 'S',
            Nucleotide::R => 'R',
            Nucleotide::Y => 'Y',
            Nucleotide::H => 'H',
        }
    }

    /// Concrete bases this code stands for, as indices into `A C G T`.
    pub fn bases(self) -> &'static [usize] {
        match self {
            Nucleotide::A => &[0],
            Nucleotide::C => &[1],
            Nucleotide::G => &[2],
            Nucleotide::T => &[3],
            Nucleotide::D => &[0, 2, 3],
            Nucleotide::N => &[0, 1, 2, 3],
            Nucleotide::S => &[1, 2],
            Nucleotide::R => &[0, 2],
            Nucleotide::Y => &[1, 3],
            Nucleotide::H => &[0, 1, 3],
        }
    }

    /// Base-set complement (A<->T, C<->G).
    pub fn complement(self) -> Self {
        match self {
            Nucleotide::A => Nucleotide::T,
            Nucleotide::C => Nucleotide::G,
            Nucleotide::G => Nucleotide::C,
            Nucleotide::T => Nucleotide::A,
            Nucleotide::D => Nucleotide::H,
            Nucleotide::H => Nucleotide::D,
            Nucleotide::N => Nucleotide::N,
            Nucleotide::S => Nucleotide::S,
            Nucleotide::R => Nucleotide::Y,
            Nucleotide::Y => Nucleotide::R,
        }
    }
}

impl fmt::Display for Nucleotide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

pub fn to_text(seq: &[Nucleotide]) -> String {
    seq.iter().map(|n| n.as_char()).collect()
}

/// Parse a bare nucleotide string (whitespace ignored).
pub fn parse_sequence(text: &str) -> Result<Vec<Nucleotide>, SeqIoError> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| Nucleotide::from_char(c).ok_or(SeqIoError::UnknownSymbol { line: 1, symbol: c }))
        .collect()
}

pub fn reverse_complement(seq: &[Nucleotide]) -> Vec<Nucleotide> {
    seq.iter().rev().map(|n| n.complement()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Donor,
    Acceptor,
    Neither,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Donor, ClassLabel::Acceptor, ClassLabel::Neither];

    /// Dataset class token: `EI`, `IE` or `N`.
    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "EI" => Some(ClassLabel::Donor),
            "IE" => Some(ClassLabel::Acceptor),
            "N" => Some(ClassLabel::Neither),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ClassLabel::Donor => "EI",
            ClassLabel::Acceptor => "IE",
            ClassLabel::Neither => "N",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassLabel::Donor => "Donor",
            ClassLabel::Acceptor => "Acceptor",
            ClassLabel::Neither => "Neither",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInstance {
    pub label: ClassLabel,
    pub id: String,
    pub sequence: Vec<Nucleotide>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenomicSequence {
    pub name: String,
    pub bases: Vec<Nucleotide>,
}

/// Read `CLASS,IDENTIFIER,SEQUENCE` records, one per line. Blank lines are
/// skipped; whitespace inside fields is not significant.
pub fn parse_splice_records<R: BufRead>(reader: R) -> Result<Vec<LabeledInstance>, SeqIoError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, ',');
        let (Some(class), Some(id), Some(seq)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(SeqIoError::MalformedRecord { line: line_no });
        };
        let class = class.trim();
        let label = ClassLabel::from_token(class).ok_or_else(|| SeqIoError::UnknownClass {
            line: line_no,
            token: class.to_string(),
        })?;
        let sequence = seq
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Nucleotide::from_char(c).ok_or(SeqIoError::UnknownSymbol {
                    line: line_no,
                    symbol: c,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if sequence.len() != WINDOW {
            return Err(SeqIoError::BadLength {
                line: line_no,
                len: sequence.len(),
            });
        }
        out.push(LabeledInstance {
            label,
            id: id.trim().to_string(),
            sequence,
        });
    }
    Ok(out)
}

/// Inverse of [`parse_splice_records`].
pub fn write_splice_records(records: &[LabeledInstance]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(r.label.token());
        s.push(',');
        s.push_str(&r.id);
        s.push(',');
        s.push_str(&to_text(&r.sequence));
        s.push('\n');
    }
    s
}

pub fn parse_fasta<R: BufRead>(reader: R) -> Result<Vec<GenomicSequence>, SeqIoError> {
    let mut out: Vec<GenomicSequence> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some(prev) = out.last() {
                if prev.bases.is_empty() {
                    return Err(SeqIoError::EmptySequence {
                        name: prev.name.clone(),
                    });
                }
            }
            let name = header.split_whitespace().next().unwrap_or("").to_string();
            if name.is_empty() {
                return Err(SeqIoError::EmptyName { line: line_no });
            }
            out.push(GenomicSequence {
                name,
                bases: Vec::new(),
            });
            continue;
        }
        let Some(current) = out.last_mut() else {
            return Err(SeqIoError::MissingHeader { line: line_no });
        };
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            let n = Nucleotide::from_char(c).ok_or(SeqIoError::UnknownSymbol {
                line: line_no,
                symbol: c,
            })?;
            current.bases.push(n);
        }
    }
    if let Some(last) = out.last() {
        if last.bases.is_empty() {
            return Err(SeqIoError::EmptySequence {
                name: last.name.clone(),
            });
        }
    }
    Ok(out)
}

/// Maps nucleotide codes onto the fuzzy state grid `j / (n - 1)`.
///
/// Bases take the first four grid levels in alphabetical order; ambiguity
/// codes take the mean of their constituent bases and may fall between
/// grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyEncoder {
    levels: usize,
    symbol_map: BTreeMap<Nucleotide, f64>,
}

impl Default for FuzzyEncoder {
    fn default() -> Self {
        Self::new(4).expect("four levels is valid")
    }
}

impl FuzzyEncoder {
    pub fn new(levels: usize) -> Result<Self, SeqIoError> {
        if levels < 4 {
            return Err(SeqIoError::TooFewLevels(levels));
        }
        let step = 1.0 / (levels - 1) as f64;
        let base = [0.0, step, 2.0 * step, 3.0 * step];
        let symbol_map = Nucleotide::ALL
            .iter()
            .map(|&n| {
                let members = n.bases();
                let code = members.iter().map(|&b| base[b]).sum::<f64>() / members.len() as f64;
                (n, code)
            })
            .collect();
        Ok(Self { levels, symbol_map })
    }

    /// Rebuild an encoder from an explicit symbol table (model loading).
    pub fn from_parts(levels: usize, symbol_map: BTreeMap<Nucleotide, f64>) -> Self {
        Self { levels, symbol_map }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn symbol_map(&self) -> &BTreeMap<Nucleotide, f64> {
        &self.symbol_map
    }

    pub fn code(&self, n: Nucleotide) -> Option<f64> {
        self.symbol_map.get(&n).copied()
    }

    pub fn encode(&self, seq: &[Nucleotide]) -> Result<FuzzyConfiguration, SeqIoError> {
        let mut cells = Vec::with_capacity(seq.len());
        for &n in seq {
            cells.push(self.code(n).ok_or(SeqIoError::Unencodable(n.as_char()))?);
        }
        Ok(FuzzyConfiguration::new_unchecked(cells))
    }
}

/// Per-class shuffled split. Each class contributes `round(fraction * count)`
/// instances to the test side; both sides keep input order.
pub fn stratified_split<T: Clone>(
    items: &[T],
    label_of: impl Fn(&T) -> ClassLabel,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), SeqIoError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(SeqIoError::BadFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; items.len()];
    for class in ClassLabel::ALL {
        let mut idx: Vec<usize> = (0..items.len())
            .filter(|&i| label_of(&items[i]) == class)
            .collect();
        idx.shuffle(&mut rng);
        let take = (test_fraction * idx.len() as f64).round() as usize;
        for &i in &idx[..take] {
            is_test[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (item, t) in items.iter().zip(is_test) {
        if t {
            test.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    Ok((train, test))
}
