//! Basin-labelled binary classifiers and the two-stage donor/acceptor tree.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fca::{
    AttractorId, AttractorKind, BatchEvolver, CaRule, EvolutionParams, Evolver, FcaError, LANES,
};
use crate::par::{self, Schedule};
use crate::seqio::{ClassLabel, FuzzyEncoder, LabeledInstance, Nucleotide, SeqIoError};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("chromosome has no fitted basin map")]
    Unfitted,
    #[error("configuration {index} has length {got}, rule expects {expected}")]
    Length {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("sequence has length {got}, classifier window is {expected}")]
    SequenceLength { got: usize, expected: usize },
    #[error("donor stage covers {donor} cells, acceptor stage {acceptor}")]
    StageMismatch { donor: usize, acceptor: usize },
    #[error("{0} labels for {1} configurations")]
    LabelCount(usize, usize),
    #[error(transparent)]
    Fca(#[from] FcaError),
    #[error(transparent)]
    SeqIo(#[from] SeqIoError),
}

/// Encoded configurations with a boolean dichotomy label each, stored as one
/// flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    len: usize,
    cells: Vec<f64>,
    positive: Vec<bool>,
}

impl TrainingSet {
    pub fn new(
        len: usize,
        rows: &[Vec<f64>],
        positive: Vec<bool>,
    ) -> Result<Self, ClassifierError> {
        if rows.len() != positive.len() {
            return Err(ClassifierError::LabelCount(positive.len(), rows.len()));
        }
        let mut cells = Vec::with_capacity(rows.len() * len);
        for (index, r) in rows.iter().enumerate() {
            if r.len() != len {
                return Err(ClassifierError::Length {
                    index,
                    got: r.len(),
                    expected: len,
                });
            }
            cells.extend_from_slice(r);
        }
        Ok(Self {
            len,
            cells,
            positive,
        })
    }

    /// Encode labelled sequences; `dichotomy` decides which labels count as positive.
    pub fn from_instances<'a>(
        instances: impl IntoIterator<Item = &'a LabeledInstance>,
        encoder: &FuzzyEncoder,
        dichotomy: impl Fn(ClassLabel) -> bool,
    ) -> Result<Self, ClassifierError> {
        let mut len = None;
        let mut cells = Vec::new();
        let mut positive = Vec::new();
        for (index, inst) in instances.into_iter().enumerate() {
            let expected = *len.get_or_insert(inst.sequence.len());
            if inst.sequence.len() != expected {
                return Err(ClassifierError::Length {
                    index,
                    got: inst.sequence.len(),
                    expected,
                });
            }
            cells.extend_from_slice(encoder.encode(&inst.sequence)?.cells());
            positive.push(dichotomy(inst.label));
        }
        Ok(Self {
            len: len.unwrap_or(0),
            cells,
            positive,
        })
    }

    pub fn cell_len(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    pub fn config(&self, i: usize) -> &[f64] {
        &self.cells[i * self.len..(i + 1) * self.len]
    }

    pub fn labels(&self) -> &[bool] {
        &self.positive
    }

    pub fn positives(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinVote {
    pub positive: bool,
    pub confidence: f64,
}

impl BasinVote {
    /// Majority vote; ties go negative with confidence 0.5.
    pub fn from_counts(positives: u32, negatives: u32) -> Self {
        let total = (positives + negatives) as f64;
        if positives > negatives {
            BasinVote {
                positive: true,
                confidence: positives as f64 / total,
            }
        } else {
            BasinVote {
                positive: false,
                confidence: negatives as f64 / total,
            }
        }
    }
}

pub type BasinMap = BTreeMap<AttractorId, BasinVote>;

/// How a chromosome's fitness is scored from its basin tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessMode {
    /// Fraction of instances whose basin's majority vote matches their label.
    #[default]
    Resubstitution,
    /// As above, but each instance is scored by its basin's vote with the
    /// instance itself removed. Singleton basins score as unseen (negative).
    LeaveOneOut,
}

/// Positive/negative hit counts per reached basin.
#[derive(Debug, Clone, Default)]
pub struct BasinTally {
    counts: HashMap<Box<[u8]>, [u32; 2]>,
    pub instances: usize,
    pub truncated: usize,
}

impl BasinTally {
    pub fn basins(&self) -> usize {
        self.counts.len()
    }

    /// Training fitness under `mode`.
    pub fn fitness(&self, mode: FitnessMode) -> f64 {
        let correct: u64 = self
            .counts
            .values()
            .map(|&[p, n]| match mode {
                FitnessMode::Resubstitution => p.max(n) as u64,
                FitnessMode::LeaveOneOut => {
                    let pos_ok = if p >= 1 && p - 1 > n { p } else { 0 };
                    let neg_ok = if p < n { n } else { 0 };
                    (pos_ok + neg_ok) as u64
                }
            })
            .sum();
        correct as f64 / self.instances as f64
    }

    pub fn basin_map(&self) -> BasinMap {
        self.counts
            .iter()
            .map(|(k, &[p, n])| {
                (
                    AttractorId::from_levels(k.clone()),
                    BasinVote::from_counts(p, n),
                )
            })
            .collect()
    }

    /// Confusion counts of the resubstituted majority vote: (tp, fp, tn, fn).
    pub fn confusion(&self) -> [u64; 4] {
        let mut c = [0u64; 4];
        for &[p, n] in self.counts.values() {
            if p > n {
                c[0] += p as u64;
                c[1] += n as u64;
            } else {
                c[2] += n as u64;
                c[3] += p as u64;
            }
        }
        c
    }
}

/// Evolve every training configuration under `rule` and count hits per basin.
pub fn tally_basins(
    rule: &CaRule,
    data: &TrainingSet,
    params: &EvolutionParams,
) -> Result<BasinTally, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if data.cell_len() != rule.len() {
        return Err(FcaError::DimensionMismatch {
            rule: rule.len(),
            config: data.cell_len(),
        }
        .into());
    }
    params.validate()?;
    let n = rule.len();
    let kernel = rule.kernel();
    let mut ev = BatchEvolver::new(n);
    let mut levels = vec![0u8; data.len() * n];
    let mut kinds = [AttractorKind::FixedPoint; LANES];
    let mut truncated = 0;
    for (b, out) in levels.chunks_mut(n * LANES).enumerate() {
        let lanes = out.len() / n;
        let inputs: Vec<&[f64]> = (0..lanes).map(|j| data.config(b * LANES + j)).collect();
        ev.attractor_levels(&kernel, &inputs, params, out, &mut kinds[..lanes]);
        truncated += kinds[..lanes]
            .iter()
            .filter(|&&k| k == AttractorKind::Truncated)
            .count();
    }
    let mut counts: HashMap<Box<[u8]>, [u32; 2]> = HashMap::new();
    for (key, &pos) in levels.chunks_exact(n).zip(data.labels()) {
        let slot = match counts.get_mut(key) {
            Some(s) => s,
            None => counts.entry(key.into()).or_insert([0, 0]),
        };
        slot[if pos { 0 } else { 1 }] += 1;
    }
    Ok(BasinTally {
        counts,
        instances: data.len(),
        truncated,
    })
}

/// Fit the basin→label map of `rule` and return it with its fitness FF
/// (resubstitution accuracy).
pub fn fit_basins(
    rule: &CaRule,
    data: &TrainingSet,
    params: &EvolutionParams,
) -> Result<(BasinMap, f64), ClassifierError> {
    let tally = tally_basins(rule, data, params)?;
    Ok((
        tally.basin_map(),
        tally.fitness(FitnessMode::Resubstitution),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedBasins {
    pub basin_map: BasinMap,
    pub fitness: f64,
}

/// One candidate rule (T, F), with its basin map and fitness once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct FmacaChromosome {
    pub rule: CaRule,
    fitted: Option<FittedBasins>,
}

impl FmacaChromosome {
    pub fn new(rule: CaRule) -> Self {
        Self { rule, fitted: None }
    }

    pub fn fitted(rule: CaRule, basin_map: BasinMap, fitness: f64) -> Self {
        Self {
            rule,
            fitted: Some(FittedBasins { basin_map, fitness }),
        }
    }

    /// Fit on `data` with resubstitution fitness.
    pub fn fit(
        rule: CaRule,
        data: &TrainingSet,
        params: &EvolutionParams,
    ) -> Result<Self, ClassifierError> {
        let (basin_map, fitness) = fit_basins(&rule, data, params)?;
        Ok(Self::fitted(rule, basin_map, fitness))
    }

    pub fn basins(&self) -> Option<&FittedBasins> {
        self.fitted.as_ref()
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitted.as_ref().map(|f| f.fitness)
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }
}

/// Outcome of one stage lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCall {
    pub positive: bool,
    pub confidence: f64,
    /// false when the configuration reached a basin absent from the map
    pub seen: bool,
    pub kind: AttractorKind,
}

/// Evolve `config` and look its basin up; unseen basins answer (negative, 0).
pub fn classify_stage(
    chromosome: &FmacaChromosome,
    config: &[f64],
    params: &EvolutionParams,
) -> Result<StageCall, ClassifierError> {
    let fitted = chromosome.basins().ok_or(ClassifierError::Unfitted)?;
    if config.len() != chromosome.len() {
        return Err(ClassifierError::Length {
            index: 0,
            got: config.len(),
            expected: chromosome.len(),
        });
    }
    let mut ev = Evolver::new(config.len());
    Ok(stage_lookup(
        fitted,
        &chromosome.rule.kernel(),
        &mut ev,
        config,
        params,
    ))
}

fn stage_lookup(
    fitted: &FittedBasins,
    kernel: &crate::fca::Kernel,
    ev: &mut Evolver,
    config: &[f64],
    params: &EvolutionParams,
) -> StageCall {
    let mut levels = vec![0u8; config.len()];
    let (kind, _) = ev.attractor_levels(kernel, config, params, &mut levels);
    match fitted.basin_map.get(&AttractorId::from_levels(levels)) {
        Some(v) => StageCall {
            positive: v.positive,
            confidence: v.confidence,
            seen: true,
            kind,
        },
        None => StageCall {
            positive: false,
            confidence: 0.0,
            seen: false,
            kind,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassLabel,
    pub score: f64,
}

/// Route two stage calls through the tree: donor first, then acceptor.
/// Scores past the first stage are the minimum of the traversed confidences.
pub fn combine_stages(donor: StageCall, acceptor: impl FnOnce() -> StageCall) -> Prediction {
    if donor.positive {
        return Prediction {
            label: ClassLabel::Donor,
            score: donor.confidence,
        };
    }
    let acceptor = acceptor();
    let score = donor.confidence.min(acceptor.confidence);
    let label = if acceptor.positive {
        ClassLabel::Acceptor
    } else {
        ClassLabel::Neither
    };
    Prediction { label, score }
}

/// Two-stage classifier: stage 1 separates donors from everything else,
/// stage 2 separates acceptors from non-sites.
#[derive(Debug, Clone, PartialEq)]
pub struct MacaCcTree {
    donor: FmacaChromosome,
    acceptor: FmacaChromosome,
    encoder: FuzzyEncoder,
    evolution: EvolutionParams,
}

impl MacaCcTree {
    pub fn new(
        donor: FmacaChromosome,
        acceptor: FmacaChromosome,
        encoder: FuzzyEncoder,
        evolution: EvolutionParams,
    ) -> Result<Self, ClassifierError> {
        if donor.basins().is_none() || acceptor.basins().is_none() {
            return Err(ClassifierError::Unfitted);
        }
        if donor.len() != acceptor.len() {
            return Err(ClassifierError::StageMismatch {
                donor: donor.len(),
                acceptor: acceptor.len(),
            });
        }
        evolution.validate()?;
        Ok(Self {
            donor,
            acceptor,
            encoder,
            evolution,
        })
    }

    pub fn donor_stage(&self) -> &FmacaChromosome {
        &self.donor
    }

    pub fn acceptor_stage(&self) -> &FmacaChromosome {
        &self.acceptor
    }

    pub fn encoder(&self) -> &FuzzyEncoder {
        &self.encoder
    }

    pub fn evolution(&self) -> &EvolutionParams {
        &self.evolution
    }

    /// Window length the tree classifies.
    pub fn window(&self) -> usize {
        self.donor.len()
    }

    pub fn classifier(&self) -> TreeClassifier<'_> {
        TreeClassifier {
            tree: self,
            donor: self.donor.rule.kernel(),
            acceptor: self.acceptor.rule.kernel(),
            ev: Evolver::new(self.window()),
        }
    }

    pub fn classify(&self, sequence: &[Nucleotide]) -> Result<Prediction, ClassifierError> {
        self.classifier().classify(sequence)
    }

    /// Classify a batch; results come back in input order.
    pub fn classify_batch(
        &self,
        sequences: &[&[Nucleotide]],
        schedule: Schedule,
    ) -> Result<Vec<Prediction>, ClassifierError> {
        par::map_with(
            schedule,
            sequences,
            || self.classifier(),
            |c, s| c.classify(s),
        )
        .into_iter()
        .collect()
    }
}

/// A tree with its kernels compiled and scratch buffers allocated, for
/// repeated classification on one thread.
#[derive(Debug, Clone)]
pub struct TreeClassifier<'a> {
    tree: &'a MacaCcTree,
    donor: crate::fca::Kernel,
    acceptor: crate::fca::Kernel,
    ev: Evolver,
}

impl TreeClassifier<'_> {
    pub fn stages(&mut self, config: &[f64]) -> (StageCall, StageCall) {
        let t = self.tree;
        let params = &t.evolution;
        let d = stage_lookup(
            t.donor.basins().expect("fitted"),
            &self.donor,
            &mut self.ev,
            config,
            params,
        );
        let a = stage_lookup(
            t.acceptor.basins().expect("fitted"),
            &self.acceptor,
            &mut self.ev,
            config,
            params,
        );
        (d, a)
    }

    pub fn classify_config(&mut self, config: &[f64]) -> Prediction {
        let t = self.tree;
        let params = &t.evolution;
        let d = stage_lookup(
            t.donor.basins().expect("fitted"),
            &self.donor,
            &mut self.ev,
            config,
            params,
        );
        let (acceptor, ev) = (&self.acceptor, &mut self.ev);
        combine_stages(d, || {
            stage_lookup(
                t.acceptor.basins().expect("fitted"),
                acceptor,
                ev,
                config,
                params,
            )
        })
    }

    pub fn classify(&mut self, sequence: &[Nucleotide]) -> Result<Prediction, ClassifierError> {
        let w = self.tree.window();
        if sequence.len() != w {
            return Err(ClassifierError::SequenceLength {
                got: sequence.len(),
                expected: w,
            });
        }
        let config = self.tree.encoder.encode(sequence)?;
        Ok(self.classify_config(config.cells()))
    }
}
