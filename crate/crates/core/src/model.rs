//! Versioned JSON model documents.
//!
//! A document stores both stage rules as per-row dependency index lists and
//! complement bits, their basin maps as `key / positive / confidence`
//! entries, the encoder table and evolution parameters, and training
//! metadata. Unknown fields are reported as warnings and otherwise ignored.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::classifier::{
    tally_basins, BasinVote, ClassifierError, FitnessMode, FmacaChromosome, MacaCcTree, TrainingSet,
};
use crate::fca::{
    AttractorId, CaRule, ComplementVector, DependencyMatrix, EvolutionParams, FcaError,
};
use crate::metrics::ConfusionCounts;
use crate::seqio::{ClassLabel, FuzzyEncoder, LabeledInstance, Nucleotide};

pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model document is not valid JSON: {0}")]
    Parse(serde_json::Error),
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("unsupported model version {0} (expected {MODEL_VERSION})")]
    Version(Value),
    #[error("invalid model document: {0}")]
    Schema(serde_json::Error),
    #[error("stage `{stage}`: {source}")]
    Rule {
        stage: &'static str,
        source: FcaError,
    },
    #[error("stage `{stage}`: bad basin key `{key}`")]
    BasinKey { stage: &'static str, key: String },
    #[error("unknown nucleotide code `{0}` in encoder table")]
    Symbol(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Training provenance stored alongside the rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub fitness_mode: FitnessMode,
    pub population_size: usize,
    pub max_generations: usize,
    pub donor_generations: usize,
    pub acceptor_generations: usize,
    pub training_instances: usize,
    /// Unix time of creation; left out unless asked for so that repeated
    /// runs write identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BasinEntry {
    key: String,
    positive: bool,
    confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageDoc {
    dependencies: Vec<Vec<usize>>,
    complement: Vec<u8>,
    fitness: f64,
    basins: Vec<BasinEntry>,
    /// resubstitution confusion counts of the stage on its own training set
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training_confusion: Option<ConfusionCounts>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EncoderDoc {
    levels: usize,
    symbols: BTreeMap<String, f64>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StagesDoc {
    donor: StageDoc,
    acceptor: StageDoc,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDoc {
    version: u64,
    window: usize,
    encoder: EncoderDoc,
    evolution: EvolutionParams,
    stages: StagesDoc,
    training: TrainingMetadata,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

/// Per-stage diagnostics written next to the rules.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageDiagnostics {
    pub donor: Option<ConfusionCounts>,
    pub acceptor: Option<ConfusionCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub tree: MacaCcTree,
    pub metadata: TrainingMetadata,
    pub diagnostics: StageDiagnostics,
    pub warnings: Vec<String>,
}

impl StageDiagnostics {
    /// Resubstitution counts of each stage on the set it was trained on:
    /// donor vs rest over `instances`, acceptor vs neither over the non-donors.
    pub fn measure(
        tree: &MacaCcTree,
        instances: &[LabeledInstance],
    ) -> Result<Self, ClassifierError> {
        let enc = tree.encoder();
        let params = tree.evolution();
        let donor_set = TrainingSet::from_instances(instances, enc, |l| l == ClassLabel::Donor)?;
        let rest = instances.iter().filter(|i| i.label != ClassLabel::Donor);
        let acceptor_set = TrainingSet::from_instances(rest, enc, |l| l == ClassLabel::Acceptor)?;
        let counts = |rule, set: &TrainingSet| -> Result<ConfusionCounts, ClassifierError> {
            let [tp, fp, tn, fn_] = tally_basins(rule, set, params)?.confusion();
            Ok(ConfusionCounts { tp, fp, tn, fn_ })
        };
        Ok(Self {
            donor: Some(counts(&tree.donor_stage().rule, &donor_set)?),
            acceptor: Some(counts(&tree.acceptor_stage().rule, &acceptor_set)?),
        })
    }
}

fn stage_doc(chrom: &FmacaChromosome, confusion: Option<ConfusionCounts>) -> StageDoc {
    let fitted = chrom.basins().expect("tree stages are fitted");
    StageDoc {
        dependencies: chrom.rule.deps().index_lists(),
        complement: chrom
            .rule
            .complement()
            .bits()
            .iter()
            .map(|&b| b as u8)
            .collect(),
        fitness: fitted.fitness,
        basins: fitted
            .basin_map
            .iter()
            .map(|(id, v)| BasinEntry {
                key: id.key(),
                positive: v.positive,
                confidence: v.confidence,
            })
            .collect(),
        training_confusion: confusion,
        extra: BTreeMap::new(),
    }
}

pub fn save_model(
    tree: &MacaCcTree,
    metadata: &TrainingMetadata,
    diagnostics: &StageDiagnostics,
) -> Vec<u8> {
    let enc = tree.encoder();
    let doc = ModelDoc {
        version: MODEL_VERSION,
        window: tree.window(),
        encoder: EncoderDoc {
            levels: enc.levels(),
            symbols: enc
                .symbol_map()
                .iter()
                .map(|(n, &v)| (n.to_string(), v))
                .collect(),
            extra: BTreeMap::new(),
        },
        evolution: *tree.evolution(),
        stages: StagesDoc {
            donor: stage_doc(tree.donor_stage(), diagnostics.donor),
            acceptor: stage_doc(tree.acceptor_stage(), diagnostics.acceptor),
            extra: BTreeMap::new(),
        },
        training: TrainingMetadata {
            extra: BTreeMap::new(),
            ..metadata.clone()
        },
        extra: BTreeMap::new(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("model serialises");
    bytes.push(b'\n');
    bytes
}

fn collect_extra(path: &str, extra: &BTreeMap<String, Value>, out: &mut Vec<String>) {
    for k in extra.keys() {
        out.push(format!("ignoring unknown field `{path}{k}`"));
    }
}

fn stage_from_doc(stage: &'static str, doc: &StageDoc) -> Result<FmacaChromosome, ModelError> {
    let deps = DependencyMatrix::from_index_lists(&doc.dependencies)
        .map_err(|source| ModelError::Rule { stage, source })?;
    let bits = ComplementVector::new(doc.complement.iter().map(|&b| b != 0).collect());
    let rule = CaRule::new(deps, bits).map_err(|source| ModelError::Rule { stage, source })?;
    let mut map = BTreeMap::new();
    for e in &doc.basins {
        let id = AttractorId::from_key(&e.key)
            .filter(|id| id.levels().len() == rule.len())
            .ok_or_else(|| ModelError::BasinKey {
                stage,
                key: e.key.clone(),
            })?;
        map.insert(
            id,
            BasinVote {
                positive: e.positive,
                confidence: e.confidence,
            },
        );
    }
    Ok(FmacaChromosome::fitted(rule, map, doc.fitness))
}

pub fn load_model(bytes: &[u8]) -> Result<LoadedModel, ModelError> {
    let value: Value = serde_json::from_slice(bytes).map_err(ModelError::Parse)?;
    match value.get("version") {
        None => return Err(ModelError::MissingField("version".into())),
        Some(v) if v.as_u64() == Some(MODEL_VERSION) => {}
        Some(v) => return Err(ModelError::Version(v.clone())),
    }
    let doc: ModelDoc = serde_json::from_value(value).map_err(ModelError::Schema)?;

    let mut warnings = Vec::new();
    collect_extra("", &doc.extra, &mut warnings);
    collect_extra("encoder.", &doc.encoder.extra, &mut warnings);
    collect_extra("stages.", &doc.stages.extra, &mut warnings);
    collect_extra("stages.donor.", &doc.stages.donor.extra, &mut warnings);
    collect_extra(
        "stages.acceptor.",
        &doc.stages.acceptor.extra,
        &mut warnings,
    );
    collect_extra("training.", &doc.training.extra, &mut warnings);
    for w in &warnings {
        warn!("{w}");
    }

    let mut symbols = BTreeMap::new();
    for (k, &v) in &doc.encoder.symbols {
        let mut chars = k.chars();
        let n = match (chars.next(), chars.next()) {
            (Some(c), None) => Nucleotide::ALL.iter().copied().find(|n| n.as_char() == c),
            _ => None,
        };
        symbols.insert(n.ok_or_else(|| ModelError::Symbol(k.clone()))?, v);
    }
    let encoder = FuzzyEncoder::from_parts(doc.encoder.levels, symbols);
    let donor = stage_from_doc("donor", &doc.stages.donor)?;
    let acceptor = stage_from_doc("acceptor", &doc.stages.acceptor)?;
    if donor.len() != doc.window {
        return Err(ClassifierError::StageMismatch {
            donor: donor.len(),
            acceptor: doc.window,
        }
        .into());
    }
    let tree = MacaCcTree::new(donor, acceptor, encoder, doc.evolution)?;
    Ok(LoadedModel {
        tree,
        metadata: doc.training,
        diagnostics: StageDiagnostics {
            donor: doc.stages.donor.training_confusion,
            acceptor: doc.stages.acceptor.training_confusion,
        },
        warnings,
    })
}
