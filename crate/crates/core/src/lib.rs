//! Splice-site classification with fuzzy multiple-attractor cellular
//! automata trained by clonal selection.
//!
//! The pipeline: [`seqio`] reads labelled 60-base windows and encodes them
//! as fuzzy configurations; [`fca`] evolves configurations to their
//! attractors; [`classifier`] turns attractor basins into class votes and
//! chains a donor stage and an acceptor stage into a three-way tree;
//! [`clonal`] searches rule space for the stages; [`metrics`] scores the
//! result. [`model`], [`scan`] and [`bench`] back the command-line tool.

pub mod bench;
pub mod classifier;
pub mod clonal;
pub mod fca;
pub mod metrics;
pub mod model;
pub mod par;
pub mod scan;
pub mod seqio;

pub use classifier::{FitnessMode, FmacaChromosome, MacaCcTree, Prediction, TrainingSet};
pub use fca::{AttractorId, CaRule, EvolutionParams, FuzzyConfiguration};
pub use par::Schedule;
pub use seqio::{ClassLabel, FuzzyEncoder, LabeledInstance, Nucleotide};
