//! Clonal-selection search over CA rules.
//!
//! Each generation the top fraction of the population is cloned in
//! proportion to rank, clones are hypermutated at a rate that decays with
//! their parent's fitness, and the next population keeps the best distinct
//! rules plus a few fresh random ones. Training stops as soon as a rule
//! classifies its training set perfectly, or after `max_generations`.

use std::collections::{HashMap, HashSet};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    tally_basins, ClassifierError, FitnessMode, FmacaChromosome, MacaCcTree, TrainingSet,
};
use crate::fca::{CaRule, ComplementVector, DependencyMatrix, EvolutionParams, DEP_SELF};
use crate::par::{self, Schedule};
use crate::seqio::{ClassLabel, FuzzyEncoder, LabeledInstance};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid trainer configuration: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("population has unevaluated members")]
    Unevaluated,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub population_size: usize,
    /// generation cap G_max
    pub max_generations: usize,
    /// fraction of the population selected for cloning
    pub selection_fraction: f64,
    pub clone_factor: f64,
    /// hypermutation rate at fitness 0
    pub max_mutation_rate: f64,
    pub mutation_decay: f64,
    /// fresh random rules injected per generation
    pub replacement_count: usize,
    pub seed: u64,
    pub fitness: FitnessMode,
    pub evolution: EvolutionParams,
    #[serde(skip)]
    pub schedule: Schedule,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            max_generations: 100,
            selection_fraction: 0.2,
            clone_factor: 1.0,
            max_mutation_rate: 0.1,
            mutation_decay: 5.0,
            replacement_count: 25,
            seed: 0,
            fitness: FitnessMode::default(),
            evolution: EvolutionParams::default(),
            schedule: Schedule::default(),
        }
    }
}

impl TrainerConfig {
    /// Set the population size and rescale the replacement count to 5% of it.
    pub fn with_population(mut self, size: usize) -> Self {
        self.population_size = size;
        self.replacement_count = size / 20;
        self
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.population_size == 0 {
            return bad("population_size must be positive");
        }
        if !(self.selection_fraction > 0.0 && self.selection_fraction <= 1.0) {
            return bad("selection_fraction must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.max_mutation_rate) {
            return bad("max_mutation_rate must lie in [0, 1]");
        }
        if !(self.clone_factor >= 0.0 && self.clone_factor.is_finite()) {
            return bad("clone_factor must be a non-negative number");
        }
        if !self.mutation_decay.is_finite() {
            return bad("mutation_decay must be finite");
        }
        if self.replacement_count >= self.population_size {
            return bad("replacement_count must be smaller than population_size");
        }
        self.evolution
            .validate()
            .map_err(|e| TrainError::Config(e.to_string()))
    }

    /// Hypermutation probability per bit for a parent of fitness `ff`.
    pub fn mutation_rate(&self, ff: f64) -> f64 {
        mutation_rate(ff, self.max_mutation_rate, self.mutation_decay)
    }
}

/// `p_max * exp(-decay * ff)`
pub fn mutation_rate(ff: f64, p_max: f64, decay: f64) -> f64 {
    p_max * (-decay * ff).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub rule: CaRule,
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub generation: usize,
    pub members: Vec<Member>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Member> {
        self.members.first()
    }

    fn fitness_values(&self) -> Result<Vec<f64>, TrainError> {
        self.members
            .iter()
            .map(|m| m.fitness.ok_or(TrainError::Unevaluated))
            .collect()
    }

    /// Stable sort, fittest first.
    pub fn sort(&mut self) {
        sort_members(&mut self.members);
    }
}

fn sort_members(members: &mut [Member]) {
    members.sort_by(|a, b| {
        let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
        let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa)
    });
}

const STREAM_INIT: u64 = 1;
const STREAM_CLONE: u64 = 2;
const STREAM_FRESH: u64 = 3;

/// Independent RNG per (seed, generation, purpose, index), so the draws a
/// member sees never depend on evaluation order.
fn stream(seed: u64, generation: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, v) in key
        .chunks_exact_mut(8)
        .zip([seed, generation, purpose, index])
    {
        chunk.copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Each row uniform over the non-empty subsets of its neighbourhood; each
/// complement bit a fair coin.
pub fn random_rule<R: Rng>(len: usize, rng: &mut R) -> CaRule {
    let mut rows = Vec::with_capacity(len);
    let mut bits = Vec::with_capacity(len);
    for i in 0..len {
        let allowed = DependencyMatrix::allowed_mask(i, len);
        let subsets: Vec<u8> = (1u8..8).filter(|m| m & !allowed == 0).collect();
        rows.push(subsets[rng.gen_range(0..subsets.len())]);
        bits.push(rng.gen_bool(0.5));
    }
    CaRule::new(
        DependencyMatrix::new(rows).expect("generated rows are valid"),
        ComplementVector::new(bits),
    )
    .expect("equal lengths")
}

/// Flip every neighbourhood bit and complement bit independently with
/// probability `p`. A row left empty gets its self-dependency back.
pub fn hypermutate<R: Rng>(rule: &CaRule, p: f64, rng: &mut R) -> CaRule {
    let len = rule.len();
    let mut rows = rule.deps().rows().to_vec();
    let mut bits = rule.complement().bits().to_vec();
    for i in 0..len {
        let allowed = DependencyMatrix::allowed_mask(i, len);
        for b in [1u8, 2, 4] {
            if allowed & b != 0 && rng.gen::<f64>() < p {
                rows[i] ^= b;
            }
        }
        if rows[i] == 0 {
            rows[i] = DEP_SELF;
        }
        if rng.gen::<f64>() < p {
            bits[i] = !bits[i];
        }
    }
    CaRule::new(
        DependencyMatrix::new(rows).expect("mutation keeps rows valid"),
        ComplementVector::new(bits),
    )
    .expect("equal lengths")
}

pub fn init_population(len: usize, config: &TrainerConfig) -> Population {
    let members = (0..config.population_size)
        .map(|i| {
            let mut rng = stream(config.seed, 0, STREAM_INIT, i as u64);
            Member {
                rule: random_rule(len, &mut rng),
                fitness: None,
            }
        })
        .collect();
    Population {
        generation: 0,
        members,
    }
}

/// Memoised fitness evaluation against one training set.
pub struct Evaluator<'a> {
    data: &'a TrainingSet,
    mode: FitnessMode,
    evolution: EvolutionParams,
    schedule: Schedule,
    cache: HashMap<CaRule, f64>,
    evaluations: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a TrainingSet, config: &TrainerConfig) -> Self {
        Self {
            data,
            mode: config.fitness,
            evolution: config.evolution,
            schedule: config.schedule,
            cache: HashMap::new(),
            evaluations: 0,
        }
    }

    /// Distinct rules evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Fill in every missing fitness value.
    pub fn evaluate(&mut self, members: &mut [Member]) -> Result<(), TrainError> {
        let mut pending: Vec<CaRule> = Vec::new();
        let mut queued = HashSet::new();
        for m in members.iter() {
            if m.fitness.is_none() && !self.cache.contains_key(&m.rule) && queued.insert(&m.rule) {
                pending.push(m.rule.clone());
            }
        }
        let (data, params, mode) = (self.data, self.evolution, self.mode);
        let scores = par::map_with(
            self.schedule,
            &pending,
            || (),
            |_, rule| tally_basins(rule, data, &params).map(|t| t.fitness(mode)),
        );
        for (rule, score) in pending.into_iter().zip(scores) {
            self.cache.insert(rule, score?);
            self.evaluations += 1;
        }
        for m in members.iter_mut() {
            if m.fitness.is_none() {
                m.fitness = Some(self.cache[&m.rule]);
            }
        }
        Ok(())
    }
}

/// Clone counts per rank (1-based): `round(clone_factor * size / rank)` for
/// the top `ceil(selection_fraction * size)` members.
pub fn clone_counts(config: &TrainerConfig) -> Vec<usize> {
    let size = config.population_size;
    let selected = ((config.selection_fraction * size as f64).ceil() as usize).clamp(1, size);
    (1..=selected)
        .map(|rank| (config.clone_factor * size as f64 / rank as f64).round() as usize)
        .collect()
}

/// Form the next population from an evaluated, sorted one.
pub fn evolve_generation(
    pp: &Population,
    evaluator: &mut Evaluator<'_>,
    config: &TrainerConfig,
) -> Result<Population, TrainError> {
    let fitness = pp.fitness_values()?;
    let size = pp.len();
    let generation = pp.generation + 1;
    let len = pp.members.first().map_or(0, |m| m.rule.len());

    let mut clones = Vec::new();
    let mut clone_idx = 0u64;
    for (rank, count) in clone_counts(config).into_iter().enumerate() {
        let Some(parent) = pp.members.get(rank) else {
            break;
        };
        let p = config.mutation_rate(fitness[rank]);
        for _ in 0..count {
            let mut rng = stream(config.seed, generation as u64, STREAM_CLONE, clone_idx);
            clone_idx += 1;
            if p <= 0.0 {
                continue;
            }
            let rule = hypermutate(&parent.rule, p, &mut rng);
            if rule != parent.rule {
                clones.push(Member {
                    rule,
                    fitness: None,
                });
            }
        }
    }
    evaluator.evaluate(&mut clones)?;

    let mut pool: Vec<Member> = pp.members.iter().cloned().chain(clones).collect();
    sort_members(&mut pool);
    let keep = size - config.replacement_count.min(size - 1);
    let mut next = Vec::with_capacity(size);
    let mut seen = HashSet::new();
    let mut spill = Vec::new();
    for m in pool {
        if next.len() == keep {
            break;
        }
        if seen.insert(m.rule.clone()) {
            next.push(m);
        } else {
            spill.push(m);
        }
    }
    // only short of distinct rules for tiny rule spaces
    next.extend(spill.into_iter().take(keep - next.len()));

    let mut fresh: Vec<Member> = (0..size - next.len())
        .map(|i| {
            let mut rng = stream(config.seed, generation as u64, STREAM_FRESH, i as u64);
            Member {
                rule: random_rule(len, &mut rng),
                fitness: None,
            }
        })
        .collect();
    evaluator.evaluate(&mut fresh)?;
    next.extend(fresh);
    sort_members(&mut next);
    Ok(Population {
        generation,
        members: next,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    /// generation steps taken (never more than `max_generations`)
    pub generations: usize,
    pub best: FmacaChromosome,
    pub history: Vec<GenerationStats>,
    /// true when a rule reached fitness 1 before the generation cap
    pub perfect: bool,
    pub evaluations: usize,
}

/// Run the clonal search on one dichotomy and return the fittest rule with
/// its basin map fitted on the whole training set.
pub fn train(
    data: &TrainingSet,
    config: &TrainerConfig,
) -> Result<(FmacaChromosome, TrainingState), TrainError> {
    config.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut evaluator = Evaluator::new(data, config);
    let mut pp = init_population(data.cell_len(), config);
    evaluator.evaluate(&mut pp.members)?;
    pp.sort();

    let mut history = Vec::new();
    let mut best = pp.members[0].clone();
    let mut generations = 0;
    let perfect = loop {
        let fit = pp.fitness_values()?;
        let stats = GenerationStats {
            generation: pp.generation,
            best: fit[0],
            mean: fit.iter().sum::<f64>() / fit.len() as f64,
        };
        debug!(
            "generation {}: best {:.4} mean {:.4} ({} rules evaluated)",
            stats.generation,
            stats.best,
            stats.mean,
            evaluator.evaluations()
        );
        history.push(stats);
        if fit[0] > best.fitness.unwrap_or(f64::NEG_INFINITY) {
            best = pp.members[0].clone();
        }
        if fit[0] >= 1.0 {
            break true;
        }
        if generations >= config.max_generations {
            break false;
        }
        pp = evolve_generation(&pp, &mut evaluator, config)?;
        generations += 1;
    };

    let tally = tally_basins(&best.rule, data, &config.evolution)?;
    let chromosome = FmacaChromosome::fitted(
        best.rule,
        tally.basin_map(),
        best.fitness.expect("evaluated"),
    );
    let state = TrainingState {
        generations,
        best: chromosome.clone(),
        history,
        perfect,
        evaluations: evaluator.evaluations(),
    };
    Ok((chromosome, state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeTraining {
    pub donor: TrainingState,
    pub acceptor: TrainingState,
}

/// Seed of the acceptor-stage run, derived from the configured seed.
pub fn acceptor_seed(seed: u64) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Train both stages: donor vs rest on everything, then acceptor vs
/// neither on the non-donor instances.
pub fn train_tree(
    instances: &[LabeledInstance],
    encoder: &FuzzyEncoder,
    config: &TrainerConfig,
) -> Result<(MacaCcTree, TreeTraining), TrainError> {
    let donor_set = TrainingSet::from_instances(instances, encoder, |l| l == ClassLabel::Donor)?;
    let rest = instances.iter().filter(|i| i.label != ClassLabel::Donor);
    let acceptor_set = TrainingSet::from_instances(rest, encoder, |l| l == ClassLabel::Acceptor)?;

    let (donor, donor_state) = train(&donor_set, config)?;
    let acceptor_config = TrainerConfig {
        seed: acceptor_seed(config.seed),
        ..config.clone()
    };
    let (acceptor, acceptor_state) = train(&acceptor_set, &acceptor_config)?;

    let tree = MacaCcTree::new(donor, acceptor, encoder.clone(), config.evolution)?;
    Ok((
        tree,
        TreeTraining {
            donor: donor_state,
            acceptor: acceptor_state,
        },
    ))
}
