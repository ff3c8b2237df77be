#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splice_maca::classifier::TrainingSet;
use splice_maca::clonal::random_rule;
use splice_maca::seqio::parse_splice_records;
use splice_maca::*;

pub fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/splice.data")
}

pub fn dataset() -> Vec<LabeledInstance> {
    let file = std::fs::File::open(data_path()).expect("data/splice.data present");
    parse_splice_records(std::io::BufReader::new(file)).expect("dataset parses")
}

pub fn random_bases(rng: &mut ChaCha8Rng, len: usize) -> Vec<Nucleotide> {
    const ACGT: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];
    (0..len).map(|_| ACGT[rng.gen_range(0..4)]).collect()
}

/// Both stages fitted on `instances` with random rules; no search.
pub fn random_tree(instances: &[LabeledInstance], seed: u64) -> MacaCcTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = FuzzyEncoder::default();
    let params = EvolutionParams::default();
    let len = instances[0].sequence.len();
    let donor_set =
        TrainingSet::from_instances(instances, &enc, |l| l == ClassLabel::Donor).unwrap();
    let rest = instances.iter().filter(|i| i.label != ClassLabel::Donor);
    let acceptor_set =
        TrainingSet::from_instances(rest, &enc, |l| l == ClassLabel::Acceptor).unwrap();
    let donor = FmacaChromosome::fit(random_rule(len, &mut rng), &donor_set, &params).unwrap();
    let acceptor =
        FmacaChromosome::fit(random_rule(len, &mut rng), &acceptor_set, &params).unwrap();
    MacaCcTree::new(donor, acceptor, enc, params).unwrap()
}
