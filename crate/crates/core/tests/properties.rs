use proptest::collection::vec;
use proptest::prelude::*;

use splice_maca::classifier::{tally_basins, TrainingSet};
use splice_maca::fca::{
    step, AttractorKind, BatchEvolver, ComplementVector, DependencyMatrix, Evolver, LANES,
};
use splice_maca::metrics::{derive, ConfusionCounts};
use splice_maca::model::{load_model, save_model, StageDiagnostics, TrainingMetadata};
use splice_maca::seqio::{parse_splice_records, write_splice_records};
use splice_maca::*;

fn nucleotide() -> impl Strategy<Value = Nucleotide> {
    prop::sample::select(b"ACGTDNSR".to_vec())
        .prop_map(|c| Nucleotide::from_char(c as char).unwrap())
}

fn rule(len: usize, complement: bool) -> impl Strategy<Value = CaRule> {
    (vec(1u8..8, len), vec(any::<bool>(), len)).prop_map(move |(raw, bits)| {
        let rows = raw
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let m = m & DependencyMatrix::allowed_mask(i, len);
                if m == 0 {
                    2
                } else {
                    m
                }
            })
            .collect();
        let bits = if complement { bits } else { vec![false; len] };
        CaRule::new(
            DependencyMatrix::new(rows).unwrap(),
            ComplementVector::new(bits),
        )
        .unwrap()
    })
}

fn rule_and_state(complement: bool) -> impl Strategy<Value = (CaRule, FuzzyConfiguration)> {
    (1usize..24).prop_flat_map(move |len| {
        (
            rule(len, complement),
            vec(0.0f64..=1.0, len).prop_map(|c| FuzzyConfiguration::new(c).unwrap()),
        )
    })
}

fn grid_rows(len: usize, count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    vec(vec((0u8..4).prop_map(|k| k as f64 / 3.0), len), count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_distributes_over_concatenation(a in vec(nucleotide(), 0..40), b in vec(nucleotide(), 0..40)) {
        let enc = FuzzyEncoder::default();
        let joined: Vec<Nucleotide> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(
            enc.encode(&joined).unwrap(),
            enc.encode(&a).unwrap().concat(&enc.encode(&b).unwrap())
        );
    }

    #[test]
    fn step_stays_in_unit_interval((rule, s) in rule_and_state(true)) {
        let next = step(&rule, &s).unwrap();
        prop_assert!(next.cells().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn averaging_never_widens_the_range((rule, s) in rule_and_state(false)) {
        let next = step(&rule, &s).unwrap();
        let max = |c: &[f64]| c.iter().cloned().fold(f64::MIN, f64::max);
        let min = |c: &[f64]| c.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(max(next.cells()) <= max(s.cells()) + 1e-12);
        prop_assert!(min(next.cells()) >= min(s.cells()) - 1e-12);
    }

    #[test]
    fn lockstep_lanes_match_single_evolution(
        (rule, rows) in (1usize..16).prop_flat_map(|len| (rule(len, true), grid_rows(len, LANES)))
    ) {
        let params = EvolutionParams { max_steps: 64, ..Default::default() };
        let n = rule.len();
        let kernel = rule.kernel();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let mut out = vec![0u8; n * LANES];
        let mut kinds = [AttractorKind::FixedPoint; LANES];
        BatchEvolver::new(n).attractor_levels(&kernel, &refs, &params, &mut out, &mut kinds);
        let mut ev = Evolver::new(n);
        let mut single = vec![0u8; n];
        for (j, row) in rows.iter().enumerate() {
            let (kind, _) = ev.attractor_levels(&kernel, row, &params, &mut single);
            prop_assert_eq!(kind, kinds[j]);
            prop_assert_eq!(&out[j * n..(j + 1) * n], &single[..]);
        }
    }

    #[test]
    fn tally_ignores_instance_order(
        (rule, rows, labels, perm) in (2usize..10).prop_flat_map(|len| {
            (rule(len, true), grid_rows(len, 30), vec(any::<bool>(), 30), Just((0..30).collect::<Vec<usize>>()).prop_shuffle())
        })
    ) {
        let params = EvolutionParams::default();
        let n = rule.len();
        let a = TrainingSet::new(n, &rows, labels.clone()).unwrap();
        let prow: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let plab: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
        let b = TrainingSet::new(n, &prow, plab).unwrap();
        let (ta, tb) = (tally_basins(&rule, &a, &params).unwrap(), tally_basins(&rule, &b, &params).unwrap());
        prop_assert_eq!(ta.basin_map(), tb.basin_map());
        prop_assert_eq!(ta.confusion(), tb.confusion());
        prop_assert_eq!(ta.fitness(FitnessMode::LeaveOneOut), tb.fitness(FitnessMode::LeaveOneOut));
    }

    #[test]
    fn rates_are_scale_invariant(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500, k in 1u64..50) {
        prop_assume!(tp + fn_ > 0 && tn + fp > 0);
        let c = ConfusionCounts { tp, fp, tn, fn_ };
        let scaled = ConfusionCounts { tp: k * tp, fp: k * fp, tn: k * tn, fn_: k * fn_ };
        let (a, b) = (derive(&c).unwrap(), derive(&scaled).unwrap());
        prop_assert_eq!(a.sensitivity, b.sensitivity);
        prop_assert_eq!(a.specificity, b.specificity);
    }

    #[test]
    fn splice_records_round_trip(
        recs in vec((0usize..3, "[A-Z]{1,4}-[0-9]{1,6}", vec(nucleotide(), 60)), 1..8)
    ) {
        let records: Vec<LabeledInstance> = recs
            .into_iter()
            .map(|(c, id, sequence)| LabeledInstance { label: ClassLabel::ALL[c], id, sequence })
            .collect();
        let text = write_splice_records(&records);
        prop_assert_eq!(parse_splice_records(text.as_bytes()).unwrap(), records);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn saved_models_classify_identically(
        (donor, acceptor, rows, labels, probes) in (3usize..12).prop_flat_map(|len| {
            (rule(len, true), rule(len, true), grid_rows(len, 40), vec(0usize..3, 40), vec(vec(nucleotide(), len), 20))
        })
    ) {
        let params = EvolutionParams::default();
        let n = donor.len();
        let d = TrainingSet::new(n, &rows, labels.iter().map(|&l| l == 0).collect()).unwrap();
        let a = TrainingSet::new(n, &rows, labels.iter().map(|&l| l == 1).collect()).unwrap();
        let tree = MacaCcTree::new(
            FmacaChromosome::fit(donor, &d, &params).unwrap(),
            FmacaChromosome::fit(acceptor, &a, &params).unwrap(),
            FuzzyEncoder::default(),
            params,
        )
        .unwrap();
        let bytes = save_model(&tree, &TrainingMetadata::default(), &StageDiagnostics::default());
        let loaded = load_model(&bytes).unwrap().tree;
        for p in &probes {
            prop_assert_eq!(tree.classify(p).unwrap(), loaded.classify(p).unwrap());
        }
    }
}
