//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! The end-to-end training check uses the reduced profile (population 100,
//! 20 generations) by default. Set `SPLICE_MACA_FULL=1` to run the full
//! profile (population 500, 50 generations) instead.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splice_maca::bench::bench;
use splice_maca::classifier::TrainingSet;
use splice_maca::clonal::{random_rule, train, train_tree, TrainerConfig};
use splice_maca::fca::{
    enumerate_basins, evolve, grid_configuration, AttractorKind, ComplementVector, DependencyMatrix,
};
use splice_maca::metrics::{
    accuracy, comparison_report, derive, tally, ConfusionCounts, MetricsError,
};
use splice_maca::model::{save_model, StageDiagnostics, TrainingMetadata};
use splice_maca::scan::{scan, ScanRow, Strand, Strands};
use splice_maca::seqio::{reverse_complement, stratified_split, GenomicSequence};
use splice_maca::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Independent evolution: plain means over the dependency set, compared
/// by max-norm, period-2 by comparison with the state two steps back.
fn oracle_levels(rule: &CaRule, s0: &[f64], params: &EvolutionParams) -> Vec<u8> {
    let n = s0.len();
    let deps: Vec<Vec<usize>> = (0..n).map(|i| rule.deps().dependencies(i)).collect();
    let flip = rule.complement().bits();
    let quant = |s: &[f64]| -> Vec<u8> {
        let k = (params.quant_levels - 1) as f64;
        s.iter().map(|&x| (x * k + 0.5).floor() as u8).collect()
    };
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let mut prev: Option<Vec<f64>> = None;
    let mut cur = s0.to_vec();
    for _ in 0..params.max_steps {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let m = deps[i].iter().map(|&j| cur[j]).sum::<f64>() / deps[i].len() as f64;
                if flip[i] {
                    1.0 - m
                } else {
                    m
                }
            })
            .collect();
        if dist(&next, &cur) <= params.epsilon {
            return quant(&cur);
        }
        if let Some(p) = &prev {
            if dist(&next, p) <= params.epsilon {
                return quant(p).min(quant(&cur));
            }
        }
        prev = Some(cur);
        cur = next;
    }
    quant(&cur)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = EvolutionParams::default();
    let mut rules = 0;
    for &len in &[4usize, 6, 8] {
        for _ in 0..20 {
            let rule = random_rule(len, &mut rng);
            let part = enumerate_basins(&rule, 2, &params, Schedule::default())
                .map_err(|e| e.to_string())?;
            let size = 1usize << len;
            let mut seen = vec![false; size];
            for (id, members) in &part.basins {
                for &m in members {
                    let m = m as usize;
                    check(
                        m < size && !seen[m],
                        format!("L={len}: index {m} repeated or out of range"),
                    )?;
                    seen[m] = true;
                    let cfg = grid_configuration(m, len, 2);
                    let expect = oracle_levels(&rule, cfg.cells(), &params);
                    check(
                        id.levels() == &expect[..],
                        format!("L={len}: config {m} in basin {id}, oracle {expect:?}"),
                    )?;
                }
            }
            check(
                seen.iter().all(|&s| s),
                format!("L={len}: partition not exhaustive"),
            )?;
            rules += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:.2?}"),
    )?;
    Ok(format!(
        "{rules} rules, every grid configuration matched, {elapsed:.2?}"
    ))
}

fn criterion_2() -> Outcome {
    let params = EvolutionParams::default();
    for len in 1..=8usize {
        for levels in [2usize, 3] {
            if levels.pow(len as u32) > 6561 {
                continue;
            }
            let part = enumerate_basins(
                &CaRule::identity(len),
                levels,
                &params,
                Schedule::Sequential,
            )
            .map_err(|e| e.to_string())?;
            let total = levels.pow(len as u32);
            check(
                part.basins.len() == total && part.basin_sizes().iter().all(|&s| s == 1),
                format!("identity L={len} n={levels}: {} basins", part.basins.len()),
            )?;
        }
        let flip =
            CaRule::new(DependencyMatrix::identity(len), ComplementVector::ones(len)).unwrap();
        for index in 0..1usize << len {
            let s0 = grid_configuration(index, len, 2);
            let t = evolve(&flip, &s0, &params).map_err(|e| e.to_string())?;
            check(
                t.kind == AttractorKind::Period2Cycle,
                format!("complement L={len} start {index}: {:?}", t.kind),
            )?;
        }
    }
    Ok("identity gives n^L singleton basins; full complement cycles from every binary start (L <= 8)".into())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let c = ConfusionCounts {
            tp: rng.gen_range(0..10_000),
            fp: rng.gen_range(0..10_000),
            tn: rng.gen_range(0..10_000),
            fn_: rng.gen_range(0..10_000),
        };
        match derive(&c) {
            Ok(m) => {
                check(
                    m.sensitivity == Ratio::new(c.tp, c.tp + c.fn_),
                    format!("SN {c:?}"),
                )?;
                check(
                    m.specificity == Ratio::new(c.tn, c.tn + c.fp),
                    format!("SP {c:?}"),
                )?;
                check(
                    m.actual_positives == c.tp + c.fn_ && m.actual_negatives == c.tn + c.fp,
                    "actual totals",
                )?;
                check(
                    m.predicted_positives == c.tp + c.fp && m.predicted_negatives == c.tn + c.fn_,
                    "predicted totals",
                )?;
            }
            Err(e) => return Err(format!("{c:?}: {e}")),
        }
    }
    let m = derive(&ConfusionCounts {
        tp: 886,
        fn_: 114,
        tn: 903,
        fp: 97,
    })
    .map_err(|e| e.to_string())?;
    check(
        m.sensitivity == Ratio::new(886, 1000) && m.specificity == Ratio::new(903, 1000),
        "886/903 counts",
    )?;
    check(
        derive(&ConfusionCounts {
            tp: 0,
            fn_: 0,
            tn: 5,
            fp: 1,
        }) == Err(MetricsError::SensitivityUndefined)
            && derive(&ConfusionCounts {
                tp: 5,
                fn_: 1,
                tn: 0,
                fp: 0,
            }) == Err(MetricsError::SpecificityUndefined),
        "zero denominators",
    )?;
    Ok(format!(
        "1000 random count vectors exact; SN {} SP {}",
        m.sensitivity, m.specificity
    ))
}

fn criterion_4() -> Outcome {
    let params = EvolutionParams::default();
    let mut lines = Vec::new();
    let mut hits = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let planted = random_rule(12, &mut rng);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..12).map(|_| rng.gen_range(0..4) as f64 / 3.0).collect())
            .collect();
        let mut basin_label = BTreeMap::new();
        let labels: Vec<bool> = rows
            .iter()
            .map(|r| {
                let id = evolve(
                    &planted,
                    &FuzzyConfiguration::new(r.clone()).unwrap(),
                    &params,
                )
                .unwrap()
                .id;
                *basin_label.entry(id).or_insert_with(|| rng.gen_bool(0.5))
            })
            .collect();
        let data = TrainingSet::new(12, &rows, labels).map_err(|e| e.to_string())?;
        let config = TrainerConfig {
            max_generations: 50,
            seed,
            fitness: FitnessMode::Resubstitution,
            ..TrainerConfig::default().with_population(100)
        };
        let start = Instant::now();
        let (best, state) = train(&data, &config).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let ok = state.perfect && best.fitness() == Some(1.0) && elapsed < Duration::from_secs(60);
        hits += ok as usize;
        lines.push(format!(
            "seed {seed}: {} gens {elapsed:.1?}{}",
            state.generations,
            if ok { "" } else { " miss" }
        ));
    }
    check(
        hits >= 8,
        format!("{hits}/10 seeds reached FF = 1 [{}]", lines.join(", ")),
    )?;
    Ok(format!(
        "{hits}/10 seeds reached FF = 1 [{}]",
        lines.join(", ")
    ))
}

fn model_bytes(
    train_set: &[LabeledInstance],
    config: &TrainerConfig,
) -> Result<(Vec<u8>, Vec<Vec<f64>>), String> {
    let (tree, state) =
        train_tree(train_set, &FuzzyEncoder::default(), config).map_err(|e| e.to_string())?;
    let diagnostics = StageDiagnostics::measure(&tree, train_set).map_err(|e| e.to_string())?;
    let metadata = TrainingMetadata {
        seed: config.seed,
        fitness_mode: config.fitness,
        population_size: config.population_size,
        max_generations: config.max_generations,
        donor_generations: state.donor.generations,
        acceptor_generations: state.acceptor.generations,
        training_instances: train_set.len(),
        ..Default::default()
    };
    let curves = [&state.donor, &state.acceptor]
        .iter()
        .map(|s| s.history.iter().map(|h| h.best).collect())
        .collect();
    Ok((save_model(&tree, &metadata, &diagnostics), curves))
}

fn criterion_5(train_set: &[LabeledInstance]) -> Outcome {
    let subset: Vec<_> = train_set.iter().step_by(3).cloned().collect();
    let config = |schedule| TrainerConfig {
        max_generations: 4,
        seed: 42,
        fitness: FitnessMode::LeaveOneOut,
        schedule,
        ..TrainerConfig::default().with_population(24)
    };
    let (a, curves_a) = model_bytes(&subset, &config(Schedule::Parallel))?;
    let (b, curves_b) = model_bytes(&subset, &config(Schedule::Sequential))?;
    check(a == b, "model files differ")?;
    for curve in curves_a.iter().chain(&curves_b) {
        check(
            curve.windows(2).all(|w| w[1] >= w[0]),
            format!("best FF decreased: {curve:?}"),
        )?;
    }
    Ok(format!(
        "{} identical bytes from two seeded runs; best FF non-decreasing",
        a.len()
    ))
}

struct EndToEnd {
    tree: MacaCcTree,
    train: Vec<LabeledInstance>,
    test: Vec<LabeledInstance>,
}

fn criterion_6(full: bool, data: &[LabeledInstance]) -> (Outcome, Option<EndToEnd>) {
    let (pop, gmax, limit) = if full {
        (500, 50, 1800)
    } else {
        (100, 20, 180)
    };
    let (train_set, test) = match stratified_split(data, |i| i.label, 0.2, 42) {
        Ok(s) => s,
        Err(e) => return (Err(e.to_string()), None),
    };
    let config = TrainerConfig {
        max_generations: gmax,
        seed: 42,
        fitness: FitnessMode::LeaveOneOut,
        ..TrainerConfig::default().with_population(pop)
    };
    let start = Instant::now();
    let tree = match train_tree(&train_set, &FuzzyEncoder::default(), &config) {
        Ok((tree, _)) => tree,
        Err(e) => return (Err(e.to_string()), None),
    };
    let elapsed = start.elapsed();
    let seqs: Vec<&[Nucleotide]> = test.iter().map(|i| i.sequence.as_slice()).collect();
    let outcome = (|| {
        let preds = tree
            .classify_batch(&seqs, Schedule::default())
            .map_err(|e| e.to_string())?;
        let pairs: Vec<_> = preds
            .iter()
            .zip(&test)
            .map(|(p, i)| (p.label, i.label))
            .collect();
        let (d, a) = tally(pairs.iter().copied()).map_err(|e| e.to_string())?;
        let (d, a) = (
            derive(&d).map_err(|e| e.to_string())?,
            derive(&a).map_err(|e| e.to_string())?,
        );
        let acc = accuracy(&pairs);
        println!("{}", comparison_report(&d, &a));
        let summary = format!(
            "population {pop}, {gmax} generations, {elapsed:.1?}: donor SN {:.3} SP {:.3}, acceptor SN {:.3} SP {:.3}, accuracy {acc:.3}",
            d.sn(),
            d.sp(),
            a.sn(),
            a.sp()
        );
        check(
            d.sn() >= 0.6 && d.sp() >= 0.6 && a.sn() >= 0.6 && a.sp() >= 0.6 && acc > 0.5,
            format!("below floor: {summary}"),
        )?;
        check(
            elapsed <= Duration::from_secs(limit),
            format!("over {limit} s: {summary}"),
        )?;
        Ok(summary)
    })();
    (
        outcome,
        Some(EndToEnd {
            tree,
            train: train_set,
            test,
        }),
    )
}

fn criterion_7(run: &EndToEnd) -> Outcome {
    let seqs: Vec<&[Nucleotide]> = run.test.iter().map(|i| i.sequence.as_slice()).collect();
    let stats = bench(&run.tree, &seqs, 5).map_err(|e| e.to_string())?;
    let summary = format!(
        "mean {:.4} ms, median {:.4} ms, p95 {:.4} ms over {}",
        stats.mean_ms, stats.median_ms, stats.p95_ms, stats.count
    );
    check(stats.mean_ms <= 1.0, summary.clone())?;
    Ok(summary)
}

fn criterion_8(run: &EndToEnd) -> Outcome {
    let windows: Vec<&LabeledInstance> = run
        .train
        .iter()
        .filter(|i| {
            let p = run.tree.classify(&i.sequence).unwrap();
            p.label == ClassLabel::Donor && p.score >= 0.5
        })
        .collect();
    check(
        windows.len() >= 10,
        format!("only {} donor windows available", windows.len()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bases = common::random_bases(&mut rng, 10_000);
    let mut starts: Vec<usize> = Vec::new();
    while starts.len() < 10 {
        let s: usize = rng.gen_range(0..10_000 - 60);
        if starts.iter().all(|&t| s.abs_diff(t) >= 60) {
            starts.push(s);
        }
    }
    starts.sort_unstable();
    let mut picked = HashSet::new();
    for &s in &starts {
        let w = loop {
            let j = rng.gen_range(0..windows.len());
            if picked.insert(j) {
                break windows[j];
            }
        };
        bases.splice(s..s + 60, w.sequence.iter().copied());
    }
    let genome = GenomicSequence {
        name: "planted".into(),
        bases,
    };
    let report = scan(&genome, &run.tree, 0.5, Strands::Both, Schedule::default())
        .map_err(|e| e.to_string())?;
    let direct = report.section(Strand::Direct).ok_or("no direct section")?;
    let found: HashSet<usize> = direct.donors.iter().map(|r| r.start).collect();
    let missing: Vec<usize> = starts
        .iter()
        .map(|s| s + 1)
        .filter(|s| !found.contains(s))
        .collect();
    check(
        missing.is_empty(),
        format!("planted starts not reported: {missing:?}"),
    )?;

    let n = genome.bases.len();
    let rc = GenomicSequence {
        name: "rc".into(),
        bases: reverse_complement(&genome.bases),
    };
    let fwd = scan(&rc, &run.tree, 0.5, Strands::Direct, Schedule::default())
        .map_err(|e| e.to_string())?;
    let fwd = fwd.section(Strand::Direct).ok_or("no direct section")?;
    let rev = report
        .section(Strand::Reverse)
        .ok_or("no reverse section")?;
    let remap = |rows: &[ScanRow]| {
        let mut v: Vec<ScanRow> = rows
            .iter()
            .map(|r| ScanRow {
                start: n + 1 - r.end,
                end: n + 1 - r.start,
                ..r.clone()
            })
            .collect();
        v.sort_by_key(|r| r.start);
        v
    };
    check(
        rev.donors == remap(&fwd.donors) && rev.acceptors == remap(&fwd.acceptors),
        "reverse chain mismatch",
    )?;
    Ok(format!(
        "10/10 planted donors found among {} direct donor rows; reverse chain matches ({} + {} rows)",
        direct.donors.len(),
        rev.donors.len(),
        rev.acceptors.len()
    ))
}

fn main() -> ExitCode {
    let full = std::env::var("SPLICE_MACA_FULL").is_ok_and(|v| v == "1");
    let mut failed = 0;
    let mut report = |n: u32, title: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {n} PASS: {title}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("criterion {n} FAIL: {title}: {detail}")
        }
    };
    report(1, "basin partition oracle", criterion_1());
    report(2, "identity and complement dynamics", criterion_2());
    report(3, "metric formulas", criterion_3());
    report(4, "planted-rule recovery", criterion_4());
    let data = common::dataset();
    let train_set = stratified_split(&data, |i| i.label, 0.2, 42)
        .map(|s| s.0)
        .unwrap_or_default();
    report(5, "reproducibility", criterion_5(&train_set));
    let profile = if full {
        "end-to-end, full profile"
    } else {
        "end-to-end, reduced profile"
    };
    let (outcome, run) = criterion_6(full, &data);
    report(6, profile, outcome);
    match &run {
        Some(run) => {
            report(7, "latency", criterion_7(run));
            report(8, "scan correctness", criterion_8(run));
        }
        None => {
            report(7, "latency", Err("no trained model".into()));
            report(8, "scan correctness", Err("no trained model".into()));
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
