//! Acceptance suite. Runs every criterion in order and prints one line each.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use antnav::aco::{self, cycle_corpus, SolverConfig, Variant};
use antnav::bench::{compare, median, run_benchmark, BenchReport, ComparisonSummary};
use antnav::corpus::{load_corpus, Corpus, CorpusFormat, Document};
use antnav::instances;
use antnav::qanalysis::{
    build_incidence, distance_matrix, eccentricity_directed, q_components, shared_face_dim,
    structure_vector, SymmetrizePolicy,
};
use antnav::report::coherence_score;
use antnav::tsp::{brute_force_optimum, euc_2d_distance, parse_tsplib, OptimumCatalog, TspInstance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn random_instance(name: &str, n: usize, rng: &mut ChaCha8Rng) -> TspInstance {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    TspInstance::euclidean(name, &pts)
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn oracle_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let instances: Vec<TspInstance> = (0..20)
        .map(|k| random_instance(&format!("rand7-{k}"), 7, &mut rng))
        .collect();
    let cfg = SolverConfig::default().with_iterations(500);
    let hits: usize = instances
        .par_iter()
        .map(|inst| {
            let opt = brute_force_optimum(inst).unwrap().length;
            (1..=20u64)
                .filter(|&seed| {
                    let r = aco::run(inst, &cfg.clone().with_seed(seed)).unwrap();
                    same_length(r.best_length, opt)
                })
                .count()
        })
        .sum();
    let elapsed = start.elapsed();
    let rate = hits as f64 / 400.0;
    Outcome::new(
        rate >= 0.95 && elapsed < Duration::from_secs(120),
        format!("{hits}/400 runs optimal ({:.1}%), {:.1}s", rate * 100.0, elapsed.as_secs_f64()),
    )
}

struct BenchRun {
    best_known: f64,
    variant: BenchReport,
    baseline: BenchReport,
    comparison: ComparisonSummary,
    elapsed: Duration,
}

fn benchmark(text: &str) -> BenchRun {
    let inst = parse_tsplib(text).unwrap();
    let best_known = OptimumCatalog::bundled().get(inst.name()).unwrap();
    let variant = SolverConfig::default().with_iterations(2000);
    let baseline = variant.as_baseline();
    let seeds: Vec<u64> = (1..=20).collect();
    let start = Instant::now();
    let (v, b) = run_benchmark(&inst, &variant, &baseline, &seeds, best_known * 1.05).unwrap();
    let elapsed = start.elapsed();
    let comparison = compare(&v, &b).unwrap();
    BenchRun {
        best_known,
        variant: v,
        baseline: b,
        comparison,
        elapsed,
    }
}

fn benchmark_quality(runs: &[&BenchRun]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let finals: Vec<f64> = r.variant.runs.iter().map(|s| s.final_length).collect();
        let med = median(&finals).unwrap();
        let gap = med / r.best_known - 1.0;
        pass &= gap <= 0.05 && r.elapsed < Duration::from_secs(300);
        parts.push(format!(
            "{} median {med} vs {} (+{:.2}%), {:.1}s",
            r.variant.instance,
            r.best_known,
            gap * 100.0,
            r.elapsed.as_secs_f64()
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn convergence(r: &BenchRun) -> Outcome {
    let c = &r.comparison;
    let med = |m: Option<f64>| m.map_or("none".to_string(), |x| format!("{x}"));
    let (v, b) = (c.first.median_iterations_to_target, c.second.median_iterations_to_target);
    let faster_or_equal = match (v, b) {
        (Some(v), Some(b)) => v <= b,
        (Some(_), None) => true,
        _ => false,
    };
    let baseline_favored = c.sign_test.second_better > c.sign_test.first_better && c.sign_test.p_value < 0.05;
    let misses = r.variant.runs.len() - r.variant.hits();
    Outcome::new(
        faster_or_equal && !baseline_favored,
        format!(
            "eil51 target {:.2}: median iterations variant {} vs baseline {}; sign test {}:{} (ties {}), p = {:.4}; variant misses {misses}, baseline misses {}",
            c.target,
            med(v),
            med(b),
            c.sign_test.first_better,
            c.sign_test.second_better,
            c.sign_test.ties,
            c.sign_test.p_value,
            r.baseline.runs.len() - r.baseline.hits(),
        ),
    )
}

fn degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let instances = [
        parse_tsplib(instances::EIL51).unwrap(),
        parse_tsplib(instances::BERLIN52).unwrap(),
        random_instance("rand30", 30, &mut rng),
    ];
    let degenerate = SolverConfig {
        gamma: 0.0,
        neg_deposit: 0.0,
        ..SolverConfig::default().with_iterations(300)
    };
    let baseline = degenerate.as_baseline();
    let jobs: Vec<(usize, u64)> = (0..3).flat_map(|i| (1..=10).map(move |s| (i, s))).collect();
    let mismatched: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(i, seed)| {
            let inst = &instances[i];
            let a = aco::run(inst, &degenerate.clone().with_seed(seed)).unwrap();
            let b = aco::run(inst, &baseline.clone().with_seed(seed)).unwrap();
            let same = a.best_order == b.best_order
                && a.trace.len() == b.trace.len()
                && a.trace.iter().zip(&b.trace).all(|(x, y)| x.to_bits() == y.to_bits());
            (!same).then(|| format!("{}#{seed}", inst.name()))
        })
        .collect();
    Outcome::new(
        mismatched.is_empty(),
        format!("30 paired runs, {} differ {:?}", mismatched.len(), mismatched),
    )
}

fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<BTreeSet<String>> {
    let docs = rng.gen_range(1..=12);
    let vocab = rng.gen_range(1..=8);
    (0..docs)
        .map(|_| {
            let mut set = BTreeSet::new();
            let want = rng.gen_range(1..=vocab);
            while set.len() < want {
                set.insert(format!("k{}", rng.gen_range(0..vocab)));
            }
            set
        })
        .collect()
}

fn oracle_components(sets: &[BTreeSet<String>], q: i64) -> Vec<Vec<usize>> {
    let n = sets.len();
    let eligible: Vec<bool> = sets.iter().map(|s| s.len() as i64 - 1 >= q).collect();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !eligible[s] || seen[s] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for v in 0..n {
                let shared = sets[u].intersection(&sets[v]).count() as i64 - 1;
                if eligible[v] && !seen[v] && shared >= q {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn qanalysis_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    for case in 0..200 {
        let sets = random_corpus(&mut rng);
        let docs = sets
            .iter()
            .enumerate()
            .map(|(i, s)| Document::new(format!("d{i:02}"), "", s.iter().cloned()))
            .collect();
        let (corpus, _) = Corpus::from_documents(docs, "oracle").unwrap();
        let inc = build_incidence(&corpus).unwrap();
        let n = sets.len();
        let mut ok = true;
        for i in 0..n {
            for j in 0..n {
                let q_ij = sets[i].intersection(&sets[j]).count() as i64 - 1;
                let top = sets[i].len() as i64 - 1;
                let ecc = (q_ij >= 0).then(|| (top - q_ij) as f64 / (q_ij + 1) as f64);
                ok &= shared_face_dim(&inc, i, j).unwrap() == q_ij;
                ok &= eccentricity_directed(&inc, i, j).unwrap() == ecc;
            }
        }
        let top = sets.iter().map(|s| s.len() as i64 - 1).max().unwrap();
        let mut sv = Vec::new();
        for q in (0..=top).rev() {
            let expected = oracle_components(&sets, q);
            ok &= q_components(&inc, q as usize) == expected;
            sv.push(expected.len());
        }
        ok &= structure_vector(&inc) == sv;
        if !ok {
            failures.push(case);
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("200 random corpora, {} mismatched {:?}", failures.len(), failures),
    )
}

fn fixture_arithmetic() -> Outcome {
    let docs = vec![
        Document::new("d1", "", ["economy", "eu", "greece"]),
        Document::new("d2", "", ["economy", "eu", "markets", "debt"]),
        Document::new("d3", "", ["football", "worldcup"]),
    ];
    let (corpus, _) = Corpus::from_documents(docs, "fixture").unwrap();
    let inc = build_incidence(&corpus).unwrap();
    let m = distance_matrix(&inc, SymmetrizePolicy::Mean).unwrap();
    let sv = structure_vector(&inc);
    Outcome::new(
        m.get(0, 1) == 0.75 && m.cap == 1.75 && sv == [1, 2, 2, 2],
        format!("d(1,2) = {}, cap = {}, structure vector {:?}", m.get(0, 1), m.cap, sv),
    )
}

fn semantic_coherence() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/news-fixture.jsonl");
    let (corpus, _) = load_corpus(&path, CorpusFormat::Jsonl).unwrap();
    let inc = build_incidence(&corpus).unwrap();
    let m = distance_matrix(&inc, SymmetrizePolicy::Mean).unwrap();
    let cycle = cycle_corpus(&m, &SolverConfig::default().with_seed(1)).unwrap();
    let score = coherence_score(&m, &cycle.order).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut order: Vec<usize> = (0..m.len()).collect();
    let beaten = (0..100)
        .filter(|_| {
            order.shuffle(&mut rng);
            score < coherence_score(&m, &order).unwrap()
        })
        .count();

    let ukraine = |i: usize| corpus.documents[i].keywords.contains("ukraine");
    let n = cycle.order.len();
    let switches = (0..n)
        .filter(|&k| ukraine(cycle.order[k]) != ukraine(cycle.order[(k + 1) % n]))
        .count();
    Outcome::new(
        beaten >= 95 && switches == 2,
        format!("coherence {score:.4} beats {beaten}/100 shuffles; {switches} cluster boundaries in the cycle"),
    )
}

fn parser_fidelity() -> Outcome {
    let golden = [
        ((0.0, 0.0), (1.0, 1.0), 1.0),
        ((0.0, 0.0), (3.0, 4.0), 5.0),
        ((0.0, 0.0), (1.0, 2.0), 2.0),
        ((0.0, 0.0), (1.5, 0.0), 2.0),
        ((0.0, 0.0), (2.5, 0.0), 3.0),
        ((0.0, 0.0), (0.49, 0.0), 0.0),
        ((565.0, 575.0), (25.0, 185.0), 666.0),
        ((37.0, 52.0), (49.0, 49.0), 12.0),
    ];
    let rounding = golden.iter().all(|&(a, b, d)| euc_2d_distance(a, b) == d);
    let mut round_trips = 0;
    for text in [instances::EIL51, instances::BERLIN52] {
        let inst = parse_tsplib(text).unwrap();
        if parse_tsplib(&inst.to_tsplib()).unwrap() == inst {
            round_trips += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let explicit = TspInstance::from_matrix(
        "explicit",
        &{
            let n = 9;
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = rng.gen_range(1..1000) as f64;
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            rows
        },
        antnav::tsp::InstanceSource::TsplibExplicit,
    )
    .unwrap();
    if parse_tsplib(&explicit.to_tsplib()).unwrap() == explicit {
        round_trips += 1;
    }
    Outcome::new(
        rounding && round_trips == 3,
        format!(
            "golden rounding {}/{}; {round_trips}/3 round trips",
            golden.iter().filter(|&&(a, b, d)| euc_2d_distance(a, b) == d).count(),
            golden.len()
        ),
    )
}

fn determinism() -> Outcome {
    let eil51 = parse_tsplib(instances::EIL51).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let small = random_instance("rand12", 12, &mut rng);
    let mut ok = true;
    for (inst, seed) in [(&eil51, 4u64), (&small, 9)] {
        let cfg = SolverConfig::default().with_iterations(200).with_seed(seed);
        let a = serde_json::to_string(&aco::run(inst, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&aco::run(inst, &cfg).unwrap()).unwrap();
        let par = SolverConfig {
            parallel: true,
            ..cfg.clone()
        };
        let p = serde_json::to_string(&aco::run(inst, &par).unwrap()).unwrap();
        let base = SolverConfig {
            variant: Variant::Acs,
            ..cfg
        };
        let c = serde_json::to_string(&aco::run(inst, &base).unwrap()).unwrap();
        let d = serde_json::to_string(&aco::run(inst, &SolverConfig { parallel: true, ..base }).unwrap()).unwrap();
        ok &= a == b && a == p && c == d;
    }
    Outcome::new(ok, "repeat and parallel runs serialize identically on eil51 and a 12-city instance")
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    report("1 oracle optimality", oracle_optimality());
    let eil51 = benchmark(instances::EIL51);
    let berlin52 = benchmark(instances::BERLIN52);
    report("2 benchmark quality", benchmark_quality(&[&berlin52, &eil51]));
    report("3 convergence", convergence(&eil51));
    report("4 degeneration", degeneration());
    report("5 q-analysis oracles", qanalysis_oracles());
    report("6 fixture arithmetic", fixture_arithmetic());
    report("7 semantic coherence", semantic_coherence());
    report("8 parser fidelity", parser_fidelity());
    report("9 determinism", determinism());

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
