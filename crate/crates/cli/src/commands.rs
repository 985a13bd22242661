use std::fs;
use std::path::{Path, PathBuf};

use antnav::aco::{self, AcoError, SolverConfig, Variant};
use antnav::bench::{compare, run_benchmark, BenchError, MIN_SEEDS};
use antnav::corpus::{load_corpus, parse_timestamp, Corpus, CorpusError, CorpusFormat};
use antnav::guardian::{
    fetch_articles, ApiQuery, ClientConfig, FixtureTransport, GuardianError, HttpResponse, Transport,
    API_KEY_ENV, DEFAULT_BASE_URL,
};
use antnav::qanalysis::{build_incidence, distance_matrix, q_components, structure_vector};
use antnav::report::{cycle_dot, cycle_html, CycleReport};
use antnav::tsp::{parse_tsplib, OptimumCatalog, TspError, TspInstance};
use chrono::{DateTime, NaiveDate, Utc};
use serde::Serialize;

use crate::args::{BenchArgs, CorpusArgs, CycleArgs, DistancesArgs, FetchArgs, FileConfig, SolveTspArgs};
use crate::error::{exit, Failure};
use crate::manifest::RunManifest;

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn solver_failure(err: AcoError) -> Failure {
    match err {
        AcoError::Instance(TspError::TooSmall { .. }) => Failure::new(exit::INFEASIBLE, err.to_string()),
        other => Failure::usage(other.to_string()),
    }
}

fn load_instance(path: &Path) -> Result<(TspInstance, Vec<u8>), Failure> {
    let bytes = read_input(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let inst = parse_tsplib(&text).map_err(|e| Failure::io(path, e))?;
    Ok((inst, bytes))
}

pub fn solve_tsp(args: &SolveTspArgs, file: &FileConfig) -> Result<(), Failure> {
    let (inst, bytes) = load_instance(&args.input)?;
    let mut cfg = args.solver.resolve(file);
    cfg.target = args.target;
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    inst.require_cycle()
        .map_err(|e| Failure::new(exit::INFEASIBLE, e.to_string()))?;

    let result = aco::run(&inst, &cfg).map_err(solver_failure)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("result.json"), &result)?;
    write_file(&args.out.join("trace.csv"), result.trace_csv().as_bytes())?;
    RunManifest::new("solve-tsp", &result.config, Some(result.seed))
        .input(&args.input, &bytes)
        .write(&args.out)?;
    println!(
        "{}: best length {} after {} iterations ({})",
        result.instance,
        result.best_length,
        result.iterations_run,
        args.out.display()
    );
    Ok(())
}

fn corpus_failure(err: CorpusError) -> Failure {
    Failure::usage(err.to_string())
}

fn load_corpus_args(args: &CorpusArgs) -> Result<(Corpus, Vec<u8>), Failure> {
    let format = match &args.format {
        Some(f) => f.parse::<CorpusFormat>().map_err(corpus_failure)?,
        None => CorpusFormat::from_path(&args.corpus).ok_or_else(|| {
            Failure::usage(format!(
                "{}: cannot tell the corpus format from the extension; pass --format",
                args.corpus.display()
            ))
        })?,
    };
    let bytes = read_input(&args.corpus)?;
    let (corpus, report) = load_corpus(&args.corpus, format).map_err(corpus_failure)?;
    if report.dropped_empty > 0 {
        eprintln!(
            "dropped {} document(s) without keywords: {}",
            report.dropped_empty,
            report.dropped_ids.join(", ")
        );
    }
    Ok((corpus, bytes))
}

fn parse_bound(flag: &str, value: &str) -> Result<DateTime<Utc>, Failure> {
    parse_timestamp(value)
        .ok_or_else(|| Failure::usage(format!("--{flag}: cannot parse `{value}` as a date")))
}

#[derive(Serialize)]
struct CycleConfig<'a> {
    policy: String,
    from: Option<&'a str>,
    to: Option<&'a str>,
    solver: &'a SolverConfig,
}

#[derive(Serialize)]
struct QDiagnostics<'a> {
    ids: &'a [String],
    structure_vector: Vec<usize>,
    components_q0: Vec<Vec<&'a str>>,
}

pub fn cycle(args: &CycleArgs, file: &FileConfig) -> Result<(), Failure> {
    let policy = args.corpus.policy(file)?;
    let cfg = args.solver.resolve(file);
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let (mut corpus, bytes) = load_corpus_args(&args.corpus)?;
    if args.from.is_some() || args.to.is_some() {
        let from = match &args.from {
            Some(v) => parse_bound("from", v)?,
            None => DateTime::<Utc>::MIN_UTC,
        };
        let to = match &args.to {
            Some(v) => parse_bound("to", v)?,
            None => DateTime::<Utc>::MAX_UTC,
        };
        corpus = corpus.window(from, to).map_err(corpus_failure)?;
    }
    if corpus.len() < 3 {
        return Err(Failure::new(
            exit::INFEASIBLE,
            format!("a cycle needs at least 3 documents, {} remain", corpus.len()),
        ));
    }

    let inc = build_incidence(&corpus).map_err(|e| Failure::usage(e.to_string()))?;
    let matrix = distance_matrix(&inc, policy).map_err(|e| Failure::usage(e.to_string()))?;
    let cycle = aco::cycle_corpus(&matrix, &cfg).map_err(solver_failure)?;
    let report = CycleReport::new(&cycle, &matrix).map_err(|e| Failure::usage(e.to_string()))?;
    let result = cycle.result.as_ref().expect("cycle_corpus records its run");

    ensure_dir(&args.out)?;
    write_json(&args.out.join("cycle.json"), &report)?;
    write_file(&args.out.join("cycle.dot"), cycle_dot(&cycle, &corpus).as_bytes())?;
    write_file(&args.out.join("cycle.html"), cycle_html(&report, &corpus).as_bytes())?;
    write_file(&args.out.join("trace.csv"), result.trace_csv().as_bytes())?;
    let ids = inc.docs();
    write_json(
        &args.out.join("qanalysis.json"),
        &QDiagnostics {
            ids,
            structure_vector: structure_vector(&inc),
            components_q0: q_components(&inc, 0)
                .into_iter()
                .map(|c| c.into_iter().map(|i| ids[i].as_str()).collect())
                .collect(),
        },
    )?;
    let run_cfg = CycleConfig {
        policy: policy.to_string(),
        from: args.from.as_deref(),
        to: args.to.as_deref(),
        solver: &result.config,
    };
    RunManifest::new("cycle", &run_cfg, Some(result.seed))
        .input(&args.corpus.corpus, &bytes)
        .write(&args.out)?;
    println!(
        "{} documents, cycle length {:.4}, coherence score {:.4} ({})",
        report.ids.len(),
        report.total_length,
        report.coherence_score,
        args.out.display()
    );
    Ok(())
}

pub fn distances(args: &DistancesArgs, file: &FileConfig) -> Result<(), Failure> {
    let policy = args.corpus.policy(file)?;
    let (corpus, bytes) = load_corpus_args(&args.corpus)?;
    let inc = build_incidence(&corpus).map_err(|e| Failure::usage(e.to_string()))?;
    let matrix = distance_matrix(&inc, policy).map_err(|e| Failure::usage(e.to_string()))?;
    ensure_dir(&args.out)?;
    write_file(&args.out.join("distances.csv"), matrix.to_csv().as_bytes())?;
    write_json(&args.out.join("distances.json"), &matrix)?;
    RunManifest::new("distances", serde_json::json!({ "policy": policy.to_string() }), None)
        .input(&args.corpus.corpus, &bytes)
        .write(&args.out)?;
    println!("{} × {} matrix, cap {} ({})", matrix.len(), matrix.len(), matrix.cap, args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct BenchConfig<'a> {
    seeds: &'a [u64],
    target: f64,
    variant: &'a SolverConfig,
    baseline: &'a SolverConfig,
}

fn resolve_target(args: &BenchArgs, file: &FileConfig, instance: &str) -> Result<f64, Failure> {
    let catalog = || -> Result<OptimumCatalog, Failure> {
        match &args.catalog {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
                OptimumCatalog::parse(&text).map_err(|e| Failure::io(path, e))
            }
            None => Ok(OptimumCatalog::bundled()),
        }
    };
    let best_known = || -> Result<f64, Failure> {
        catalog()?.get(instance).ok_or_else(|| {
            Failure::new(
                exit::CATALOG_MISS,
                format!("instance `{instance}` is not in the optimum catalog"),
            )
        })
    };
    match (args.target.as_deref(), args.target_pct.or(file.target_pct)) {
        (Some("best-known"), _) => best_known(),
        (Some(v), _) => v
            .parse::<f64>()
            .map_err(|_| Failure::usage(format!("--target: expected a length or `best-known`, got `{v}`"))),
        (None, Some(pct)) => Ok(best_known()? * (1.0 + pct / 100.0)),
        (None, None) => Err(Failure::usage("bench needs --target or --target-pct")),
    }
}

fn bench_failure(err: BenchError) -> Failure {
    match err {
        BenchError::Solver(e) => solver_failure(e),
        other => Failure::usage(other.to_string()),
    }
}

pub fn bench(args: &BenchArgs, file: &FileConfig) -> Result<(), Failure> {
    let n_seeds = args
        .seeds
        .or(file.seeds)
        .ok_or_else(|| Failure::usage("bench needs --seeds"))?;
    if n_seeds < MIN_SEEDS {
        return Err(Failure::usage(format!(
            "--seeds {n_seeds}: at least {MIN_SEEDS} seeds are required"
        )));
    }
    let (inst, bytes) = load_instance(&args.input)?;
    let target = resolve_target(args, file, inst.name())?;
    let variant = SolverConfig {
        variant: Variant::Negative,
        ..args.solver.resolve(file)
    };
    variant.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let baseline = variant.as_baseline();
    let seeds: Vec<u64> = (1..=n_seeds as u64).collect();

    let (v, b) = run_benchmark(&inst, &variant, &baseline, &seeds, target).map_err(bench_failure)?;
    let summary = compare(&v, &b).map_err(bench_failure)?;

    ensure_dir(&args.out)?;
    let traces = args.out.join("traces");
    ensure_dir(&traces)?;
    for report in [&v, &b] {
        for run in &report.runs {
            let mut csv = String::from("iteration,best_so_far\n");
            for (i, x) in run.trace.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", i + 1, x));
            }
            let name = format!("{}-{}-{}.csv", report.instance, report.arm, run.seed);
            write_file(&traces.join(name), csv.as_bytes())?;
        }
    }
    write_json(&args.out.join("variant_report.json"), &v)?;
    write_json(&args.out.join("baseline_report.json"), &b)?;
    write_json(&args.out.join("comparison.json"), &summary)?;
    RunManifest::new(
        "bench",
        BenchConfig {
            seeds: &seeds,
            target,
            variant: &v.config,
            baseline: &b.config,
        },
        None,
    )
    .input(&args.input, &bytes)
    .write(&args.out)?;

    let fmt_med = |m: Option<f64>| m.map_or("n/a".to_string(), |x| format!("{x}"));
    println!("instance {} target {target}", inst.name());
    for arm in [&summary.first, &summary.second] {
        println!(
            "  {:<8} median final {}  median iterations to target {}  misses {}",
            arm.arm,
            arm.median_final_length,
            fmt_med(arm.median_iterations_to_target),
            arm.misses
        );
    }
    println!(
        "  sign test: variant faster on {}, baseline faster on {}, ties {}, p = {:.4}",
        summary.sign_test.first_better,
        summary.sign_test.second_better,
        summary.sign_test.ties,
        summary.sign_test.p_value
    );
    Ok(())
}

struct LiveTransport {
    agent: ureq::Agent,
}

impl Transport for LiveTransport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, GuardianError> {
        match self.agent.get(url).call() {
            Ok(resp) => {
                let status = resp.status();
                let body = resp
                    .into_string()
                    .map_err(|e| GuardianError::Transport(e.to_string()))?;
                Ok(HttpResponse { status, body })
            }
            Err(ureq::Error::Status(status, resp)) => Ok(HttpResponse {
                status,
                body: resp.into_string().unwrap_or_default(),
            }),
            Err(e) => Err(GuardianError::Transport(e.to_string())),
        }
    }
}

fn parse_date(flag: &str, v: &str) -> Result<NaiveDate, Failure> {
    NaiveDate::parse_from_str(v, "%Y-%m-%d")
        .map_err(|_| Failure::usage(format!("--{flag}: expected YYYY-MM-DD, got `{v}`")))
}

#[derive(Serialize)]
struct FetchConfig<'a> {
    from: &'a str,
    to: &'a str,
    section: Option<&'a str>,
    page_size: u32,
    max_pages: Option<usize>,
    base_url: &'a str,
    fixture_dir: Option<&'a Path>,
}

pub fn fetch(args: &FetchArgs, file: &FileConfig) -> Result<(), Failure> {
    let api_key = args
        .api_key
        .clone()
        .or_else(|| std::env::var(API_KEY_ENV).ok())
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| Failure::usage(format!("no API key: set {API_KEY_ENV} or pass --api-key")))?;
    let section = args.section.clone().or_else(|| file.section.clone());
    let page_size = args.page_size.or(file.page_size).unwrap_or(50);
    let query = ApiQuery::new(
        parse_date("from", &args.from)?,
        parse_date("to", &args.to)?,
        section.clone(),
        page_size,
        api_key,
    )
    .map_err(|e| Failure::usage(e.to_string()))?;
    let client = ClientConfig {
        base_url: args
            .base_url
            .clone()
            .or_else(|| file.base_url.clone())
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string()),
        max_pages: args.max_pages.or(file.max_pages),
        ..ClientConfig::default()
    };

    let fetched = match &args.fixture_dir {
        Some(dir) => fetch_articles(&query, &mut FixtureTransport::new(dir), &client),
        None => {
            let mut live = LiveTransport {
                agent: ureq::AgentBuilder::new()
                    .timeout(std::time::Duration::from_secs(30))
                    .build(),
            };
            fetch_articles(&query, &mut live, &client)
        }
    };
    let (corpus, report) = fetched.map_err(|e| match e {
        GuardianError::Auth { .. } | GuardianError::InvalidQuery(_) => Failure::usage(e.to_string()),
        other => Failure::new(exit::UPSTREAM, other.to_string()),
    })?;

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let mut buf = Vec::new();
    corpus
        .write_jsonl(&mut buf)
        .map_err(|e| Failure::io(&args.out, e))?;
    write_file(&args.out, &buf)?;
    let manifest_path = PathBuf::from(format!("{}.manifest.json", args.out.display()));
    let manifest = RunManifest::new(
        "fetch",
        FetchConfig {
            from: &args.from,
            to: &args.to,
            section: section.as_deref(),
            page_size,
            max_pages: client.max_pages,
            base_url: &client.base_url,
            fixture_dir: args.fixture_dir.as_deref(),
        },
        None,
    );
    write_json(&manifest_path, &manifest)?;
    println!(
        "{} documents ({} reported, {} dropped without tags) in {} request(s) -> {}",
        corpus.len(),
        report.total_reported,
        report.load.dropped_empty,
        report.requests,
        args.out.display()
    );
    Ok(())
}
