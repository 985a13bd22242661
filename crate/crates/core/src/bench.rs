//! Paired multi-seed comparison of the negative-trail variant against the
//! ACS baseline.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::binomial;
use thiserror::Error;

use crate::aco::{run, AcoError, SolverConfig, Variant};
use crate::tsp::TspInstance;

/// Minimum number of seeds for a comparison.
pub const MIN_SEEDS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("empty trace")]
    EmptyTrace,
    #[error("need at least {MIN_SEEDS} distinct seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("seed {0} listed twice")]
    DuplicateSeed(u64),
    #[error("target must be positive, got {0}")]
    BadTarget(f64),
    #[error("configs differ in shared parameter `{0}`; the comparison would be confounded")]
    ConfigMismatch(&'static str),
    #[error("reports are not paired: {0}")]
    Unpaired(String),
    #[error(transparent)]
    Solver(#[from] AcoError),
}

/// 1-based index of the first trace entry at or below `target`.
pub fn iterations_to_target(trace: &[f64], target: f64) -> Result<Option<usize>, BenchError> {
    if trace.is_empty() {
        return Err(BenchError::EmptyTrace);
    }
    Ok(trace.iter().position(|&v| v <= target).map(|i| i + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub final_length: f64,
    pub iterations_to_target: Option<usize>,
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub instance: String,
    pub arm: String,
    pub target: f64,
    pub config: SolverConfig,
    pub runs: Vec<RunSummary>,
}

impl BenchReport {
    pub fn seeds(&self) -> Vec<u64> {
        self.runs.iter().map(|r| r.seed).collect()
    }

    pub fn hits(&self) -> usize {
        self.runs.iter().filter(|r| r.iterations_to_target.is_some()).count()
    }
}

fn check_shared(a: &SolverConfig, b: &SolverConfig) -> Result<(), BenchError> {
    let mismatch = [
        ("ants", a.ants == b.ants),
        ("alpha", a.alpha == b.alpha),
        ("beta", a.beta == b.beta),
        ("rho_pos", a.rho_pos == b.rho_pos),
        ("q0", a.q0 == b.q0),
        ("iterations", a.iterations == b.iterations),
    ];
    match mismatch.iter().find(|(_, same)| !same) {
        Some((name, _)) => Err(BenchError::ConfigMismatch(name)),
        None => Ok(()),
    }
}

fn run_arm(
    inst: &TspInstance,
    cfg: &SolverConfig,
    arm: &str,
    seeds: &[u64],
    target: f64,
) -> Result<BenchReport, BenchError> {
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SolverConfig {
                seed,
                target: None,
                ..cfg.clone()
            };
            let r = run(inst, &cfg)?;
            Ok(RunSummary {
                seed,
                final_length: r.best_length,
                iterations_to_target: iterations_to_target(&r.trace, target)?,
                trace: r.trace,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok(BenchReport {
        instance: inst.name().to_string(),
        arm: arm.to_string(),
        target,
        config: SolverConfig {
            seed: 0,
            target: None,
            ..cfg.resolved(inst.len())
        },
        runs,
    })
}

/// Runs both arms on every seed; rows come back in seed-list order.
pub fn run_benchmark(
    inst: &TspInstance,
    variant: &SolverConfig,
    baseline: &SolverConfig,
    seeds: &[u64],
    target: f64,
) -> Result<(BenchReport, BenchReport), BenchError> {
    let mut seen = HashSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(BenchError::DuplicateSeed(s));
        }
    }
    if seeds.len() < MIN_SEEDS {
        return Err(BenchError::TooFewSeeds(seeds.len()));
    }
    if !(target.is_finite() && target > 0.0) {
        return Err(BenchError::BadTarget(target));
    }
    check_shared(&variant.resolved(inst.len()), &baseline.resolved(inst.len()))?;
    let v = run_arm(inst, variant, arm_name(variant), seeds, target)?;
    let b = run_arm(inst, baseline, "baseline", seeds, target)?;
    Ok((v, b))
}

fn arm_name(cfg: &SolverConfig) -> &'static str {
    match cfg.variant {
        Variant::Negative => "variant",
        Variant::Acs => "acs",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub median_final_length: f64,
    pub median_iterations_to_target: Option<f64>,
    pub hits: usize,
    pub misses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub seed: u64,
    /// first arm minus second arm
    pub final_length_diff: f64,
    pub iterations_diff: Option<i64>,
}

/// Two-sided exact sign test; zero differences are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub pairs: usize,
    pub ties: usize,
    /// Pairs where the first arm needed fewer iterations.
    pub first_better: usize,
    pub second_better: usize,
    pub p_value: f64,
}

impl SignTest {
    pub fn from_differences(diffs: &[i64]) -> Self {
        let first_better = diffs.iter().filter(|&&d| d < 0).count();
        let second_better = diffs.iter().filter(|&&d| d > 0).count();
        let ties = diffs.len() - first_better - second_better;
        let n = first_better + second_better;
        let p_value = if n == 0 {
            1.0
        } else {
            let k = first_better.min(second_better) as u64;
            let tail: f64 = (0..=k).map(|i| binomial(n as u64, i)).sum();
            (2.0 * tail / 2f64.powi(n as i32)).min(1.0)
        };
        Self {
            pairs: diffs.len(),
            ties,
            first_better,
            second_better,
            p_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub instance: String,
    pub target: f64,
    pub first: ArmSummary,
    pub second: ArmSummary,
    pub paired: Vec<PairedRow>,
    /// Seeds left out of the iteration test because an arm missed the target.
    pub excluded_seeds: Vec<u64>,
    pub sign_test: SignTest,
}

/// Median of a nonempty sample; mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

fn summarize(r: &BenchReport) -> ArmSummary {
    let finals: Vec<f64> = r.runs.iter().map(|x| x.final_length).collect();
    let iters: Vec<f64> = r
        .runs
        .iter()
        .filter_map(|x| x.iterations_to_target.map(|i| i as f64))
        .collect();
    ArmSummary {
        arm: r.arm.clone(),
        median_final_length: median(&finals).unwrap_or(f64::NAN),
        median_iterations_to_target: median(&iters),
        hits: iters.len(),
        misses: r.runs.len() - iters.len(),
    }
}

/// Paired summary of two arms run on the same seeds and target.
pub fn compare(first: &BenchReport, second: &BenchReport) -> Result<ComparisonSummary, BenchError> {
    if first.instance != second.instance {
        return Err(BenchError::Unpaired(format!(
            "instances {} and {}",
            first.instance, second.instance
        )));
    }
    if first.target != second.target {
        return Err(BenchError::Unpaired(format!(
            "targets {} and {}",
            first.target, second.target
        )));
    }
    if first.seeds() != second.seeds() {
        return Err(BenchError::Unpaired("seed lists differ".into()));
    }
    let mut paired = Vec::with_capacity(first.runs.len());
    let mut excluded = Vec::new();
    let mut diffs = Vec::new();
    for (a, b) in first.runs.iter().zip(&second.runs) {
        let iterations_diff = match (a.iterations_to_target, b.iterations_to_target) {
            (Some(x), Some(y)) => {
                let d = x as i64 - y as i64;
                diffs.push(d);
                Some(d)
            }
            _ => {
                excluded.push(a.seed);
                None
            }
        };
        paired.push(PairedRow {
            seed: a.seed,
            final_length_diff: a.final_length - b.final_length,
            iterations_diff,
        });
    }
    Ok(ComparisonSummary {
        instance: first.instance.clone(),
        target: first.target,
        first: summarize(first),
        second: summarize(second),
        paired,
        excluded_seeds: excluded,
        sign_test: SignTest::from_differences(&diffs),
    })
}
