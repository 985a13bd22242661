//! Ant colony solver with a positive attraction trail and a negative
//! "no-entry" trail.
//!
//! Ants build tours with the Ant Colony System pseudo-random proportional
//! rule. The desirability of moving from `i` to `j` is
//!
//! ```text
//! w_ij = tau_pos_ij^alpha * eta_ij^beta * (1 + tau_neg_ij)^(-gamma)
//! ```
//!
//! After every iteration the positive trail is reinforced along the
//! best-so-far tour and the negative trail is deposited on the edges of the
//! iteration-worst tour that the iteration-best tour does not use. With
//! [`Variant::Acs`] the negative trail is never read or written, which is the
//! classical single-pheromone baseline.
//!
//! # Reproducibility
//!
//! Each ant draws from its own ChaCha8 stream keyed by
//! `(seed, iteration, ant)`. Within a stream the draw order is fixed: one
//! `usize` for the start city, then for every step with at least two
//! candidates one `f64` for the exploit test and, when exploring, one more
//! `f64` for the roulette wheel. All ants of an iteration read the same
//! pheromone snapshot; their local updates are applied afterwards in ant
//! order, so serial and parallel construction agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qanalysis::DistanceMatrix;
use crate::tsp::{canonical_order, cycle_cost, nearest_neighbour, Tour, TspError, TspInstance};

/// Floor for edge costs when computing the heuristic `1/cost`.
pub const MIN_COST: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AcoError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Instance(#[from] TspError),
    #[error("pheromone update needs at least one tour")]
    NoTours,
    #[error("every city has been visited")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Ant Colony System, positive trail only.
    Acs,
    /// Positive trail plus the negative no-entry trail.
    #[default]
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Number of ants; `None` means one ant per city.
    pub ants: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho_pos: f64,
    pub rho_neg: f64,
    pub q0: f64,
    pub neg_deposit: f64,
    pub tau_neg_max: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Stop as soon as the best tour is no longer than this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Build the ants' tours on the rayon pool. Results do not depend on it.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Negative,
            ants: None,
            alpha: 1.0,
            beta: 2.0,
            gamma: 1.0,
            rho_pos: 0.1,
            rho_neg: 0.05,
            q0: 0.9,
            neg_deposit: 1.0,
            tau_neg_max: 10.0,
            iterations: 1000,
            seed: 0,
            target: None,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    /// Same shared parameters, baseline update rule.
    pub fn as_baseline(&self) -> Self {
        Self {
            variant: Variant::Acs,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), AcoError> {
        let bad = |msg: String| Err(AcoError::InvalidConfig(msg));
        let nonneg = |name: &str, v: f64| -> Result<(), AcoError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(AcoError::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        if self.ants == Some(0) {
            return bad("ants must be positive".into());
        }
        nonneg("alpha", self.alpha)?;
        nonneg("beta", self.beta)?;
        nonneg("gamma", self.gamma)?;
        nonneg("neg_deposit", self.neg_deposit)?;
        for (name, v) in [("rho_pos", self.rho_pos), ("rho_neg", self.rho_neg)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.q0) {
            return bad(format!("q0 must lie in [0, 1], got {}", self.q0));
        }
        if !(self.tau_neg_max.is_finite() && self.tau_neg_max > 0.0) {
            return bad(format!("tau_neg_max must be > 0, got {}", self.tau_neg_max));
        }
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if let Some(t) = self.target {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("target must be > 0, got {t}"));
            }
        }
        Ok(())
    }

    /// The config with the ant count filled in for an `n`-city instance.
    pub fn resolved(&self, n: usize) -> Self {
        Self {
            ants: Some(self.ants.unwrap_or(n)),
            ..self.clone()
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The random stream of one ant in one iteration.
pub fn ant_rng(seed: u64, iteration: usize, ant: usize) -> ChaCha8Rng {
    let key = mix(mix(mix(seed) ^ iteration as u64) ^ (ant as u64).rotate_left(32));
    ChaCha8Rng::seed_from_u64(key)
}

/// Mutable solver state: both trails plus the best tour found so far.
#[derive(Debug, Clone)]
pub struct Colony<'a> {
    inst: &'a TspInstance,
    cfg: SolverConfig,
    n: usize,
    tau0: f64,
    tau_pos: Vec<f64>,
    tau_neg: Vec<f64>,
    eta_pow: Vec<f64>,
    choice: Vec<f64>,
    best: Option<Tour>,
    iteration: usize,
}

impl<'a> Colony<'a> {
    /// Sets `tau_pos ≡ 1/(n·L_nn)`, `tau_neg ≡ 0`, and caches `eta^beta`.
    pub fn new(inst: &'a TspInstance, cfg: &SolverConfig) -> Result<Self, AcoError> {
        cfg.validate()?;
        inst.require_cycle()?;
        let n = inst.len();
        let cfg = cfg.resolved(n);
        let l_nn = nearest_neighbour(inst, 0)?.length;
        let tau0 = 1.0 / (n as f64 * l_nn.max(MIN_COST));
        let mut eta_pow = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let eta = 1.0 / inst.cost(i, j).max(MIN_COST);
                    eta_pow[i * n + j] = eta.powf(cfg.beta);
                }
            }
        }
        let mut colony = Self {
            inst,
            cfg,
            n,
            tau0,
            tau_pos: vec![tau0; n * n],
            tau_neg: vec![0.0; n * n],
            eta_pow,
            choice: vec![0.0; n * n],
            best: None,
            iteration: 0,
        };
        colony.refresh_choice();
        Ok(colony)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn tau_pos(&self, i: usize, j: usize) -> f64 {
        self.tau_pos[i * self.n + j]
    }

    pub fn tau_neg(&self, i: usize, j: usize) -> f64 {
        self.tau_neg[i * self.n + j]
    }

    /// Overwrites both directions of an edge's positive trail.
    pub fn set_tau_pos(&mut self, i: usize, j: usize, v: f64) {
        self.tau_pos[i * self.n + j] = v;
        self.tau_pos[j * self.n + i] = v;
        self.refresh_choice();
    }

    /// Overwrites both directions of an edge's negative trail.
    pub fn set_tau_neg(&mut self, i: usize, j: usize, v: f64) {
        self.tau_neg[i * self.n + j] = v;
        self.tau_neg[j * self.n + i] = v;
        self.refresh_choice();
    }

    pub fn best(&self) -> Option<&Tour> {
        self.best.as_ref()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    #[inline]
    fn weight(&self, idx: usize) -> f64 {
        let tau = self.tau_pos[idx];
        let attract = if self.cfg.alpha == 1.0 {
            tau
        } else {
            tau.powf(self.cfg.alpha)
        } * self.eta_pow[idx];
        match self.cfg.variant {
            Variant::Acs => attract,
            Variant::Negative => attract * (1.0 + self.tau_neg[idx]).powf(-self.cfg.gamma),
        }
    }

    fn refresh_choice(&mut self) {
        for idx in 0..self.n * self.n {
            self.choice[idx] = self.weight(idx);
        }
    }

    /// Unnormalized desirability of every unvisited city from `current`.
    pub fn transition_weights(
        &self,
        current: usize,
        visited: &[bool],
    ) -> Result<Vec<(usize, f64)>, AcoError> {
        let out: Vec<(usize, f64)> = (0..self.n)
            .filter(|&j| !visited[j] && j != current)
            .map(|j| (j, self.weight(current * self.n + j)))
            .collect();
        if out.is_empty() {
            return Err(AcoError::NoCandidates);
        }
        Ok(out)
    }

    /// [`Self::transition_weights`] normalized to probabilities.
    pub fn transition_probabilities(
        &self,
        current: usize,
        visited: &[bool],
    ) -> Result<Vec<(usize, f64)>, AcoError> {
        let w = self.transition_weights(current, visited)?;
        let total: f64 = w.iter().map(|(_, x)| x).sum();
        Ok(w.into_iter().map(|(j, x)| (j, x / total)).collect())
    }

    /// One ant's walk over the current snapshot. Does not touch the trails.
    fn walk(&self, rng: &mut ChaCha8Rng) -> Tour {
        let n = self.n;
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut current = rng.gen_range(0..n);
        visited[current] = true;
        order.push(current);
        for step in 1..n {
            let remaining = n - step;
            let next = if remaining == 1 {
                (0..n).find(|&j| !visited[j]).expect("one city left")
            } else {
                let row = &self.choice[current * n..(current + 1) * n];
                if rng.gen::<f64>() < self.cfg.q0 {
                    let mut best = usize::MAX;
                    let mut best_w = f64::NEG_INFINITY;
                    for (j, &w) in row.iter().enumerate() {
                        if !visited[j] && w > best_w {
                            best_w = w;
                            best = j;
                        }
                    }
                    best
                } else {
                    let total: f64 = row
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| !visited[*j])
                        .map(|(_, w)| w)
                        .sum();
                    let mut r = rng.gen::<f64>() * total;
                    let mut pick = usize::MAX;
                    for (j, &w) in row.iter().enumerate() {
                        if visited[j] {
                            continue;
                        }
                        pick = j;
                        r -= w;
                        if r < 0.0 {
                            break;
                        }
                    }
                    pick
                }
            };
            visited[next] = true;
            order.push(next);
            current = next;
        }
        let order = canonical_order(&order);
        let length = cycle_cost(self.inst, &order);
        Tour { order, length }
    }

    fn local_update(&mut self, tour: &Tour) {
        let (rho, tau0, n) = (self.cfg.rho_pos, self.tau0, self.n);
        for (a, b) in tour.edges() {
            let v = (1.0 - rho) * self.tau_pos[a * n + b] + rho * tau0;
            self.tau_pos[a * n + b] = v;
            self.tau_pos[b * n + a] = v;
        }
    }

    /// Builds one tour from the current trails and applies the ACS local
    /// update to its edges.
    pub fn construct_tour(&mut self, rng: &mut ChaCha8Rng) -> Tour {
        self.refresh_choice();
        let tour = self.walk(rng);
        self.local_update(&tour);
        tour
    }

    /// Global update after an iteration: evaporation, positive deposit on the
    /// best-so-far tour, negative deposit on worst-minus-best edges. The
    /// positive trail is floored at `tau0`.
    pub fn update_pheromones(&mut self, tours: &[Tour]) -> Result<(), AcoError> {
        let mut it_best = tours.first().ok_or(AcoError::NoTours)?;
        let mut it_worst = it_best;
        for t in &tours[1..] {
            if t.length < it_best.length {
                it_best = t;
            }
            if t.length > it_worst.length {
                it_worst = t;
            }
        }
        if self.best.as_ref().is_none_or(|b| it_best.length < b.length) {
            self.best = Some(it_best.clone());
        }

        let n = self.n;
        let (keep, tau0) = (1.0 - self.cfg.rho_pos, self.tau0);
        for v in self.tau_pos.iter_mut() {
            *v = (*v * keep).max(tau0);
        }
        let best = self.best.as_ref().expect("set above");
        let deposit = self.cfg.rho_pos / best.length.max(MIN_COST);
        for (a, b) in best.edges() {
            self.tau_pos[a * n + b] += deposit;
            self.tau_pos[b * n + a] = self.tau_pos[a * n + b];
        }

        if self.cfg.variant == Variant::Negative {
            let keep = 1.0 - self.cfg.rho_neg;
            for v in self.tau_neg.iter_mut() {
                *v *= keep;
            }
            let mut best_edges: Vec<(usize, usize)> = it_best.edges().collect();
            best_edges.sort_unstable();
            let cap = self.cfg.tau_neg_max;
            for e @ (a, b) in it_worst.edges() {
                if best_edges.binary_search(&e).is_err() {
                    let v = (self.tau_neg[a * n + b] + self.cfg.neg_deposit).min(cap);
                    self.tau_neg[a * n + b] = v;
                    self.tau_neg[b * n + a] = v;
                }
            }
        }
        Ok(())
    }

    /// Runs one full iteration and returns the best-so-far length.
    pub fn iterate(&mut self) -> f64 {
        self.refresh_choice();
        let (seed, it) = (self.cfg.seed, self.iteration);
        let ants = self.cfg.ants.expect("resolved at construction");
        let tours: Vec<Tour> = if self.cfg.parallel {
            (0..ants)
                .into_par_iter()
                .map(|k| self.walk(&mut ant_rng(seed, it, k)))
                .collect()
        } else {
            (0..ants)
                .map(|k| self.walk(&mut ant_rng(seed, it, k)))
                .collect()
        };
        for t in &tours {
            self.local_update(t);
        }
        self.update_pheromones(&tours)
            .expect("at least one ant per iteration");
        self.iteration += 1;
        self.best.as_ref().expect("set by the update").length
    }
}

/// Outcome of one solver run, self-describing enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub instance: String,
    pub config: SolverConfig,
    pub seed: u64,
    pub best_order: Vec<usize>,
    pub best_length: f64,
    /// Best-so-far length after each iteration.
    pub trace: Vec<f64>,
    pub iterations_run: usize,
}

impl SolveResult {
    pub fn best(&self) -> Tour {
        Tour {
            order: self.best_order.clone(),
            length: self.best_length,
        }
    }

    /// `iteration,best_so_far` rows, 1-based.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,best_so_far\n");
        for (i, v) in self.trace.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, v));
        }
        out
    }
}

/// Runs the configured number of iterations, or until `target` is met.
pub fn run(inst: &TspInstance, cfg: &SolverConfig) -> Result<SolveResult, AcoError> {
    let mut colony = Colony::new(inst, cfg)?;
    let total = colony.cfg.iterations;
    let mut trace = Vec::with_capacity(total);
    for _ in 0..total {
        let best = colony.iterate();
        trace.push(best);
        if colony.cfg.target.is_some_and(|t| best <= t) {
            break;
        }
    }
    let best = colony.best.clone().expect("at least one iteration ran");
    Ok(SolveResult {
        instance: inst.name().to_string(),
        config: colony.cfg.clone(),
        seed: colony.cfg.seed,
        best_order: best.order,
        best_length: best.length,
        iterations_run: trace.len(),
        trace,
    })
}

/// A reading order over documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentCycle {
    pub ids: Vec<String>,
    pub order: Vec<usize>,
    /// `hops[k]` is the distance from `ids[k]` to `ids[k + 1]`, wrapping.
    pub hops: Vec<f64>,
    pub total_length: f64,
    #[serde(skip)]
    pub result: Option<SolveResult>,
}

/// Solves the document distance matrix as a TSP and returns the cycle
/// starting at the first document.
pub fn cycle_corpus(matrix: &DistanceMatrix, cfg: &SolverConfig) -> Result<DocumentCycle, AcoError> {
    let inst = matrix.to_instance("corpus");
    let result = run(&inst, cfg)?;
    let order = result.best_order.clone();
    let n = order.len();
    let hops: Vec<f64> = (0..n).map(|k| matrix.get(order[k], order[(k + 1) % n])).collect();
    Ok(DocumentCycle {
        ids: order.iter().map(|&i| matrix.ids[i].clone()).collect(),
        total_length: result.best_length,
        order,
        hops,
        result: Some(result),
    })
}
