//! Ant colony optimisation with a negative "no-entry" pheromone, applied to
//! TSP benchmarks and to ordering news documents by Q-analysis similarity.
//!
//! The pipeline for documents is
//! [`corpus`] → [`qanalysis`] → [`aco::cycle_corpus`] → [`report`];
//! benchmark instances go [`tsp`] → [`aco::run`] → [`bench`].

pub mod aco;
pub mod bench;
pub mod corpus;
pub mod guardian;
pub mod qanalysis;
pub mod report;
pub mod tsp;

pub use aco::{run, SolveResult, SolverConfig, Variant};
pub use corpus::{load_corpus, Corpus, CorpusFormat, Document};
pub use qanalysis::{build_incidence, distance_matrix, DistanceMatrix, SymmetrizePolicy};
pub use tsp::{parse_tsplib, Tour, TspInstance};

/// Bundled TSPLIB instances.
pub mod instances {
    pub const EIL51: &str = include_str!("../data/eil51.tsp");
    pub const BERLIN52: &str = include_str!("../data/berlin52.tsp");
}
