//! Scenario × algorithm × seed sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::Algorithm;
use crate::engine::run;
use crate::scenario::Scenario;
use crate::ScenarioError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRun {
    pub seed: u64,
    pub converged: bool,
    pub consensus_step: Option<u64>,
    pub consensus_time_s: Option<f64>,
    pub max_backtrack_count: u32,
    pub collided: bool,
    /// Set when the run could not be executed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchCell {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub runs: Vec<BatchRun>,
}

impl BatchCell {
    pub fn converged_count(&self) -> usize {
        self.runs.iter().filter(|r| r.converged).count()
    }

    /// Mean consensus time over converged runs.
    pub fn mean_time_s(&self) -> Option<f64> {
        mean(self.runs.iter().filter_map(|r| r.consensus_time_s))
    }

    pub fn mean_max_backtracks(&self) -> Option<f64> {
        mean(self.runs.iter().filter(|r| r.error.is_none()).map(|r| f64::from(r.max_backtrack_count)))
    }

    pub fn time_for_seed(&self, seed: u64) -> Option<f64> {
        self.runs.iter().find(|r| r.seed == seed).and_then(|r| r.consensus_time_s)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub scenarios: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    /// Row-major over `algorithms` × `scenarios`.
    pub cells: Vec<BatchCell>,
}

impl ComparisonTable {
    pub fn cell(&self, scenario: &str, algorithm: Algorithm) -> Option<&BatchCell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.algorithm == algorithm)
    }

    /// Plain-text table of mean consensus times; `–` marks cells with no converged run.
    pub fn render(&self) -> String {
        let width = self.scenarios.iter().map(String::len).max().unwrap_or(0).max(16);
        let mut out = String::new();
        let _ = write!(out, "{:<14}", "algorithm");
        for s in &self.scenarios {
            let _ = write!(out, " | {s:>width$}");
        }
        out.push('\n');
        for algorithm in &self.algorithms {
            let _ = write!(out, "{:<14}", algorithm.as_str());
            for s in &self.scenarios {
                let text = match self.cell(s, *algorithm) {
                    Some(cell) => match cell.mean_time_s() {
                        Some(t) => format!("{t:.1} s ({}/{})", cell.converged_count(), cell.runs.len()),
                        None => "–".to_string(),
                    },
                    None => "–".to_string(),
                };
                let _ = write!(out, " | {text:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

fn run_one(scenario: &Scenario, algorithm: Algorithm, seed: u64) -> BatchRun {
    let variant = scenario.clone().with_algorithm(algorithm).with_seed(seed);
    match run(&variant) {
        Ok(result) => BatchRun {
            seed,
            converged: result.converged,
            consensus_step: result.consensus_step,
            consensus_time_s: result.consensus_time_s,
            max_backtrack_count: result.max_backtrack_count(),
            collided: result.collision.is_some(),
            error: None,
        },
        Err(e) => BatchRun {
            seed,
            converged: false,
            consensus_step: None,
            consensus_time_s: None,
            max_backtrack_count: 0,
            collided: false,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every (scenario, algorithm, seed) combination on up to `parallel`
/// threads (0 means all cores). Failed runs are recorded in their cell.
pub fn batch_compare(
    scenarios: &[Scenario],
    algorithms: &[Algorithm],
    seeds: &[u64],
    parallel: usize,
) -> Result<ComparisonTable, ScenarioError> {
    if scenarios.is_empty() || algorithms.is_empty() || seeds.is_empty() {
        return Err(ScenarioError::Invalid(
            "batch needs at least one scenario, algorithm and seed".into(),
        ));
    }
    let jobs: Vec<(usize, Algorithm, u64)> = algorithms
        .iter()
        .flat_map(|&a| (0..scenarios.len()).flat_map(move |s| seeds.iter().map(move |&seed| (s, a, seed))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| ScenarioError::Invalid(format!("thread pool: {e}")))?;
    let results: Vec<BatchRun> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, a, seed)| run_one(&scenarios[s], a, seed))
            .collect()
    });

    let mut cells = Vec::new();
    let mut results = results.into_iter();
    for &algorithm in algorithms {
        for scenario in scenarios {
            cells.push(BatchCell {
                scenario: scenario.name.clone(),
                algorithm,
                runs: results.by_ref().take(seeds.len()).collect(),
            });
        }
    }
    Ok(ComparisonTable {
        scenarios: scenarios.iter().map(|s| s.name.clone()).collect(),
        algorithms: algorithms.to_vec(),
        seeds: seeds.to_vec(),
        cells,
    })
}

/// Batch description: scenario paths (relative to the manifest), algorithms and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub scenarios: Vec<PathBuf>,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
}

fn all_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Manifest, Vec<Scenario>), ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let manifest: Manifest = toml::from_str(&text)
            .map_err(|e| ScenarioError::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let scenarios = manifest
            .scenarios
            .iter()
            .map(|p| crate::scenario_file::load_scenario(base.join(p)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((manifest, scenarios))
    }
}
