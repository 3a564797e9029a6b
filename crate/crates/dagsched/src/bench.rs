//! Benchmark harness: runs a set of scheduling methods over a set of
//! instances and aggregates makespans, sampling statistics, timings and
//! relative improvement over the best heuristic baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genmaps::{
    rollout_skip_extended, Mode, PolicyConfig, ScoreTable, SkipParams,
};
use crate::heuristics::{
    run_insertion_heuristic, run_list_heuristic, InsertionVariant, PoolRule, PriorityRule,
};
use crate::model::{makespan, Instance};
use crate::orderspace::DEFAULT_ENUM_CAP;
use crate::search::brute_force_optimum;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("method {method} failed on instance {instance}: {message}")]
    MethodFailed {
        method: String,
        instance: String,
        message: String,
    },
}

/// A method the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    /// List heuristic; the reported makespan is the best over pool rules.
    List(PriorityRule),
    Insertion(InsertionVariant),
    /// Exhaustive optimum over order fibers (small instances only).
    Oracle,
    /// Best-of-n sampling rollouts with a constant score table.
    Sampling,
}

impl BenchMethod {
    pub fn parse(name: &str) -> Result<BenchMethod, BenchError> {
        Ok(match name {
            "sft" => BenchMethod::List(PriorityRule::Sft),
            "mopnr" => BenchMethod::List(PriorityRule::Mopnr),
            "cp" => BenchMethod::List(PriorityRule::Cp),
            "tetris" => BenchMethod::List(PriorityRule::Tetris),
            "heft" => BenchMethod::Insertion(InsertionVariant::Heft),
            "peft" => BenchMethod::Insertion(InsertionVariant::Peft),
            "ippts" => BenchMethod::Insertion(InsertionVariant::Ippts),
            "oracle" | "sgs-oracle" => BenchMethod::Oracle,
            "sampling" => BenchMethod::Sampling,
            other => return Err(BenchError::UnknownMethod(other.to_string())),
        })
    }

    fn is_heuristic(self) -> bool {
        matches!(self, BenchMethod::List(_) | BenchMethod::Insertion(_))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchEntry {
    pub instance: String,
    pub method: String,
    /// Best makespan the method achieved (min over rollouts for sampling).
    pub makespan: f64,
    /// Sampling only: mean of the per-seed best-of-n makespans.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Sampling only: standard deviation of the per-seed best-of-n makespans.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    /// Improvement over the best heuristic on the same instance, in percent;
    /// positive means better than the baseline. Absent for heuristics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improvement_pct: Option<f64>,
    /// Wall time of the generation phase (score/priority setup excluded);
    /// only recorded when timing is requested, to keep reports reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BenchReport {
    pub entries: Vec<BenchEntry>,
}

impl BenchReport {
    /// Entries as a CSV table (header + one row per entry).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,method,makespan,mean,std,improvement_pct,wall_ms\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.instance,
                e.method,
                e.makespan,
                opt(e.mean),
                opt(e.std),
                opt(e.improvement_pct),
                opt(e.wall_ms),
            ));
        }
        out
    }
}

const POOL_RULES: [PoolRule; 3] = [PoolRule::Eft, PoolRule::TetrisScore, PoolRule::Balance];

fn run_method(
    inst: &Instance,
    name: &str,
    method: BenchMethod,
    samples: usize,
    seeds: &[u64],
    timed: bool,
) -> Result<(f64, Option<f64>, Option<f64>, Option<f64>), String> {
    let started = Instant::now();
    let result = match method {
        BenchMethod::List(rule) => {
            let mut best = f64::INFINITY;
            for pr in POOL_RULES {
                let x = run_list_heuristic(inst, rule, pr).map_err(|e| e.to_string())?;
                best = best.min(makespan(inst, &x).unwrap());
            }
            (best, None, None)
        }
        BenchMethod::Insertion(variant) => {
            let x = run_insertion_heuristic(inst, variant).map_err(|e| e.to_string())?;
            (makespan(inst, &x).unwrap(), None, None)
        }
        BenchMethod::Oracle => {
            let (_, m) = brute_force_optimum(inst, DEFAULT_ENUM_CAP).map_err(|e| e.to_string())?;
            (m, None, None)
        }
        BenchMethod::Sampling => {
            let table = ScoreTable::constant(inst, 0.0, SkipParams::default());
            let mut per_seed = Vec::with_capacity(seeds.len());
            for &base in seeds {
                let mut best = f64::INFINITY;
                // Rollout seeds base..base+samples so larger sample counts
                // use a superset of the smaller ones.
                for i in 0..samples as u64 {
                    let cfg = PolicyConfig { mode: Mode::Sampling, seed: base + i };
                    let (x, _) =
                        rollout_skip_extended(inst, &table, cfg).map_err(|e| e.to_string())?;
                    best = best.min(makespan(inst, &x).unwrap());
                }
                per_seed.push(best);
            }
            let n = per_seed.len() as f64;
            let mean = per_seed.iter().sum::<f64>() / n;
            let var = per_seed.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
            let overall = per_seed.iter().copied().fold(f64::INFINITY, f64::min);
            (overall, Some(mean), Some(var.sqrt()))
        }
    };
    let _ = name;
    let wall = timed.then(|| started.elapsed().as_secs_f64() * 1000.0);
    Ok((result.0, result.1, result.2, wall))
}

/// Runs every method on every instance. Sampling methods require a nonempty
/// seed list and a positive sample count.
pub fn run_benchmark(
    instances: &[(String, Instance)],
    methods: &[String],
    samples: usize,
    seeds: &[u64],
    timed: bool,
) -> Result<BenchReport, BenchError> {
    let parsed: Vec<(String, BenchMethod)> = methods
        .iter()
        .map(|m| BenchMethod::parse(m).map(|b| (m.clone(), b)))
        .collect::<Result<_, _>>()?;
    let mut report = BenchReport::default();
    for (iname, inst) in instances {
        // First pass: heuristic baselines set the improvement reference.
        let mut results = Vec::new();
        for (mname, method) in &parsed {
            let (m, mean, std, wall) = run_method(inst, mname, *method, samples, seeds, timed)
                .map_err(|message| BenchError::MethodFailed {
                    method: mname.clone(),
                    instance: iname.clone(),
                    message,
                })?;
            results.push((mname.clone(), *method, m, mean, std, wall));
        }
        let baseline = results
            .iter()
            .filter(|(_, method, ..)| method.is_heuristic())
            .map(|&(_, _, m, ..)| m)
            .fold(f64::INFINITY, f64::min);
        for (mname, method, m, mean, std, wall) in results {
            let improvement_pct = (!method.is_heuristic() && baseline.is_finite())
                .then(|| (baseline - m) / baseline * 100.0);
            report.entries.push(BenchEntry {
                instance: iname.clone(),
                method: mname,
                makespan: m,
                mean,
                std,
                improvement_pct,
                wall_ms: wall,
            });
        }
    }
    Ok(report)
}
