//! Browser demo: instance generation, heuristic solving, and the
//! list-scheduling counterexample, exposed through wasm-bindgen.
//!
//! Every export takes and returns JSON strings so the page needs no
//! generated glue types; errors come back as `{"error": "..."}` objects.

use dagsched::datagen::{augment_heterogeneous, gen_dag, gen_durations_gmm, DagKind, HetProfile};
use dagsched::fixtures::{p0, p0_list_schedule, p0_optimal_schedule};
use dagsched::genmaps::{rollout_skip_extended, Mode, PolicyConfig, ScoreTable, SkipParams};
use dagsched::heuristics::{
    run_insertion_heuristic, run_list_heuristic, InsertionVariant, PoolRule, PriorityRule,
};
use dagsched::model::{makespan, Instance, Schedule};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Gantt-friendly view of a schedule: one bar per task with its pool,
/// start, end, and resource demand.
fn schedule_view(inst: &Instance, x: &Schedule) -> Result<serde_json::Value, String> {
    let mut bars = Vec::new();
    for t in &inst.tasks {
        let (pool, start) = x.get(t.id).ok_or_else(|| format!("task {} unscheduled", t.id))?;
        let dur = inst.actual_time(t.id, pool).map_err(|e| e.to_string())?;
        bars.push(json!({
            "task": t.id,
            "pool": pool,
            "start": start,
            "end": start + dur,
            "demand": t.demand,
        }));
    }
    let m = makespan(inst, x).map_err(|e| e.to_string())?;
    Ok(json!({ "makespan": m, "bars": bars }))
}

fn parse_instance(instance_json: &str) -> Result<Instance, String> {
    serde_json::from_str(instance_json).map_err(|e| format!("bad instance JSON: {e}"))
}

fn gen_instance_impl(kind: &str, n: usize, seed: u64, profile: &str) -> Result<String, String> {
    let kind = match kind {
        "er" => DagKind::ErdosRenyi { p: 0.05 },
        "sbm" => DagKind::StochasticBlock { p_in: 0.3, p_out: 0.005 },
        "layered" => DagKind::Layered { sigma_n: 0.75, rho_e: 0.2, rho_s: 0.14 },
        other => return Err(format!("unknown DAG kind '{other}' (er, sbm, layered)")),
    };
    let profile = match profile {
        "three_pool" => HetProfile::three_pool(),
        "computation_graph" => HetProfile::computation_graph(),
        other => {
            return Err(format!(
                "unknown profile '{other}' (three_pool, computation_graph)"
            ))
        }
    };
    let edges = gen_dag(kind, n, seed).map_err(|e| e.to_string())?;
    let durations = gen_durations_gmm(n, seed.wrapping_add(1));
    let inst =
        augment_heterogeneous(&edges, &durations, &profile, seed.wrapping_add(2))
            .map_err(|e| e.to_string())?;
    serde_json::to_string_pretty(&inst).map_err(|e| e.to_string())
}

fn run_method(inst: &Instance, method: &str) -> Result<Schedule, String> {
    let parts: Vec<&str> = method.split(':').collect();
    match parts.as_slice() {
        ["list", prule, poolrule] => {
            let prule = match *prule {
                "sft" => PriorityRule::Sft,
                "mopnr" => PriorityRule::Mopnr,
                "cp" => PriorityRule::Cp,
                "tetris" => PriorityRule::Tetris,
                other => return Err(format!("unknown priority rule '{other}'")),
            };
            let poolrule = match *poolrule {
                "eft" => PoolRule::Eft,
                "tetris-score" => PoolRule::TetrisScore,
                "balance" => PoolRule::Balance,
                other => return Err(format!("unknown pool rule '{other}'")),
            };
            run_list_heuristic(inst, prule, poolrule).map_err(|e| e.to_string())
        }
        ["heft"] => run_insertion_heuristic(inst, InsertionVariant::Heft).map_err(|e| e.to_string()),
        ["peft"] => run_insertion_heuristic(inst, InsertionVariant::Peft).map_err(|e| e.to_string()),
        ["ippts"] => {
            run_insertion_heuristic(inst, InsertionVariant::Ippts).map_err(|e| e.to_string())
        }
        ["sampling", seed, samples] => {
            let seed: u64 = seed.parse().map_err(|_| "sampling seed must be an integer")?;
            let samples: u64 =
                samples.parse().map_err(|_| "sample count must be an integer")?;
            if samples == 0 {
                return Err("sample count must be positive".into());
            }
            let table = ScoreTable::constant(inst, 0.0, SkipParams::default());
            let mut best: Option<(f64, Schedule)> = None;
            for s in seed..seed + samples {
                let cfg = PolicyConfig { mode: Mode::Sampling, seed: s };
                let (x, _) = rollout_skip_extended(inst, &table, cfg).map_err(|e| e.to_string())?;
                let m = makespan(inst, &x).map_err(|e| e.to_string())?;
                if best.as_ref().map_or(true, |(bm, _)| m < *bm) {
                    best = Some((m, x));
                }
            }
            Ok(best.expect("at least one sample").1)
        }
        _ => Err(format!(
            "unknown method '{method}' (list:<prio>:<pool>, heft, peft, ippts, sampling:<seed>:<n>)"
        )),
    }
}

fn solve_impl(instance_json: &str, method: &str) -> Result<String, String> {
    let inst = parse_instance(instance_json)?;
    let x = run_method(&inst, method)?;
    let view = schedule_view(&inst, &x)?;
    Ok(json!({ "method": method, "schedule": view }).to_string())
}

fn counterexample_impl() -> Result<String, String> {
    let inst = p0();
    let list = schedule_view(&inst, &p0_list_schedule())?;
    let optimal = schedule_view(&inst, &p0_optimal_schedule())?;
    let gap = list["makespan"].as_f64().unwrap() - optimal["makespan"].as_f64().unwrap();
    Ok(json!({ "list": list, "optimal": optimal, "gap": gap }).to_string())
}

/// Generates a heterogeneous random instance and returns it as JSON.
/// `kind` is one of "er", "sbm", "layered"; `profile` is "three_pool" or
/// "computation_graph".
#[wasm_bindgen]
pub fn gen_instance(kind: &str, n: usize, seed: u64, profile: &str) -> String {
    gen_instance_impl(kind, n, seed, profile).unwrap_or_else(err_json)
}

/// Solves an instance with a named method and returns the schedule plus
/// Gantt bars as JSON. Methods: "list:<prio>:<pool>" with prio in
/// {sft, mopnr, cp, tetris} and pool in {eft, tetris-score, balance};
/// "heft"; "peft"; "ippts"; "sampling:<seed>:<n>".
#[wasm_bindgen]
pub fn solve(instance_json: &str, method: &str) -> String {
    solve_impl(instance_json, method).unwrap_or_else(err_json)
}

/// The eight-task counterexample where every list schedule is suboptimal:
/// returns the list schedule, the optimal schedule, and their makespan gap.
#[wasm_bindgen]
pub fn counterexample() -> String {
    counterexample_impl().unwrap_or_else(err_json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_reports_the_gap() {
        let v: serde_json::Value = serde_json::from_str(&counterexample()).unwrap();
        assert_eq!(v["list"]["makespan"], 4.0);
        assert_eq!(v["optimal"]["makespan"], 3.2);
        assert!((v["gap"].as_f64().unwrap() - 0.8).abs() < 1e-9);
        assert_eq!(v["list"]["bars"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn generated_instance_solves_with_every_method() {
        let inst_json = gen_instance("layered", 20, 7, "three_pool");
        let inst: serde_json::Value = serde_json::from_str(&inst_json).unwrap();
        assert!(inst.get("error").is_none(), "{inst_json}");
        for method in [
            "list:cp:eft",
            "list:tetris:tetris-score",
            "list:sft:balance",
            "list:mopnr:eft",
            "heft",
            "peft",
            "ippts",
            "sampling:1:8",
        ] {
            let out: serde_json::Value = serde_json::from_str(&solve(&inst_json, method)).unwrap();
            assert!(out.get("error").is_none(), "{method}: {out}");
            assert!(out["schedule"]["makespan"].as_f64().unwrap() > 0.0);
            assert_eq!(out["schedule"]["bars"].as_array().unwrap().len(), 20);
        }
    }

    #[test]
    fn errors_come_back_as_json() {
        let v: serde_json::Value =
            serde_json::from_str(&gen_instance("ring", 5, 1, "three_pool")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("unknown DAG kind"));
        let v: serde_json::Value = serde_json::from_str(&solve("{", "heft")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("bad instance JSON"));
        let ok = gen_instance("er", 6, 2, "computation_graph");
        let v: serde_json::Value = serde_json::from_str(&solve(&ok, "magic")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("unknown method"));
    }
}
