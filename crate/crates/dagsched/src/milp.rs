//! Mixed-integer formulations of the scheduling problem: LP-format export of
//! the homogeneous and heterogeneous big-M models, plus the bijection between
//! feasible schedules and feasible MILP solutions.
//!
//! Binary semantics: u_ij = 1 iff s_i ≥ s_j; w_ij = 1 iff s_i < s_j + t_j;
//! x_ij = u_ij ∧ w_ij (task j runs at task i's start; x_ii = 1);
//! v_i_k one-hot pool assignment; y_ijk = x_ij ∧ v_j_k.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{check_schedule, Instance, PoolId, Schedule, TaskId};

pub const DEFAULT_EPS_STRICT: f64 = 1e-6;
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("homogeneous mode requires a single pool and unit coefficients")]
    ModeMismatch,
    #[error("schedule is not feasible: {0}")]
    InfeasibleSchedule(String),
    #[error("malformed solution: {0}")]
    MalformedSolution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpMode {
    Homogeneous,
    Heterogeneous,
}

/// A full assignment of the MILP variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "MilpSolutionJson", into = "MilpSolutionJson")]
pub struct MilpSolution {
    pub s: BTreeMap<TaskId, f64>,
    pub tmax: f64,
    pub u: BTreeMap<(TaskId, TaskId), u8>,
    pub w: BTreeMap<(TaskId, TaskId), u8>,
    pub x: BTreeMap<(TaskId, TaskId), u8>,
    /// Heterogeneous only: y[(i, j, k)] = task j runs on pool k at i's start.
    pub y: BTreeMap<(TaskId, TaskId, PoolId), u8>,
    /// Heterogeneous only: one-hot pool assignment.
    pub v: BTreeMap<(TaskId, PoolId), u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MilpSolutionJson {
    s: Vec<(TaskId, f64)>,
    tmax: f64,
    u: Vec<(TaskId, TaskId, u8)>,
    w: Vec<(TaskId, TaskId, u8)>,
    x: Vec<(TaskId, TaskId, u8)>,
    #[serde(default)]
    y: Vec<(TaskId, TaskId, PoolId, u8)>,
    #[serde(default)]
    v: Vec<(TaskId, PoolId, u8)>,
}

impl From<MilpSolution> for MilpSolutionJson {
    fn from(m: MilpSolution) -> Self {
        MilpSolutionJson {
            s: m.s.into_iter().collect(),
            tmax: m.tmax,
            u: m.u.into_iter().map(|((i, j), b)| (i, j, b)).collect(),
            w: m.w.into_iter().map(|((i, j), b)| (i, j, b)).collect(),
            x: m.x.into_iter().map(|((i, j), b)| (i, j, b)).collect(),
            y: m.y.into_iter().map(|((i, j, k), b)| (i, j, k, b)).collect(),
            v: m.v.into_iter().map(|((i, k), b)| (i, k, b)).collect(),
        }
    }
}

impl From<MilpSolutionJson> for MilpSolution {
    fn from(j: MilpSolutionJson) -> Self {
        MilpSolution {
            s: j.s.into_iter().collect(),
            tmax: j.tmax,
            u: j.u.into_iter().map(|(i, jj, b)| ((i, jj), b)).collect(),
            w: j.w.into_iter().map(|(i, jj, b)| ((i, jj), b)).collect(),
            x: j.x.into_iter().map(|(i, jj, b)| ((i, jj), b)).collect(),
            y: j.y.into_iter().map(|(i, jj, k, b)| ((i, jj, k), b)).collect(),
            v: j.v.into_iter().map(|(i, k, b)| ((i, k), b)).collect(),
        }
    }
}

/// a_ik = min(1/K_acc(i,k), C0up); incompatible pairs saturate at C0up.
fn constants(inst: &Instance) -> (f64, BTreeMap<(TaskId, PoolId), f64>, f64) {
    let mut max_inv: f64 = 0.0;
    for t in &inst.tasks {
        for p in &inst.pools {
            let k = inst.compat.coefficient(t, p);
            if k > 0.0 {
                max_inv = max_inv.max(1.0 / k);
            }
        }
    }
    let c0 = 2.0 * max_inv;
    let mut a = BTreeMap::new();
    for t in &inst.tasks {
        for p in &inst.pools {
            let k = inst.compat.coefficient(t, p);
            let aik = if k > 0.0 { (1.0 / k).min(c0) } else { c0 };
            a.insert((t.id, p.id), aik);
        }
    }
    let c1: f64 = inst
        .tasks
        .iter()
        .map(|t| {
            inst.pools
                .iter()
                .map(|p| t.base_time * a[&(t.id, p.id)])
                .sum::<f64>()
                + t.demand.iter().sum::<f64>()
        })
        .sum();
    (c0, a, c1)
}

fn is_homogeneous(inst: &Instance) -> bool {
    inst.pools.len() == 1
        && inst
            .tasks
            .iter()
            .all(|t| inst.compat.coefficient(t, &inst.pools[0]) == 1.0)
}

/// Emits the chosen big-M formulation as CPLEX-style LP text, one constraint
/// per line. Strict inequalities are rendered with a slack of `eps`.
pub fn export_milp(inst: &Instance, mode: MilpMode, eps: f64) -> Result<String, MilpError> {
    match mode {
        MilpMode::Homogeneous => {
            if !is_homogeneous(inst) {
                return Err(MilpError::ModeMismatch);
            }
            Ok(export_homogeneous(inst, eps))
        }
        MilpMode::Heterogeneous => Ok(export_heterogeneous(inst, eps)),
    }
}

fn export_homogeneous(inst: &Instance, eps: f64) -> String {
    let ids: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    let c1: f64 = inst.tasks.iter().map(|t| t.base_time).sum();
    let pool = &inst.pools[0];
    let mut out = String::new();
    let mut n_con = 0usize;
    out.push_str("Minimize\n obj: tmax\nSubject To\n");
    let mut con = |out: &mut String, body: String| {
        n_con += 1;
        let _ = writeln!(out, " c{n_con}: {body}");
    };
    for &i in &ids {
        let ti = inst.task(i).unwrap().base_time;
        con(&mut out, format!("s_{i} - tmax <= {}", -ti));
    }
    for &(i, j) in &inst.edges {
        let ti = inst.task(i).unwrap().base_time;
        con(&mut out, format!("s_{i} - s_{j} <= {}", -ti));
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("s_{i} - s_{j} - {c1} u_{i}_{j} <= {}", -eps));
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("s_{j} - s_{i} + {c1} u_{i}_{j} <= {c1}"));
        }
    }
    for &i in &ids {
        for &j in &ids {
            let tj = inst.task(j).unwrap().base_time;
            con(&mut out, format!("s_{i} - s_{j} + {c1} w_{i}_{j} <= {}", tj + c1 - eps));
        }
    }
    for &i in &ids {
        for &j in &ids {
            let tj = inst.task(j).unwrap().base_time;
            con(&mut out, format!("s_{j} - s_{i} - {c1} w_{i}_{j} <= {}", -tj));
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("u_{i}_{j} + w_{i}_{j} - x_{i}_{j} <= 1"));
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("2 x_{i}_{j} - u_{i}_{j} - w_{i}_{j} <= 0"));
        }
    }
    for &i in &ids {
        let di = &inst.task(i).unwrap().demand;
        for l in 0..inst.resource_dims() {
            let terms: Vec<String> = ids
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| format!("{} x_{i}_{j}", inst.task(j).unwrap().demand[l]))
                .collect();
            con(
                &mut out,
                format!("{} <= {}", terms.join(" + "), pool.capacity[l] - di[l]),
            );
        }
    }
    out.push_str("Binary\n");
    for kind in ["u", "w", "x"] {
        for &i in &ids {
            for &j in &ids {
                let _ = writeln!(out, " {kind}_{i}_{j}");
            }
        }
    }
    out.push_str("End\n");
    out
}

fn export_heterogeneous(inst: &Instance, eps: f64) -> String {
    let ids: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    let pools: Vec<PoolId> = inst.pools.iter().map(|p| p.id).collect();
    let (c0, a, c1) = constants(inst);
    let mut out = String::new();
    let mut n_con = 0usize;
    out.push_str("Minimize\n obj: tmax\nSubject To\n");
    let mut con = |out: &mut String, body: String| {
        n_con += 1;
        let _ = writeln!(out, " c{n_con}: {body}");
    };
    // Weighted processing-time expression t_i * sum_k a_ik v_i_k.
    let dur = |i: TaskId, sign: f64| -> String {
        let ti = inst.task(i).unwrap().base_time;
        pools
            .iter()
            .map(|&k| {
                let coeff = sign * ti * a[&(i, k)];
                if coeff >= 0.0 {
                    format!("+ {coeff} v_{i}_{k}")
                } else {
                    format!("- {} v_{i}_{k}", -coeff)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    for &i in &ids {
        con(&mut out, format!("s_{i} {} - tmax <= 0", dur(i, 1.0)));
    }
    for &(i, j) in &inst.edges {
        con(&mut out, format!("s_{i} {} - s_{j} <= 0", dur(i, 1.0)));
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("s_{i} - s_{j} - {c1} u_{i}_{j} <= {}", -eps));
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("s_{j} - s_{i} + {c1} u_{i}_{j} <= {c1}"));
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(
                &mut out,
                format!("s_{i} - s_{j} {} + {c1} w_{i}_{j} <= {}", dur(j, -1.0), c1 - eps),
            );
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(
                &mut out,
                format!("s_{j} - s_{i} {} - {c1} w_{i}_{j} <= 0", dur(j, 1.0)),
            );
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("u_{i}_{j} + w_{i}_{j} - x_{i}_{j} <= 1"));
        }
    }
    for &i in &ids {
        for &j in &ids {
            con(&mut out, format!("2 x_{i}_{j} - u_{i}_{j} - w_{i}_{j} <= 0"));
        }
    }
    for &i in &ids {
        for &j in &ids {
            for &k in &pools {
                con(
                    &mut out,
                    format!("2 y_{i}_{j}_{k} - x_{i}_{j} - v_{j}_{k} <= 0"),
                );
            }
        }
    }
    for &i in &ids {
        for &j in &ids {
            for &k in &pools {
                con(
                    &mut out,
                    format!("x_{i}_{j} + v_{j}_{k} - y_{i}_{j}_{k} <= 1"),
                );
            }
        }
    }
    for &i in &ids {
        let terms: Vec<String> = pools.iter().map(|&k| format!("v_{i}_{k}")).collect();
        con(&mut out, format!("{} = 1", terms.join(" + ")));
    }
    // 1 - v_i_k + C0 - a_ik > 0; forces v = 0 exactly on incompatible pairs.
    for &i in &ids {
        for &k in &pools {
            con(
                &mut out,
                format!("- v_{i}_{k} <= {}", c0 + 1.0 - a[&(i, k)] - eps),
            );
        }
    }
    for &i in &ids {
        let di = &inst.task(i).unwrap().demand;
        for &k in &pools {
            let cap = &inst.pool(k).unwrap().capacity;
            for l in 0..inst.resource_dims() {
                let mut terms: Vec<String> = ids
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| format!("{} y_{i}_{j}_{k}", inst.task(j).unwrap().demand[l]))
                    .collect();
                terms.push(format!("{c1} v_{i}_{k}"));
                con(
                    &mut out,
                    format!("{} <= {}", terms.join(" + "), c1 + cap[l] - di[l]),
                );
            }
        }
    }
    out.push_str("Binary\n");
    for &i in &ids {
        for &j in &ids {
            let _ = writeln!(out, " u_{i}_{j}");
            let _ = writeln!(out, " w_{i}_{j}");
            let _ = writeln!(out, " x_{i}_{j}");
        }
    }
    for &i in &ids {
        for &j in &ids {
            for &k in &pools {
                let _ = writeln!(out, " y_{i}_{j}_{k}");
            }
        }
    }
    for &i in &ids {
        for &k in &pools {
            let _ = writeln!(out, " v_{i}_{k}");
        }
    }
    out.push_str("End\n");
    out
}

/// Derives the full variable assignment from a feasible schedule.
pub fn schedule_to_milp(inst: &Instance, x: &Schedule) -> Result<MilpSolution, MilpError> {
    if let crate::model::Verdict::Infeasible(why) = check_schedule(inst, x) {
        return Err(MilpError::InfeasibleSchedule(why));
    }
    let ids: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    let end = |j: TaskId| -> f64 {
        let (c, s) = x.get(j).unwrap();
        s + inst.actual_time(j, c).unwrap()
    };
    let mut sol = MilpSolution {
        s: ids.iter().map(|&i| (i, x.start[&i])).collect(),
        tmax: ids.iter().map(|&i| end(i)).fold(0.0, f64::max),
        u: BTreeMap::new(),
        w: BTreeMap::new(),
        x: BTreeMap::new(),
        y: BTreeMap::new(),
        v: BTreeMap::new(),
    };
    for &i in &ids {
        for &j in &ids {
            let u = u8::from(x.start[&i] >= x.start[&j]);
            let w = u8::from(x.start[&i] < end(j));
            sol.u.insert((i, j), u);
            sol.w.insert((i, j), w);
            sol.x.insert((i, j), u & w);
        }
    }
    for &i in &ids {
        for p in &inst.pools {
            sol.v.insert((i, p.id), u8::from(x.pool[&i] == p.id));
        }
    }
    for &i in &ids {
        for &j in &ids {
            for p in &inst.pools {
                sol.y
                    .insert((i, j, p.id), sol.x[&(i, j)] & sol.v[&(j, p.id)]);
            }
        }
    }
    Ok(sol)
}

/// Extracts the schedule (s_i, assigned pool) from a solution.
pub fn milp_to_schedule(inst: &Instance, sol: &MilpSolution) -> Result<Schedule, MilpError> {
    let mut x = Schedule::new();
    for t in &inst.tasks {
        let s = *sol
            .s
            .get(&t.id)
            .ok_or_else(|| MilpError::MalformedSolution(format!("no start for task {}", t.id)))?;
        let assigned: Vec<PoolId> = inst
            .pools
            .iter()
            .filter(|p| sol.v.get(&(t.id, p.id)).copied() == Some(1))
            .map(|p| p.id)
            .collect();
        let pool = match (assigned.len(), inst.pools.len()) {
            (1, _) => assigned[0],
            // Homogeneous solutions may omit v entirely.
            (0, 1) if sol.v.is_empty() => inst.pools[0].id,
            _ => {
                return Err(MilpError::MalformedSolution(format!(
                    "task {} has no one-hot pool assignment",
                    t.id
                )))
            }
        };
        x.insert(t.id, pool, s);
    }
    Ok(x)
}

/// Numerically evaluates every constraint of the chosen formulation;
/// an empty list means the solution is feasible.
pub fn verify_milp_solution(
    inst: &Instance,
    sol: &MilpSolution,
    mode: MilpMode,
) -> Vec<String> {
    let tol = VERIFY_TOL;
    let mut out = Vec::new();
    let ids: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    let pools: Vec<PoolId> = inst.pools.iter().map(|p| p.id).collect();
    let (_, a, _) = constants(inst);

    let get_s = |i: TaskId| sol.s.get(&i).copied().unwrap_or(f64::NAN);
    let getb = |m: &BTreeMap<(TaskId, TaskId), u8>, i: TaskId, j: TaskId| {
        m.get(&(i, j)).copied().unwrap_or(0) as f64
    };
    // Effective processing time of i under the solution's assignment.
    let dur = |i: TaskId| -> f64 {
        let ti = inst.task(i).unwrap().base_time;
        match mode {
            MilpMode::Homogeneous => ti,
            MilpMode::Heterogeneous => {
                ti * pools
                    .iter()
                    .map(|&k| sol.v.get(&(i, k)).copied().unwrap_or(0) as f64 * a[&(i, k)])
                    .sum::<f64>()
            }
        }
    };

    for &i in &ids {
        if get_s(i) + dur(i) > sol.tmax + tol {
            out.push(format!("makespan: s_{i} + t_{i} > tmax"));
        }
        if get_s(i) < -tol {
            out.push(format!("nonnegativity: s_{i} < 0"));
        }
    }
    for &(i, j) in &inst.edges {
        if get_s(i) + dur(i) > get_s(j) + tol {
            out.push(format!("dependency: edge ({i},{j}) violated"));
        }
    }
    for &i in &ids {
        for &j in &ids {
            let (si, sj) = (get_s(i), get_s(j));
            let u = getb(&sol.u, i, j);
            let w = getb(&sol.w, i, j);
            let x = getb(&sol.x, i, j);
            if u == 0.0 && si >= sj - tol && i != j {
                // u_ij = 0 requires s_i < s_j strictly.
                if si >= sj + tol {
                    out.push(format!("ordering: u_{i}_{j} = 0 but s_{i} >= s_{j}"));
                }
            }
            if u == 1.0 && sj > si + tol {
                out.push(format!("ordering: u_{i}_{j} = 1 but s_{j} > s_{i}"));
            }
            if w == 1.0 && si >= sj + dur(j) - tol && (i != j || dur(j) <= tol) {
                out.push(format!("overlap: w_{i}_{j} = 1 but {i} starts after {j} ends"));
            }
            if w == 0.0 && sj + dur(j) > si + tol {
                out.push(format!("overlap: w_{i}_{j} = 0 but {j} still runs at s_{i}"));
            }
            if u + w > 1.0 + x + tol {
                out.push(format!("linking: u+w > 1+x at ({i},{j})"));
            }
            if u + w < 2.0 * x - tol {
                out.push(format!("linking: u+w < 2x at ({i},{j})"));
            }
        }
    }
    match mode {
        MilpMode::Homogeneous => {
            let pool = &inst.pools[0];
            for &i in &ids {
                let di = &inst.task(i).unwrap().demand;
                for l in 0..inst.resource_dims() {
                    let used: f64 = ids
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| getb(&sol.x, i, j) * inst.task(j).unwrap().demand[l])
                        .sum();
                    if di[l] + used > pool.capacity[l] + tol {
                        out.push(format!("capacity: dimension {l} exceeded at s_{i}"));
                    }
                }
            }
        }
        MilpMode::Heterogeneous => {
            for &i in &ids {
                let total: u8 = pools
                    .iter()
                    .map(|&k| sol.v.get(&(i, k)).copied().unwrap_or(0))
                    .sum();
                if total != 1 {
                    out.push(format!("assignment: sum_k v_{i}_k = {total}"));
                }
                for &k in &pools {
                    let v = sol.v.get(&(i, k)).copied().unwrap_or(0) as f64;
                    // 1 - v_i_k + C0 - a_ik > 0 (forces v = 0 on incompatible pairs).
                    let (c0, _, _) = constants(inst);
                    if 1.0 - v + c0 - a[&(i, k)] <= tol {
                        out.push(format!("compatibility: v_{i}_{k} on incompatible pool"));
                    }
                }
            }
            for &i in &ids {
                for &j in &ids {
                    for &k in &pools {
                        let y = sol.y.get(&(i, j, k)).copied().unwrap_or(0) as f64;
                        let x = getb(&sol.x, i, j);
                        let v = sol.v.get(&(j, k)).copied().unwrap_or(0) as f64;
                        if x + v > 1.0 + y + tol || x + v < 2.0 * y - tol {
                            out.push(format!("linking: y_{i}_{j}_{k} inconsistent"));
                        }
                    }
                }
            }
            let (_, _, c1) = constants(inst);
            for &i in &ids {
                let di = &inst.task(i).unwrap().demand;
                for &k in &pools {
                    let cap = &inst.pool(k).unwrap().capacity;
                    let v = sol.v.get(&(i, k)).copied().unwrap_or(0) as f64;
                    for l in 0..inst.resource_dims() {
                        let used: f64 = ids
                            .iter()
                            .filter(|&&j| j != i)
                            .map(|&j| {
                                sol.y.get(&(i, j, k)).copied().unwrap_or(0) as f64
                                    * inst.task(j).unwrap().demand[l]
                            })
                            .sum();
                        if di[l] + used > c1 * (1.0 - v) + cap[l] + tol {
                            out.push(format!(
                                "capacity: pool {k} dimension {l} exceeded at s_{i}"
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}
