//! Classical scheduling baselines: priority-driven list heuristics (SFT,
//! MOPNR, CP, Tetris) combined with pool-selection rules (EFT, Tetris score,
//! Balance), and insertion-timeline schedulers (HEFT, PEFT, IPPTS)
//! generalized to cumulative vector capacities.

use std::collections::{BTreeMap, BTreeSet};

use crate::genmaps::{GenError, Sim};
use crate::model::{Instance, PoolId, ResourceVector, Schedule, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityRule {
    Sft,
    Mopnr,
    Cp,
    Tetris,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolRule {
    Eft,
    TetrisScore,
    Balance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionVariant {
    Heft,
    Peft,
    Ippts,
}

/// Mean actual processing time of `v` over its compatible pools (K > 0).
pub fn avg_time(inst: &Instance, v: TaskId) -> f64 {
    let task = inst.task(v).expect("known task");
    let times: Vec<f64> = inst
        .pools
        .iter()
        .filter(|p| inst.compat.coefficient(task, p) > 0.0)
        .map(|p| task.base_time / inst.compat.coefficient(task, p))
        .collect();
    times.iter().sum::<f64>() / times.len() as f64
}

/// Number of tasks that directly or indirectly depend on `v`.
fn descendant_count(inst: &Instance, v: TaskId) -> usize {
    let mut seen: BTreeSet<TaskId> = BTreeSet::new();
    let mut stack: Vec<TaskId> = inst.successors(v).collect();
    while let Some(u) = stack.pop() {
        if seen.insert(u) {
            stack.extend(inst.successors(u));
        }
    }
    seen.len()
}

/// Longest directed path starting at `v`, weighted by average processing
/// times and including `v` itself.
fn critical_path(inst: &Instance, memo: &mut BTreeMap<TaskId, f64>, v: TaskId) -> f64 {
    if let Some(&x) = memo.get(&v) {
        return x;
    }
    let tail = inst
        .successors(v)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|u| critical_path(inst, memo, u))
        .fold(0.0, f64::max);
    let val = avg_time(inst, v) + tail;
    memo.insert(v, val);
    val
}

/// Normalized inner product between the task demand and the current pool
/// availability: Σ_k (ρ^k/λ^k)·(λ_cur^k/λ^k).
pub fn tetris_score(demand: &[f64], full: &[f64], current: &[f64]) -> f64 {
    demand
        .iter()
        .zip(full)
        .zip(current)
        .map(|((d, f), c)| (d / f) * (c / f))
        .sum()
}

/// Task priorities under a rule. For the dynamic Tetris rule, `avail`
/// supplies current pool capacities (full capacities when absent); the task
/// score is the best Tetris score over its compatible pools.
pub fn priority(
    inst: &Instance,
    rule: PriorityRule,
    avail: Option<&BTreeMap<PoolId, ResourceVector>>,
) -> BTreeMap<TaskId, f64> {
    let mut cp_memo = BTreeMap::new();
    inst.tasks
        .iter()
        .map(|t| {
            let score = match rule {
                PriorityRule::Sft => -avg_time(inst, t.id),
                PriorityRule::Mopnr => descendant_count(inst, t.id) as f64,
                PriorityRule::Cp => critical_path(inst, &mut cp_memo, t.id),
                PriorityRule::Tetris => inst
                    .pools
                    .iter()
                    .filter(|p| inst.compat.coefficient(t, p) > 0.0)
                    .map(|p| {
                        let cur = avail.map_or(&p.capacity, |a| &a[&p.id]);
                        tetris_score(&t.demand, &p.capacity, cur)
                    })
                    .fold(f64::NEG_INFINITY, f64::max),
            };
            (t.id, score)
        })
        .collect()
}

/// Picks the best pool for `v` among `feasible` under the rule; ties go to
/// the lowest pool id.
pub fn select_pool(
    inst: &Instance,
    v: TaskId,
    rule: PoolRule,
    feasible: &[PoolId],
    avail: &BTreeMap<PoolId, ResourceVector>,
) -> Option<PoolId> {
    let task = inst.task(v).ok()?;
    feasible
        .iter()
        .map(|&c| {
            let pool = inst.pool(c).unwrap();
            let k = inst.compat.coefficient(task, pool);
            let s = tetris_score(&task.demand, &pool.capacity, &avail[&c]);
            let score = match rule {
                PoolRule::Eft => k,
                PoolRule::TetrisScore => s,
                PoolRule::Balance => s * k,
            };
            (score, c)
        })
        .min_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)))
        .map(|(_, c)| c)
}

/// Priority-driven list scheduling: at each decision point dispatch the
/// eligible task with the best priority (ties: lowest id) on the pool chosen
/// by the pool rule; advance time when nothing is eligible.
pub fn run_list_heuristic(
    inst: &Instance,
    prule: PriorityRule,
    poolrule: PoolRule,
) -> Result<Schedule, GenError> {
    let static_prio = match prule {
        PriorityRule::Tetris => None,
        _ => Some(priority(inst, prule, None)),
    };
    let mut sim = Sim::new(inst);
    while !sim.done() {
        let acts = sim.unmasked();
        if acts.is_empty() {
            if !sim.advance() {
                return Err(GenError::Deadlock);
            }
            continue;
        }
        let prio = match &static_prio {
            Some(p) => p.clone(),
            None => priority(inst, PriorityRule::Tetris, Some(&sim.avail)),
        };
        let mut eligible: BTreeMap<TaskId, Vec<PoolId>> = BTreeMap::new();
        for (v, c) in acts {
            eligible.entry(v).or_default().push(c);
        }
        let (&v, pools) = eligible
            .iter()
            .min_by(|a, b| prio[b.0].partial_cmp(&prio[a.0]).unwrap().then(a.0.cmp(b.0)))
            .unwrap();
        let c = select_pool(inst, v, poolrule, pools, &sim.avail).unwrap();
        sim.dispatch(v, c);
    }
    Ok(sim.sched)
}

/// Per-pool timeline of placed tasks for insertion scheduling.
#[derive(Debug, Clone, Default)]
struct Timeline {
    /// (start, end, task) intervals already committed to the pool.
    placed: Vec<(f64, f64, TaskId)>,
}

impl Timeline {
    /// Earliest start ≥ `ready` such that `demand` fits under `cap` for the
    /// whole duration. Candidates are `ready` and every later interval end;
    /// the fit is checked at every usage-change event inside the window.
    fn earliest_fit(
        &self,
        inst: &Instance,
        cap: &[f64],
        demand: &[f64],
        ready: f64,
        dur: f64,
    ) -> f64 {
        let mut candidates: Vec<f64> = vec![ready];
        candidates.extend(self.placed.iter().map(|&(_, e, _)| e).filter(|&e| e > ready));
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        'cand: for &tau in &candidates {
            let mut events: Vec<f64> = vec![tau];
            for &(s, e, _) in &self.placed {
                if s > tau && s < tau + dur {
                    events.push(s);
                }
                if e > tau && e < tau + dur {
                    events.push(e);
                }
            }
            for &t in &events {
                let mut usage = vec![0.0; cap.len()];
                for &(s, e, u) in &self.placed {
                    if s <= t && t < e {
                        for (acc, d) in usage.iter_mut().zip(&inst.task(u).unwrap().demand) {
                            *acc += d;
                        }
                    }
                }
                if usage
                    .iter()
                    .zip(demand)
                    .zip(cap)
                    .any(|((u, d), c)| u + d > *c)
                {
                    continue 'cand;
                }
            }
            return tau;
        }
        unreachable!("the slot after every completion always fits");
    }
}

/// Optimistic cost to finish everything downstream of `v` (zero
/// communication): max over successors w of OCT(w) + min_c t_act(w, c).
fn oct(inst: &Instance, memo: &mut BTreeMap<TaskId, f64>, v: TaskId) -> f64 {
    if let Some(&x) = memo.get(&v) {
        return x;
    }
    let val = inst
        .successors(v)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|w| {
            let best = inst
                .compatible_pools(w)
                .into_iter()
                .map(|c| inst.actual_time(w, c).unwrap())
                .fold(f64::INFINITY, f64::min);
            oct(inst, memo, w) + best
        })
        .fold(0.0, f64::max);
    memo.insert(v, val);
    val
}

/// Predict cost matrix entry: PCM(v, c) = t_act(v, c) + max over successors
/// w of min_c' PCM(w, c').
fn pcm(
    inst: &Instance,
    memo: &mut BTreeMap<(TaskId, PoolId), f64>,
    v: TaskId,
    c: PoolId,
) -> f64 {
    if let Some(&x) = memo.get(&(v, c)) {
        return x;
    }
    let tail = inst
        .successors(v)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|w| {
            inst.compatible_pools(w)
                .into_iter()
                .map(|c2| pcm(inst, memo, w, c2))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let val = inst.actual_time(v, c).unwrap() + tail;
    memo.insert((v, c), val);
    val
}

fn insertion_priority(inst: &Instance, variant: InsertionVariant) -> BTreeMap<TaskId, f64> {
    match variant {
        InsertionVariant::Heft => priority(inst, PriorityRule::Cp, None),
        InsertionVariant::Peft => {
            let mut memo = BTreeMap::new();
            inst.tasks
                .iter()
                .map(|t| (t.id, oct(inst, &mut memo, t.id)))
                .collect()
        }
        InsertionVariant::Ippts => {
            let mut memo = BTreeMap::new();
            inst.tasks
                .iter()
                .map(|t| {
                    let pools = inst.compatible_pools(t.id);
                    let mean = pools
                        .iter()
                        .map(|&c| pcm(inst, &mut memo, t.id, c))
                        .sum::<f64>()
                        / pools.len() as f64;
                    let out_deg = inst.successors(t.id).count() as f64;
                    (t.id, mean * out_deg)
                })
                .collect()
        }
    }
}

/// Insertion scheduling: tasks are placed one by one in nonincreasing
/// priority order (ties: ascending id, precedence respected via a ready
/// list). Each task goes to the pool and earliest fitting start that
/// minimize its finish time (ties: lower pool id).
pub fn run_insertion_heuristic(
    inst: &Instance,
    variant: InsertionVariant,
) -> Result<Schedule, GenError> {
    let prio = insertion_priority(inst, variant);
    let mut timelines: BTreeMap<PoolId, Timeline> = inst
        .pools
        .iter()
        .map(|p| (p.id, Timeline::default()))
        .collect();
    let mut end_time: BTreeMap<TaskId, f64> = BTreeMap::new();
    let mut x = Schedule::new();
    let mut pending: BTreeSet<TaskId> = inst.tasks.iter().map(|t| t.id).collect();

    while !pending.is_empty() {
        let v = *pending
            .iter()
            .filter(|&&v| inst.predecessors(v).all(|u| end_time.contains_key(&u)))
            .min_by(|a, b| prio[b].partial_cmp(&prio[a]).unwrap().then(a.cmp(b)))
            .ok_or(GenError::Deadlock)?;
        pending.remove(&v);
        let ready = inst
            .predecessors(v)
            .map(|u| end_time[&u])
            .fold(0.0, f64::max);
        let demand = &inst.task(v).unwrap().demand;
        let mut best: Option<(f64, PoolId, f64)> = None; // (finish, pool, start)
        for c in inst.compatible_pools(v) {
            let dur = inst.actual_time(v, c).unwrap();
            let cap = &inst.pool(c).unwrap().capacity;
            let start = timelines[&c].earliest_fit(inst, cap, demand, ready, dur);
            let finish = start + dur;
            let better = match best {
                None => true,
                Some((bf, bc, _)) => finish < bf || (finish == bf && c < bc),
            };
            if better {
                best = Some((finish, c, start));
            }
        }
        let (finish, c, start) = best.ok_or(GenError::Deadlock)?;
        timelines.get_mut(&c).unwrap().placed.push((start, finish, v));
        end_time.insert(v, finish);
        x.insert(v, c, start);
    }
    Ok(x)
}
