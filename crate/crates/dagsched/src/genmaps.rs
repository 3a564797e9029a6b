//! Generation maps: list scheduling, the serial schedule generation scheme
//! (SGS), and the score-driven skip-extended rollout with its induced
//! realization map.
//!
//! All three maps share the same event-driven simulation core. The
//! skip-extended rollout augments list scheduling with an explicit skip
//! action whose score decreases with the number of decisions taken, which
//! is what lets it reach every schedule SGS can produce.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{fits, Instance, PoolId, ResourceVector, Schedule, TaskId};
use crate::orderspace::{augmented_graph, is_feasible_order, ActionSequence, ScheduleOrder};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("no eligible action and no running task (deadlocked instance)")]
    Deadlock,
    #[error("all actions are masked")]
    AllMasked,
    #[error("schedule order is not feasible")]
    InfeasibleOrder,
    #[error("malformed rollout: {0}")]
    MalformedRollout(String),
    #[error("target cannot be replayed: {0}")]
    InfeasibleTarget(String),
    #[error("score table is missing action ({0}, {1})")]
    MissingScore(TaskId, PoolId),
    #[error("instance exceeds the enumeration size cap ({n} tasks > {cap})")]
    SizeCap { n: usize, cap: usize },
}

/// Parameters of the step-dependent skip score; all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for SkipParams {
    fn default() -> Self {
        SkipParams { alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }
}

/// Task-pool action scores plus skip parameters; the interchange format for
/// externally produced policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScoreTableJson", into = "ScoreTableJson")]
pub struct ScoreTable {
    pub scores: BTreeMap<(TaskId, PoolId), f64>,
    pub skip: SkipParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoreTableJson {
    scores: Vec<(TaskId, PoolId, f64)>,
    skip: SkipParams,
}

impl From<ScoreTable> for ScoreTableJson {
    fn from(t: ScoreTable) -> Self {
        ScoreTableJson {
            scores: t.scores.into_iter().map(|((v, c), u)| (v, c, u)).collect(),
            skip: t.skip,
        }
    }
}

impl From<ScoreTableJson> for ScoreTable {
    fn from(j: ScoreTableJson) -> Self {
        ScoreTable {
            scores: j.scores.into_iter().map(|(v, c, u)| ((v, c), u)).collect(),
            skip: j.skip,
        }
    }
}

impl ScoreTable {
    /// A table assigning `u` to every action of the instance.
    pub fn constant(inst: &Instance, u: f64, skip: SkipParams) -> Self {
        ScoreTable {
            scores: inst.action_set().into_iter().map(|a| (a, u)).collect(),
            skip,
        }
    }
}

/// One decision of a skip-extended rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Dispatch(TaskId, PoolId),
    Skip,
}

/// The full decision trace of one rollout.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Rollout {
    pub steps: Vec<Action>,
}

impl Rollout {
    pub fn dispatch_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|a| matches!(a, Action::Dispatch(_, _)))
            .count()
    }

    /// Checks the shape invariants: exactly `n` dispatches of distinct tasks.
    pub fn check_shape(&self, n: usize) -> Result<(), GenError> {
        let mut seen = BTreeSet::new();
        for a in &self.steps {
            if let Action::Dispatch(v, _) = a {
                if !seen.insert(*v) {
                    return Err(GenError::MalformedRollout(format!(
                        "task {v} dispatched twice"
                    )));
                }
            }
        }
        if seen.len() != n {
            return Err(GenError::MalformedRollout(format!(
                "{} dispatches for {n} tasks",
                seen.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Greedy,
    Sampling,
}

#[derive(Debug, Clone, Copy)]
pub struct PolicyConfig {
    pub mode: Mode,
    pub seed: u64,
}

/// Which generation map to enumerate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    List,
    SkipExtended,
}

/// Priority input for plain list scheduling.
#[derive(Debug, Clone)]
pub enum Priority {
    /// Highest score wins; ties broken by lowest (task, pool).
    Scores(BTreeMap<(TaskId, PoolId), f64>),
    /// Earliest eligible entry of the sequence wins.
    Sequence(ActionSequence),
}

/// The step-dependent skip score log(α·e^{−γk/(2n)} + β); strictly
/// decreasing in the decision counter `k`.
pub fn skip_score(params: SkipParams, k: usize, n: usize) -> f64 {
    let q = params.alpha * (-params.gamma * k as f64 / (2.0 * n as f64)).exp() + params.beta;
    q.ln()
}

/// Masked softmax over an action set. Masked actions get probability
/// exactly 0; errors if everything is masked.
pub fn action_distribution<A: Ord + Copy>(
    scores: &BTreeMap<A, f64>,
    masked: &BTreeSet<A>,
) -> Result<BTreeMap<A, f64>, GenError> {
    let live: Vec<(A, f64)> = scores
        .iter()
        .filter(|(a, _)| !masked.contains(a))
        .map(|(&a, &u)| (a, u))
        .collect();
    if live.is_empty() {
        return Err(GenError::AllMasked);
    }
    let max = live.iter().map(|&(_, u)| u).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = live.iter().map(|&(_, u)| (u - max).exp()).sum();
    let mut out: BTreeMap<A, f64> = scores.keys().map(|&a| (a, 0.0)).collect();
    for (a, u) in live {
        out.insert(a, (u - max).exp() / total);
    }
    Ok(out)
}

/// Event-driven simulation state shared by the generation maps.
///
/// Eligibility of (v, c) at the current time requires: v unscheduled, every
/// dependency predecessor completed (half-open intervals: completion exactly
/// at the current time counts), positive compatibility, and demand within
/// the currently available capacity of c.
#[derive(Debug, Clone)]
pub(crate) struct Sim<'a> {
    pub(crate) inst: &'a Instance,
    pub(crate) t_cur: f64,
    pub(crate) avail: BTreeMap<PoolId, ResourceVector>,
    /// (end time, task, pool) of dispatched-and-unreleased tasks.
    pub(crate) running: Vec<(f64, TaskId, PoolId)>,
    pub(crate) end_time: BTreeMap<TaskId, f64>,
    pub(crate) sched: Schedule,
}

impl<'a> Sim<'a> {
    pub(crate) fn new(inst: &'a Instance) -> Self {
        Sim {
            inst,
            t_cur: 0.0,
            avail: inst.pools.iter().map(|p| (p.id, p.capacity.clone())).collect(),
            running: Vec::new(),
            end_time: BTreeMap::new(),
            sched: Schedule::new(),
        }
    }

    pub(crate) fn done(&self) -> bool {
        self.sched.start.len() == self.inst.n_tasks()
    }

    pub(crate) fn deps_met(&self, v: TaskId) -> bool {
        self.inst
            .predecessors(v)
            .all(|u| self.end_time.get(&u).is_some_and(|&e| e <= self.t_cur))
    }

    pub(crate) fn unmasked(&self) -> Vec<(TaskId, PoolId)> {
        let mut out = Vec::new();
        for t in &self.inst.tasks {
            if self.sched.start.contains_key(&t.id) || !self.deps_met(t.id) {
                continue;
            }
            for p in &self.inst.pools {
                if self.inst.compat.coefficient(t, p) > 0.0
                    && fits(&t.demand, &self.avail[&p.id])
                {
                    out.push((t.id, p.id));
                }
            }
        }
        out
    }

    pub(crate) fn dispatch(&mut self, v: TaskId, c: PoolId) {
        let end = self.t_cur + self.inst.actual_time(v, c).unwrap();
        let demand = &self.inst.task(v).unwrap().demand;
        let avail = self.avail.get_mut(&c).unwrap();
        for (a, d) in avail.iter_mut().zip(demand) {
            *a -= d;
        }
        self.running.push((end, v, c));
        self.end_time.insert(v, end);
        self.sched.insert(v, c, self.t_cur);
    }

    /// Advances to the next completion event and releases everything
    /// completing by then. Returns false when nothing is running.
    pub(crate) fn advance(&mut self) -> bool {
        let next = self
            .running
            .iter()
            .map(|&(e, _, _)| e)
            .fold(f64::INFINITY, f64::min);
        if !next.is_finite() {
            return false;
        }
        self.t_cur = next;
        let t = self.t_cur;
        let mut kept = Vec::with_capacity(self.running.len());
        for (end, v, c) in self.running.drain(..) {
            if end <= t {
                let demand = &self.inst.task(v).unwrap().demand;
                let avail = self.avail.get_mut(&c).unwrap();
                for (a, d) in avail.iter_mut().zip(demand) {
                    *a += d;
                }
            } else {
                kept.push((end, v, c));
            }
        }
        self.running = kept;
        true
    }

    /// A hashable snapshot of the observable state.
    pub(crate) fn state_key(&self) -> (u64, Vec<(TaskId, PoolId, u64)>) {
        (self.t_cur.to_bits(), schedule_key(&self.sched))
    }
}

fn schedule_key(x: &Schedule) -> Vec<(TaskId, PoolId, u64)> {
    x.start
        .iter()
        .map(|(&v, &s)| (v, x.pool[&v], s.to_bits()))
        .collect()
}

/// Classic list scheduling: at every decision point dispatch the
/// highest-priority eligible action immediately; advance time only when
/// nothing is eligible. Never idles while an action is eligible.
pub fn list_schedule(
    inst: &Instance,
    priority: &Priority,
) -> Result<(Schedule, Rollout), GenError> {
    if let Priority::Scores(scores) = priority {
        for a in inst.action_set() {
            if !scores.contains_key(&a) {
                return Err(GenError::MissingScore(a.0, a.1));
            }
        }
    }
    let mut sim = Sim::new(inst);
    let mut rollout = Rollout::default();
    while !sim.done() {
        let acts = sim.unmasked();
        if acts.is_empty() {
            if !sim.advance() {
                return Err(GenError::Deadlock);
            }
            continue;
        }
        let pick = match priority {
            Priority::Scores(scores) => *acts
                .iter()
                .min_by(|a, b| {
                    scores[b]
                        .partial_cmp(&scores[a])
                        .unwrap()
                        .then(a.cmp(b))
                })
                .unwrap(),
            Priority::Sequence(seq) => *seq
                .actions
                .iter()
                .find(|a| acts.contains(a))
                .ok_or(GenError::Deadlock)?,
        };
        sim.dispatch(pick.0, pick.1);
        rollout.steps.push(Action::Dispatch(pick.0, pick.1));
    }
    Ok((sim.sched, rollout))
}

/// Serial schedule generation scheme: consumes a feasible schedule order and
/// produces the fiber-minimal schedule realizing it. Tasks become ready when
/// all their predecessors in the augmented graph are scheduled; each task
/// starts at the earliest time on its assigned pool that satisfies the pool
/// cursor, its dependency-ready time, and the resource constraint.
pub fn sgs(inst: &Instance, w: &ScheduleOrder) -> Result<Schedule, GenError> {
    if !is_feasible_order(inst, w) {
        return Err(GenError::InfeasibleOrder);
    }
    let g = augmented_graph(inst, w);
    let mut indeg: BTreeMap<TaskId, usize> = g.nodes.iter().map(|&v| (v, 0)).collect();
    let mut succ: BTreeMap<TaskId, Vec<TaskId>> = BTreeMap::new();
    for &(u, v) in &g.edges {
        *indeg.get_mut(&v).unwrap() += 1;
        succ.entry(u).or_default().push(v);
    }
    let mut ready: BTreeSet<TaskId> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&v, _)| v)
        .collect();

    let mut t_dep: BTreeMap<TaskId, f64> = g.nodes.iter().map(|&v| (v, 0.0)).collect();
    let mut cursor: BTreeMap<PoolId, f64> = inst.pools.iter().map(|p| (p.id, 0.0)).collect();
    // Per pool: (end time, task) of everything scheduled on it so far.
    let mut on_pool: BTreeMap<PoolId, Vec<(f64, TaskId)>> =
        inst.pools.iter().map(|p| (p.id, Vec::new())).collect();
    let mut x = Schedule::new();

    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        let c = w.pool[&v];
        let demand = &inst.task(v).unwrap().demand;
        let cap = &inst.pool(c).unwrap().capacity;
        let mut tau = cursor[&c].max(t_dep[&v]);
        loop {
            // Available capacity at tau: subtract everything still running
            // (half-open intervals, so a task ending exactly at tau is free).
            let mut avail = cap.clone();
            for &(end, u) in &on_pool[&c] {
                if end > tau {
                    for (a, d) in avail.iter_mut().zip(&inst.task(u).unwrap().demand) {
                        *a -= d;
                    }
                }
            }
            if fits(demand, &avail) {
                break;
            }
            tau = on_pool[&c]
                .iter()
                .map(|&(e, _)| e)
                .filter(|&e| e > tau)
                .fold(f64::INFINITY, f64::min);
            debug_assert!(tau.is_finite());
        }
        let end = tau + inst.actual_time(v, c).unwrap();
        x.insert(v, c, tau);
        on_pool.get_mut(&c).unwrap().push((end, v));
        cursor.insert(c, tau);
        if let Some(ws) = succ.get(&v) {
            for &u in ws {
                let d = indeg.get_mut(&u).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(u);
                }
            }
        }
        for u in inst.successors(v) {
            let t = t_dep.get_mut(&u).unwrap();
            *t = t.max(end);
        }
    }
    Ok(x)
}

/// Key used by the extended policy: skip orders after every dispatch pair so
/// greedy ties always resolve to a dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ExtAction {
    Dispatch(TaskId, PoolId),
    Skip,
}

/// Score-driven skip-extended rollout: list scheduling with an extra skip
/// action that advances time to the next completion event. The skip score
/// decreases with the decision counter; skip is masked while nothing runs.
pub fn rollout_skip_extended(
    inst: &Instance,
    table: &ScoreTable,
    cfg: PolicyConfig,
) -> Result<(Schedule, Rollout), GenError> {
    for a in inst.action_set() {
        if !table.scores.contains_key(&a) {
            return Err(GenError::MissingScore(a.0, a.1));
        }
    }
    let n = inst.n_tasks();
    let mut sim = Sim::new(inst);
    let mut rollout = Rollout::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut k = 0usize;

    while !sim.done() {
        let acts = sim.unmasked();
        let skip_ok = !sim.running.is_empty();
        if acts.is_empty() && !skip_ok {
            return Err(GenError::Deadlock);
        }
        let u_skip = skip_score(table.skip, k, n);
        let pick = match cfg.mode {
            Mode::Greedy => {
                let best = acts
                    .iter()
                    .map(|&(v, c)| (table.scores[&(v, c)], (v, c)))
                    .min_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                match best {
                    // Skip wins only with a strictly larger score.
                    Some((u, a)) if !(skip_ok && u_skip > u) => {
                        ExtAction::Dispatch(a.0, a.1)
                    }
                    _ => ExtAction::Skip,
                }
            }
            Mode::Sampling => {
                let mut cands: Vec<(ExtAction, f64)> = acts
                    .iter()
                    .map(|&(v, c)| (ExtAction::Dispatch(v, c), table.scores[&(v, c)]))
                    .collect();
                if skip_ok {
                    cands.push((ExtAction::Skip, u_skip));
                }
                let max = cands.iter().map(|&(_, u)| u).fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = cands.iter().map(|&(_, u)| (u - max).exp()).collect();
                let idx = WeightedIndex::new(&weights)
                    .expect("positive weights")
                    .sample(&mut rng);
                cands[idx].0
            }
        };
        match pick {
            ExtAction::Dispatch(v, c) => {
                sim.dispatch(v, c);
                rollout.steps.push(Action::Dispatch(v, c));
            }
            ExtAction::Skip => {
                sim.advance();
                rollout.steps.push(Action::Skip);
            }
        }
        k += 1;
    }
    Ok((sim.sched, rollout))
}

/// Replays an extended action sequence: repeatedly executes the
/// smallest-index remaining entry that is currently unmasked, auto-advancing
/// time whenever every task-pool action is masked.
pub fn realize(inst: &Instance, rollout: &Rollout) -> Result<Schedule, GenError> {
    rollout.check_shape(inst.n_tasks())?;
    let mut sim = Sim::new(inst);
    let mut remaining: Vec<Option<Action>> = rollout.steps.iter().copied().map(Some).collect();

    while !sim.done() {
        let acts = sim.unmasked();
        let skip_ok = !sim.running.is_empty();
        let slot = remaining.iter().position(|a| match a {
            Some(Action::Dispatch(v, c)) => acts.contains(&(*v, *c)),
            Some(Action::Skip) => skip_ok,
            None => false,
        });
        let Some(slot) = slot else {
            // Nothing in the sequence is executable; time must advance on
            // its own (this also covers sequences with too few skips).
            if acts.is_empty() && sim.advance() {
                continue;
            }
            return Err(GenError::MalformedRollout(
                "no executable entry remains".into(),
            ));
        };
        match remaining[slot].take().unwrap() {
            Action::Dispatch(v, c) => sim.dispatch(v, c),
            Action::Skip => {
                sim.advance();
            }
        }
    }
    Ok(sim.sched)
}

/// Builds the extended action sequence whose replay reproduces `x`:
/// dispatches in (start time, task id) order, with skips inserted to reach
/// each start time via completion events. Fails when a start time is not
/// reachable this way, i.e. when `x` is not an event-aligned schedule.
pub fn rollout_for_schedule(inst: &Instance, x: &Schedule) -> Result<Rollout, GenError> {
    let mut tasks: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    for &v in &tasks {
        if x.get(v).is_none() {
            return Err(GenError::InfeasibleTarget(format!("task {v} unassigned")));
        }
    }
    tasks.sort_by(|&a, &b| {
        x.start[&a]
            .partial_cmp(&x.start[&b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut sim = Sim::new(inst);
    let mut rollout = Rollout::default();
    for v in tasks {
        let (c, s) = x.get(v).unwrap();
        while sim.t_cur < s {
            if sim.running.is_empty() {
                return Err(GenError::InfeasibleTarget(format!(
                    "cannot reach start {s} of task {v}: nothing running"
                )));
            }
            sim.advance();
            rollout.steps.push(Action::Skip);
        }
        if sim.t_cur != s {
            return Err(GenError::InfeasibleTarget(format!(
                "start {s} of task {v} is not a completion event"
            )));
        }
        if !sim.unmasked().contains(&(v, c)) {
            return Err(GenError::InfeasibleTarget(format!(
                "action ({v}, {c}) is masked at its start time"
            )));
        }
        sim.dispatch(v, c);
        rollout.steps.push(Action::Dispatch(v, c));
    }
    Ok(rollout)
}

/// Builds a score table whose greedy rollout reproduces `target` exactly.
///
/// The skip score is strictly decreasing over the N steps of the target;
/// with Δ the minimum consecutive drop and ε = Δ/4, the action dispatched at
/// step t scores u_skip(t)+2ε and every never-dispatched pair scores
/// u_skip(N)−2ε. At a skip step the skip score then strictly dominates every
/// unmasked dispatch (all of which occur later or never), and at a dispatch
/// step the dispatched pair strictly dominates both the skip score and every
/// later dispatch.
pub fn construct_optimal_scores(
    inst: &Instance,
    target: &Rollout,
) -> Result<ScoreTable, GenError> {
    let n = inst.n_tasks();
    target.check_shape(n)?;
    // Replay to verify every step is unmasked where it occurs.
    let mut sim = Sim::new(inst);
    for (i, a) in target.steps.iter().enumerate() {
        match a {
            Action::Dispatch(v, c) => {
                if !sim.unmasked().contains(&(*v, *c)) {
                    return Err(GenError::InfeasibleTarget(format!(
                        "step {}: action ({v}, {c}) is masked",
                        i + 1
                    )));
                }
                sim.dispatch(*v, *c);
            }
            Action::Skip => {
                if sim.running.is_empty() {
                    return Err(GenError::InfeasibleTarget(format!(
                        "step {}: skip with nothing running",
                        i + 1
                    )));
                }
                sim.advance();
            }
        }
    }

    let psi = SkipParams::default();
    let len = target.steps.len();
    let u_at = |step: usize| skip_score(psi, step - 1, n);
    let mut delta = f64::INFINITY;
    for t in 1..len.max(2) {
        delta = delta.min(u_at(t) - u_at(t + 1));
    }
    let eps = delta / 4.0;

    let mut scores: BTreeMap<(TaskId, PoolId), f64> = inst
        .action_set()
        .into_iter()
        .map(|a| (a, u_at(len) - 2.0 * eps))
        .collect();
    for (i, a) in target.steps.iter().enumerate() {
        if let Action::Dispatch(v, c) = a {
            scores.insert((*v, *c), u_at(i + 1) + 2.0 * eps);
        }
    }
    Ok(ScoreTable { scores, skip: psi })
}

/// Exhaustively explores every branch choice of the selected generation map
/// and returns the deduplicated set of output schedules.
pub fn enumerate_reachable(
    inst: &Instance,
    kind: MapKind,
    cap: usize,
) -> Result<Vec<Schedule>, GenError> {
    let n = inst.n_tasks();
    if n > cap {
        return Err(GenError::SizeCap { n, cap });
    }
    let mut visited: HashSet<(u64, Vec<(TaskId, PoolId, u64)>)> = HashSet::new();
    let mut out: BTreeMap<Vec<(TaskId, PoolId, u64)>, Schedule> = BTreeMap::new();

    fn go(
        sim: Sim,
        kind: MapKind,
        visited: &mut HashSet<(u64, Vec<(TaskId, PoolId, u64)>)>,
        out: &mut BTreeMap<Vec<(TaskId, PoolId, u64)>, Schedule>,
    ) {
        if sim.done() {
            out.insert(schedule_key(&sim.sched), sim.sched);
            return;
        }
        if !visited.insert(sim.state_key()) {
            return;
        }
        let acts = sim.unmasked();
        for &(v, c) in &acts {
            let mut next = sim.clone();
            next.dispatch(v, c);
            go(next, kind, visited, out);
        }
        let may_advance = match kind {
            // List scheduling only waits when forced to.
            MapKind::List => acts.is_empty(),
            // The skip action is available whenever something is running.
            MapKind::SkipExtended => !sim.running.is_empty(),
        };
        if may_advance {
            let mut next = sim.clone();
            if next.advance() {
                go(next, kind, visited, out);
            }
        }
    }

    go(Sim::new(inst), kind, &mut visited, &mut out);
    Ok(out.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p0, p0_list_schedule, p0_optimal_schedule};
    use crate::model::{check_schedule, makespan, CompatTable, Pool, Task};
    use crate::orderspace::project;

    fn independent(n: u32, cap: f64) -> Instance {
        let tasks = (1..=n)
            .map(|id| Task { id, base_time: 1.0, demand: vec![1.0], task_type: 0 })
            .collect();
        let pools = vec![Pool { id: 1, capacity: vec![cap], pool_type: 0 }];
        Instance::new(tasks, pools, vec![], CompatTable::uniform(1.0))
    }

    fn order_1_to_8() -> ScheduleOrder {
        ScheduleOrder::from_sequences(
            &[(1, (1..=8).collect::<Vec<_>>())].into_iter().collect(),
        )
    }

    #[test]
    fn skip_score_spot_values() {
        let psi = SkipParams::default();
        assert!((skip_score(psi, 0, 5) - 2f64.ln()).abs() < 1e-12);
        assert!((skip_score(psi, 8, 4) - (1.0 + (-1f64).exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn skip_score_strictly_decreasing() {
        for &(a, b, g) in &[(1.0, 1.0, 1.0), (0.3, 2.0, 0.5), (5.0, 0.1, 3.0)] {
            let psi = SkipParams { alpha: a, beta: b, gamma: g };
            for n in [1usize, 4, 9] {
                for k in 0..2 * n {
                    assert!(skip_score(psi, k, n) > skip_score(psi, k + 1, n));
                }
            }
        }
    }

    #[test]
    fn distribution_symmetry_and_values() {
        let scores: BTreeMap<u32, f64> = [(1, 0.7), (2, 0.7)].into_iter().collect();
        let p = action_distribution(&scores, &BTreeSet::new()).unwrap();
        assert!((p[&1] - 0.5).abs() < 1e-12);
        assert!((p[&2] - 0.5).abs() < 1e-12);

        let scores: BTreeMap<u32, f64> = [(1, 0.0), (2, 3f64.ln())].into_iter().collect();
        let p = action_distribution(&scores, &BTreeSet::new()).unwrap();
        assert!((p[&1] - 0.25).abs() < 1e-12);
        assert!((p[&2] - 0.75).abs() < 1e-12);
        assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_masking() {
        let scores: BTreeMap<u32, f64> = [(1, 0.0), (2, 100.0)].into_iter().collect();
        let masked: BTreeSet<u32> = [2].into_iter().collect();
        let p = action_distribution(&scores, &masked).unwrap();
        assert_eq!(p[&2], 0.0);
        assert_eq!(p[&1], 1.0);
        let all: BTreeSet<u32> = [1, 2].into_iter().collect();
        assert!(matches!(
            action_distribution(&scores, &all),
            Err(GenError::AllMasked)
        ));
    }

    #[test]
    fn list_schedule_p0_any_priority() {
        let inst = p0();
        let expected = p0_list_schedule();
        for (i, seed_scores) in [0.0, 1.0, -2.5].iter().enumerate() {
            let scores: BTreeMap<(TaskId, PoolId), f64> = inst
                .action_set()
                .into_iter()
                .map(|(v, c)| ((v, c), seed_scores + (v as f64) * if i == 2 { -1.0 } else { 1.0 }))
                .collect();
            let (x, r) = list_schedule(&inst, &Priority::Scores(scores)).unwrap();
            assert_eq!(x, expected);
            assert_eq!(r.dispatch_count(), 8);
            assert!((makespan(&inst, &x).unwrap() - 4.0).abs() < 1e-12);
        }
        let seq = ActionSequence {
            actions: (1..=8).rev().map(|v| (v, 1)).collect(),
        };
        let (x, _) = list_schedule(&inst, &Priority::Sequence(seq)).unwrap();
        assert_eq!(x, expected);
    }

    #[test]
    fn list_schedule_full_parallelism() {
        let inst = independent(3, 3.0);
        let scores = inst.action_set().into_iter().map(|a| (a, 0.0)).collect();
        let (x, _) = list_schedule(&inst, &Priority::Scores(scores)).unwrap();
        for v in 1..=3 {
            assert_eq!(x.start[&v], 0.0);
        }
        assert_eq!(makespan(&inst, &x).unwrap(), 1.0);
    }

    #[test]
    fn list_schedule_single_task() {
        let inst = independent(1, 1.0);
        let scores = inst.action_set().into_iter().map(|a| (a, 0.0)).collect();
        let (x, r) = list_schedule(&inst, &Priority::Scores(scores)).unwrap();
        assert_eq!(x.get(1), Some((1, 0.0)));
        assert_eq!(r.steps, vec![Action::Dispatch(1, 1)]);
    }

    #[test]
    fn sgs_reproduces_p0_optimum() {
        let inst = p0();
        let x = sgs(&inst, &order_1_to_8()).unwrap();
        let expected = [0.0, 0.0, 0.0, 1.1, 1.2, 2.1, 2.1, 2.2];
        for (v, &s) in (1..=8).zip(&expected) {
            assert!((x.start[&v] - s).abs() < 1e-12, "task {v}");
        }
        assert!((makespan(&inst, &x).unwrap() - 3.2).abs() < 1e-12);
        assert!(check_schedule(&inst, &x).is_feasible());
    }

    #[test]
    fn sgs_reproduces_x0_from_its_order() {
        let inst = p0();
        let x0 = p0_list_schedule();
        let x = sgs(&inst, &project(&inst, &x0)).unwrap();
        assert_eq!(x, x0);
    }

    #[test]
    fn sgs_rejects_infeasible_order() {
        let inst = p0();
        let w = ScheduleOrder::from_sequences(
            &[(1, vec![4, 1, 2, 3, 5, 6, 7, 8])].into_iter().collect(),
        );
        assert!(matches!(sgs(&inst, &w), Err(GenError::InfeasibleOrder)));
    }

    #[test]
    fn sgs_single_task() {
        let inst = independent(1, 1.0);
        let w = ScheduleOrder::from_sequences(&[(1, vec![1])].into_iter().collect());
        let x = sgs(&inst, &w).unwrap();
        assert_eq!(x.get(1), Some((1, 0.0)));
    }

    #[test]
    fn project_sgs_identity_on_p0_orders() {
        let inst = p0();
        for w in [order_1_to_8(), project(&inst, &p0_list_schedule())] {
            let x = sgs(&inst, &w).unwrap();
            assert_eq!(project(&inst, &x), w);
        }
    }

    #[test]
    fn greedy_with_tiny_skip_reduces_to_list() {
        let inst = p0();
        let table = ScoreTable::constant(
            &inst,
            0.0,
            SkipParams { alpha: 1e-12, beta: 1e-12, gamma: 1.0 },
        );
        let cfg = PolicyConfig { mode: Mode::Greedy, seed: 0 };
        let (x, r) = rollout_skip_extended(&inst, &table, cfg).unwrap();
        assert_eq!(x, p0_list_schedule());
        // The skip is only ever taken when no dispatch is eligible, i.e. the
        // rollout degenerates to list scheduling.
        assert_eq!(r.dispatch_count(), 8);
        assert!(r.steps.len() <= 16);
    }

    #[test]
    fn greedy_with_constructed_scores_is_optimal_on_p0() {
        let inst = p0();
        let target = rollout_for_schedule(&inst, &p0_optimal_schedule()).unwrap();
        let table = construct_optimal_scores(&inst, &target).unwrap();
        let cfg = PolicyConfig { mode: Mode::Greedy, seed: 0 };
        let (x, r) = rollout_skip_extended(&inst, &table, cfg).unwrap();
        assert_eq!(r, target);
        assert_eq!(x, p0_optimal_schedule());
        assert!((makespan(&inst, &x).unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn rollout_single_task() {
        let inst = independent(1, 1.0);
        let table = ScoreTable::constant(&inst, 0.0, SkipParams::default());
        let cfg = PolicyConfig { mode: Mode::Greedy, seed: 0 };
        let (x, r) = rollout_skip_extended(&inst, &table, cfg).unwrap();
        assert_eq!(r.steps, vec![Action::Dispatch(1, 1)]);
        assert_eq!(makespan(&inst, &x).unwrap(), 1.0);
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_feasible() {
        let inst = p0();
        let table = ScoreTable::constant(&inst, 0.0, SkipParams::default());
        let n = inst.n_tasks();
        for seed in 0..20u64 {
            let cfg = PolicyConfig { mode: Mode::Sampling, seed };
            let (x1, r1) = rollout_skip_extended(&inst, &table, cfg).unwrap();
            let (x2, r2) = rollout_skip_extended(&inst, &table, cfg).unwrap();
            assert_eq!(x1, x2);
            assert_eq!(r1, r2);
            assert!(check_schedule(&inst, &x1).is_feasible());
            assert_eq!(r1.dispatch_count(), n);
            assert!(r1.steps.len() <= 2 * n);
        }
    }

    #[test]
    fn realize_round_trips_recorded_rollouts() {
        let inst = p0();
        let table = ScoreTable::constant(&inst, 0.0, SkipParams::default());
        for seed in 0..20u64 {
            let cfg = PolicyConfig { mode: Mode::Sampling, seed };
            let (x, r) = rollout_skip_extended(&inst, &table, cfg).unwrap();
            assert_eq!(realize(&inst, &r).unwrap(), x);
        }
    }

    #[test]
    fn realize_skips_unreachable_leading_skip() {
        let inst = independent(2, 2.0);
        let r = Rollout {
            steps: vec![Action::Skip, Action::Dispatch(1, 1), Action::Dispatch(2, 1)],
        };
        let x = realize(&inst, &r).unwrap();
        // The masked leading skip is passed over in favor of the first
        // dispatch; it fires as soon as a task is running.
        assert_eq!(x.start[&1], 0.0);
        assert_eq!(x.start[&2], 1.0);
    }

    #[test]
    fn realize_sgs_trace_of_p0_optimum() {
        let inst = p0();
        let r = rollout_for_schedule(&inst, &p0_optimal_schedule()).unwrap();
        assert!(r.steps.len() <= 16);
        let x = realize(&inst, &r).unwrap();
        assert_eq!(x, p0_optimal_schedule());
    }

    #[test]
    fn realize_rejects_malformed() {
        let inst = independent(2, 2.0);
        let twice = Rollout {
            steps: vec![Action::Dispatch(1, 1), Action::Dispatch(1, 1)],
        };
        assert!(realize(&inst, &twice).is_err());
        let short = Rollout { steps: vec![Action::Dispatch(1, 1)] };
        assert!(realize(&inst, &short).is_err());
    }

    #[test]
    fn rollout_for_schedule_rejects_off_event_start() {
        let inst = independent(2, 1.0);
        let mut x = Schedule::new();
        x.insert(1, 1, 0.0);
        x.insert(2, 1, 1.5); // idles past the completion event at 1.0
        assert!(matches!(
            rollout_for_schedule(&inst, &x),
            Err(GenError::InfeasibleTarget(_))
        ));
    }

    #[test]
    fn enumerate_list_p0_is_singleton() {
        let inst = p0();
        let set = enumerate_reachable(&inst, MapKind::List, 8).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set[0], p0_list_schedule());
    }

    #[test]
    fn enumerate_skip_extended_p0_contains_optimum() {
        let inst = p0();
        let set = enumerate_reachable(&inst, MapKind::SkipExtended, 8).unwrap();
        assert!(set.contains(&p0_optimal_schedule()));
        for x in &set {
            assert!(check_schedule(&inst, x).is_feasible());
        }
    }

    #[test]
    fn enumerate_single_task() {
        let inst = independent(1, 1.0);
        for kind in [MapKind::List, MapKind::SkipExtended] {
            let set = enumerate_reachable(&inst, kind, 8).unwrap();
            assert_eq!(set.len(), 1);
            assert_eq!(set[0].get(1), Some((1, 0.0)));
        }
    }

    #[test]
    fn enumerate_respects_cap() {
        let inst = independent(5, 2.0);
        assert!(matches!(
            enumerate_reachable(&inst, MapKind::List, 4),
            Err(GenError::SizeCap { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn score_table_json_round_trip() {
        let inst = p0();
        let table = ScoreTable::constant(&inst, 0.5, SkipParams::default());
        let s = serde_json::to_string(&table).unwrap();
        assert!(s.contains("\"scores\""));
        assert!(s.contains("\"alpha\""));
        let back: ScoreTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, table);
    }
}
