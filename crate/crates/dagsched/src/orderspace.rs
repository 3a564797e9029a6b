//! Schedule orders: pool assignment plus within-pool rank for every task.
//!
//! A schedule order abstracts a schedule down to "which pool, in which
//! position". Feasibility of an order is characterized by acyclicity of the
//! dependency graph augmented with within-pool rank edges. Small instances
//! admit exhaustive enumeration of the feasible order space.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{fits, Instance, PoolId, Schedule, TaskId};

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("action sequence does not cover task {0}")]
    IncompleteSequence(TaskId),
    #[error("instance exceeds the enumeration size cap ({n} tasks > {cap})")]
    SizeCap { n: usize, cap: usize },
}

/// Pool assignment c(v) and within-pool rank d(v) for every task.
///
/// Ranks on each pool are exactly 1..=n(c).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "OrderJson", into = "OrderJson")]
pub struct ScheduleOrder {
    pub pool: BTreeMap<TaskId, PoolId>,
    pub rank: BTreeMap<TaskId, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OrderJson {
    order: Vec<OrderEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OrderEntry {
    task: TaskId,
    pool: PoolId,
    rank: u32,
}

impl From<ScheduleOrder> for OrderJson {
    fn from(w: ScheduleOrder) -> Self {
        let order = w
            .pool
            .iter()
            .map(|(&task, &pool)| OrderEntry {
                task,
                pool,
                rank: w.rank[&task],
            })
            .collect();
        OrderJson { order }
    }
}

impl From<OrderJson> for ScheduleOrder {
    fn from(j: OrderJson) -> Self {
        let mut w = ScheduleOrder::new();
        for e in j.order {
            w.pool.insert(e.task, e.pool);
            w.rank.insert(e.task, e.rank);
        }
        w
    }
}

impl ScheduleOrder {
    pub fn new() -> Self {
        ScheduleOrder {
            pool: BTreeMap::new(),
            rank: BTreeMap::new(),
        }
    }

    /// Tasks of one pool in ascending rank order.
    pub fn pool_sequence(&self, pool: PoolId) -> Vec<TaskId> {
        let mut seq: Vec<TaskId> = self
            .pool
            .iter()
            .filter(|(_, &p)| p == pool)
            .map(|(&v, _)| v)
            .collect();
        seq.sort_by_key(|v| self.rank[v]);
        seq
    }

    /// Pools that have at least one task assigned.
    pub fn used_pools(&self) -> BTreeSet<PoolId> {
        self.pool.values().copied().collect()
    }

    /// Builds an order from per-pool task sequences.
    pub fn from_sequences(seqs: &BTreeMap<PoolId, Vec<TaskId>>) -> Self {
        let mut w = ScheduleOrder::new();
        for (&pool, seq) in seqs {
            for (i, &v) in seq.iter().enumerate() {
                w.pool.insert(v, pool);
                w.rank.insert(v, (i + 1) as u32);
            }
        }
        w
    }
}

impl Default for ScheduleOrder {
    fn default() -> Self {
        Self::new()
    }
}

/// An ordered list of (task, pool) dispatch actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSequence {
    pub actions: Vec<(TaskId, PoolId)>,
}

/// Dependency edges plus all within-pool rank edges.
#[derive(Debug, Clone)]
pub struct AugmentedGraph {
    pub nodes: Vec<TaskId>,
    pub edges: BTreeSet<(TaskId, TaskId)>,
}

impl AugmentedGraph {
    pub fn is_acyclic(&self) -> bool {
        let mut indeg: BTreeMap<TaskId, usize> = self.nodes.iter().map(|&v| (v, 0)).collect();
        let mut succ: BTreeMap<TaskId, Vec<TaskId>> = BTreeMap::new();
        for &(u, v) in &self.edges {
            *indeg.entry(v).or_insert(0) += 1;
            succ.entry(u).or_default().push(v);
        }
        let mut ready: Vec<TaskId> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            if let Some(ws) = succ.get(&v) {
                for &w in ws {
                    let d = indeg.get_mut(&w).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.push(w);
                    }
                }
            }
        }
        seen == indeg.len()
    }
}

/// Extracts the schedule order of a feasible schedule: pools as assigned,
/// ranks by ascending start time, ties broken by ascending task id.
pub fn project(inst: &Instance, x: &Schedule) -> ScheduleOrder {
    let mut per_pool: BTreeMap<PoolId, Vec<TaskId>> = BTreeMap::new();
    for t in &inst.tasks {
        let (pool, _) = x.get(t.id).expect("schedule covers all tasks");
        per_pool.entry(pool).or_default().push(t.id);
    }
    for seq in per_pool.values_mut() {
        seq.sort_by(|&a, &b| {
            x.start[&a]
                .partial_cmp(&x.start[&b])
                .unwrap()
                .then(a.cmp(&b))
        });
    }
    ScheduleOrder::from_sequences(&per_pool)
}

/// The graph G_w with one edge per (dependency or rank-ordered same-pool) pair.
pub fn augmented_graph(inst: &Instance, w: &ScheduleOrder) -> AugmentedGraph {
    let mut edges: BTreeSet<(TaskId, TaskId)> = inst.edges.iter().copied().collect();
    for (&u, &pu) in &w.pool {
        for (&v, &pv) in &w.pool {
            if u != v && pu == pv && w.rank[&u] < w.rank[&v] {
                edges.insert((u, v));
            }
        }
    }
    AugmentedGraph {
        nodes: inst.tasks.iter().map(|t| t.id).collect(),
        edges,
    }
}

/// An order is feasible iff its augmented graph is acyclic and every task
/// sits on a compatible pool with fitting demand.
pub fn is_feasible_order(inst: &Instance, w: &ScheduleOrder) -> bool {
    for t in &inst.tasks {
        let Some(&pool) = w.pool.get(&t.id) else {
            return false;
        };
        let Ok(p) = inst.pool(pool) else { return false };
        if inst.compat.coefficient(t, p) <= 0.0 || !fits(&t.demand, &p.capacity) {
            return false;
        }
    }
    augmented_graph(inst, w).is_acyclic()
}

/// Collapses an action sequence to its schedule order: per pool, ranks
/// follow subsequence position. Constant on classes of adjacent swaps of
/// actions on different pools.
pub fn canonicalize(inst: &Instance, seq: &ActionSequence) -> Result<ScheduleOrder, OrderError> {
    let mut per_pool: BTreeMap<PoolId, Vec<TaskId>> = BTreeMap::new();
    for &(v, c) in &seq.actions {
        per_pool.entry(c).or_default().push(v);
    }
    let w = ScheduleOrder::from_sequences(&per_pool);
    for t in &inst.tasks {
        if !w.pool.contains_key(&t.id) {
            return Err(OrderError::IncompleteSequence(t.id));
        }
    }
    Ok(w)
}

/// Canonical representative of a feasible order: the fixed point reached by
/// iterating projection of the serial schedule. Orders that differ only by
/// permuting tasks the serial scheme starts at the same instant share one
/// representative, which makes projection a left inverse of the serial
/// scheme on canonical orders (a single-valued projection cannot
/// distinguish such permutations). The iteration terminates because each
/// step's serial schedule is pointwise no later than the previous one (the
/// previous schedule realizes the projected order, and the serial scheme is
/// fiber-minimal) and the serial-scheme image is finite; for the same
/// reason the representative's makespan never exceeds the original one.
pub fn canonical_form(inst: &Instance, w: &ScheduleOrder) -> ScheduleOrder {
    let mut w = w.clone();
    loop {
        let x = crate::genmaps::sgs(inst, &w).expect("feasible order realizes a schedule");
        let next = project(inst, &x);
        if next == w {
            return w;
        }
        w = next;
    }
}

/// All feasible orders reachable by removing one task and reinserting it at
/// any position of any compatible pool (cross-pool moves included); results
/// are canonical representatives.
pub fn insertion_neighbors(inst: &Instance, w: &ScheduleOrder) -> BTreeSet<ScheduleOrder> {
    let mut out = BTreeSet::new();
    let mut seqs: BTreeMap<PoolId, Vec<TaskId>> = BTreeMap::new();
    for p in &inst.pools {
        seqs.insert(p.id, w.pool_sequence(p.id));
    }
    for t in &inst.tasks {
        let v = t.id;
        let home = w.pool[&v];
        let mut removed = seqs.clone();
        removed.get_mut(&home).unwrap().retain(|&u| u != v);
        for target in inst.compatible_pools(v) {
            let slots = removed[&target].len() + 1;
            for pos in 0..slots {
                let mut cand = removed.clone();
                cand.get_mut(&target).unwrap().insert(pos, v);
                let order = ScheduleOrder::from_sequences(&cand);
                if is_feasible_order(inst, &order) {
                    let canon = canonical_form(inst, &order);
                    if canon != *w {
                        out.insert(canon);
                    }
                }
            }
        }
    }
    out
}

pub const DEFAULT_ENUM_CAP: usize = 8;

/// Exhaustively enumerates the feasible order space by depth-first search
/// over dispatch choices: at each step any task with all dependency
/// predecessors placed may be appended to any compatible pool. Every
/// feasible order arises from at least one such sequence; the set
/// deduplicates interleavings and folds each order to its canonical
/// representative (see [`canonical_form`]). Folding never increases the
/// serial-schedule makespan, so optimizing over the representatives is
/// equivalent to optimizing over the full feasible order space.
pub fn enumerate_feasible_orders(
    inst: &Instance,
    cap: usize,
) -> Result<Vec<ScheduleOrder>, OrderError> {
    let n = inst.n_tasks();
    if n > cap {
        return Err(OrderError::SizeCap { n, cap });
    }
    let task_ids: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    let preds: BTreeMap<TaskId, Vec<TaskId>> = task_ids
        .iter()
        .map(|&v| (v, inst.predecessors(v).collect()))
        .collect();
    let pools: BTreeMap<TaskId, Vec<PoolId>> = task_ids
        .iter()
        .map(|&v| (v, inst.compatible_pools(v)))
        .collect();

    let mut found: BTreeSet<ScheduleOrder> = BTreeSet::new();
    let mut placed: BTreeSet<TaskId> = BTreeSet::new();
    let mut seqs: BTreeMap<PoolId, Vec<TaskId>> =
        inst.pools.iter().map(|p| (p.id, Vec::new())).collect();

    fn dfs(
        task_ids: &[TaskId],
        preds: &BTreeMap<TaskId, Vec<TaskId>>,
        pools: &BTreeMap<TaskId, Vec<PoolId>>,
        placed: &mut BTreeSet<TaskId>,
        seqs: &mut BTreeMap<PoolId, Vec<TaskId>>,
        found: &mut BTreeSet<ScheduleOrder>,
    ) {
        if placed.len() == task_ids.len() {
            found.insert(ScheduleOrder::from_sequences(seqs));
            return;
        }
        for &v in task_ids {
            if placed.contains(&v) || !preds[&v].iter().all(|p| placed.contains(p)) {
                continue;
            }
            for &c in &pools[&v] {
                placed.insert(v);
                seqs.get_mut(&c).unwrap().push(v);
                dfs(task_ids, preds, pools, placed, seqs, found);
                seqs.get_mut(&c).unwrap().pop();
                placed.remove(&v);
            }
        }
    }

    dfs(&task_ids, &preds, &pools, &mut placed, &mut seqs, &mut found);
    let canonical: BTreeSet<ScheduleOrder> = found
        .into_iter()
        .map(|w| canonical_form(inst, &w))
        .collect();
    Ok(canonical.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p0, p0_list_schedule, p0_optimal_schedule};
    use crate::model::{CompatTable, Pool, Task};

    fn tiny(n: u32, pools: u32, edges: Vec<(TaskId, TaskId)>) -> Instance {
        let tasks = (1..=n)
            .map(|id| Task { id, base_time: 1.0, demand: vec![1.0], task_type: 0 })
            .collect();
        let pools = (1..=pools)
            .map(|id| Pool { id, capacity: vec![1.0], pool_type: 0 })
            .collect();
        Instance::new(tasks, pools, edges, CompatTable::uniform(1.0))
    }

    #[test]
    fn project_p0_schedules() {
        let inst = p0();
        let w0 = project(&inst, &p0_list_schedule());
        assert_eq!(w0.pool_sequence(1), vec![1, 2, 3, 6, 5, 4, 8, 7]);
        let ws = project(&inst, &p0_optimal_schedule());
        assert_eq!(ws.pool_sequence(1), vec![1, 2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn augmented_graph_pool_edges() {
        let inst = tiny(2, 1, vec![]);
        let w = ScheduleOrder::from_sequences(&[(1, vec![1, 2])].into_iter().collect());
        let g = augmented_graph(&inst, &w);
        assert!(g.edges.contains(&(1, 2)));
        assert!(!g.edges.contains(&(2, 1)));

        let inst2 = tiny(2, 2, vec![]);
        let w2 =
            ScheduleOrder::from_sequences(&[(1, vec![1]), (2, vec![2])].into_iter().collect());
        assert!(augmented_graph(&inst2, &w2).edges.is_empty());
    }

    #[test]
    fn p0_identity_order_graph() {
        let inst = p0();
        let w = ScheduleOrder::from_sequences(
            &[(1, (1..=8).collect::<Vec<_>>())].into_iter().collect(),
        );
        let g = augmented_graph(&inst, &w);
        for i in 1..8u32 {
            assert!(g.edges.contains(&(i, i + 1)));
        }
        for e in &inst.edges {
            assert!(g.edges.contains(e));
        }
        assert!(g.is_acyclic());
    }

    #[test]
    fn inverted_precedence_is_infeasible() {
        let inst = p0();
        let w = ScheduleOrder::from_sequences(
            &[(1, vec![4, 1, 2, 3, 5, 6, 7, 8])].into_iter().collect(),
        );
        assert!(!is_feasible_order(&inst, &w));
        let ok = ScheduleOrder::from_sequences(
            &[(1, (1..=8).collect::<Vec<_>>())].into_iter().collect(),
        );
        assert!(is_feasible_order(&inst, &ok));
    }

    #[test]
    fn incompatible_pool_is_infeasible() {
        let tasks = vec![Task { id: 1, base_time: 1.0, demand: vec![1.0], task_type: 1 }];
        let pools = vec![
            Pool { id: 1, capacity: vec![1.0], pool_type: 0 },
            Pool { id: 2, capacity: vec![1.0], pool_type: 1 },
        ];
        let mut compat = CompatTable::default();
        compat.by_type.insert((1, 1), 1.0);
        let inst = Instance::new(tasks, pools, vec![], compat);
        let bad = ScheduleOrder::from_sequences(&[(1, vec![1])].into_iter().collect());
        assert!(!is_feasible_order(&inst, &bad));
        let good = ScheduleOrder::from_sequences(&[(2, vec![1])].into_iter().collect());
        assert!(is_feasible_order(&inst, &good));
    }

    #[test]
    fn canonicalize_reads_off_subsequences() {
        let inst = tiny(3, 2, vec![]);
        let seq = ActionSequence { actions: vec![(1, 1), (2, 2), (3, 1)] };
        let w = canonicalize(&inst, &seq).unwrap();
        assert_eq!(w.pool_sequence(1), vec![1, 3]);
        assert_eq!(w.pool_sequence(2), vec![2]);
        assert_eq!(w.rank[&3], 2);
    }

    #[test]
    fn canonicalize_invariant_under_cross_pool_swap() {
        let inst = tiny(2, 2, vec![]);
        let a = ActionSequence { actions: vec![(1, 1), (2, 2)] };
        let b = ActionSequence { actions: vec![(2, 2), (1, 1)] };
        assert_eq!(canonicalize(&inst, &a).unwrap(), canonicalize(&inst, &b).unwrap());
    }

    #[test]
    fn canonicalize_rejects_incomplete() {
        let inst = tiny(2, 1, vec![]);
        let seq = ActionSequence { actions: vec![(1, 1)] };
        assert!(matches!(
            canonicalize(&inst, &seq),
            Err(OrderError::IncompleteSequence(2))
        ));
    }

    /// Brute-force check of the quotient bijection on all 2-task 2-pool
    /// sequences: canonicalize is constant on swap classes and injective
    /// across classes.
    #[test]
    fn canonicalize_bijection_small() {
        let inst = tiny(2, 2, vec![]);
        let mut all = Vec::new();
        for &c1 in &[1u32, 2] {
            for &c2 in &[1u32, 2] {
                all.push(vec![(1, c1), (2, c2)]);
                all.push(vec![(2, c2), (1, c1)]);
            }
        }
        // Swap classes: two sequences are equivalent iff one arises from the
        // other by swapping adjacent actions on different pools.
        let mut classes: Vec<(Vec<Vec<(TaskId, PoolId)>>, ScheduleOrder)> = Vec::new();
        for seq in &all {
            let w = canonicalize(&inst, &ActionSequence { actions: seq.clone() }).unwrap();
            let swapped = vec![seq[1], seq[0]];
            let same_class = seq[0].1 != seq[1].1 && all.contains(&swapped);
            match classes.iter_mut().find(|(members, _)| {
                members.contains(seq) || (same_class && members.contains(&swapped))
            }) {
                Some((members, canon)) => {
                    assert_eq!(*canon, w);
                    members.push(seq.clone());
                }
                None => classes.push((vec![seq.clone()], w)),
            }
        }
        let canon_set: BTreeSet<ScheduleOrder> =
            classes.iter().map(|(_, w)| w.clone()).collect();
        assert_eq!(canon_set.len(), classes.len());
        assert_eq!(classes.len(), 6);
    }

    #[test]
    fn insertion_neighbors_two_tasks_one_pool() {
        let inst = tiny(2, 1, vec![]);
        let w = ScheduleOrder::from_sequences(&[(1, vec![1, 2])].into_iter().collect());
        let n = insertion_neighbors(&inst, &w);
        assert_eq!(n.len(), 1);
        assert_eq!(n.iter().next().unwrap().pool_sequence(1), vec![2, 1]);
    }

    #[test]
    fn insertion_neighbors_cross_pool() {
        let inst = tiny(1, 2, vec![]);
        let w = ScheduleOrder::from_sequences(&[(1, vec![1])].into_iter().collect());
        let n = insertion_neighbors(&inst, &w);
        assert_eq!(n.len(), 1);
        assert_eq!(n.iter().next().unwrap().pool[&1], 2);
    }

    /// Independent naive count: every (task, target pool, position) triple,
    /// deduplicated and filtered, must match insertion_neighbors on P0.
    #[test]
    fn insertion_neighbors_p0_matches_naive() {
        let inst = p0();
        let w = ScheduleOrder::from_sequences(
            &[(1, (1..=8).collect::<Vec<_>>())].into_iter().collect(),
        );
        let fast = insertion_neighbors(&inst, &w);

        let mut naive = BTreeSet::new();
        let base = w.pool_sequence(1);
        for (i, &v) in base.iter().enumerate() {
            let mut removed = base.clone();
            removed.remove(i);
            for pos in 0..=removed.len() {
                let mut cand = removed.clone();
                cand.insert(pos, v);
                let order =
                    ScheduleOrder::from_sequences(&[(1, cand)].into_iter().collect());
                if is_feasible_order(&inst, &order) {
                    let canon = canonical_form(&inst, &order);
                    if canon != w {
                        naive.insert(canon);
                    }
                }
            }
        }
        assert_eq!(fast, naive);
        assert!(!fast.is_empty());
    }

    #[test]
    fn enumerate_two_tasks_one_pool() {
        let inst = tiny(2, 1, vec![]);
        assert_eq!(enumerate_feasible_orders(&inst, 8).unwrap().len(), 2);
    }

    #[test]
    fn enumerate_two_tasks_two_pools() {
        let inst = tiny(2, 2, vec![]);
        assert_eq!(enumerate_feasible_orders(&inst, 8).unwrap().len(), 6);
    }

    /// P0 has one pool, so the dispatch sequences are exactly the
    /// topological extensions of the dependency relation. Check the
    /// enumerated representatives against an independent walk over every
    /// topological extension: each representative's serial schedule must
    /// appear among the extensions' serial schedules, the representatives
    /// must cover the optimal makespan, and folding must have merged some
    /// extensions (ample capacity creates simultaneous starts).
    #[test]
    fn enumerate_p0_covers_serial_schedules_of_extensions() {
        let inst = p0();
        let orders = enumerate_feasible_orders(&inst, 8).unwrap();

        fn walk(
            remaining: &mut BTreeSet<TaskId>,
            prefix: &mut Vec<TaskId>,
            preds: &BTreeMap<TaskId, Vec<TaskId>>,
            inst: &Instance,
            extensions: &mut usize,
            schedules: &mut BTreeSet<String>,
        ) {
            if remaining.is_empty() {
                *extensions += 1;
                let w = ScheduleOrder::from_sequences(
                    &[(1, prefix.clone())].into_iter().collect(),
                );
                let x = crate::genmaps::sgs(inst, &w).unwrap();
                schedules.insert(serde_json::to_string(&x).unwrap());
                return;
            }
            let choices: Vec<TaskId> = remaining
                .iter()
                .copied()
                .filter(|v| preds[v].iter().all(|p| !remaining.contains(p)))
                .collect();
            for v in choices {
                remaining.remove(&v);
                prefix.push(v);
                walk(remaining, prefix, preds, inst, extensions, schedules);
                prefix.pop();
                remaining.insert(v);
            }
        }
        let preds: BTreeMap<TaskId, Vec<TaskId>> = (1..=8)
            .map(|v| (v, inst.predecessors(v).collect()))
            .collect();
        let mut remaining: BTreeSet<TaskId> = (1..=8).collect();
        let mut prefix = Vec::new();
        let mut extensions = 0usize;
        let mut schedules = BTreeSet::new();
        walk(&mut remaining, &mut prefix, &preds, &inst, &mut extensions, &mut schedules);

        assert!(orders.len() < extensions);
        let mut best = f64::INFINITY;
        for json in &schedules {
            let x: crate::model::Schedule = serde_json::from_str(json).unwrap();
            best = best.min(crate::model::makespan(&inst, &x).unwrap());
        }
        let mut best_repr = f64::INFINITY;
        for w in &orders {
            // Every representative is a fixed point of the canonical fold
            // whose serial schedule arises from some extension.
            assert_eq!(&canonical_form(&inst, w), w);
            let x = crate::genmaps::sgs(&inst, w).unwrap();
            assert!(schedules.contains(&serde_json::to_string(&x).unwrap()));
            best_repr = best_repr.min(crate::model::makespan(&inst, &x).unwrap());
        }
        assert_eq!(best, 3.2);
        assert_eq!(best_repr, best);
    }

    #[test]
    fn enumerate_respects_cap() {
        let inst = tiny(5, 1, vec![]);
        assert!(matches!(
            enumerate_feasible_orders(&inst, 4),
            Err(OrderError::SizeCap { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn order_json_round_trip() {
        let w = ScheduleOrder::from_sequences(
            &[(1, vec![3, 1]), (2, vec![2])].into_iter().collect(),
        );
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"order\""));
        let back: ScheduleOrder = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }
}
