//! Core problem representation: instances, schedules, feasibility checking
//! and makespan evaluation for heterogeneous DAG scheduling.
//!
//! An instance is a DAG of tasks with base processing times and resource
//! demand vectors, scheduled onto resource pools with vector capacities.
//! Compatibility coefficients scale processing times per task/pool pair;
//! a coefficient of zero marks the pair as incompatible.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TaskId = u32;
pub type PoolId = u32;
pub type TypeId = u32;

/// Nonnegative per-dimension resource amounts (demand or capacity).
pub type ResourceVector = Vec<f64>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("task {task} is incompatible with pool {pool}")]
    IncompatiblePair { task: TaskId, pool: PoolId },
    #[error("unknown task id {0}")]
    UnknownTask(TaskId),
    #[error("unknown pool id {0}")]
    UnknownPool(PoolId),
    #[error("schedule is missing task {0}")]
    MissingAssignment(TaskId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    #[serde(rename = "time")]
    pub base_time: f64,
    pub demand: ResourceVector,
    #[serde(rename = "type")]
    pub task_type: TypeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub id: PoolId,
    pub capacity: ResourceVector,
    #[serde(rename = "type")]
    pub pool_type: TypeId,
}

/// Compatibility coefficients, stored per (task type, pool type) with
/// optional per-pair overrides. Missing entries resolve to 0 (incompatible).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "CompatTableJson", into = "CompatTableJson")]
pub struct CompatTable {
    pub by_type: BTreeMap<(TypeId, TypeId), f64>,
    pub overrides: BTreeMap<(TaskId, PoolId), f64>,
}

impl CompatTable {
    /// Uniform coefficient for every (task type, pool type) pair that occurs.
    pub fn uniform(k: f64) -> Self {
        let mut t = CompatTable::default();
        t.by_type.insert((0, 0), k);
        t
    }

    pub fn coefficient(&self, task: &Task, pool: &Pool) -> f64 {
        if let Some(&k) = self.overrides.get(&(task.id, pool.id)) {
            return k;
        }
        self.by_type
            .get(&(task.task_type, pool.pool_type))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CompatTableJson {
    #[serde(default)]
    by_type: Vec<(TypeId, TypeId, f64)>,
    #[serde(default)]
    overrides: Vec<(TaskId, PoolId, f64)>,
}

impl From<CompatTable> for CompatTableJson {
    fn from(t: CompatTable) -> Self {
        CompatTableJson {
            by_type: t.by_type.into_iter().map(|((a, b), k)| (a, b, k)).collect(),
            overrides: t.overrides.into_iter().map(|((a, b), k)| (a, b, k)).collect(),
        }
    }
}

impl From<CompatTableJson> for CompatTable {
    fn from(j: CompatTableJson) -> Self {
        CompatTable {
            by_type: j.by_type.into_iter().map(|(a, b, k)| ((a, b), k)).collect(),
            overrides: j.overrides.into_iter().map(|(a, b, k)| ((a, b), k)).collect(),
        }
    }
}

/// A heterogeneous DAG scheduling instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "InstanceJson", into = "InstanceJson")]
pub struct Instance {
    pub tasks: Vec<Task>,
    pub pools: Vec<Pool>,
    pub edges: Vec<(TaskId, TaskId)>,
    pub compat: CompatTable,
    task_index: HashMap<TaskId, usize>,
    pool_index: HashMap<PoolId, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceJson {
    resources: usize,
    tasks: Vec<Task>,
    pools: Vec<Pool>,
    edges: Vec<(TaskId, TaskId)>,
    compat: CompatTableJson,
}

impl From<Instance> for InstanceJson {
    fn from(inst: Instance) -> Self {
        InstanceJson {
            resources: inst.resource_dims(),
            tasks: inst.tasks,
            pools: inst.pools,
            edges: inst.edges,
            compat: inst.compat.into(),
        }
    }
}

impl From<InstanceJson> for Instance {
    fn from(j: InstanceJson) -> Self {
        Instance::new(j.tasks, j.pools, j.edges, j.compat.into())
    }
}

impl Instance {
    pub fn new(
        tasks: Vec<Task>,
        pools: Vec<Pool>,
        edges: Vec<(TaskId, TaskId)>,
        compat: CompatTable,
    ) -> Self {
        let task_index = tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        let pool_index = pools.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        Instance {
            tasks,
            pools,
            edges,
            compat,
            task_index,
            pool_index,
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn resource_dims(&self) -> usize {
        self.tasks
            .first()
            .map(|t| t.demand.len())
            .or_else(|| self.pools.first().map(|p| p.capacity.len()))
            .unwrap_or(0)
    }

    pub fn task(&self, id: TaskId) -> Result<&Task, ModelError> {
        self.task_index
            .get(&id)
            .map(|&i| &self.tasks[i])
            .ok_or(ModelError::UnknownTask(id))
    }

    pub fn pool(&self, id: PoolId) -> Result<&Pool, ModelError> {
        self.pool_index
            .get(&id)
            .map(|&i| &self.pools[i])
            .ok_or(ModelError::UnknownPool(id))
    }

    pub fn has_task(&self, id: TaskId) -> bool {
        self.task_index.contains_key(&id)
    }

    pub fn coefficient(&self, task: TaskId, pool: PoolId) -> Result<f64, ModelError> {
        Ok(self.compat.coefficient(self.task(task)?, self.pool(pool)?))
    }

    /// Actual processing time t(v)/K(v,c); errors on an incompatible pair.
    pub fn actual_time(&self, task: TaskId, pool: PoolId) -> Result<f64, ModelError> {
        let k = self.coefficient(task, pool)?;
        if k <= 0.0 {
            return Err(ModelError::IncompatiblePair { task, pool });
        }
        Ok(self.task(task)?.base_time / k)
    }

    /// Predecessors of `task` in the dependency relation.
    pub fn predecessors(&self, task: TaskId) -> impl Iterator<Item = TaskId> + '_ {
        self.edges
            .iter()
            .filter(move |&&(_, w)| w == task)
            .map(|&(v, _)| v)
    }

    pub fn successors(&self, task: TaskId) -> impl Iterator<Item = TaskId> + '_ {
        self.edges
            .iter()
            .filter(move |&&(v, _)| v == task)
            .map(|&(_, w)| w)
    }

    /// All (task, pool) pairs with fitting demand and positive coefficient.
    pub fn action_set(&self) -> Vec<(TaskId, PoolId)> {
        let mut out = Vec::new();
        for t in &self.tasks {
            for p in &self.pools {
                if self.compat.coefficient(t, p) > 0.0 && fits(&t.demand, &p.capacity) {
                    out.push((t.id, p.id));
                }
            }
        }
        out
    }

    /// Pools on which `task` can run right now (static action-set filter only).
    pub fn compatible_pools(&self, task: TaskId) -> Vec<PoolId> {
        let t = match self.task(task) {
            Ok(t) => t,
            Err(_) => return Vec::new(),
        };
        self.pools
            .iter()
            .filter(|p| self.compat.coefficient(t, p) > 0.0 && fits(&t.demand, &p.capacity))
            .map(|p| p.id)
            .collect()
    }

    /// Tasks in some topological order of the dependency DAG, or None on a cycle.
    pub fn topo_order(&self) -> Option<Vec<TaskId>> {
        let mut indeg: BTreeMap<TaskId, usize> =
            self.tasks.iter().map(|t| (t.id, 0)).collect();
        for &(v, w) in &self.edges {
            if let Some(d) = indeg.get_mut(&w) {
                *d += 1;
            }
            let _ = v;
        }
        let mut ready: Vec<TaskId> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(v) = ready.pop() {
            order.push(v);
            for w in self.successors(v) {
                if let Some(d) = indeg.get_mut(&w) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push(w);
                    }
                }
            }
        }
        (order.len() == self.tasks.len()).then_some(order)
    }
}

pub fn fits(demand: &[f64], capacity: &[f64]) -> bool {
    demand.len() == capacity.len() && demand.iter().zip(capacity).all(|(d, c)| d <= c)
}

/// Start time and pool assignment per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScheduleJson", into = "ScheduleJson")]
pub struct Schedule {
    pub start: BTreeMap<TaskId, f64>,
    pub pool: BTreeMap<TaskId, PoolId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleJson {
    assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Assignment {
    task: TaskId,
    pool: PoolId,
    start: f64,
}

impl From<Schedule> for ScheduleJson {
    fn from(x: Schedule) -> Self {
        let assignments = x
            .start
            .iter()
            .map(|(&task, &start)| Assignment {
                task,
                pool: x.pool[&task],
                start,
            })
            .collect();
        ScheduleJson { assignments }
    }
}

impl From<ScheduleJson> for Schedule {
    fn from(j: ScheduleJson) -> Self {
        let mut x = Schedule::new();
        for a in j.assignments {
            x.insert(a.task, a.pool, a.start);
        }
        x
    }
}

impl Schedule {
    pub fn new() -> Self {
        Schedule {
            start: BTreeMap::new(),
            pool: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, task: TaskId, pool: PoolId, start: f64) {
        self.start.insert(task, start);
        self.pool.insert(task, pool);
    }

    pub fn get(&self, task: TaskId) -> Option<(PoolId, f64)> {
        Some((*self.pool.get(&task)?, *self.start.get(&task)?))
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of validating an instance: a (possibly empty) list of violations.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every instance invariant; violations are report entries, not errors.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let dims = inst.resource_dims();

    let mut seen = std::collections::HashSet::new();
    for t in &inst.tasks {
        if !seen.insert(t.id) {
            report.violations.push(format!("duplicate task id {}", t.id));
        }
        if !(t.base_time > 0.0) {
            report
                .violations
                .push(format!("task {} has nonpositive base time", t.id));
        }
        if t.demand.len() != dims {
            report
                .violations
                .push(format!("task {} demand dimension mismatch", t.id));
        }
        if t.demand.iter().any(|&d| d < 0.0) {
            report
                .violations
                .push(format!("task {} has negative demand", t.id));
        }
    }
    let mut seen_pools = std::collections::HashSet::new();
    for p in &inst.pools {
        if !seen_pools.insert(p.id) {
            report.violations.push(format!("duplicate pool id {}", p.id));
        }
        if p.capacity.len() != dims {
            report
                .violations
                .push(format!("pool {} capacity dimension mismatch", p.id));
        }
        if p.capacity.iter().any(|&c| c <= 0.0) {
            report
                .violations
                .push(format!("pool {} has nonpositive capacity", p.id));
        }
    }
    for &(v, w) in &inst.edges {
        if !inst.has_task(v) || !inst.has_task(w) {
            report
                .violations
                .push(format!("dangling edge ({v},{w})"));
        }
    }
    if inst.topo_order().is_none() {
        report.violations.push("cycle in E".to_string());
    }
    for t in &inst.tasks {
        let has_action = inst.pools.iter().any(|p| {
            inst.compat.coefficient(t, p) > 0.0 && fits(&t.demand, &p.capacity)
        });
        if !has_action {
            report
                .violations
                .push(format!("empty action set for task {}", t.id));
        }
    }
    report
}

/// Feasibility verdict for a concrete schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible(String),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

/// Checks dependency, resource, compatibility and nonnegativity constraints.
///
/// Running intervals are half-open: a task occupying [s, s+t_act) frees its
/// resources for a task starting exactly at its completion time. Resource
/// sums are checked at task start times only, which suffices since pool
/// usage changes only at start/completion events.
pub fn check_schedule(inst: &Instance, x: &Schedule) -> Verdict {
    for t in &inst.tasks {
        let Some((pool, start)) = x.get(t.id) else {
            return Verdict::Infeasible(format!("task {} unassigned", t.id));
        };
        if start < 0.0 {
            return Verdict::Infeasible(format!("task {} has negative start", t.id));
        }
        let p = match inst.pool(pool) {
            Ok(p) => p,
            Err(_) => return Verdict::Infeasible(format!("task {} on unknown pool {pool}", t.id)),
        };
        if inst.compat.coefficient(t, p) <= 0.0 {
            return Verdict::Infeasible(format!(
                "task {} assigned to incompatible pool {pool}",
                t.id
            ));
        }
    }
    for &(v, w) in &inst.edges {
        let (pv, sv) = x.get(v).unwrap();
        let (_, sw) = x.get(w).unwrap();
        let end_v = sv + inst.actual_time(v, pv).unwrap();
        if end_v > sw {
            return Verdict::Infeasible(format!("edge ({v},{w}) violated"));
        }
    }
    // Capacity check at every task start event.
    for t in &inst.tasks {
        let (pool, tau) = x.get(t.id).unwrap();
        let cap = &inst.pool(pool).unwrap().capacity;
        let mut usage = vec![0.0; cap.len()];
        for u in &inst.tasks {
            let (pu, su) = x.get(u.id).unwrap();
            if pu != pool {
                continue;
            }
            let end = su + inst.actual_time(u.id, pu).unwrap();
            if su <= tau && tau < end {
                for (acc, d) in usage.iter_mut().zip(&u.demand) {
                    *acc += d;
                }
            }
        }
        if usage.iter().zip(cap).any(|(u, c)| *u > *c) {
            return Verdict::Infeasible(format!(
                "capacity of pool {pool} exceeded at t={tau} (task {} start)",
                t.id
            ));
        }
    }
    Verdict::Feasible
}

/// Latest completion time over all tasks.
pub fn makespan(inst: &Instance, x: &Schedule) -> Result<f64, ModelError> {
    let mut best = 0.0f64;
    for t in &inst.tasks {
        let (pool, start) = x.get(t.id).ok_or(ModelError::MissingAssignment(t.id))?;
        let end = start + inst.actual_time(t.id, pool)?;
        best = best.max(end);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p0, p0_list_schedule, p0_optimal_schedule};

    #[test]
    fn p0_is_valid() {
        assert!(validate_instance(&p0()).is_valid());
    }

    #[test]
    fn two_cycle_is_reported() {
        let tasks = vec![
            Task { id: 1, base_time: 1.0, demand: vec![1.0], task_type: 0 },
            Task { id: 2, base_time: 1.0, demand: vec![1.0], task_type: 0 },
        ];
        let pools = vec![Pool { id: 1, capacity: vec![3.0], pool_type: 0 }];
        let inst = Instance::new(tasks, pools, vec![(1, 2), (2, 1)], CompatTable::uniform(1.0));
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| v.contains("cycle in E")));
    }

    #[test]
    fn oversized_demand_means_empty_action_set() {
        let tasks = vec![Task { id: 1, base_time: 1.0, demand: vec![5.0], task_type: 0 }];
        let pools = vec![Pool { id: 1, capacity: vec![3.0], pool_type: 0 }];
        let inst = Instance::new(tasks, pools, vec![], CompatTable::uniform(1.0));
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| v.contains("empty action set")));
    }

    #[test]
    fn actual_time_divides_by_coefficient() {
        let tasks = vec![
            Task { id: 1, base_time: 1.0, demand: vec![1.0], task_type: 0 },
            Task { id: 2, base_time: 1.0, demand: vec![1.0], task_type: 1 },
            Task { id: 3, base_time: 2.0, demand: vec![1.0], task_type: 2 },
        ];
        let pools = vec![Pool { id: 1, capacity: vec![3.0], pool_type: 0 }];
        let mut compat = CompatTable::default();
        compat.by_type.insert((0, 0), 1.0);
        compat.by_type.insert((1, 0), 0.8);
        let inst = Instance::new(tasks, pools, vec![], compat);
        assert_eq!(inst.actual_time(1, 1).unwrap(), 1.0);
        assert!((inst.actual_time(2, 1).unwrap() - 1.25).abs() < 1e-12);
        assert!(matches!(
            inst.actual_time(3, 1),
            Err(ModelError::IncompatiblePair { task: 3, pool: 1 })
        ));
    }

    #[test]
    fn p0_action_set_is_all_pairs() {
        let inst = p0();
        let actions = inst.action_set();
        assert_eq!(actions.len(), 8);
        assert!(actions.iter().all(|&(_, c)| c == 1));
    }

    #[test]
    fn action_set_filters_capacity_and_compat() {
        let tasks = vec![
            Task { id: 1, base_time: 1.0, demand: vec![4.0], task_type: 0 },
            Task { id: 2, base_time: 1.0, demand: vec![1.0], task_type: 1 },
        ];
        let pools = vec![Pool { id: 1, capacity: vec![3.0], pool_type: 0 }];
        let mut compat = CompatTable::default();
        compat.by_type.insert((0, 0), 1.0);
        compat.by_type.insert((1, 0), 0.0);
        let inst = Instance::new(tasks, pools, vec![], compat);
        assert!(inst.action_set().is_empty());
    }

    #[test]
    fn p0_reference_schedules_are_feasible() {
        let inst = p0();
        let x0 = p0_list_schedule();
        let xs = p0_optimal_schedule();
        assert!(check_schedule(&inst, &x0).is_feasible());
        assert!(check_schedule(&inst, &xs).is_feasible());
        assert!((makespan(&inst, &x0).unwrap() - 4.0).abs() < 1e-12);
        assert!((makespan(&inst, &xs).unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn p0_capacity_overflow_detected() {
        let inst = p0();
        let mut x = p0_list_schedule();
        x.insert(4, 1, 0.0); // overlaps 1,2,3: total demand 5 > 3
        assert!(!check_schedule(&inst, &x).is_feasible());
    }

    #[test]
    fn single_task_makespan() {
        let tasks = vec![Task { id: 7, base_time: 5.0, demand: vec![1.0], task_type: 0 }];
        let pools = vec![Pool { id: 1, capacity: vec![1.0], pool_type: 0 }];
        let inst = Instance::new(tasks, pools, vec![], CompatTable::uniform(1.0));
        let mut x = Schedule::new();
        x.insert(7, 1, 0.0);
        assert_eq!(makespan(&inst, &x).unwrap(), 5.0);
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = p0();
        let s = serde_json::to_string(&inst).unwrap();
        assert!(s.contains("\"resources\""));
        assert!(s.contains("\"time\""));
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back.n_tasks(), 8);
        assert_eq!(back.actual_time(2, 1).unwrap(), 1.1);
    }
}
