//! Exhaustive oracle, optimality-gap measurement, and insertion-move local
//! search over the feasible order space.
//!
//! The oracle exploits that the serial generation scheme picks the best
//! schedule inside each order fiber, so minimizing its makespan over all
//! feasible orders yields the exact global optimum.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::genmaps::{enumerate_reachable, sgs, GenError, MapKind};
use crate::model::{makespan, Instance, Schedule};
use crate::orderspace::{
    enumerate_feasible_orders, insertion_neighbors, project, ScheduleOrder,
};

/// Which generation map a gap is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    List,
    SkipExtended,
    Sgs,
}

/// Exact global optimum by enumerating all feasible orders and evaluating
/// each fiber through the serial generation scheme.
pub fn brute_force_optimum(inst: &Instance, cap: usize) -> Result<(Schedule, f64), GenError> {
    let orders = enumerate_feasible_orders(inst, cap)
        .map_err(|_| GenError::SizeCap { n: inst.n_tasks(), cap })?;
    let mut best: Option<(Schedule, f64)> = None;
    for w in &orders {
        let x = sgs(inst, w)?;
        let m = makespan(inst, &x).unwrap();
        if best.as_ref().is_none_or(|(_, bm)| m < *bm) {
            best = Some((x, m));
        }
    }
    best.ok_or(GenError::Deadlock)
}

/// Best makespan the selected generation map can reach.
pub fn best_reachable(inst: &Instance, kind: GapKind, cap: usize) -> Result<f64, GenError> {
    let makespans: Vec<f64> = match kind {
        GapKind::List | GapKind::SkipExtended => {
            let mk = if kind == GapKind::List {
                MapKind::List
            } else {
                MapKind::SkipExtended
            };
            enumerate_reachable(inst, mk, cap)?
                .iter()
                .map(|x| makespan(inst, x).unwrap())
                .collect()
        }
        GapKind::Sgs => {
            let orders = enumerate_feasible_orders(inst, cap)
                .map_err(|_| GenError::SizeCap { n: inst.n_tasks(), cap })?;
            orders
                .iter()
                .map(|w| makespan(inst, &sgs(inst, w).unwrap()).unwrap())
                .collect()
        }
    };
    Ok(makespans.into_iter().fold(f64::INFINITY, f64::min))
}

/// Gap of a generation map: its best reachable makespan minus the oracle
/// optimum; nonnegative by construction.
pub fn optimality_gap(inst: &Instance, kind: GapKind, cap: usize) -> Result<f64, GenError> {
    let (_, opt) = brute_force_optimum(inst, cap)?;
    Ok(best_reachable(inst, kind, cap)? - opt)
}

/// One local-search step: evaluates the serial scheme over the insertion
/// neighborhood plus the current order. Ties keep the current order; among
/// strictly better neighbors the lexicographically smallest wins.
pub fn local_search_step(
    inst: &Instance,
    w: &ScheduleOrder,
) -> Result<(ScheduleOrder, f64), GenError> {
    let current = makespan(inst, &sgs(inst, w)?).unwrap();
    let mut best = (w.clone(), current);
    for cand in insertion_neighbors(inst, w) {
        let m = makespan(inst, &sgs(inst, &cand)?).unwrap();
        if m < best.1 || (m == best.1 && best.0 != *w && cand < best.0) {
            best = (cand, m);
        }
    }
    Ok(best)
}

/// Iterated local search from a feasible schedule: descends through order
/// space until a fixed point or the step budget, then returns the better of
/// the found schedule and the input.
pub fn local_search(
    inst: &Instance,
    x0: &Schedule,
    max_steps: usize,
) -> Result<Schedule, GenError> {
    let mut w = project(inst, x0);
    for _ in 0..max_steps {
        let (next, _) = local_search_step(inst, &w)?;
        if next == w {
            break;
        }
        w = next;
    }
    let found = sgs(inst, &w)?;
    if makespan(inst, &found).unwrap() <= makespan(inst, x0).unwrap() {
        Ok(found)
    } else {
        Ok(x0.clone())
    }
}

/// Whether every feasible order can reach some oracle-optimal order through
/// directed insertion moves (breadth-first search on the reversed move
/// graph).
pub fn insertion_connectivity(inst: &Instance, cap: usize) -> Result<bool, GenError> {
    let orders = enumerate_feasible_orders(inst, cap)
        .map_err(|_| GenError::SizeCap { n: inst.n_tasks(), cap })?;
    let (_, opt) = brute_force_optimum(inst, cap)?;

    let index: BTreeMap<&ScheduleOrder, usize> =
        orders.iter().enumerate().map(|(i, w)| (w, i)).collect();
    // Reversed adjacency: for each order, who can move into it.
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); orders.len()];
    for (i, w) in orders.iter().enumerate() {
        for nb in insertion_neighbors(inst, w) {
            let j = index[&nb];
            rev[j].push(i);
        }
    }

    let mut reached: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, w) in orders.iter().enumerate() {
        let m = makespan(inst, &sgs(inst, w)?).unwrap();
        if m <= opt + 1e-12 {
            reached.insert(i);
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for &i in &rev[j] {
            if reached.insert(i) {
                queue.push_back(i);
            }
        }
    }
    Ok(reached.len() == orders.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p0, p0_list_schedule, p0_optimal_schedule};
    use crate::model::{check_schedule, CompatTable, Instance, Pool, Task};
    use crate::orderspace::DEFAULT_ENUM_CAP;

    fn unit_tasks(times: &[f64], cap: f64) -> Instance {
        let tasks = times
            .iter()
            .enumerate()
            .map(|(i, &t)| Task {
                id: (i + 1) as u32,
                base_time: t,
                demand: vec![1.0],
                task_type: 0,
            })
            .collect();
        let pools = vec![Pool { id: 1, capacity: vec![cap], pool_type: 0 }];
        Instance::new(tasks, pools, vec![], CompatTable::uniform(1.0))
    }

    #[test]
    fn oracle_on_p0() {
        let inst = p0();
        let (x, m) = brute_force_optimum(&inst, DEFAULT_ENUM_CAP).unwrap();
        assert!((m - 3.2).abs() < 1e-12);
        assert!(check_schedule(&inst, &x).is_feasible());
    }

    #[test]
    fn oracle_trivial_cases() {
        let single = unit_tasks(&[5.0], 1.0);
        let (_, m) = brute_force_optimum(&single, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(m, 5.0);
        let parallel = unit_tasks(&[1.0, 1.0, 1.0], 3.0);
        let (_, m) = brute_force_optimum(&parallel, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(m, 1.0);
    }

    #[test]
    fn gaps_on_p0() {
        let inst = p0();
        let list = optimality_gap(&inst, GapKind::List, DEFAULT_ENUM_CAP).unwrap();
        assert!((list - 0.8).abs() < 1e-12);
        let sgs_gap = optimality_gap(&inst, GapKind::Sgs, DEFAULT_ENUM_CAP).unwrap();
        assert!(sgs_gap.abs() < 1e-12);
        let skip = optimality_gap(&inst, GapKind::SkipExtended, DEFAULT_ENUM_CAP).unwrap();
        assert!(skip.abs() < 1e-12);
    }

    #[test]
    fn step_is_fixed_point_at_optimum() {
        let inst = p0();
        let w = project(&inst, &p0_optimal_schedule());
        let (next, m) = local_search_step(&inst, &w).unwrap();
        assert_eq!(next, w);
        assert!((m - 3.2).abs() < 1e-12);
    }

    #[test]
    fn step_improves_two_task_order() {
        // Capacity 1, t = (1, 2): both serial orders give makespan 3, but
        // with a dependent third task the order matters.
        let mut inst = unit_tasks(&[1.0, 2.0], 1.0);
        inst = Instance::new(
            inst.tasks.clone(),
            inst.pools.clone(),
            vec![],
            CompatTable::uniform(1.0),
        );
        let worse = ScheduleOrder::from_sequences(&[(1, vec![2, 1])].into_iter().collect());
        let (next, m) = local_search_step(&inst, &worse).unwrap();
        // Both orders have equal makespan here, so the step keeps the input.
        assert_eq!(next, worse);
        assert_eq!(m, 3.0);
    }

    #[test]
    fn local_search_descends_on_p0() {
        let inst = p0();
        let x = local_search(&inst, &p0_list_schedule(), 20).unwrap();
        assert!((makespan(&inst, &x).unwrap() - 3.2).abs() < 1e-12);
        assert!(check_schedule(&inst, &x).is_feasible());
    }

    #[test]
    fn local_search_keeps_optimum() {
        let inst = p0();
        let x = local_search(&inst, &p0_optimal_schedule(), 20).unwrap();
        assert!((makespan(&inst, &x).unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn connectivity_on_p0_and_trivial() {
        assert!(insertion_connectivity(&p0(), DEFAULT_ENUM_CAP).unwrap());
        assert!(insertion_connectivity(&unit_tasks(&[1.0], 1.0), DEFAULT_ENUM_CAP).unwrap());
    }

    #[test]
    fn size_cap_errors() {
        let inst = unit_tasks(&[1.0; 5], 2.0);
        assert!(matches!(
            brute_force_optimum(&inst, 4),
            Err(GenError::SizeCap { .. })
        ));
        assert!(matches!(
            insertion_connectivity(&inst, 4),
            Err(GenError::SizeCap { .. })
        ));
    }
}
