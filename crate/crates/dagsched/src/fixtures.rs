//! The counterexample instance on which plain list scheduling is provably
//! suboptimal, together with its two reference schedules. Several tests and
//! the shipped fixture file depend on it.

use crate::model::{CompatTable, Instance, Pool, Schedule, Task};

/// Eight tasks on a single pool of capacity 3, unit coefficients.
/// List scheduling always produces the same schedule with makespan 4,
/// while the optimum is 3.2.
pub fn p0() -> Instance {
    let mut tasks = Vec::new();
    for id in 1..=8u32 {
        let base_time = match id {
            2 => 1.1,
            3 => 1.2,
            _ => 1.0,
        };
        let demand = if id == 4 { vec![2.0] } else { vec![1.0] };
        tasks.push(Task {
            id,
            base_time,
            demand,
            task_type: 0,
        });
    }
    let pools = vec![Pool {
        id: 1,
        capacity: vec![3.0],
        pool_type: 0,
    }];
    let edges = vec![(1, 4), (1, 6), (4, 7), (2, 5), (5, 8)];
    Instance::new(tasks, pools, edges, CompatTable::uniform(1.0))
}

/// The unique list-scheduling output on `p0`, makespan 4.
pub fn p0_list_schedule() -> Schedule {
    let mut x = Schedule::new();
    for (task, start) in [
        (1, 0.0),
        (2, 0.0),
        (3, 0.0),
        (6, 1.0),
        (5, 1.1),
        (4, 2.0),
        (8, 2.1),
        (7, 3.0),
    ] {
        x.insert(task, 1, start);
    }
    x
}

/// The optimal schedule on `p0`, makespan 3.2.
pub fn p0_optimal_schedule() -> Schedule {
    let mut x = Schedule::new();
    for (task, start) in [
        (1, 0.0),
        (2, 0.0),
        (3, 0.0),
        (4, 1.1),
        (5, 1.2),
        (6, 2.1),
        (7, 2.1),
        (8, 2.2),
    ] {
        x.insert(task, 1, start);
    }
    x
}
