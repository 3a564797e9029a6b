//! Heterogeneous DAG scheduling toolkit.
//!
//! Tasks with vector resource demands run on resource pools with vector
//! capacities; per task-type/pool-type coefficients scale processing times.
//! The crate covers schedule feasibility checking, the schedule-order view
//! of the solution space, generation maps (list scheduling, serial schedule
//! generation, skip-extended rollouts), priority and insertion heuristics,
//! exhaustive oracles and local search for small instances, MILP export,
//! synthetic instance generators and benchmarking.

pub mod bench;
pub mod datagen;
pub mod fixtures;
pub mod genmaps;
pub mod heuristics;
pub mod milp;
pub mod model;
pub mod orderspace;
pub mod search;
