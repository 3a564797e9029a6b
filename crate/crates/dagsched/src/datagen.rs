//! Synthetic instance generation: random DAG families (layered,
//! Erdős–Rényi, stochastic block), Gaussian-mixture task durations,
//! heterogeneity profiles, and the folded longest-directed-distance matrix
//! used as a structural feature.

use std::collections::BTreeMap;

use rand::distributions::{Bernoulli, Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_instance, CompatTable, Instance, Pool, Task, TaskId, TypeId,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("invalid heterogeneity profile: {0}")]
    ProfileInvalid(String),
}

/// Random-DAG family. Undirected families are oriented from lower to higher
/// node index, which makes every sample acyclic by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DagKind {
    /// Nodes are split into ⌈√n⌉ layers whose sizes vary with coefficient of
    /// variation `sigma_n`; adjacent layers connect with density `rho_e`,
    /// layer-skipping pairs with density `rho_s`.
    Layered { sigma_n: f64, rho_e: f64, rho_s: f64 },
    ErdosRenyi { p: f64 },
    /// Four equal blocks; within-block pairs connect with `p_in`,
    /// cross-block pairs with `p_out`.
    StochasticBlock { p_in: f64, p_out: f64 },
}

fn check_prob(name: &str, p: f64) -> Result<(), DatagenError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DatagenError::ParameterRange(format!("{name} = {p} not in [0, 1]")));
    }
    Ok(())
}

/// Samples a DAG over nodes 1..=n; edges always point from lower to higher
/// id. Deterministic per seed.
pub fn gen_dag(kind: DagKind, n: usize, seed: u64) -> Result<Vec<(TaskId, TaskId)>, DatagenError> {
    if n < 1 {
        return Err(DatagenError::ParameterRange("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    match kind {
        DagKind::ErdosRenyi { p } => {
            check_prob("p", p)?;
            let d = Bernoulli::new(p).unwrap();
            for i in 1..=n as TaskId {
                for j in (i + 1)..=n as TaskId {
                    if d.sample(&mut rng) {
                        edges.push((i, j));
                    }
                }
            }
        }
        DagKind::StochasticBlock { p_in, p_out } => {
            check_prob("p_in", p_in)?;
            check_prob("p_out", p_out)?;
            let blocks = 4usize;
            let block_of = |i: TaskId| ((i as usize - 1) * blocks / n).min(blocks - 1);
            let din = Bernoulli::new(p_in).unwrap();
            let dout = Bernoulli::new(p_out).unwrap();
            for i in 1..=n as TaskId {
                for j in (i + 1)..=n as TaskId {
                    let d = if block_of(i) == block_of(j) { &din } else { &dout };
                    if d.sample(&mut rng) {
                        edges.push((i, j));
                    }
                }
            }
        }
        DagKind::Layered { sigma_n, rho_e, rho_s } => {
            check_prob("rho_e", rho_e)?;
            check_prob("rho_s", rho_s)?;
            if sigma_n < 0.0 {
                return Err(DatagenError::ParameterRange(format!(
                    "sigma_n = {sigma_n} must be nonnegative"
                )));
            }
            let layers = layer_sizes(n, sigma_n, &mut rng);
            // Assign consecutive id ranges to layers.
            let mut layer_of: Vec<usize> = Vec::with_capacity(n);
            for (l, &sz) in layers.iter().enumerate() {
                layer_of.extend(std::iter::repeat(l).take(sz));
            }
            let de = Bernoulli::new(rho_e).unwrap();
            let ds = Bernoulli::new(rho_s).unwrap();
            for i in 1..=n as TaskId {
                for j in (i + 1)..=n as TaskId {
                    let (li, lj) = (layer_of[i as usize - 1], layer_of[j as usize - 1]);
                    if lj == li + 1 {
                        if de.sample(&mut rng) {
                            edges.push((i, j));
                        }
                    } else if lj > li + 1 && ds.sample(&mut rng) {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    Ok(edges)
}

/// ⌈√n⌉ layer sizes from a normal with mean n/L and coefficient of
/// variation `sigma_n`, clamped to at least one node and rebalanced so the
/// total is exactly n.
fn layer_sizes(n: usize, sigma_n: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let l = (n as f64).sqrt().ceil() as usize;
    let mean = n as f64 / l as f64;
    let dist = Normal::new(mean, sigma_n * mean).unwrap();
    let mut sizes: Vec<usize> = (0..l)
        .map(|_| dist.sample(rng).round().max(1.0) as usize)
        .collect();
    let mut total: usize = sizes.iter().sum();
    let mut idx = 0usize;
    while total != n {
        if total < n {
            sizes[idx % l] += 1;
            total += 1;
        } else if sizes[idx % l] > 1 {
            sizes[idx % l] -= 1;
            total -= 1;
        }
        idx += 1;
    }
    sizes
}

pub const GMM_MEANS: [f64; 4] = [0.5, 1.0, 3.0, 5.0];
pub const GMM_STDS: [f64; 4] = [0.5, 1.0, 1.0, 1.0];

/// The duration transform applied to a raw mixture draw.
pub fn duration_from_m(m: f64) -> u64 {
    (100.0 * m.max(0.0)).round() as u64 + 1
}

/// Integer durations from the four-component equal-weight Gaussian mixture,
/// clamped to the nonnegative domain before the transform.
pub fn gen_durations_gmm(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<Normal<f64>> = GMM_MEANS
        .iter()
        .zip(GMM_STDS.iter())
        .map(|(&m, &s)| Normal::new(m, s).unwrap())
        .collect();
    (0..n)
        .map(|_| {
            let c = rng.gen_range(0..comps.len());
            duration_from_m(comps[c].sample(&mut rng))
        })
        .collect()
}

/// How one resource dimension of a task demand is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DemandDist {
    /// Uniform over an explicit list of values.
    Choice { values: Vec<f64> },
    /// Uniform over the integers lo..=hi.
    UniformInt { lo: u64, hi: u64 },
}

/// Sampling rules that turn a bare DAG plus durations into a heterogeneous
/// instance: task-type distribution, per-dimension demand distributions,
/// the pool roster and the type-level compatibility table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HetProfile {
    /// Relative weights of task types 0..len-1.
    pub type_weights: Vec<f64>,
    pub demands: Vec<DemandDist>,
    pub pools: Vec<Pool>,
    pub compat: CompatTable,
}

impl HetProfile {
    /// Three-pool profile used with externally supplied DAGs: capacities
    /// (600, 260), (800, 240), (500, 240); pool-type-0 coefficients
    /// (1.0, 1/0.8, 1/0.7), pool-type-1 coefficients (0, 1/1.0, 1/1.1).
    pub fn three_pool() -> HetProfile {
        let mut compat = CompatTable::default();
        for (tt, k) in [(0, 1.0), (1, 1.0 / 0.8), (2, 1.0 / 0.7)] {
            compat.by_type.insert((tt, 0), k);
        }
        for (tt, k) in [(1, 1.0), (2, 1.0 / 1.1)] {
            compat.by_type.insert((tt, 1), k);
        }
        HetProfile {
            type_weights: vec![1.0, 1.0, 1.0],
            demands: vec![
                DemandDist::UniformInt { lo: 1, hi: 593 },
                DemandDist::Choice { values: vec![30.0, 40.0, 50.0] },
            ],
            pools: vec![
                Pool { id: 1, capacity: vec![600.0, 260.0], pool_type: 0 },
                Pool { id: 2, capacity: vec![800.0, 240.0], pool_type: 1 },
                Pool { id: 3, capacity: vec![500.0, 240.0], pool_type: 1 },
            ],
            compat,
        }
    }

    /// Profile used with the synthetic computation graphs: processor demand
    /// uniform over {2, 4, 8, 16}, memory over {1, 2, 3}; task types with
    /// weights (1/6, 1/6, 2/3); pool capacities (16, 15), (12, 20), (64, 50).
    pub fn computation_graph() -> HetProfile {
        let mut compat = CompatTable::default();
        for (tt, k) in [(0, 1.0), (1, 1.0 / 0.8), (2, 1.0 / 1.2)] {
            compat.by_type.insert((tt, 0), k);
        }
        for (tt, k) in [(1, 1.0 / 1.2), (2, 1.0 / 0.8)] {
            compat.by_type.insert((tt, 1), k);
        }
        HetProfile {
            type_weights: vec![1.0, 1.0, 4.0],
            demands: vec![
                DemandDist::Choice { values: vec![2.0, 4.0, 8.0, 16.0] },
                DemandDist::Choice { values: vec![1.0, 2.0, 3.0] },
            ],
            pools: vec![
                Pool { id: 1, capacity: vec![16.0, 15.0], pool_type: 0 },
                Pool { id: 2, capacity: vec![12.0, 20.0], pool_type: 1 },
                Pool { id: 3, capacity: vec![64.0, 50.0], pool_type: 1 },
            ],
            compat,
        }
    }
}

/// Samples task types and demands per the profile and attaches pools and the
/// compatibility table. The result always passes instance validation.
pub fn augment_heterogeneous(
    edges: &[(TaskId, TaskId)],
    durations: &[u64],
    profile: &HetProfile,
    seed: u64,
) -> Result<Instance, DatagenError> {
    if profile.type_weights.is_empty() || profile.type_weights.iter().any(|&w| w < 0.0) {
        return Err(DatagenError::ProfileInvalid("bad type weights".into()));
    }
    if profile.pools.is_empty() || profile.demands.is_empty() {
        return Err(DatagenError::ProfileInvalid("pools and demands must be nonempty".into()));
    }
    for d in &profile.demands {
        match d {
            DemandDist::Choice { values } if values.is_empty() => {
                return Err(DatagenError::ProfileInvalid("empty demand choice list".into()))
            }
            DemandDist::UniformInt { lo, hi } if lo > hi => {
                return Err(DatagenError::ProfileInvalid("empty demand range".into()))
            }
            _ => {}
        }
    }
    // Every task type must be compatible with at least one pool type.
    for tt in 0..profile.type_weights.len() as TypeId {
        let ok = profile.pools.iter().any(|p| {
            profile
                .compat
                .by_type
                .get(&(tt, p.pool_type))
                .is_some_and(|&k| k > 0.0)
        });
        if !ok {
            return Err(DatagenError::ProfileInvalid(format!(
                "task type {tt} is incompatible with every pool"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let type_dist = WeightedIndex::new(&profile.type_weights)
        .map_err(|e| DatagenError::ProfileInvalid(e.to_string()))?;
    let tasks: Vec<Task> = durations
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let demand: Vec<f64> = profile
                .demands
                .iter()
                .map(|d| match d {
                    DemandDist::Choice { values } => values[rng.gen_range(0..values.len())],
                    DemandDist::UniformInt { lo, hi } => rng.gen_range(*lo..=*hi) as f64,
                })
                .collect();
            Task {
                id: (i + 1) as TaskId,
                base_time: t as f64,
                demand,
                task_type: type_dist.sample(&mut rng) as TypeId,
            }
        })
        .collect();
    let inst = Instance::new(tasks, profile.pools.clone(), edges.to_vec(), profile.compat.clone());
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(DatagenError::ProfileInvalid(report.violations.join("; ")));
    }
    Ok(inst)
}

pub const DEFAULT_D_MAX: i64 = 500;

/// Folded longest-directed-distance matrix, indexed by the instance's task
/// order. Entry (v, w) is the longest directed path length v→w, negated for
/// the reverse direction, clamped to ±(d_max − 1); pairs that are connected
/// only in the undirected sense fold to +d_max, disconnected pairs to
/// −d_max. The diagonal is 0.
pub fn ldd_matrix(inst: &Instance, d_max: i64) -> Vec<Vec<i64>> {
    let ids: Vec<TaskId> = inst.tasks.iter().map(|t| t.id).collect();
    let index: BTreeMap<TaskId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = ids.len();

    // Longest path lengths via DP over a topological order.
    let topo = inst.topo_order().expect("instance edges must be acyclic");
    let mut longest = vec![vec![None::<i64>; n]; n];
    for (i, _) in ids.iter().enumerate() {
        longest[i][i] = Some(0);
    }
    for &u in topo.iter().rev() {
        let ui = index[&u];
        for w in inst.successors(u) {
            let wi = index[&w];
            for t in 0..n {
                if let Some(d) = longest[wi][t] {
                    let cand = d + 1;
                    if longest[ui][t].is_none_or(|cur| cand > cur) {
                        longest[ui][t] = Some(cand);
                    }
                }
            }
        }
    }

    // Undirected connectivity via union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, w) in &inst.edges {
        let (ru, rw) = (find(&mut parent, index[&u]), find(&mut parent, index[&w]));
        parent[ru] = rw;
    }

    let mut out = vec![vec![0i64; n]; n];
    for v in 0..n {
        for w in 0..n {
            let folded = if v == w {
                0
            } else if let Some(d) = longest[v][w] {
                d.min(d_max - 1)
            } else if let Some(d) = longest[w][v] {
                (-d).max(-(d_max - 1))
            } else if find(&mut parent, v) == find(&mut parent, w) {
                d_max
            } else {
                -d_max
            };
            out[v][w] = folded;
        }
    }
    out
}
