//! Instance statistics, approximation-ratio reports and the worst-case
//! bounds they are checked against.
//!
//! With degree of interference `a` and degree of unbalance `b`, greedy is
//! within a factor `a (2 ln 2 + 4 ln b + 2)` of the optimum, within `2a` when
//! all weights are equal, and never worse than `n`. A report whose ratio
//! exceeds any of these is a bug in the solvers, not a property of the input.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::greedy::solve_greedy;
use crate::model::{ActivityDiagram, EventId, Instance, TimeWindowQuery};
use crate::oracle::{solve_optimal, OracleConfig};

/// Largest conflict neighborhood searched exactly for an independent set.
pub const EXACT_NEIGHBORHOOD_LIMIT: usize = 24;

/// Relative slack applied when comparing a ratio against a bound.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Maximum independent set size of the subgraph induced by `nodes`.
fn max_independent_set(instance: &Instance, nodes: &[EventId]) -> usize {
    let k = nodes.len();
    debug_assert!(k <= 64);
    let graph = instance.conflicts();
    let adj: Vec<u64> = nodes
        .iter()
        .map(|&u| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(_, &v)| graph.conflict(u, v))
                .fold(0u64, |m, (bit, _)| m | 1 << bit)
        })
        .collect();

    fn branch(cand: u64, size: usize, best: &mut usize, adj: &[u64]) {
        if cand == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let v = cand.trailing_zeros() as usize;
        // Take v, or leave it out. An isolated v is always taken.
        branch(cand & !adj[v] & !(1 << v), size + 1, best, adj);
        if cand & adj[v] != 0 {
            branch(cand & !(1 << v), size, best, adj);
        }
    }

    let mut best = 0;
    let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    branch(all, 0, &mut best, &adj);
    best
}

/// Size of a greedily built independent set (smallest degree first).
fn greedy_independent_set(instance: &Instance, nodes: &[EventId]) -> usize {
    let graph = instance.conflicts();
    let mut order: Vec<EventId> = nodes.to_vec();
    order.sort_by_key(|&u| (nodes.iter().filter(|&&v| graph.conflict(u, v)).count(), u));
    let mut kept: Vec<EventId> = Vec::new();
    for u in order {
        if kept.iter().all(|&k| !graph.conflict(k, u)) {
            kept.push(u);
        }
    }
    kept.len()
}

/// Largest conflict-free subset of any single event's conflict
/// neighborhood. The event itself is not part of its neighborhood, so an
/// instance without conflicts has degree 0.
pub fn degree_of_interference(instance: &Instance) -> Result<usize> {
    let graph = instance.conflicts();
    let mut a = 0;
    for e in instance.events() {
        let nbrs = graph.neighbors(e.id);
        if nbrs.len() > EXACT_NEIGHBORHOOD_LIMIT {
            return Err(Error::NeighborhoodTooLarge {
                event: e.id,
                size: nbrs.len(),
                limit: EXACT_NEIGHBORHOOD_LIMIT,
            });
        }
        if nbrs.len() > a {
            a = a.max(max_independent_set(instance, nbrs));
        }
    }
    Ok(a)
}

/// Lower bound on the degree of interference from greedy independent sets.
pub fn degree_of_interference_lower_bound(instance: &Instance) -> usize {
    let graph = instance.conflicts();
    instance
        .events()
        .iter()
        .map(|e| greedy_independent_set(instance, graph.neighbors(e.id)))
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interference {
    pub value: usize,
    /// `false` when `value` is only a greedy lower bound.
    pub exact: bool,
}

impl Interference {
    pub fn of(instance: &Instance) -> Self {
        match degree_of_interference(instance) {
            Ok(value) => Self { value, exact: true },
            Err(_) => Self {
                value: degree_of_interference_lower_bound(instance),
                exact: false,
            },
        }
    }
}

impl fmt::Display for Interference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact {
            write!(f, "{}", self.value)
        } else {
            write!(f, ">={}", self.value)
        }
    }
}

/// Ratio of the largest to the smallest weight.
pub fn degree_of_unbalance(instance: &Instance) -> Result<f64> {
    let (lo, hi) = instance
        .events()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e.weight), hi.max(e.weight)));
    if instance.is_empty() {
        return Err(Error::EmptyInstance);
    }
    Ok(hi / lo)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceStats {
    pub n: usize,
    pub conflict_pairs: usize,
    pub interference: Interference,
    /// `None` for an empty instance.
    pub unbalance: Option<f64>,
}

impl InstanceStats {
    pub fn of(instance: &Instance) -> Self {
        Self {
            n: instance.len(),
            conflict_pairs: instance.conflicts().pair_count(),
            interference: Interference::of(instance),
            unbalance: degree_of_unbalance(instance).ok(),
        }
    }
}

/// `a (2 ln 2 + 4 ln b + 2)`. Every event conflicts with itself for the
/// purpose of this bound, so `a` is taken as at least 1.
pub fn weighted_bound(a: usize, b: f64) -> f64 {
    a.max(1) as f64 * (2.0 * std::f64::consts::LN_2 + 4.0 * b.ln() + 2.0)
}

/// `2a` for equal weights, with the same `a >= 1` convention.
pub fn uniform_bound(a: usize) -> f64 {
    2.0 * a.max(1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub n: usize,
    pub conflict_pairs: usize,
    pub interference: Interference,
    pub unbalance: Option<f64>,
    pub greedy_volume: f64,
    pub greedy_first_volume: f64,
    pub optimal_volume: f64,
    pub proven_optimal: bool,
    /// `None` when both volumes are zero.
    pub ratio: Option<f64>,
    pub bound_alogb: Option<f64>,
    /// Present only when all weights are equal.
    pub bound_2a: Option<f64>,
    pub bound_n: f64,
    /// Broken bounds. Non-empty means a solver bug.
    pub violations: Vec<String>,
}

impl RatioReport {
    /// `false` when the oracle ran out of budget and `ratio` is only a
    /// lower bound.
    pub fn is_exact(&self) -> bool {
        self.proven_optimal
    }
}

/// Runs greedy and the oracle on `instance` and checks every bound.
pub fn ratio_report(instance: &Arc<Instance>, oracle: &OracleConfig) -> Result<RatioReport> {
    let (greedy, trace) = solve_greedy(instance);
    let optimum = solve_optimal(instance, oracle)?;
    let stats = InstanceStats::of(instance);
    let greedy_volume = greedy.volume();
    let greedy_first_volume = trace.first_volume().unwrap_or(0.0);

    let ratio = if greedy_volume > 0.0 {
        Some(optimum.volume / greedy_volume)
    } else if optimum.volume > 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    };
    let a = stats.interference.value;
    let bound_alogb = stats.unbalance.map(|b| weighted_bound(a, b));
    let bound_2a = stats.unbalance.filter(|&b| b == 1.0).map(|_| uniform_bound(a));
    let bound_n = stats.n.max(1) as f64;

    let mut violations = Vec::new();
    if let Some(r) = ratio {
        // A budget-limited oracle still gives a valid lower bound on the
        // ratio, so these checks apply either way.
        let mut check = |name: &str, bound: f64| {
            if r > bound * (1.0 + BOUND_TOLERANCE) {
                violations.push(format!("ratio {r} exceeds {name} bound {bound}"));
            }
        };
        // A greedy lower bound on a only makes a weaker bound.
        if stats.interference.exact {
            if let Some(bound) = bound_alogb {
                check("a(2ln2+4lnb+2)", bound);
            }
            if let Some(bound) = bound_2a {
                check("2a", bound);
            }
        }
        check("n", bound_n);
        if optimum.proven_optimal && r < 1.0 - BOUND_TOLERANCE {
            violations.push(format!("proven optimum below greedy (ratio {r})"));
        }
    }
    let best_optimal_region = (0..instance.len())
        .map(|i| optimum.diagram.region_volume(i))
        .fold(0.0f64, f64::max);
    if best_optimal_region > greedy_first_volume * (1.0 + BOUND_TOLERANCE) {
        violations.push(format!(
            "oracle region volume {best_optimal_region} exceeds greedy first pick {greedy_first_volume}"
        ));
    }

    Ok(RatioReport {
        n: stats.n,
        conflict_pairs: stats.conflict_pairs,
        interference: stats.interference,
        unbalance: stats.unbalance,
        greedy_volume,
        greedy_first_volume,
        optimal_volume: optimum.volume,
        proven_optimal: optimum.proven_optimal,
        ratio,
        bound_alogb,
        bound_2a,
        bound_n,
        violations,
    })
}

/// [`ratio_report`] over many instances; results keep input order.
pub fn ratio_batch(
    instances: &[Arc<Instance>],
    oracle: &OracleConfig,
    exec: Execution,
) -> Vec<Result<RatioReport>> {
    // Inner enumeration stays sequential when the batch itself fans out.
    let inner = OracleConfig {
        exec: if exec.is_parallel() {
            Execution::Sequential
        } else {
            oracle.exec
        },
        ..*oracle
    };
    exec::map_slice(exec, instances, |inst| ratio_report(inst, &inner))
}

pub const CSV_HEADER: [&str; 11] = [
    "n",
    "pairs",
    "a",
    "b",
    "greedy",
    "optimal",
    "proven",
    "ratio",
    "bound_alogb",
    "bound_2a",
    "bound_n",
];

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| x.to_string())
}

impl RatioReport {
    pub fn csv_record(&self) -> [String; 11] {
        [
            self.n.to_string(),
            self.conflict_pairs.to_string(),
            self.interference.to_string(),
            opt_num(self.unbalance),
            self.greedy_volume.to_string(),
            self.optimal_volume.to_string(),
            self.proven_optimal.to_string(),
            opt_num(self.ratio),
            opt_num(self.bound_alogb),
            opt_num(self.bound_2a),
            self.bound_n.to_string(),
        ]
    }
}

/// Writes a header and one row per report.
pub fn write_csv<'a, W: Write>(
    out: W,
    reports: impl IntoIterator<Item = &'a RatioReport>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

impl fmt::Display for RatioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "n = {}, conflict pairs = {}, a = {}, b = {}",
            self.n,
            self.conflict_pairs,
            self.interference,
            opt_num(self.unbalance)
        )?;
        writeln!(f, "greedy volume  = {}", self.greedy_volume)?;
        writeln!(
            f,
            "optimal volume = {} ({})",
            self.optimal_volume,
            if self.proven_optimal { "proven" } else { "lower bound, budget exhausted" }
        )?;
        let rel = if self.proven_optimal { "=" } else { ">=" };
        writeln!(f, "ratio {rel} {}", opt_num(self.ratio))?;
        write!(
            f,
            "bounds: a(2ln2+4lnb+2) = {}, 2a = {}, n = {}",
            opt_num(self.bound_alogb),
            opt_num(self.bound_2a),
            self.bound_n
        )?;
        for v in &self.violations {
            write!(f, "\nVIOLATION: {v}")?;
        }
        Ok(())
    }
}

/// Estimates the diagram volume by integrating the total weight of active
/// events over the configuration-space triangle. Deterministic in `seed`
/// regardless of `exec`.
pub fn monte_carlo_volume(
    diagram: &ActivityDiagram,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> f64 {
    const CHUNKS: usize = 64;
    let inst = diagram.instance();
    let (lo, hi) = (inst.t_min(), inst.t_max());
    let per_chunk = samples.div_ceil(CHUNKS);
    let sums = exec::map_indices(exec, CHUNKS, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = per_chunk.min(samples.saturating_sub(c * per_chunk));
        let mut acc = 0.0;
        for _ in 0..count {
            let x = rng.random_range(lo..=hi);
            let y = rng.random_range(lo..=hi);
            let q = TimeWindowQuery {
                start: x.min(y),
                end: x.max(y),
            };
            acc += diagram.stabbed(q).map(|id| inst.event(id).weight).sum::<f64>();
        }
        acc
    });
    if samples == 0 {
        return 0.0;
    }
    let triangle = (hi - lo) * (hi - lo) / 2.0;
    triangle * sums.iter().sum::<f64>() / samples as f64
}
