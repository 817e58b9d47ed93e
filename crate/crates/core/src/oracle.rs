//! Exact optimal activity diagrams for small and medium instances.
//!
//! For a conflicting pair with `t_i <= t_j`, the anchored regions
//! `[l_i, t_i] x [t_i, u_i]` and `[l_j, t_j] x [t_j, u_j]` have disjoint
//! interiors iff `l_j >= t_i` ([`Disjunct::Left`]) or `u_i <= t_j`
//! ([`Disjunct::Top`]). Once every pair has picked a side, each bound is an
//! independent `max`/`min` and pushing it to its limit is optimal, so the
//! search is over disjunct assignments only.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{ActivityDiagram, ActivityRegion, EventId, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Disjunct {
    /// The later event starts no earlier than the earlier timestamp.
    Left,
    /// The earlier event ends no later than the later timestamp.
    Top,
}

/// A conflicting pair normalized so that `t_early <= t_late` (ties by id).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConflictConstraint {
    pub early: EventId,
    pub late: EventId,
}

/// All conflicting pairs, normalized, sorted by `(early, late)`.
pub fn conflict_pairs(instance: &Instance) -> Vec<ConflictConstraint> {
    let mut pairs: Vec<ConflictConstraint> = instance
        .conflicts()
        .pairs()
        .map(|(a, b)| {
            let (ta, tb) = (instance.event(a).timestamp, instance.event(b).timestamp);
            // a < b, so on equal timestamps a is the early one.
            if ta <= tb {
                ConflictConstraint { early: a, late: b }
            } else {
                ConflictConstraint { early: b, late: a }
            }
        })
        .collect();
    pairs.sort_by_key(|p| (p.early, p.late));
    pairs
}

/// Region bounds implied by a full assignment.
fn bounds_for<'a>(
    instance: &Instance,
    pairs: impl IntoIterator<Item = (&'a ConflictConstraint, Disjunct)>,
) -> (Vec<f64>, Vec<f64>) {
    let n = instance.len();
    let mut left = vec![instance.t_min(); n];
    let mut top = vec![instance.t_max(); n];
    for (p, d) in pairs {
        let (te, tl) = (instance.event(p.early).timestamp, instance.event(p.late).timestamp);
        match d {
            Disjunct::Left => left[p.late] = left[p.late].max(te),
            Disjunct::Top => top[p.early] = top[p.early].min(tl),
        }
    }
    (left, top)
}

fn volume_of(instance: &Instance, left: &[f64], top: &[f64]) -> f64 {
    instance
        .events()
        .iter()
        .map(|e| e.weight * ((e.timestamp - left[e.id]) * (top[e.id] - e.timestamp)))
        .sum()
}

fn diagram_from(instance: &Arc<Instance>, left: &[f64], top: &[f64]) -> ActivityDiagram {
    let regions = (0..instance.len())
        .map(|i| ActivityRegion::new(i, left[i], top[i]))
        .collect();
    ActivityDiagram::new(instance.clone(), regions).expect("one region per event")
}

/// Best diagram satisfying the chosen disjunct for every pair of
/// [`conflict_pairs`], in that order.
pub fn optimal_under_assignment(
    instance: &Arc<Instance>,
    assignment: &[Disjunct],
) -> Result<(ActivityDiagram, f64)> {
    let pairs = conflict_pairs(instance);
    if pairs.len() != assignment.len() {
        return Err(Error::InvalidParameter(format!(
            "assignment has {} choices for {} conflict pairs",
            assignment.len(),
            pairs.len()
        )));
    }
    let (left, top) = bounds_for(instance, pairs.iter().zip(assignment.iter().copied()));
    let volume = volume_of(instance, &left, &top);
    Ok((diagram_from(instance, &left, &top), volume))
}

/// Hard ceiling on exhaustive enumeration regardless of `pair_cap`.
pub const MAX_EXHAUSTIVE_PAIRS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Exhaustive,
    BranchAndBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub mode: OracleMode,
    /// Largest pair count accepted by exhaustive mode.
    pub pair_cap: usize,
    /// Wall-clock limit for branch-and-bound.
    pub time_budget: Duration,
    /// How exhaustive enumeration spreads its work.
    pub exec: Execution,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mode: OracleMode::BranchAndBound,
            pair_cap: 20,
            time_budget: Duration::from_secs(60),
            exec: Execution::default(),
        }
    }
}

impl OracleConfig {
    pub fn exhaustive() -> Self {
        Self {
            mode: OracleMode::Exhaustive,
            ..Self::default()
        }
    }

    pub fn branch_and_bound(time_budget: Duration) -> Self {
        Self {
            mode: OracleMode::BranchAndBound,
            time_budget,
            ..Self::default()
        }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub diagram: ActivityDiagram,
    pub volume: f64,
    pub proven_optimal: bool,
    /// Chosen disjunct per pair of [`conflict_pairs`].
    pub assignment: Vec<Disjunct>,
    /// Leaves for exhaustive mode, search nodes for branch-and-bound.
    pub nodes: u64,
}

pub fn solve_optimal(instance: &Arc<Instance>, config: &OracleConfig) -> Result<OracleSolution> {
    let pairs = conflict_pairs(instance);
    match config.mode {
        OracleMode::Exhaustive => {
            if pairs.len() > config.pair_cap.min(MAX_EXHAUSTIVE_PAIRS) {
                return Err(Error::PairCapExceeded {
                    pairs: pairs.len(),
                    cap: config.pair_cap.min(MAX_EXHAUSTIVE_PAIRS),
                });
            }
            Ok(exhaustive(instance, &pairs, config.exec))
        }
        OracleMode::BranchAndBound => Ok(BranchAndBound::new(instance, &pairs, config.time_budget).run()),
    }
}

fn mask_choice(mask: u64, k: usize, m: usize) -> Disjunct {
    // Pair 0 is the most significant bit, so numeric order is lexicographic.
    if mask >> (m - 1 - k) & 1 == 0 {
        Disjunct::Left
    } else {
        Disjunct::Top
    }
}

/// Evaluates all `2^m` assignments. Among volume-maximal ones the
/// lexicographically least (`Left < Top`) is returned.
fn exhaustive(instance: &Arc<Instance>, pairs: &[ConflictConstraint], exec: Execution) -> OracleSolution {
    let m = pairs.len();
    let total: u64 = 1 << m;
    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK) as usize;

    let eval = |mask: u64| {
        let (left, top) = bounds_for(instance, pairs.iter().enumerate().map(|(k, p)| (p, mask_choice(mask, k, m))));
        volume_of(instance, &left, &top)
    };
    let best_per_chunk = exec::map_indices(exec, chunks, |c| {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut best = (f64::NEG_INFINITY, start);
        for mask in start..end {
            let v = eval(mask);
            if v > best.0 {
                best = (v, mask);
            }
        }
        best
    });
    let (volume, mask) = best_per_chunk
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |acc, b| if b.0 > acc.0 { b } else { acc });

    let assignment: Vec<Disjunct> = (0..m).map(|k| mask_choice(mask, k, m)).collect();
    let (left, top) = bounds_for(instance, pairs.iter().zip(assignment.iter().copied()));
    OracleSolution {
        diagram: diagram_from(instance, &left, &top),
        volume,
        proven_optimal: true,
        assignment,
        nodes: total,
    }
}

struct BranchAndBound<'a> {
    instance: &'a Arc<Instance>,
    /// Pairs in search order.
    pairs: Vec<ConflictConstraint>,
    /// Position of each search-order pair in the canonical order.
    canonical: Vec<usize>,
    left: Vec<f64>,
    top: Vec<f64>,
    choice: Vec<Disjunct>,
    best_volume: f64,
    best_choice: Vec<Disjunct>,
    best_bounds: (Vec<f64>, Vec<f64>),
    nodes: u64,
    deadline: Instant,
    timed_out: bool,
    scratch: Vec<(f64, EventId, EventId)>,
    used: Vec<bool>,
}

impl<'a> BranchAndBound<'a> {
    fn new(instance: &'a Arc<Instance>, pairs: &[ConflictConstraint], budget: Duration) -> Self {
        let n = instance.len();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        // High-impact pairs first: decreasing product of untrimmed volumes.
        let impact = |k: usize| instance.max_volume(pairs[k].early) * instance.max_volume(pairs[k].late);
        order.sort_by(|&a, &b| impact(b).total_cmp(&impact(a)).then(a.cmp(&b)));
        Self {
            instance,
            pairs: order.iter().map(|&k| pairs[k]).collect(),
            canonical: order,
            left: vec![instance.t_min(); n],
            top: vec![instance.t_max(); n],
            choice: vec![Disjunct::Left; pairs.len()],
            best_volume: f64::NEG_INFINITY,
            best_choice: Vec::new(),
            best_bounds: (Vec::new(), Vec::new()),
            nodes: 0,
            deadline: Instant::now() + budget,
            timed_out: false,
            scratch: Vec::new(),
            used: vec![false; n],
        }
    }

    #[inline]
    fn t(&self, id: EventId) -> f64 {
        self.instance.event(id).timestamp
    }

    #[inline]
    fn vol(&self, id: EventId, left: f64, top: f64) -> f64 {
        let e = self.instance.event(id);
        e.weight * ((e.timestamp - left) * (top - e.timestamp))
    }

    fn satisfied(&self, p: ConflictConstraint) -> Option<Disjunct> {
        if self.left[p.late] >= self.t(p.early) {
            Some(Disjunct::Left)
        } else if self.top[p.early] <= self.t(p.late) {
            Some(Disjunct::Top)
        } else {
            None
        }
    }

    /// Current volume ignoring undecided pairs, plus a tighter bound that
    /// charges each pair of a vertex-disjoint set of open pairs its
    /// cheapest resolution.
    fn bounds(&mut self, from: usize) -> (f64, f64) {
        let relaxed = volume_of(self.instance, &self.left, &self.top);
        self.scratch.clear();
        for k in from..self.pairs.len() {
            let p = self.pairs[k];
            if self.satisfied(p).is_some() {
                continue;
            }
            let (e, l) = (p.early, p.late);
            let loss_left = self.vol(l, self.left[l], self.top[l]) - self.vol(l, self.t(e), self.top[l]);
            let loss_top = self.vol(e, self.left[e], self.top[e]) - self.vol(e, self.left[e], self.t(l));
            self.scratch.push((loss_left.min(loss_top), e, l));
        }
        self.scratch.sort_by(|a, b| b.0.total_cmp(&a.0));
        self.used.iter_mut().for_each(|u| *u = false);
        let mut charged = 0.0;
        for &(loss, e, l) in &self.scratch {
            if !self.used[e] && !self.used[l] {
                self.used[e] = true;
                self.used[l] = true;
                charged += loss;
            }
        }
        (relaxed, relaxed - charged)
    }

    fn search(&mut self, k: usize) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if k == self.pairs.len() {
            let v = volume_of(self.instance, &self.left, &self.top);
            if v > self.best_volume {
                self.best_volume = v;
                self.best_choice.clone_from(&self.choice);
                self.best_bounds = (self.left.clone(), self.top.clone());
            }
            return;
        }
        let p = self.pairs[k];
        if let Some(d) = self.satisfied(p) {
            // The other side can only shrink regions further.
            self.choice[k] = d;
            self.search(k + 1);
            return;
        }
        let (relaxed, matched) = self.bounds(k);
        if relaxed <= self.best_volume {
            return;
        }
        let slack = 1e-9 * self.best_volume.abs().max(1.0);
        if matched < self.best_volume - slack {
            return;
        }

        let (e, l) = (p.early, p.late);
        let loss_left = self.vol(l, self.left[l], self.top[l]) - self.vol(l, self.t(e), self.top[l]);
        let loss_top = self.vol(e, self.left[e], self.top[e]) - self.vol(e, self.left[e], self.t(l));
        let order = if loss_top < loss_left {
            [Disjunct::Top, Disjunct::Left]
        } else {
            [Disjunct::Left, Disjunct::Top]
        };
        for d in order {
            self.choice[k] = d;
            match d {
                Disjunct::Left => {
                    let saved = self.left[l];
                    self.left[l] = saved.max(self.t(e));
                    self.search(k + 1);
                    self.left[l] = saved;
                }
                Disjunct::Top => {
                    let saved = self.top[e];
                    self.top[e] = saved.min(self.t(l));
                    self.search(k + 1);
                    self.top[e] = saved;
                }
            }
        }
    }

    fn run(mut self) -> OracleSolution {
        self.search(0);
        let m = self.pairs.len();
        if self.best_volume == f64::NEG_INFINITY {
            // Out of time before the first leaf: any full assignment is valid.
            self.best_choice = vec![Disjunct::Left; m];
            let (left, top) = bounds_for(self.instance, self.pairs.iter().map(|p| (p, Disjunct::Left)));
            self.best_volume = volume_of(self.instance, &left, &top);
            self.best_bounds = (left, top);
        }
        let mut assignment = vec![Disjunct::Left; m];
        for (k, &c) in self.canonical.iter().enumerate() {
            assignment[c] = self.best_choice[k];
        }
        let (left, top) = std::mem::take(&mut self.best_bounds);
        OracleSolution {
            diagram: diagram_from(self.instance, &left, &top),
            volume: self.best_volume,
            proven_optimal: !self.timed_out,
            assignment,
            nodes: self.nodes,
        }
    }
}

/// Writes a reference diagram (with its instance inline) for regression use.
pub fn export_reference(diagram: &ActivityDiagram, path: impl AsRef<Path>) -> Result<()> {
    crate::io::save_diagram(diagram, &crate::io::InstanceRef::Inline, path)
}

/// Loads a reference diagram, rejecting it unless it validates cleanly.
pub fn load_reference(path: impl AsRef<Path>) -> Result<ActivityDiagram> {
    let diagram = crate::io::load_diagram(path)?;
    let report = diagram.validate();
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidDiagram(format!(
            "{} violation(s), first: {v}",
            report.violations.len()
        )));
    }
    Ok(diagram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LabelShape, Point};
    use crate::model::Event;

    fn shared(events: &[(f64, f64)], t_max: f64) -> Arc<Instance> {
        let s = LabelShape::square(Point::new(0.0, 0.0), 1.0).unwrap();
        let evs = events
            .iter()
            .enumerate()
            .map(|(i, &(t, w))| Event::new(i, s, t, w))
            .collect();
        Arc::new(Instance::new(0.0, t_max, evs).unwrap())
    }

    #[test]
    fn no_conflicts_means_full_regions() {
        let s = |x| LabelShape::square(Point::new(x, 0.0), 1.0).unwrap();
        let inst = Arc::new(
            Instance::new(0.0, 4.0, vec![Event::new(0, s(0.0), 1.0, 1.0), Event::new(1, s(3.0), 2.0, 1.0)])
                .unwrap(),
        );
        assert!(conflict_pairs(&inst).is_empty());
        let (d, v) = optimal_under_assignment(&inst, &[]).unwrap();
        assert_eq!(d, ActivityDiagram::maximal(inst.clone()));
        assert_eq!(v, 3.0 + 4.0);
    }

    #[test]
    fn top_choice_cuts_early_event() {
        let inst = shared(&[(2.0, 1.0), (5.0, 1.0)], 10.0);
        let pairs = conflict_pairs(&inst);
        assert_eq!(pairs, vec![ConflictConstraint { early: 0, late: 1 }]);
        let (d, v) = optimal_under_assignment(&inst, &[Disjunct::Top]).unwrap();
        assert_eq!(*d.region(0), ActivityRegion::new(0, 0.0, 5.0));
        assert_eq!(*d.region(1), inst.max_region(1));
        assert_eq!(v, 2.0 * 3.0 + 5.0 * 5.0);
        assert!(d.validate().is_valid());
        assert!(optimal_under_assignment(&inst, &[]).is_err());
    }

    #[test]
    fn normalization_uses_timestamps() {
        let inst = shared(&[(5.0, 1.0), (2.0, 1.0), (5.0, 1.0)], 10.0);
        let pairs = conflict_pairs(&inst);
        assert!(pairs.contains(&ConflictConstraint { early: 1, late: 0 }));
        assert!(pairs.contains(&ConflictConstraint { early: 0, late: 2 }));
        assert!(pairs.contains(&ConflictConstraint { early: 1, late: 2 }));
    }

    #[test]
    fn equal_timestamps_flatten_one_side() {
        let inst = shared(&[(3.0, 1.0), (3.0, 2.0)], 10.0);
        let sol = solve_optimal(&inst, &OracleConfig::exhaustive()).unwrap();
        assert_eq!(sol.volume, 2.0 * 21.0);
        assert_eq!(sol.diagram.region_volume(0), 0.0);
    }

    #[test]
    fn single_event_is_proven_full() {
        let inst = shared(&[(3.0, 2.0)], 10.0);
        for config in [OracleConfig::exhaustive(), OracleConfig::default()] {
            let sol = solve_optimal(&inst, &config).unwrap();
            assert!(sol.proven_optimal);
            assert_eq!(sol.volume, 2.0 * 21.0);
        }
    }

    #[test]
    fn empty_instance_is_zero() {
        let inst = Arc::new(Instance::new(0.0, 1.0, vec![]).unwrap());
        for config in [OracleConfig::exhaustive(), OracleConfig::default()] {
            let sol = solve_optimal(&inst, &config).unwrap();
            assert_eq!(sol.volume, 0.0);
            assert!(sol.proven_optimal);
        }
    }

    #[test]
    fn pair_cap_enforced() {
        let evs: Vec<(f64, f64)> = (1..=7).map(|t| (t as f64, 1.0)).collect();
        let inst = shared(&evs, 10.0);
        let config = OracleConfig {
            pair_cap: 20,
            ..OracleConfig::exhaustive()
        };
        assert!(matches!(
            solve_optimal(&inst, &config),
            Err(Error::PairCapExceeded { pairs: 21, cap: 20 })
        ));
    }

    #[test]
    fn exhaustive_modes_agree() {
        let evs: Vec<(f64, f64)> = [(1.0, 3.0), (2.5, 1.0), (4.0, 2.0), (6.0, 1.0), (7.5, 0.5)].to_vec();
        let inst = shared(&evs, 10.0);
        let seq = solve_optimal(&inst, &OracleConfig::exhaustive().with_exec(Execution::Sequential)).unwrap();
        let par = solve_optimal(&inst, &OracleConfig::exhaustive().with_exec(Execution::Parallel)).unwrap();
        assert_eq!(seq.volume, par.volume);
        assert_eq!(seq.assignment, par.assignment);
        let bnb = solve_optimal(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(seq.volume, bnb.volume);
        assert!(bnb.diagram.validate().is_valid());
    }

    #[test]
    fn zero_budget_still_returns_valid_diagram() {
        let evs: Vec<(f64, f64)> = (1..=12).map(|t| (t as f64, 1.0 + (t % 3) as f64)).collect();
        let inst = shared(&evs, 13.0);
        let sol = solve_optimal(&inst, &OracleConfig::branch_and_bound(Duration::ZERO)).unwrap();
        // The first leaf is reached before the first clock check.
        assert!(sol.volume.is_finite());
        assert!(sol.diagram.validate().is_valid());
        let full = solve_optimal(&inst, &OracleConfig::default()).unwrap();
        assert!(full.proven_optimal);
        assert!(full.volume >= sol.volume);
    }
}
