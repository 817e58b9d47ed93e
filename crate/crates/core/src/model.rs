//! Events, instances and activity diagrams.
//!
//! A time-window query `[t', t'']` is a point `(t', t'')` in configuration
//! space. Every event owns one activity region, an axis-aligned rectangle
//! `[l, t_i] x [t_i, u]` whose lower-right corner sits on the diagonal at
//! `(t_i, t_i)`. Anchored rectangles make the no-flicker property hold by
//! construction, so the only thing left to check for validity is that
//! conflicting events never share interior.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{conflicts, LabelShape};

pub type EventId = usize;

/// A label with a timestamp and a positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub id: EventId,
    pub shape: LabelShape,
    pub timestamp: f64,
    pub weight: f64,
}

impl Event {
    pub fn new(id: EventId, shape: LabelShape, timestamp: f64, weight: f64) -> Self {
        Self {
            id,
            shape,
            timestamp,
            weight,
        }
    }
}

/// Adjacency lists of the label conflict graph. Lists are sorted and never
/// contain the event itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    adjacency: Vec<Vec<EventId>>,
}

impl ConflictGraph {
    pub fn build(events: &[Event]) -> Self {
        let n = events.len();
        let adjacency = crate::exec::map_indices(crate::exec::Execution::default(), n, |i| {
            (0..n)
                .filter(|&j| j != i && conflicts(&events[i].shape, &events[j].shape))
                .collect::<Vec<_>>()
        });
        Self { adjacency }
    }

    #[inline]
    pub fn neighbors(&self, id: EventId) -> &[EventId] {
        &self.adjacency[id]
    }

    #[inline]
    pub fn conflict(&self, a: EventId, b: EventId) -> bool {
        a != b && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn pair_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All unordered pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (EventId, EventId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }
}

/// Event set together with the slider bounds.
#[derive(Debug, Clone)]
pub struct Instance {
    t_min: f64,
    t_max: f64,
    events: Vec<Event>,
    meta: Map<String, Value>,
    conflicts: OnceLock<ConflictGraph>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.t_min == other.t_min
            && self.t_max == other.t_max
            && self.events == other.events
            && self.meta == other.meta
    }
}

impl Instance {
    pub fn new(t_min: f64, t_max: f64, events: Vec<Event>) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_min >= t_max {
            return Err(Error::InvalidInstance(format!(
                "need finite t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        for (k, e) in events.iter().enumerate() {
            if e.id != k {
                return Err(Error::InvalidInstance(format!(
                    "event at position {k} has id {}; ids must index the event list",
                    e.id
                )));
            }
            e.shape.validate()?;
            if !e.timestamp.is_finite() || e.timestamp < t_min || e.timestamp > t_max {
                return Err(Error::InvalidInstance(format!(
                    "event {k} timestamp {} outside [{t_min}, {t_max}]",
                    e.timestamp
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "event {k} weight must be finite and > 0, got {}",
                    e.weight
                )));
            }
        }
        Ok(Self {
            t_min,
            t_max,
            events,
            meta: Map::new(),
            conflicts: OnceLock::new(),
        })
    }

    pub fn with_meta(mut self, meta: Map<String, Value>) -> Self {
        self.meta = meta;
        self
    }

    #[inline]
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    #[inline]
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    #[inline]
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    #[inline]
    pub fn event(&self, id: EventId) -> &Event {
        &self.events[id]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.events.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn meta(&self) -> &Map<String, Value> {
        &self.meta
    }

    /// Conflict graph, computed once on first use.
    pub fn conflicts(&self) -> &ConflictGraph {
        self.conflicts.get_or_init(|| ConflictGraph::build(&self.events))
    }

    /// The largest anchored region `[t_min, t_i] x [t_i, t_max]`.
    pub fn max_region(&self, id: EventId) -> ActivityRegion {
        ActivityRegion::new(id, self.t_min, self.t_max)
    }

    pub fn max_volume(&self, id: EventId) -> f64 {
        let e = &self.events[id];
        e.weight * (e.timestamp - self.t_min) * (self.t_max - e.timestamp)
    }

    /// Checks that `q` lies in the configuration-space triangle.
    pub fn check_query(&self, q: TimeWindowQuery) -> Result<()> {
        if q.start < self.t_min || q.end > self.t_max {
            return Err(Error::InvalidQuery(format!(
                "window [{}, {}] not within [{}, {}]",
                q.start, q.end, self.t_min, self.t_max
            )));
        }
        Ok(())
    }
}

/// A time window `[start, end]`, equivalently the point `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindowQuery {
    pub start: f64,
    pub end: f64,
}

impl TimeWindowQuery {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::InvalidQuery(format!(
                "window bounds must be finite, got [{start}, {end}]"
            )));
        }
        if start > end {
            return Err(Error::InvalidQuery(format!(
                "window start {start} is after end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    #[inline]
    pub fn contains(&self, other: &TimeWindowQuery) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    #[inline]
    pub fn contains_time(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Rectangle `[left, t_i] x [t_i, top]` in configuration space. The anchor
/// `t_i` is the owning event's timestamp and is not stored here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityRegion {
    pub event_id: EventId,
    pub left: f64,
    pub top: f64,
}

impl ActivityRegion {
    #[inline]
    pub const fn new(event_id: EventId, left: f64, top: f64) -> Self {
        Self {
            event_id,
            left,
            top,
        }
    }

    /// Zero-area region anchored at `t`.
    #[inline]
    pub const fn degenerate(event_id: EventId, t: f64) -> Self {
        Self::new(event_id, t, t)
    }

    /// `(t - left) * (top - t)`, without checking ownership or anchoring.
    #[inline]
    pub fn area_at(&self, t: f64) -> f64 {
        (t - self.left) * (self.top - t)
    }

    #[inline]
    pub fn contains_at(&self, t: f64, q: TimeWindowQuery) -> bool {
        self.left <= q.start && q.start <= t && t <= q.end && q.end <= self.top
    }

    /// Open-rectangle intersection of two anchored regions.
    pub fn interiors_overlap(&self, t: f64, other: &ActivityRegion, t_other: f64) -> bool {
        let x_overlap = self.left.max(other.left) < t.min(t_other);
        let y_overlap = t.max(t_other) < self.top.min(other.top);
        x_overlap && y_overlap
    }
}

pub fn region_area(region: &ActivityRegion, event: &Event) -> Result<f64> {
    if region.event_id != event.id {
        return Err(Error::EventMismatch {
            region: region.event_id,
            event: event.id,
        });
    }
    Ok(region.area_at(event.timestamp))
}

pub fn region_volume(region: &ActivityRegion, event: &Event) -> Result<f64> {
    Ok(event.weight * region_area(region, event)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { id: EventId },
    LeftAfterTimestamp { id: EventId, left: f64, timestamp: f64 },
    TopBeforeTimestamp { id: EventId, top: f64, timestamp: f64 },
    LeftBeforeMin { id: EventId, left: f64, t_min: f64 },
    TopAfterMax { id: EventId, top: f64, t_max: f64 },
    Overlap { a: EventId, b: EventId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::NonFinite { id } => write!(f, "event {id}: region bounds are not finite"),
            Self::LeftAfterTimestamp {
                id,
                left,
                timestamp,
            } => write!(f, "event {id}: left {left} > timestamp {timestamp}"),
            Self::TopBeforeTimestamp { id, top, timestamp } => {
                write!(f, "event {id}: top {top} < timestamp {timestamp}")
            }
            Self::LeftBeforeMin { id, left, t_min } => {
                write!(f, "event {id}: left {left} < t_min {t_min}")
            }
            Self::TopAfterMax { id, top, t_max } => {
                write!(f, "event {id}: top {top} > t_max {t_max}")
            }
            Self::Overlap { a, b } => {
                write!(f, "overlap: conflicting events {a} and {b} share region interior")
            }
        }
    }
}

/// Every problem found by [`ActivityDiagram::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn overlaps(&self) -> impl Iterator<Item = (EventId, EventId)> + '_ {
        self.violations.iter().filter_map(|v| match *v {
            Violation::Overlap { a, b } => Some((a, b)),
            _ => None,
        })
    }
}

/// One activity region per event of the referenced instance.
#[derive(Debug, Clone)]
pub struct ActivityDiagram {
    instance: Arc<Instance>,
    regions: Vec<ActivityRegion>,
}

impl PartialEq for ActivityDiagram {
    fn eq(&self, other: &Self) -> bool {
        self.regions == other.regions && *self.instance == *other.instance
    }
}

impl ActivityDiagram {
    /// Regions may come in any order but must cover every event exactly once.
    /// Anchoring and overlap are not checked here; see [`Self::validate`].
    pub fn new(instance: Arc<Instance>, mut regions: Vec<ActivityRegion>) -> Result<Self> {
        regions.sort_by_key(|r| r.event_id);
        if regions.len() != instance.len() {
            return Err(Error::InvalidDiagram(format!(
                "{} regions for {} events",
                regions.len(),
                instance.len()
            )));
        }
        for (k, r) in regions.iter().enumerate() {
            if r.event_id != k {
                return Err(Error::InvalidDiagram(format!(
                    "missing or duplicate region for event {k}"
                )));
            }
        }
        Ok(Self { instance, regions })
    }

    /// Every event gets its largest region, regardless of conflicts.
    pub fn maximal(instance: Arc<Instance>) -> Self {
        let regions = (0..instance.len()).map(|i| instance.max_region(i)).collect();
        Self { instance, regions }
    }

    #[inline]
    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    #[inline]
    pub fn regions(&self) -> &[ActivityRegion] {
        &self.regions
    }

    #[inline]
    pub fn region(&self, id: EventId) -> &ActivityRegion {
        &self.regions[id]
    }

    pub fn region_volume(&self, id: EventId) -> f64 {
        let e = self.instance.event(id);
        e.weight * self.regions[id].area_at(e.timestamp)
    }

    /// Sum of region volumes, accumulated in id order.
    pub fn volume(&self) -> f64 {
        (0..self.regions.len()).map(|i| self.region_volume(i)).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        let inst = &*self.instance;
        let mut violations = Vec::new();
        for (r, e) in self.regions.iter().zip(inst.events()) {
            let id = e.id;
            let t = e.timestamp;
            if !(r.left.is_finite() && r.top.is_finite()) {
                violations.push(Violation::NonFinite { id });
                continue;
            }
            if r.left > t {
                violations.push(Violation::LeftAfterTimestamp {
                    id,
                    left: r.left,
                    timestamp: t,
                });
            }
            if r.top < t {
                violations.push(Violation::TopBeforeTimestamp {
                    id,
                    top: r.top,
                    timestamp: t,
                });
            }
            if r.left < inst.t_min() {
                violations.push(Violation::LeftBeforeMin {
                    id,
                    left: r.left,
                    t_min: inst.t_min(),
                });
            }
            if r.top > inst.t_max() {
                violations.push(Violation::TopAfterMax {
                    id,
                    top: r.top,
                    t_max: inst.t_max(),
                });
            }
        }
        for (a, b) in inst.conflicts().pairs() {
            let (ra, rb) = (&self.regions[a], &self.regions[b]);
            let (ta, tb) = (inst.event(a).timestamp, inst.event(b).timestamp);
            if ra.interiors_overlap(ta, rb, tb) {
                violations.push(Violation::Overlap { a, b });
            }
        }
        ValidationReport { violations }
    }

    /// Events whose region closed-contains `q`, before conflict filtering.
    pub fn stabbed(&self, q: TimeWindowQuery) -> impl Iterator<Item = EventId> + '_ {
        self.regions
            .iter()
            .zip(self.instance.events())
            .filter(move |(r, e)| r.contains_at(e.timestamp, q))
            .map(|(r, _)| r.event_id)
    }

    /// Active events for the window `q`, sorted by id.
    ///
    /// Closed containment can report two conflicting events when `q` lies on
    /// a shared boundary. Those ties are broken by keeping events in order of
    /// decreasing region volume (then increasing id) and dropping any event
    /// that conflicts with one already kept.
    pub fn query(&self, q: TimeWindowQuery) -> Result<Vec<EventId>> {
        self.instance.check_query(q)?;
        let mut candidates: Vec<(f64, EventId)> =
            self.stabbed(q).map(|id| (self.region_volume(id), id)).collect();
        candidates.sort_by(|a, b| match b.0.total_cmp(&a.0) {
            Ordering::Equal => a.1.cmp(&b.1),
            o => o,
        });
        let graph = self.instance.conflicts();
        let mut kept: Vec<EventId> = Vec::with_capacity(candidates.len());
        for (_, id) in candidates {
            if kept.iter().all(|&k| !graph.conflict(k, id)) {
                kept.push(id);
            }
        }
        kept.sort_unstable();
        Ok(kept)
    }

    /// Whether every event shown for `outer` whose timestamp lies in `inner`
    /// is still shown for `inner`.
    pub fn containment_check(
        &self,
        outer: TimeWindowQuery,
        inner: TimeWindowQuery,
    ) -> Result<bool> {
        if !outer.contains(&inner) {
            return Err(Error::InvalidQuery(format!(
                "[{}, {}] is not contained in [{}, {}]",
                inner.start, inner.end, outer.start, outer.end
            )));
        }
        let shown_outer = self.query(outer)?;
        let shown_inner = self.query(inner)?;
        Ok(shown_outer
            .iter()
            .filter(|&&id| inner.contains_time(self.instance.event(id).timestamp))
            .all(|id| shown_inner.binary_search(id).is_ok()))
    }
}
