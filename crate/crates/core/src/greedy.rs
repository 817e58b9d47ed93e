//! Greedy construction of an activity diagram.
//!
//! Every event starts with its largest anchored region. The event with the
//! largest remaining volume is fixed, and each still-unplaced event whose
//! label conflicts with it loses the quadrant `[t_min, t_i] x [t_i, t_max]`
//! below-left of the placed anchor. Removing that quadrant from an anchored
//! rectangle leaves an anchored rectangle again, so a trim is a single
//! `min` or `max` on one side.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::model::{ActivityDiagram, ActivityRegion, EventId, Instance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub event_id: EventId,
    /// Volume of the region at the moment the event was extracted.
    pub volume: f64,
    pub region: ActivityRegion,
}

/// Extraction order of a greedy run, one step per event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyTrace {
    pub steps: Vec<TraceStep>,
}

impl GreedyTrace {
    pub fn order(&self) -> impl Iterator<Item = EventId> + '_ {
        self.steps.iter().map(|s| s.event_id)
    }

    pub fn first_volume(&self) -> Option<f64> {
        self.steps.first().map(|s| s.volume)
    }
}

/// Removes the quadrant `[.., placed_t] x [placed_t, ..]` from the region of
/// an event with timestamp `victim_t`.
///
/// An event at or before `placed_t` keeps only the part below `placed_t`;
/// an event after it keeps only the part right of `placed_t`.
#[inline]
pub fn trim(victim: ActivityRegion, victim_t: f64, placed_t: f64) -> ActivityRegion {
    if victim_t <= placed_t {
        ActivityRegion {
            top: victim.top.min(placed_t),
            ..victim
        }
    } else {
        ActivityRegion {
            left: victim.left.max(placed_t),
            ..victim
        }
    }
}

/// Addressable max-heap over event ids. Priority is the larger volume, then
/// the smaller id. Volumes may only decrease once pushed.
#[derive(Debug)]
struct VolumeQueue {
    heap: Vec<EventId>,
    pos: Vec<Option<usize>>,
    volume: Vec<f64>,
}

impl VolumeQueue {
    fn with_volumes(volume: Vec<f64>) -> Self {
        let n = volume.len();
        let mut q = Self {
            heap: (0..n).collect(),
            pos: (0..n).map(Some).collect(),
            volume,
        };
        for i in (0..n / 2).rev() {
            q.sift_down(i);
        }
        q
    }

    #[inline]
    fn before(&self, a: EventId, b: EventId) -> bool {
        match self.volume[a].total_cmp(&self.volume[b]) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a < b,
        }
    }

    fn contains(&self, id: EventId) -> bool {
        self.pos[id].is_some()
    }

    fn pop(&mut self) -> Option<(EventId, f64)> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.sift_down(0);
        }
        Some((top, self.volume[top]))
    }

    fn decrease(&mut self, id: EventId, volume: f64) {
        debug_assert!(volume <= self.volume[id]);
        self.volume[id] = volume;
        if let Some(p) = self.pos[id] {
            self.sift_down(p);
        }
    }

    fn sift_down(&mut self, mut p: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * p + 1, 2 * p + 2);
            let mut best = p;
            if l < n && self.before(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < n && self.before(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == p {
                return;
            }
            self.heap.swap(p, best);
            self.pos[self.heap[p]] = Some(p);
            self.pos[self.heap[best]] = Some(best);
            p = best;
        }
    }
}

/// Runs the greedy heuristic. Ties on volume go to the smaller event id.
pub fn solve_greedy(instance: &Arc<Instance>) -> (ActivityDiagram, GreedyTrace) {
    let inst = &**instance;
    let n = inst.len();
    let mut regions: Vec<ActivityRegion> = (0..n).map(|i| inst.max_region(i)).collect();
    let mut queue = VolumeQueue::with_volumes((0..n).map(|i| inst.max_volume(i)).collect());
    let graph = inst.conflicts();
    let mut steps = Vec::with_capacity(n);

    while let Some((id, volume)) = queue.pop() {
        steps.push(TraceStep {
            event_id: id,
            volume,
            region: regions[id],
        });
        let placed_t = inst.event(id).timestamp;
        for &j in graph.neighbors(id) {
            if !queue.contains(j) {
                continue;
            }
            let e = inst.event(j);
            let trimmed = trim(regions[j], e.timestamp, placed_t);
            if trimmed != regions[j] {
                regions[j] = trimmed;
                queue.decrease(j, e.weight * trimmed.area_at(e.timestamp));
            }
        }
    }

    let diagram = ActivityDiagram::new(instance.clone(), regions)
        .expect("greedy assigns exactly one region per event");
    (diagram, GreedyTrace { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LabelShape, Point};
    use crate::model::Event;

    const EPS: f64 = 1.0 / 64.0;

    #[test]
    fn trim_examples() {
        let r6 = ActivityRegion::new(5, 0.0, 24.0);
        assert_eq!(
            trim(r6, 16.0, 8.0 + 2.0 * EPS),
            ActivityRegion::new(5, 8.0 + 2.0 * EPS, 24.0)
        );
        let r1 = ActivityRegion::new(0, 0.0, 24.0);
        let t1 = trim(r1, 8.0, 8.0 + 2.0 * EPS);
        assert_eq!(t1, ActivityRegion::new(0, 0.0, 8.0 + 2.0 * EPS));
        assert_eq!(t1.area_at(8.0), 16.0 * EPS);
        assert_eq!(trim(t1, 8.0, 16.0), t1);
    }

    #[test]
    fn trim_with_equal_timestamps_flattens_victim() {
        let r = ActivityRegion::new(0, 1.0, 9.0);
        assert_eq!(trim(r, 4.0, 4.0).area_at(4.0), 0.0);
    }

    #[test]
    fn queue_orders_by_volume_then_id() {
        let mut q = VolumeQueue::with_volumes(vec![1.0, 3.0, 3.0, 2.0, 0.0]);
        q.decrease(1, 0.5);
        let order: Vec<_> = std::iter::from_fn(|| q.pop().map(|(i, _)| i)).collect();
        assert_eq!(order, vec![2, 3, 0, 1, 4]);
    }

    #[test]
    fn single_event_gets_full_region() {
        let shape = LabelShape::square(Point::new(0.0, 0.0), 1.0).unwrap();
        let inst = Arc::new(Instance::new(1.0, 9.0, vec![Event::new(0, shape, 4.0, 2.0)]).unwrap());
        let (d, trace) = solve_greedy(&inst);
        assert_eq!(*d.region(0), ActivityRegion::new(0, 1.0, 9.0));
        assert_eq!(d.volume(), 2.0 * 3.0 * 5.0);
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn empty_instance() {
        let inst = Arc::new(Instance::new(0.0, 1.0, vec![]).unwrap());
        let (d, trace) = solve_greedy(&inst);
        assert_eq!(d.volume(), 0.0);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn two_conflicting_events() {
        let s = LabelShape::square(Point::new(0.0, 0.0), 1.0).unwrap();
        let inst = Arc::new(
            Instance::new(
                0.0,
                10.0,
                vec![Event::new(0, s, 3.0, 1.0), Event::new(1, s, 5.0, 1.0)],
            )
            .unwrap(),
        );
        let (d, trace) = solve_greedy(&inst);
        // Event 1 (25) beats event 0 (21); event 0 keeps [0,3] x [3,5].
        assert_eq!(trace.order().collect::<Vec<_>>(), vec![1, 0]);
        assert_eq!(*d.region(0), ActivityRegion::new(0, 0.0, 5.0));
        assert_eq!(d.volume(), 25.0 + 6.0);
        assert!(d.validate().is_valid());
    }
}
