//! Instance constructors: the three adversarial families with their known
//! good diagrams, plus seeded random instances.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{LabelShape, Point};
use crate::model::{ActivityDiagram, ActivityRegion, Event, Instance};

/// Default perturbation for [`gen_table1`]. Exactly representable, so all
/// arithmetic on that instance stays exact in `f64`.
pub const TABLE1_EPS: f64 = 1.0 / 64.0;

/// Name recorded in instance metadata for the random generator.
pub const RANDOM_RNG: &str = "ChaCha8Rng/rand_chacha-0.9";

fn meta(entries: Value) -> Map<String, Value> {
    match entries {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// Fifteen equal-weight 6x6 squares on which greedy loses by more than 4x.
///
/// Ids are 0-based: label `l_k` of the construction has id `k - 1`.
pub fn gen_table1(eps: f64) -> Result<Instance> {
    if !(eps > 0.0 && eps < 1.0 / 34.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1/34), got {eps}"
        )));
    }
    #[rustfmt::skip]
    let rows: [(f64, f64, f64); 15] = [
        (0.0, 0.0, 8.0),
        (6.0, 0.0, 8.0),
        (0.0, 6.0, 8.0),
        (6.0, 6.0, 8.0),
        (4.0, 4.0, 8.0 + 2.0 * eps),
        (3.0, 3.0, 16.0),
        (9.0, 3.0, 16.0),
        (3.0, 9.0, 16.0),
        (9.0, 9.0, 16.0),
        (7.0, 7.0, 16.0 + eps),
        (6.0, 6.0, 21.0),
        (12.0, 6.0, 21.0),
        (6.0, 12.0, 21.0),
        (12.0, 12.0, 21.0),
        (10.0, 10.0, 21.0 - eps),
    ];
    let events = rows
        .iter()
        .enumerate()
        .map(|(id, &(x, y, t))| {
            Ok(Event::new(id, LabelShape::square(Point::new(x, y), 6.0)?, t, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::new(0.0, 24.0, events)?.with_meta(meta(json!({
        "family": "table1",
        "eps": eps,
    }))))
}

fn log2_exact(b: u64) -> Result<u32> {
    if b < 2 || !b.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "b must be a power of two >= 2, got {b}"
        )));
    }
    if b > 1 << 26 {
        return Err(Error::InvalidParameter(format!("b = {b} is too large")));
    }
    Ok(b.trailing_zeros())
}

/// Weight of the `j`-th event (1-based) in a chain of `n` with unbalance `b`.
fn chain_weight(j: u32, n: u32, b: f64) -> f64 {
    if j == n {
        1.0 / (b - 1.0)
    } else {
        (0.5f64).powi(j as i32)
    }
}

/// Regions keeping the right half of each event's largest region, and the
/// whole of it for the first event.
fn chain_reference(first_id: usize, n: u32, t_max: f64) -> impl Iterator<Item = ActivityRegion> {
    (1..=n).map(move |j| {
        let t = (2.0f64).powi(j as i32);
        let left = if j == 1 { 0.0 } else { t / 2.0 };
        ActivityRegion::new(first_id + (j - 1) as usize, left, t_max)
    })
}

/// `log2(b)` events sharing one unit square, timestamps `2^j`, weights
/// `2^-j` except the last at `1/(b-1)`. Slider range is `[0, b^2]`.
pub fn gen_powers(b: u64) -> Result<Instance> {
    let n = log2_exact(b)?;
    let bf = b as f64;
    let shape = LabelShape::square(Point::new(0.0, 0.0), 1.0)?;
    let events = (1..=n)
        .map(|j| {
            Event::new(
                (j - 1) as usize,
                shape,
                (2.0f64).powi(j as i32),
                chain_weight(j, n, bf),
            )
        })
        .collect();
    Ok(Instance::new(0.0, bf * bf, events)?.with_meta(meta(json!({
        "family": "powers",
        "b": b,
    }))))
}

/// Known diagram for [`gen_powers`] with volume `((n+1) b^2 - b) / 2` for
/// `b >= 4`. For `b = 2` the single event keeps its whole region.
pub fn gen_powers_reference(b: u64) -> Result<ActivityDiagram> {
    let inst = Arc::new(gen_powers(b)?);
    let n = log2_exact(b)?;
    let regions = chain_reference(0, n, inst.t_max()).collect();
    ActivityDiagram::new(inst, regions)
}

/// Id of event `e_{group, j}` (`j` 1-based) in [`gen_refined`].
pub fn refined_id(group: usize, j: u32, m: u32) -> usize {
    group * m as usize + (j - 1) as usize
}

fn check_refined(a: u32, m: u32) -> Result<()> {
    if a < 1 || m < 1 {
        return Err(Error::InvalidParameter(format!(
            "need a >= 1 and m >= 1, got a = {a}, m = {m}"
        )));
    }
    if m > 26 {
        return Err(Error::InvalidParameter(format!("m = {m} is too large")));
    }
    Ok(())
}

/// `a + 1` copies of the power chain with `b = 2^m`. Group 0 shares one wide
/// rectangle that overlaps every other group; groups `1..=a` each sit on
/// their own unit square, pairwise separated.
pub fn gen_refined(a: u32, m: u32) -> Result<Instance> {
    check_refined(a, m)?;
    let b = (2.0f64).powi(m as i32);
    let hub = LabelShape::rect(Point::new(a as f64, 0.5), 2.0 * a as f64, 1.0)?;
    let mut events = Vec::with_capacity(((a + 1) * m) as usize);
    for group in 0..=a as usize {
        let shape = if group == 0 {
            hub
        } else {
            // Unit square [2g - 1.75, 2g - 0.75] x [0.5, 1.5].
            LabelShape::square(Point::new(2.0 * group as f64 - 1.25, 1.0), 1.0)?
        };
        for j in 1..=m {
            events.push(Event::new(
                refined_id(group, j, m),
                shape,
                (2.0f64).powi(j as i32),
                chain_weight(j, m, b),
            ));
        }
    }
    Ok(Instance::new(0.0, b * b, events)?.with_meta(meta(json!({
        "family": "refined",
        "a": a,
        "m": m,
    }))))
}

/// Known diagram for [`gen_refined`]: groups `1..=a` use the power-chain
/// layout, group 0 is left empty. Volume `(a/2)((m+1) b^2 - b)`.
pub fn gen_refined_reference(a: u32, m: u32) -> Result<ActivityDiagram> {
    let inst = Arc::new(gen_refined(a, m)?);
    let mut regions: Vec<ActivityRegion> = (1..=m)
        .map(|j| ActivityRegion::degenerate(refined_id(0, j, m), inst.event(refined_id(0, j, m)).timestamp))
        .collect();
    for group in 1..=a as usize {
        regions.extend(chain_reference(refined_id(group, 1, m), m, inst.t_max()));
    }
    ActivityDiagram::new(inst, regions)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeFamily {
    /// Axis-aligned squares of side 1.
    UnitSquares,
    /// Disks of diameter 1.
    UnitDisks,
    /// Rectangles with each side drawn from `[min_side, max_side]`.
    Rectangles { min_side: f64, max_side: f64 },
    /// Half unit squares, half unit-diameter disks.
    Mixed,
}

impl ShapeFamily {
    fn name(&self) -> &'static str {
        match self {
            Self::UnitSquares => "unit-squares",
            Self::UnitDisks => "unit-disks",
            Self::Rectangles { .. } => "rectangles",
            Self::Mixed => "mixed",
        }
    }
}

/// Parameters for [`gen_random`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub seed: u64,
    pub n: usize,
    pub shapes: ShapeFamily,
    /// Inclusive weight range; equal ends give uniform weights.
    pub weight_range: (f64, f64),
    /// Slider bounds `(t_min, t_max)`; timestamps are uniform inside.
    pub window: (f64, f64),
    /// Label centers are uniform in `[0, extent]^2`.
    pub extent: f64,
}

impl RandomSpec {
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            shapes: ShapeFamily::UnitSquares,
            weight_range: (1.0, 1.0),
            window: (0.0, 1.0),
            extent: 3.0,
        }
    }

    pub fn shapes(mut self, shapes: ShapeFamily) -> Self {
        self.shapes = shapes;
        self
    }

    pub fn weights(mut self, lo: f64, hi: f64) -> Self {
        self.weight_range = (lo, hi);
        self
    }

    pub fn window(mut self, t_min: f64, t_max: f64) -> Self {
        self.window = (t_min, t_max);
        self
    }

    pub fn extent(mut self, extent: f64) -> Self {
        self.extent = extent;
        self
    }
}

/// Reproducible pseudo-random instance. The generator name and seed are
/// stored in the instance metadata.
pub fn gen_random(spec: &RandomSpec) -> Result<Instance> {
    let (w_lo, w_hi) = spec.weight_range;
    if !(w_lo > 0.0 && w_lo <= w_hi && w_hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight range must satisfy 0 < lo <= hi, got ({w_lo}, {w_hi})"
        )));
    }
    if !(spec.extent.is_finite() && spec.extent >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "extent must be finite and >= 0, got {}",
            spec.extent
        )));
    }
    if let ShapeFamily::Rectangles { min_side, max_side } = spec.shapes {
        if !(min_side > 0.0 && min_side <= max_side && max_side.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rectangle sides must satisfy 0 < min <= max, got ({min_side}, {max_side})"
            )));
        }
    }
    let (t_min, t_max) = spec.window;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events = Vec::with_capacity(spec.n);
    for id in 0..spec.n {
        let center = Point::new(
            rng.random_range(0.0..=spec.extent),
            rng.random_range(0.0..=spec.extent),
        );
        let shape = match spec.shapes {
            ShapeFamily::UnitSquares => LabelShape::square(center, 1.0)?,
            ShapeFamily::UnitDisks => LabelShape::disk(center, 0.5)?,
            ShapeFamily::Rectangles { min_side, max_side } => LabelShape::rect(
                center,
                rng.random_range(min_side..=max_side),
                rng.random_range(min_side..=max_side),
            )?,
            ShapeFamily::Mixed => {
                if rng.random_bool(0.5) {
                    LabelShape::square(center, 1.0)?
                } else {
                    LabelShape::disk(center, 0.5)?
                }
            }
        };
        let t = if t_min < t_max {
            rng.random_range(t_min..=t_max)
        } else {
            t_min
        };
        let w = if w_lo == w_hi {
            w_lo
        } else {
            rng.random_range(w_lo..=w_hi)
        };
        events.push(Event::new(id, shape, t, w));
    }
    Ok(Instance::new(t_min, t_max, events)?.with_meta(meta(json!({
        "family": "random",
        "rng": RANDOM_RNG,
        "seed": spec.seed,
        "shapes": spec.shapes.name(),
    }))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_rows() {
        let inst = gen_table1(TABLE1_EPS).unwrap();
        assert_eq!(inst.len(), 15);
        assert_eq!((inst.t_min(), inst.t_max()), (0.0, 24.0));
        let e1 = inst.event(0);
        assert_eq!((e1.shape.center(), e1.timestamp), (Point::new(0.0, 0.0), 8.0));
        let e14 = inst.event(13);
        assert_eq!((e14.shape.center(), e14.timestamp), (Point::new(12.0, 12.0), 21.0));
        assert_eq!(inst.event(4).timestamp, 8.0 + 2.0 * TABLE1_EPS);
        assert_eq!(inst.event(9).timestamp, 16.0 + TABLE1_EPS);
        assert_eq!(inst.event(14).timestamp, 21.0 - TABLE1_EPS);
    }

    #[test]
    fn table1_conflict_pattern() {
        let inst = gen_table1(TABLE1_EPS).unwrap();
        let g = inst.conflicts();
        // l5 hits l1..l4 and l6..l11.
        assert_eq!(g.neighbors(4), &[0, 1, 2, 3, 5, 6, 7, 8, 9, 10]);
        // l10 hits everything except l1..l3.
        assert_eq!(g.neighbors(9), &[3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14]);
    }

    #[test]
    fn table1_eps_range() {
        assert!(gen_table1(0.0).is_err());
        assert!(gen_table1(1.0 / 34.0).is_err());
        assert!(gen_table1(-0.01).is_err());
        assert!(gen_table1(0.029).is_ok());
    }

    #[test]
    fn powers_b16() {
        let inst = gen_powers(16).unwrap();
        let w: Vec<f64> = inst.events().iter().map(|e| e.weight).collect();
        let t: Vec<f64> = inst.events().iter().map(|e| e.timestamp).collect();
        assert_eq!(w, vec![0.5, 0.25, 0.125, 1.0 / 15.0]);
        assert_eq!(t, vec![2.0, 4.0, 8.0, 16.0]);
        assert_eq!(inst.t_max(), 256.0);
        for j in 1..4u32 {
            assert_eq!(inst.max_volume((j - 1) as usize), 256.0 - (1u32 << j) as f64);
        }
        assert_eq!(inst.max_volume(3), 256.0);
    }

    #[test]
    fn powers_b2_single_event() {
        let inst = gen_powers(2).unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst.event(0).weight, 1.0);
        assert_eq!(inst.event(0).timestamp, 2.0);
    }

    #[test]
    fn powers_rejects_bad_b() {
        for b in [0, 1, 3, 12, 100] {
            assert!(gen_powers(b).is_err(), "b = {b}");
        }
    }

    #[test]
    fn powers_reference_volumes() {
        let d = gen_powers_reference(16).unwrap();
        assert!(d.validate().is_valid());
        assert_eq!(d.volume(), 632.0);
        assert_eq!(d.region_volume(0), 254.0);
        assert_eq!(d.region_volume(3), 128.0);
        // With b = 2 the single event is both first and last and keeps its
        // whole region, one more than the closed form.
        assert_eq!(gen_powers_reference(2).unwrap().volume(), 4.0);
        for b in [4u64, 8, 16, 32] {
            let d = gen_powers_reference(b).unwrap();
            let n = b.trailing_zeros() as f64;
            let bf = b as f64;
            assert_eq!(d.volume(), ((n + 1.0) * bf * bf - bf) / 2.0, "b = {b}");
            assert!(d.validate().is_valid());
        }
    }

    #[test]
    fn refined_conflicts() {
        let (a, m) = (3, 2);
        let inst = gen_refined(a, m).unwrap();
        assert_eq!(inst.len(), 8);
        let g = inst.conflicts();
        for j in 1..=m {
            for i in 1..=a as usize {
                for k in 1..=m {
                    assert!(g.conflict(refined_id(0, j, m), refined_id(i, k, m)));
                }
            }
        }
        assert!(!g.conflict(refined_id(1, 1, m), refined_id(2, 1, m)));
        assert!(!g.conflict(refined_id(1, 2, m), refined_id(3, 1, m)));
        assert!(g.conflict(refined_id(2, 1, m), refined_id(2, 2, m)));
    }

    #[test]
    fn refined_max_volume_and_reference() {
        let inst = gen_refined(2, 4).unwrap();
        for g in 0..=2 {
            assert_eq!(inst.max_volume(refined_id(g, 4, 4)), 256.0);
        }
        let d = gen_refined_reference(2, 4).unwrap();
        assert!(d.validate().is_valid());
        assert_eq!(d.volume(), 1264.0);
        for m in 1..=5 {
            assert_eq!(
                gen_refined_reference(1, m).unwrap().volume(),
                gen_powers_reference(1 << m).unwrap().volume()
            );
        }
        assert!(gen_refined(0, 3).is_err());
        assert!(gen_refined(2, 0).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let spec = RandomSpec::new(42, 30)
            .shapes(ShapeFamily::Mixed)
            .weights(1.0, 4.0)
            .window(-5.0, 5.0);
        let a = gen_random(&spec).unwrap();
        let b = gen_random(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.meta()["seed"], json!(42));
        let c = gen_random(&RandomSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
        assert!(gen_random(&RandomSpec::new(1, 0)).unwrap().is_empty());
        assert!(gen_random(&RandomSpec::new(1, 3).weights(0.0, 1.0)).is_err());
        assert!(gen_random(&RandomSpec::new(1, 3).weights(2.0, 1.0)).is_err());
    }
}
