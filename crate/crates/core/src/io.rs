//! JSON persistence for instances and diagrams, and SVG rendering.
//!
//! Instance schema:
//!
//! ```text
//! {"t_min": num, "t_max": num,
//!  "events": [{"id": int, "t": num, "w": num,
//!              "shape": {"kind": "rect"|"disk", "cx": num, "cy": num,
//!                        "w": num, "h": num | "r": num}}],
//!  "meta": {...}}
//! ```
//!
//! Diagram schema:
//!
//! ```text
//! {"instance_ref": "path" | {instance}, "regions": [{"id": int, "l": num, "u": num}],
//!  "volume": num}
//! ```
//!
//! Numbers are written in shortest round-trip form and parsed with correct
//! rounding, so every `f64` survives a save/load cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{conflicts, LabelShape, Point};
use crate::model::{ActivityDiagram, ActivityRegion, Event, EventId, Instance, Violation};

/// Relative tolerance between a stored diagram volume and the recomputed one.
pub const VOLUME_TOLERANCE: f64 = 1e-12;

fn shape_to_json(shape: &LabelShape) -> Value {
    match *shape {
        LabelShape::Rect {
            center,
            width,
            height,
        } => json!({"kind": "rect", "cx": center.x, "cy": center.y, "w": width, "h": height}),
        LabelShape::Disk { center, radius } => {
            json!({"kind": "disk", "cx": center.x, "cy": center.y, "r": radius})
        }
    }
}

pub fn instance_to_json(instance: &Instance) -> Value {
    let events: Vec<Value> = instance
        .events()
        .iter()
        .map(|e| json!({"id": e.id, "t": e.timestamp, "w": e.weight, "shape": shape_to_json(&e.shape)}))
        .collect();
    json!({
        "t_min": instance.t_min(),
        "t_max": instance.t_max(),
        "events": events,
        "meta": Value::Object(instance.meta().clone()),
    })
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(join(path, key), "missing field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::schema(display_path(path), "expected an object"))
}

fn display_path(path: &str) -> String {
    if path.is_empty() {
        "<root>".to_owned()
    } else {
        path.to_owned()
    }
}

fn num(obj: &Map<String, Value>, path: &str, key: &str) -> Result<f64> {
    let v = field(obj, path, key)?;
    let x = v
        .as_f64()
        .ok_or_else(|| Error::schema(join(path, key), format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(Error::schema(join(path, key), "number must be finite"));
    }
    Ok(x)
}

fn index(obj: &Map<String, Value>, path: &str, key: &str) -> Result<usize> {
    let v = field(obj, path, key)?;
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::schema(join(path, key), format!("expected a non-negative integer, got {v}")))
}

fn shape_from_json(v: &Value, path: &str) -> Result<LabelShape> {
    let obj = as_object(v, path)?;
    let kind = field(obj, path, "kind")?;
    let center = Point::new(num(obj, path, "cx")?, num(obj, path, "cy")?);
    let shape = match kind.as_str() {
        Some("rect") => LabelShape::rect(center, num(obj, path, "w")?, num(obj, path, "h")?),
        Some("disk") => LabelShape::disk(center, num(obj, path, "r")?),
        _ => {
            return Err(Error::schema(
                join(path, "kind"),
                format!("expected \"rect\" or \"disk\", got {kind}"),
            ))
        }
    };
    shape.map_err(|e| Error::schema(display_path(path), e.to_string()))
}

pub fn instance_from_json(v: &Value) -> Result<Instance> {
    let obj = as_object(v, "")?;
    let t_min = num(obj, "", "t_min")?;
    let t_max = num(obj, "", "t_max")?;
    if t_min >= t_max {
        return Err(Error::schema("t_max", format!("t_max {t_max} must exceed t_min {t_min}")));
    }
    let raw = field(obj, "", "events")?
        .as_array()
        .ok_or_else(|| Error::schema("events", "expected an array"))?;
    let mut events = Vec::with_capacity(raw.len());
    for (k, ev) in raw.iter().enumerate() {
        let path = format!("events[{k}]");
        let eo = as_object(ev, &path)?;
        let id = index(eo, &path, "id")?;
        if id != k {
            return Err(Error::schema(join(&path, "id"), format!("expected id {k}, got {id}")));
        }
        let t = num(eo, &path, "t")?;
        if t < t_min || t > t_max {
            return Err(Error::schema(
                join(&path, "t"),
                format!("timestamp {t} outside [{t_min}, {t_max}]"),
            ));
        }
        let w = num(eo, &path, "w")?;
        if w <= 0.0 {
            return Err(Error::schema(join(&path, "w"), format!("weight must be > 0, got {w}")));
        }
        let shape = shape_from_json(field(eo, &path, "shape")?, &join(&path, "shape"))?;
        events.push(Event::new(id, shape, t, w));
    }
    let meta = match obj.get("meta") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(Error::schema("meta", "expected an object")),
    };
    Ok(Instance::new(t_min, t_max, events)?.with_meta(meta))
}

fn write_json(value: &Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    write_json(&instance_to_json(instance), path.as_ref())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&read_json(path.as_ref())?)
}

/// Where a saved diagram finds its instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceRef {
    /// Path to an instance file, resolved against the diagram file's
    /// directory first and the working directory second.
    Path(String),
    /// Embed the instance in the diagram file.
    Inline,
}

pub fn diagram_to_json(diagram: &ActivityDiagram, instance_ref: &InstanceRef) -> Value {
    let regions: Vec<Value> = diagram
        .regions()
        .iter()
        .map(|r| json!({"id": r.event_id, "l": r.left, "u": r.top}))
        .collect();
    let reference = match instance_ref {
        InstanceRef::Path(p) => Value::String(p.clone()),
        InstanceRef::Inline => instance_to_json(diagram.instance()),
    };
    json!({
        "instance_ref": reference,
        "regions": regions,
        "volume": diagram.volume(),
    })
}

/// Builds a diagram against a known instance, checking anchoring and the
/// stored volume. Overlaps are left to [`ActivityDiagram::validate`].
pub fn diagram_from_json_with(v: &Value, instance: Arc<Instance>) -> Result<ActivityDiagram> {
    let obj = as_object(v, "")?;
    let raw = field(obj, "", "regions")?
        .as_array()
        .ok_or_else(|| Error::schema("regions", "expected an array"))?;
    let mut regions = Vec::with_capacity(raw.len());
    let mut seen = vec![false; instance.len()];
    for (k, r) in raw.iter().enumerate() {
        let path = format!("regions[{k}]");
        let ro = as_object(r, &path)?;
        let id = index(ro, &path, "id")?;
        if id >= instance.len() || seen[id] {
            return Err(Error::schema(
                join(&path, "id"),
                format!("unknown or duplicate event id {id}"),
            ));
        }
        seen[id] = true;
        regions.push(ActivityRegion::new(id, num(ro, &path, "l")?, num(ro, &path, "u")?));
    }
    let stored = num(obj, "", "volume")?;
    let diagram = ActivityDiagram::new(instance, regions)?;
    let anchoring: Vec<String> = diagram
        .validate()
        .violations
        .iter()
        .filter(|v| !matches!(v, Violation::Overlap { .. }))
        .map(ToString::to_string)
        .collect();
    if !anchoring.is_empty() {
        return Err(Error::InvalidDiagram(anchoring.join("; ")));
    }
    let computed = diagram.volume();
    let scale = stored.abs().max(computed.abs());
    if (stored - computed).abs() > VOLUME_TOLERANCE * scale {
        return Err(Error::VolumeMismatch { stored, computed });
    }
    Ok(diagram)
}

fn resolve_ref(reference: &str, base: Option<&Path>) -> Result<PathBuf> {
    let p = Path::new(reference);
    if p.is_absolute() {
        return Ok(p.to_path_buf());
    }
    if let Some(dir) = base {
        let candidate = dir.join(p);
        if candidate.exists() {
            return Ok(candidate);
        }
    }
    if p.exists() {
        return Ok(p.to_path_buf());
    }
    Err(Error::schema(
        "instance_ref",
        format!("instance file {reference:?} not found"),
    ))
}

/// Parses a diagram, loading a referenced instance relative to `base`.
pub fn diagram_from_json(v: &Value, base: Option<&Path>) -> Result<ActivityDiagram> {
    let obj = as_object(v, "")?;
    let instance = match field(obj, "", "instance_ref")? {
        Value::String(r) => {
            let path = resolve_ref(r, base)?;
            load_instance(&path).map_err(|e| match e {
                Error::Schema { path: p, message } => Error::schema(format!("instance_ref:{p}"), message),
                other => other,
            })?
        }
        inline @ Value::Object(_) => instance_from_json(inline).map_err(|e| match e {
            Error::Schema { path, message } => Error::schema(join("instance_ref", &path), message),
            other => other,
        })?,
        other => {
            return Err(Error::schema(
                "instance_ref",
                format!("expected a path string or an instance object, got {other}"),
            ))
        }
    };
    diagram_from_json_with(v, Arc::new(instance))
}

pub fn save_diagram(
    diagram: &ActivityDiagram,
    instance_ref: &InstanceRef,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_json(&diagram_to_json(diagram, instance_ref), path.as_ref())
}

pub fn load_diagram(path: impl AsRef<Path>) -> Result<ActivityDiagram> {
    let path = path.as_ref();
    diagram_from_json(&read_json(path)?, path.parent())
}

/// Deterministic fill color for an event id.
fn color(id: EventId) -> String {
    // Golden-angle hue steps keep neighbouring ids apart.
    let hue = (id as f64 * 137.507_764_050_037_86) % 360.0;
    format!("hsl({hue:.1},65%,55%)")
}

struct Frame {
    lo: f64,
    scale: f64,
    size: f64,
    margin: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.margin + (t - self.lo) * self.scale
    }

    // Larger end times are drawn higher up.
    fn y(&self, t: f64) -> f64 {
        self.margin + self.size - (t - self.lo) * self.scale
    }
}

/// Configuration-space drawing of `diagram` as an SVG 1.1 document.
pub fn configspace_svg(diagram: &ActivityDiagram) -> String {
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 40.0;
    let inst = diagram.instance();
    let (lo, hi) = (inst.t_min(), inst.t_max());
    let f = Frame {
        lo,
        scale: SIZE / (hi - lo),
        size: SIZE,
        margin: MARGIN,
    };
    let full = SIZE + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    );
    let _ = writeln!(
        svg,
        r##"  <polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="#f4f4f4" stroke="#333" stroke-width="1"/>"##,
        f.x(lo),
        f.y(lo),
        f.x(hi),
        f.y(hi),
        f.x(lo),
        f.y(hi)
    );
    for (r, e) in diagram.regions().iter().zip(inst.events()) {
        let t = e.timestamp;
        if r.area_at(t) <= 0.0 {
            continue;
        }
        let (x0, x1) = (f.x(r.left), f.x(t));
        let (y0, y1) = (f.y(r.top), f.y(t));
        let _ = writeln!(
            svg,
            r##"  <rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{}" fill-opacity="0.6" stroke="#222" stroke-width="0.5"><title>event {}</title></rect>"##,
            x1 - x0,
            y1 - y0,
            color(e.id),
            e.id
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0 + 3.0,
            e.id
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn export_svg_configspace(diagram: &ActivityDiagram, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, configspace_svg(diagram))?;
    Ok(())
}

/// Map drawing of every label, with `active` ones stroked in black. Fails
/// if two active labels conflict or an id is unknown.
pub fn map_svg(instance: &Instance, active: &[EventId]) -> Result<String> {
    for (k, &a) in active.iter().enumerate() {
        if a >= instance.len() {
            return Err(Error::InvalidParameter(format!("unknown event id {a}")));
        }
        for &b in &active[k + 1..] {
            if b < instance.len() && a != b && conflicts(&instance.event(a).shape, &instance.event(b).shape) {
                return Err(Error::ConflictingActiveSet(a, b));
            }
        }
    }
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 20.0;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for e in instance.events() {
        let (a, b, c, d) = e.shape.bounds();
        x0 = x0.min(a);
        y0 = y0.min(b);
        x1 = x1.max(c);
        y1 = y1.max(d);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = SIZE / span;
    let px = |x: f64| MARGIN + (x - x0) * scale;
    let py = |y: f64| MARGIN + SIZE - (y - y0) * scale;
    let full = SIZE + 2.0 * MARGIN;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    );
    let mut draw = |e: &Event, is_active: bool| {
        let style = if is_active {
            format!(r#"fill="{}" fill-opacity="0.8" stroke="black" stroke-width="2.5""#, color(e.id))
        } else {
            r##"fill="#cccccc" fill-opacity="0.35" stroke="#999999" stroke-width="0.5""##.to_owned()
        };
        match e.shape {
            LabelShape::Rect {
                center,
                width,
                height,
            } => {
                let _ = writeln!(
                    svg,
                    r#"  <rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" {style}><title>event {}</title></rect>"#,
                    px(center.x - width / 2.0),
                    py(center.y + height / 2.0),
                    width * scale,
                    height * scale,
                    e.id
                );
            }
            LabelShape::Disk { center, radius } => {
                let _ = writeln!(
                    svg,
                    r#"  <circle cx="{:.3}" cy="{:.3}" r="{:.3}" {style}><title>event {}</title></circle>"#,
                    px(center.x),
                    py(center.y),
                    radius * scale,
                    e.id
                );
            }
        }
    };
    // Inactive labels first so active ones are drawn on top.
    for e in instance.events().iter().filter(|e| !active.contains(&e.id)) {
        draw(e, false);
    }
    for e in instance.events().iter().filter(|e| active.contains(&e.id)) {
        draw(e, true);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn export_svg_map(instance: &Instance, active: &[EventId], path: impl AsRef<Path>) -> Result<()> {
    let svg = map_svg(instance, active)?;
    fs::write(path, svg)?;
    Ok(())
}
