//! Diagram scene graph: typed elements with geometry, validation and versioning.
//!
//! Coordinates are canvas units with y growing downward. Element order is
//! z-order: later elements draw on top.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default box for nodes, groups and icons without an explicit size.
pub const DEFAULT_NODE_SIZE: Size = Size { w: 80.0, h: 40.0 };
pub const DEFAULT_ICON_SIZE: Size = Size { w: 32.0, h: 32.0 };
/// Text boxes are 8 units per character wide and 16 units tall.
pub const TEXT_CHAR_WIDTH: f64 = 8.0;
pub const TEXT_HEIGHT: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Size {
    pub w: f64,
    pub h: f64,
}

impl Size {
    pub const fn new(w: f64, h: f64) -> Self {
        Self { w, h }
    }
}

impl From<[f64; 2]> for Size {
    fn from([w, h]: [f64; 2]) -> Self {
        Self { w, h }
    }
}

impl From<Size> for [f64; 2] {
    fn from(s: Size) -> Self {
        [s.w, s.h]
    }
}

macro_rules! str_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

str_enum!(ElementKind {
    Node => "node",
    Edge => "edge",
    Text => "text",
    Icon => "icon",
    Group => "group",
});

str_enum!(Shape {
    Rect => "rect",
    Ellipse => "ellipse",
    Leaf => "leaf",
    Flame => "flame",
    Freeform => "freeform",
});

str_enum!(Arrow {
    None => "none",
    Directed => "directed",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Size>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Shape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrow: Option<Arrow>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: BTreeMap<String, String>,
}

impl Element {
    fn bare(id: impl Into<String>, kind: ElementKind) -> Self {
        Self {
            id: id.into(),
            kind,
            label: None,
            at: None,
            size: None,
            shape: None,
            from: None,
            to: None,
            arrow: None,
            style: BTreeMap::new(),
        }
    }

    /// A positioned non-edge element.
    pub fn placed(id: impl Into<String>, kind: ElementKind, at: Point) -> Self {
        debug_assert!(kind != ElementKind::Edge);
        Self {
            at: Some(at),
            ..Self::bare(id, kind)
        }
    }

    pub fn node(id: impl Into<String>, label: impl Into<String>, at: Point) -> Self {
        Self {
            label: Some(label.into()),
            shape: Some(Shape::Rect),
            ..Self::placed(id, ElementKind::Node, at)
        }
    }

    pub fn text(id: impl Into<String>, label: impl Into<String>, at: Point) -> Self {
        Self {
            label: Some(label.into()),
            ..Self::placed(id, ElementKind::Text, at)
        }
    }

    pub fn edge(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: Some(from.into()),
            to: Some(to.into()),
            ..Self::bare(id, ElementKind::Edge)
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_size(mut self, w: f64, h: f64) -> Self {
        self.size = Some(Size::new(w, h));
        self
    }

    pub fn with_shape(mut self, shape: Shape) -> Self {
        self.shape = Some(shape);
        self
    }

    pub fn with_arrow(mut self, arrow: Arrow) -> Self {
        self.arrow = Some(arrow);
        self
    }

    pub fn is_edge(&self) -> bool {
        self.kind == ElementKind::Edge
    }

    pub fn label_str(&self) -> &str {
        self.label.as_deref().unwrap_or("")
    }

    /// Effective box size: explicit size, else the per-kind default.
    pub fn effective_size(&self) -> Size {
        if let Some(size) = self.size {
            return size;
        }
        match self.kind {
            ElementKind::Text => Size::new(
                TEXT_CHAR_WIDTH * self.label_str().chars().count() as f64,
                TEXT_HEIGHT,
            ),
            ElementKind::Icon => DEFAULT_ICON_SIZE,
            _ => DEFAULT_NODE_SIZE,
        }
    }
}

/// Axis-aligned rectangle given by its min and max corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn centered(c: Point, size: Size) -> Self {
        Self::new(
            c.x - size.w / 2.0,
            c.y - size.h / 2.0,
            c.x + size.w / 2.0,
            c.y + size.h / 2.0,
        )
    }

    pub fn hull(a: Point, b: Point) -> Self {
        Self::new(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.min_x + self.max_x) / 2.0,
            (self.min_y + self.max_y) / 2.0,
        )
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect::new(
            self.min_x.min(other.min_x),
            self.min_y.min(other.min_y),
            self.max_x.max(other.max_x),
            self.max_y.max(other.max_y),
        )
    }

    /// Scales the rectangle about its center.
    pub fn scaled(&self, factor: f64) -> Rect {
        let c = self.center();
        Rect::centered(c, Size::new(self.width() * factor, self.height() * factor))
    }

    /// Open-interval intersection on both axes. A degenerate side (a line)
    /// intersects when it lies strictly inside the other interval.
    pub fn intersects(&self, other: &Rect) -> bool {
        open_overlap(self.min_x, self.max_x, other.min_x, other.max_x)
            && open_overlap(self.min_y, self.max_y, other.min_y, other.max_y)
    }

    pub fn overlap_area(&self, other: &Rect) -> f64 {
        if !self.intersects(other) {
            return 0.0;
        }
        let w = self.max_x.min(other.max_x) - self.min_x.max(other.min_x);
        let h = self.max_y.min(other.max_y) - self.min_y.max(other.min_y);
        w.max(0.0) * h.max(0.0)
    }
}

fn open_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> bool {
    match (a0 == a1, b0 == b1) {
        (true, true) => a0 == b0,
        (true, false) => b0 < a0 && a0 < b1,
        (false, true) => a0 < b0 && b0 < a1,
        (false, false) => a0 < b1 && b0 < a1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    EmptyId,
    DuplicateId,
    /// Edge without both endpoints, or an endpoint that does not resolve.
    DanglingEndpoint,
    /// Edge endpoint resolves to another edge.
    EndpointIsEdge,
    /// Non-edge element without a position.
    MissingPosition,
    /// Edge carrying a position.
    EdgeHasPosition,
    /// Non-edge element carrying edge-only fields (from/to/arrow).
    EdgeFieldsOnNonEdge,
    NonPositiveSize,
    NonFiniteGeometry,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::EmptyId => "empty id",
            Rule::DuplicateId => "duplicate id",
            Rule::DanglingEndpoint => "dangling endpoint",
            Rule::EndpointIsEdge => "edge endpoint is an edge",
            Rule::MissingPosition => "missing position",
            Rule::EdgeHasPosition => "edge has a position",
            Rule::EdgeFieldsOnNonEdge => "edge fields on non-edge element",
            Rule::NonPositiveSize => "non-positive size",
            Rule::NonFiniteGeometry => "non-finite geometry",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub element_id: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element_id, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("edge {0} has a dangling endpoint")]
    DanglingEndpoint(String),
    #[error("element {0} has no position")]
    MissingPosition(String),
    #[error("invalid scene JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub version: u64,
    pub elements: Vec<Element>,
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Element> {
        self.elements.iter_mut().find(|e| e.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| e.is_edge())
    }

    pub fn non_edges(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| !e.is_edge())
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn bbox(&self, element: &Element) -> Result<Rect, SceneError> {
        bbox(element, self)
    }

    pub fn bbox_of(&self, id: &str) -> Option<Rect> {
        self.get(id).and_then(|e| bbox(e, self).ok())
    }

    /// Smallest rectangle covering every element, or `None` for an empty scene.
    pub fn extent(&self) -> Option<Rect> {
        self.elements
            .iter()
            .filter_map(|e| bbox(e, self).ok())
            .reduce(|a, b| a.union(&b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Json(e.to_string()))
    }
}

/// Checks every scene and element invariant. Violations are reported in
/// element order; an empty list means the scene is valid.
pub fn validate(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut by_id: HashMap<&str, &Element> = HashMap::with_capacity(scene.elements.len());
    let mut push = |id: &str, rule| {
        out.push(Violation {
            element_id: id.to_owned(),
            rule,
        })
    };

    for e in &scene.elements {
        if e.id.is_empty() {
            push(&e.id, Rule::EmptyId);
        }
        if by_id.insert(e.id.as_str(), e).is_some() {
            push(&e.id, Rule::DuplicateId);
        }
    }

    for e in &scene.elements {
        if let Some(size) = e.size {
            if !(size.w.is_finite() && size.h.is_finite()) {
                push(&e.id, Rule::NonFiniteGeometry);
            } else if size.w <= 0.0 || size.h <= 0.0 {
                push(&e.id, Rule::NonPositiveSize);
            }
        }
        if let Some(at) = e.at {
            if !at.is_finite() {
                push(&e.id, Rule::NonFiniteGeometry);
            }
        }
        if e.is_edge() {
            if e.at.is_some() {
                push(&e.id, Rule::EdgeHasPosition);
            }
            let mut dangling = false;
            let mut to_edge = false;
            for end in [&e.from, &e.to] {
                match end.as_deref().and_then(|id| by_id.get(id)) {
                    None => dangling = true,
                    Some(target) if target.is_edge() => to_edge = true,
                    Some(_) => {}
                }
            }
            if dangling {
                push(&e.id, Rule::DanglingEndpoint);
            }
            if to_edge {
                push(&e.id, Rule::EndpointIsEdge);
            }
        } else {
            if e.at.is_none() {
                push(&e.id, Rule::MissingPosition);
            }
            if e.from.is_some() || e.to.is_some() || e.arrow.is_some() {
                push(&e.id, Rule::EdgeFieldsOnNonEdge);
            }
        }
    }
    out
}

/// Bounding rectangle of an element. Non-edges are boxes centered at their
/// position; edges cover the hull of their two endpoint centers.
pub fn bbox(element: &Element, scene: &Scene) -> Result<Rect, SceneError> {
    if element.is_edge() {
        let center = |end: &Option<String>| -> Result<Point, SceneError> {
            end.as_deref()
                .and_then(|id| scene.get(id))
                .filter(|e| !e.is_edge())
                .and_then(|e| e.at)
                .ok_or_else(|| SceneError::DanglingEndpoint(element.id.clone()))
        };
        Ok(Rect::hull(center(&element.from)?, center(&element.to)?))
    } else {
        let at = element
            .at
            .ok_or_else(|| SceneError::MissingPosition(element.id.clone()))?;
        Ok(Rect::centered(at, element.effective_size()))
    }
}

pub fn apply_version_bump(scene: &Scene) -> Scene {
    Scene {
        version: scene.version + 1,
        elements: scene.elements.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(elements: Vec<Element>) -> Scene {
        Scene {
            version: 0,
            elements,
        }
    }

    #[test]
    fn empty_scene_is_valid() {
        assert!(validate(&Scene::new()).is_empty());
    }

    #[test]
    fn dangling_edge_reports_one_violation() {
        let s = scene(vec![
            Element::node("n50", "50", Point::new(0.0, 0.0)),
            Element::edge("e1", "n50", "nX"),
        ]);
        assert_eq!(
            validate(&s),
            vec![Violation {
                element_id: "e1".into(),
                rule: Rule::DanglingEndpoint
            }]
        );
    }

    #[test]
    fn structural_violations() {
        let mut edge_with_pos = Element::edge("e1", "a", "b");
        edge_with_pos.at = Some(Point::new(1.0, 1.0));
        let mut node_with_from = Element::node("b", "", Point::new(0.0, 0.0));
        node_with_from.from = Some("a".into());
        let mut unplaced = Element::node("c", "", Point::new(0.0, 0.0));
        unplaced.at = None;
        let s = scene(vec![
            Element::node("a", "", Point::new(0.0, 0.0)).with_size(0.0, 10.0),
            node_with_from,
            edge_with_pos,
            unplaced,
            Element::node("a", "", Point::new(1.0, 1.0)),
            Element::edge("e2", "a", "e1"),
        ]);
        let rules: Vec<_> = validate(&s).into_iter().map(|v| (v.element_id, v.rule)).collect();
        assert!(rules.contains(&("a".into(), Rule::DuplicateId)));
        assert!(rules.contains(&("a".into(), Rule::NonPositiveSize)));
        assert!(rules.contains(&("b".into(), Rule::EdgeFieldsOnNonEdge)));
        assert!(rules.contains(&("e1".into(), Rule::EdgeHasPosition)));
        assert!(rules.contains(&("c".into(), Rule::MissingPosition)));
        assert!(rules.contains(&("e2".into(), Rule::EndpointIsEdge)));
    }

    #[test]
    fn node_bbox_is_centered() {
        let n = Element::node("n", "50", Point::new(0.0, 0.0)).with_size(80.0, 40.0);
        let s = scene(vec![n.clone()]);
        assert_eq!(bbox(&n, &s).unwrap(), Rect::new(-40.0, -20.0, 40.0, 20.0));
        let mut defaulted = n;
        defaulted.size = None;
        assert_eq!(bbox(&defaulted, &s).unwrap(), Rect::new(-40.0, -20.0, 40.0, 20.0));
    }

    #[test]
    fn text_bbox_uses_label_length() {
        let t = Element::text("t", "CO2", Point::new(10.0, 10.0));
        let r = bbox(&t, &scene(vec![t.clone()])).unwrap();
        assert_eq!(r.width(), 24.0);
        assert_eq!(r.height(), 16.0);
        assert_eq!(r.center(), Point::new(10.0, 10.0));
    }

    #[test]
    fn edge_bbox_is_endpoint_hull() {
        let s = scene(vec![
            Element::node("a", "", Point::new(0.0, 0.0)),
            Element::node("b", "", Point::new(100.0, 50.0)),
            Element::edge("e", "a", "b"),
        ]);
        assert_eq!(s.bbox_of("e").unwrap(), Rect::new(0.0, 0.0, 100.0, 50.0));
        let dangling = Element::edge("x", "a", "zz");
        assert_eq!(
            bbox(&dangling, &s),
            Err(SceneError::DanglingEndpoint("x".into()))
        );
    }

    #[test]
    fn version_bump() {
        let mut s = Scene::new();
        assert_eq!(apply_version_bump(&s).version, 1);
        s.version = 41;
        assert_eq!(apply_version_bump(&s).version, 42);
        assert_eq!(apply_version_bump(&apply_version_bump(&s)).version, 43);
        assert_eq!(apply_version_bump(&s).elements, s.elements);
    }

    #[test]
    fn json_keys_are_exact() {
        let s = Scene {
            version: 3,
            elements: vec![
                Element::node("n1", "50", Point::new(0.0, 0.5)).with_size(80.0, 40.0),
                Element::node("n2", "30", Point::new(-60.0, 80.0)),
                Element::edge("e1", "n1", "n2").with_arrow(Arrow::Directed),
            ],
        };
        assert_eq!(
            s.to_json(),
            r#"{"version":3,"elements":[{"id":"n1","kind":"node","label":"50","at":[0.0,0.5],"size":[80.0,40.0],"shape":"rect"},{"id":"n2","kind":"node","label":"30","at":[-60.0,80.0],"shape":"rect"},{"id":"e1","kind":"edge","from":"n1","to":"n2","arrow":"directed"}]}"#
        );
        assert_eq!(Scene::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        assert!(Scene::from_json(r#"{"version":0,"elements":[],"extra":1}"#).is_err());
        assert!(Scene::from_json(
            r#"{"version":0,"elements":[{"id":"a","kind":"node","at":[0,0],"color":"red"}]}"#
        )
        .is_err());
        assert!(Scene::from_json(r#"{"version":0,"elements":[{"id":"a","kind":"blob"}]}"#).is_err());
    }

    #[test]
    fn degenerate_rects_intersect_only_when_inside() {
        let line = Rect::new(0.0, 10.0, 100.0, 10.0);
        assert!(line.intersects(&Rect::new(20.0, 5.0, 30.0, 15.0)));
        assert!(!line.intersects(&Rect::new(20.0, 10.0, 30.0, 15.0)));
        let touching = Rect::new(100.0, 0.0, 120.0, 20.0);
        assert!(!Rect::new(0.0, 0.0, 100.0, 20.0).intersects(&touching));
    }
}
