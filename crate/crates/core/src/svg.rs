//! Plain SVG 1.1 export of a scene.

use std::fmt::Write as _;

use crate::scene::{Arrow, Element, ElementKind, Point, Rect, Scene, Shape};

const PAD: f64 = 20.0;
const PAIR_OFFSET: f64 = 6.0;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Where the segment from the center of `r` toward `toward` leaves `r`.
fn border_point(r: &Rect, toward: Point) -> Point {
    let c = r.center();
    let (dx, dy) = (toward.x - c.x, toward.y - c.y);
    if dx == 0.0 && dy == 0.0 {
        return c;
    }
    let tx = if dx != 0.0 { (r.width() / 2.0) / dx.abs() } else { f64::INFINITY };
    let ty = if dy != 0.0 { (r.height() / 2.0) / dy.abs() } else { f64::INFINITY };
    let t = tx.min(ty).min(1.0);
    Point::new(c.x + dx * t, c.y + dy * t)
}

fn node(out: &mut String, e: &Element, r: &Rect) {
    let id = esc(&e.id);
    let c = r.center();
    match (e.kind, e.shape) {
        (ElementKind::Text, _) => {}
        (_, Some(Shape::Ellipse | Shape::Leaf | Shape::Flame)) => {
            let _ = writeln!(
                out,
                r#"<ellipse id="{id}" class="{}" cx="{}" cy="{}" rx="{}" ry="{}" fill="none" stroke="black"/>"#,
                e.shape.map_or("ellipse", |s| s.as_str()),
                num(c.x),
                num(c.y),
                num(r.width() / 2.0),
                num(r.height() / 2.0),
            );
        }
        _ => {
            let _ = writeln!(
                out,
                r#"<rect id="{id}" class="{}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
                e.kind,
                num(r.min_x),
                num(r.min_y),
                num(r.width()),
                num(r.height()),
            );
        }
    }
    if let Some(label) = e.label.as_deref().filter(|l| !l.is_empty()) {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="central">{}</text>"#,
            num(c.x),
            num(c.y),
            esc(label),
        );
    }
}

fn edge(out: &mut String, e: &Element, scene: &Scene) {
    let (Some(a), Some(b)) = (
        e.from.as_deref().and_then(|id| scene.bbox_of(id)),
        e.to.as_deref().and_then(|id| scene.bbox_of(id)),
    ) else {
        return;
    };
    let mut p = border_point(&a, b.center());
    let mut q = border_point(&b, a.center());
    // Keep the two directions of a pair apart.
    let reversed = scene
        .edges()
        .any(|o| o.from == e.to && o.to == e.from);
    if reversed {
        let (dx, dy) = (q.x - p.x, q.y - p.y);
        let len = dx.hypot(dy);
        if len > 0.0 {
            let (nx, ny) = (-dy / len * PAIR_OFFSET, dx / len * PAIR_OFFSET);
            p = Point::new(p.x + nx, p.y + ny);
            q = Point::new(q.x + nx, q.y + ny);
        }
    }
    let marker = if e.arrow == Some(Arrow::Directed) {
        r#" marker-end="url(#arrow)""#
    } else {
        ""
    };
    let _ = writeln!(
        out,
        r#"<line id="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"{marker}/>"#,
        esc(&e.id),
        num(p.x),
        num(p.y),
        num(q.x),
        num(q.y),
    );
    if let Some(label) = e.label.as_deref().filter(|l| !l.is_empty()) {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            num((p.x + q.x) / 2.0),
            num((p.y + q.y) / 2.0 - 4.0),
            esc(label),
        );
    }
}

/// Renders the scene in element order. Same scene, same bytes.
pub fn export_svg(scene: &Scene) -> String {
    let view = scene
        .extent()
        .map(|r| Rect::new(r.min_x - PAD, r.min_y - PAD, r.max_x + PAD, r.max_y + PAD))
        .unwrap_or(Rect::new(0.0, 0.0, 0.0, 0.0));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        num(view.min_x),
        num(view.min_y),
        num(view.width()),
        num(view.height()),
    );
    if scene.edges().any(|e| e.arrow == Some(Arrow::Directed)) {
        out.push_str(concat!(
            r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" orient="auto">"#,
            r#"<path d="M0,0 L10,5 L0,10 z"/></marker></defs>"#,
            "\n"
        ));
    }
    for e in &scene.elements {
        if e.is_edge() {
            edge(&mut out, e, scene);
        } else if let Ok(r) = scene.bbox(e) {
            node(&mut out, e, &r);
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_has_empty_body() {
        let svg = export_svg(&Scene::new());
        let body: Vec<&str> = svg.lines().collect();
        assert_eq!(body.len(), 2);
        assert!(body[0].starts_with("<svg"));
        assert_eq!(body[1], "</svg>");
    }

    #[test]
    fn one_node() {
        let scene = Scene {
            version: 1,
            elements: vec![Element::node("n50", "50", Point::new(0.0, 0.0))],
        };
        let svg = export_svg(&scene);
        assert_eq!(svg.matches("<rect").count(), 1);
        assert_eq!(svg.matches("<text").count(), 1);
        assert!(svg.contains(">50</text>"));
    }

    #[test]
    fn edges_stop_at_borders() {
        let scene = Scene {
            version: 1,
            elements: vec![
                Element::node("a", "A", Point::new(0.0, 0.0)),
                Element::node("b", "B", Point::new(200.0, 0.0)),
                Element::edge("e", "a", "b").with_arrow(Arrow::Directed),
            ],
        };
        let svg = export_svg(&scene);
        assert!(svg.contains(r#"x1="40" y1="0" x2="160" y2="0""#), "{svg}");
        assert!(svg.contains("marker-end"));
    }

    #[test]
    fn escapes_labels() {
        let scene = Scene {
            version: 1,
            elements: vec![Element::text("t", "a<b & c", Point::new(0.0, 0.0))],
        };
        assert!(export_svg(&scene).contains("a&lt;b &amp; c"));
    }
}
