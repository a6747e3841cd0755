//! Geometric refinement emitted as moves: tidy tree layout, left-to-right
//! flow layout, and greedy label de-overlap.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::edits::EditOp;
use crate::scene::{ElementKind, Point, Rect, Scene};

/// Positions closer than this to the target are left alone.
pub const MOVE_EPSILON: f64 = 0.5;
/// Clearance added on top of the overlap when a label is pushed away.
pub const LABEL_CLEARANCE: f64 = 4.0;
/// Edges count as obstacles for labels at 80% of their endpoint hull.
pub const EDGE_OBSTACLE_SCALE: f64 = 0.8;
pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutConfig {
    pub h_gap: f64,
    pub v_gap: f64,
    pub layer_gap: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            h_gap: 40.0,
            v_gap: 80.0,
            layer_gap: 160.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub id: String,
    pub to: Point,
}

impl From<Move> for EditOp {
    fn from(m: Move) -> Self {
        EditOp::Move { id: m.id, to: m.to }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("structure under {0} is not a tree")]
    NotATree(String),
    #[error("unknown element id {0}")]
    UnknownId(String),
}

/// A rooted tree with ordered children, ready for [`tidy_positions`].
#[derive(Debug, Clone, Default)]
pub struct OrderedTree {
    pub root: String,
    pub children: HashMap<String, Vec<String>>,
    pub widths: HashMap<String, f64>,
}

impl OrderedTree {
    fn kids(&self, id: &str) -> &[String] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }
}

struct Placed {
    /// (id, x relative to the subtree root, depth below it)
    nodes: Vec<(String, f64, usize)>,
    min_x: f64,
    max_x: f64,
}

fn place(tree: &OrderedTree, id: &str, h_gap: f64) -> Placed {
    let half = tree.widths.get(id).copied().unwrap_or(0.0) / 2.0;
    let kids = tree.kids(id);
    if kids.is_empty() {
        return Placed {
            nodes: vec![(id.to_owned(), 0.0, 0)],
            min_x: -half,
            max_x: half,
        };
    }

    // Children sit side by side with whole-subtree extents separated by
    // h_gap, so sibling subtree boxes never overlap.
    let mut placed_kids: Vec<(f64, Placed)> = Vec::with_capacity(kids.len());
    let mut right_edge: Option<f64> = None;
    for kid in kids {
        let sub = place(tree, kid, h_gap);
        let offset = match right_edge {
            None => 0.0,
            Some(edge) => edge + h_gap - sub.min_x,
        };
        right_edge = Some(offset + sub.max_x);
        placed_kids.push((offset, sub));
    }
    let center = placed_kids.iter().map(|(o, _)| o).sum::<f64>() / placed_kids.len() as f64;

    let mut nodes = vec![(id.to_owned(), 0.0, 0)];
    let (mut min_x, mut max_x) = (-half, half);
    for (offset, sub) in placed_kids {
        let shift = offset - center;
        min_x = min_x.min(sub.min_x + shift);
        max_x = max_x.max(sub.max_x + shift);
        nodes.extend(sub.nodes.into_iter().map(|(n, x, d)| (n, x + shift, d + 1)));
    }
    Placed { nodes, min_x, max_x }
}

/// Absolute tidy positions for every tree node, with the root at `root_at`.
pub fn tidy_positions(tree: &OrderedTree, root_at: Point, cfg: &LayoutConfig) -> Vec<(String, Point)> {
    place(tree, &tree.root, cfg.h_gap)
        .nodes
        .into_iter()
        .map(|(id, dx, depth)| {
            (
                id,
                Point::new(root_at.x + dx, root_at.y + depth as f64 * cfg.v_gap),
            )
        })
        .collect()
}

/// Reads the tree hanging off `root_id` (edges point parent → child),
/// ordering children by current x, ties by element order.
pub fn tree_from_scene(scene: &Scene, root_id: &str) -> Result<OrderedTree, LayoutError> {
    let root = scene
        .get(root_id)
        .filter(|e| !e.is_edge())
        .ok_or_else(|| LayoutError::UnknownId(root_id.to_owned()))?;
    let mut tree = OrderedTree {
        root: root.id.clone(),
        ..OrderedTree::default()
    };
    let mut seen: HashSet<&str> = HashSet::from([root.id.as_str()]);
    let mut stack = vec![root.id.as_str()];
    while let Some(parent) = stack.pop() {
        let mut kids: Vec<(f64, usize, &str)> = Vec::new();
        for edge in scene.edges().filter(|e| e.from.as_deref() == Some(parent)) {
            let Some(child_id) = edge.to.as_deref() else { continue };
            let idx = scene
                .index_of(child_id)
                .ok_or_else(|| LayoutError::UnknownId(child_id.to_owned()))?;
            if !seen.insert(child_id) {
                return Err(LayoutError::NotATree(root_id.to_owned()));
            }
            let x = scene.elements[idx].at.map_or(0.0, |p| p.x);
            kids.push((x, idx, child_id));
        }
        kids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        stack.extend(kids.iter().map(|k| k.2));
        tree.children.insert(
            parent.to_owned(),
            kids.into_iter().map(|k| k.2.to_owned()).collect(),
        );
    }
    for id in &seen {
        if let Some(e) = scene.get(id) {
            tree.widths.insert((*id).to_owned(), e.effective_size().w);
        }
    }
    Ok(tree)
}

fn moves_for(scene: &Scene, targets: impl IntoIterator<Item = (String, Point)>) -> Vec<Move> {
    targets
        .into_iter()
        .filter(|(id, to)| {
            scene
                .get(id)
                .and_then(|e| e.at)
                .is_none_or(|at| at.distance(to) > MOVE_EPSILON)
        })
        .map(|(id, to)| Move { id, to })
        .collect()
}

/// Tidy layout of the tree rooted at `root_id`. The root stays put; every
/// other node moves to its tidy position when that differs by more than
/// [`MOVE_EPSILON`].
pub fn layout_tree(scene: &Scene, root_id: &str, cfg: &LayoutConfig) -> Result<Vec<Move>, LayoutError> {
    let tree = tree_from_scene(scene, root_id)?;
    let root_at = scene
        .get(root_id)
        .and_then(|e| e.at)
        .ok_or_else(|| LayoutError::UnknownId(root_id.to_owned()))?;
    Ok(moves_for(scene, tidy_positions(&tree, root_at, cfg)))
}

/// Lays `chain` out left to right, `layer_gap` apart, on the first element's row.
pub fn flow_positions(scene: &Scene, chain: &[String], cfg: &LayoutConfig) -> Result<Vec<(String, Point)>, LayoutError> {
    let mut out = Vec::with_capacity(chain.len());
    let mut anchor = None;
    for (k, id) in chain.iter().enumerate() {
        let at = scene
            .get(id)
            .filter(|e| !e.is_edge())
            .and_then(|e| e.at)
            .ok_or_else(|| LayoutError::UnknownId(id.clone()))?;
        let first = *anchor.get_or_insert(at);
        out.push((id.clone(), Point::new(first.x + k as f64 * cfg.layer_gap, first.y)));
    }
    Ok(out)
}

pub fn layout_flow(scene: &Scene, chain: &[String], cfg: &LayoutConfig) -> Result<Vec<Move>, LayoutError> {
    Ok(moves_for(scene, flow_positions(scene, chain, cfg)?))
}

/// Obstacle box used by the label pass: non-edges as-is, edges shrunk to
/// [`EDGE_OBSTACLE_SCALE`] of their endpoint hull.
pub fn obstacle_rect(scene: &Scene, id: &str) -> Option<Rect> {
    let e = scene.get(id)?;
    let r = scene.bbox(e).ok()?;
    Some(if e.is_edge() {
        r.scaled(EDGE_OBSTACLE_SCALE)
    } else {
        r
    })
}

/// Every (text, other) pair that the label pass treats as a collision,
/// in element order. Edges do not collide with their own endpoints.
pub fn label_collisions(scene: &Scene) -> Vec<(usize, usize)> {
    let els = &scene.elements;
    let mut out = Vec::new();
    for i in 0..els.len() {
        for j in (i + 1)..els.len() {
            let (mover, other) = if els[j].kind == ElementKind::Text {
                (j, i)
            } else if els[i].kind == ElementKind::Text {
                (i, j)
            } else {
                continue;
            };
            let o = &els[other];
            let t_id = els[mover].id.as_str();
            if o.is_edge() && (o.from.as_deref() == Some(t_id) || o.to.as_deref() == Some(t_id)) {
                continue;
            }
            let (Some(a), Some(b)) = (obstacle_rect(scene, t_id), obstacle_rect(scene, &o.id)) else {
                continue;
            };
            if a.intersects(&b) {
                out.push((mover, other));
            }
        }
    }
    out
}

/// Distance to move `t` along one axis to clear `o`, in the cheaper
/// direction; positive wins ties.
fn separation(t0: f64, t1: f64, o0: f64, o1: f64) -> f64 {
    let back = t1 - o0;
    let forward = o1 - t0;
    if forward <= back {
        forward
    } else {
        -back
    }
}

/// Greedy de-overlap: repeatedly pushes the text with the largest overlap
/// out along its shortest separating axis by the overlap plus
/// [`LABEL_CLEARANCE`]. Only text elements move. Returns the state with the
/// fewest collisions seen, so crowded piles never end up worse.
pub fn resolve_label_overlaps(scene: &Scene, max_iters: usize) -> Vec<Move> {
    debug_assert!(max_iters > 0);
    let mut work = scene.clone();
    let mut kept = (label_collisions(scene).len(), scene.clone());
    for _ in 0..max_iters {
        let collisions = label_collisions(&work);
        if collisions.len() < kept.0 {
            kept = (collisions.len(), work.clone());
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (mover, other) in collisions {
            let a = obstacle_rect(&work, &work.elements[mover].id).unwrap();
            let b = obstacle_rect(&work, &work.elements[other].id).unwrap();
            let area = a.overlap_area(&b);
            if best.is_none_or(|(best_area, ..)| area > best_area) {
                best = Some((area, mover, other));
            }
        }
        let Some((_, mover, other)) = best else { break };
        let t = obstacle_rect(&work, &work.elements[mover].id).unwrap();
        let o = obstacle_rect(&work, &work.elements[other].id).unwrap();
        let dx = separation(t.min_x, t.max_x, o.min_x, o.max_x);
        let dy = separation(t.min_y, t.max_y, o.min_y, o.max_y);
        let at = work.elements[mover].at.expect("text elements are positioned");
        let nudge = |d: f64| d + LABEL_CLEARANCE * d.signum();
        work.elements[mover].at = Some(if dy.abs() <= dx.abs() {
            Point::new(at.x, at.y + nudge(dy))
        } else {
            Point::new(at.x + nudge(dx), at.y)
        });
    }
    if label_collisions(&work).len() < kept.0 {
        kept.1 = work;
    }
    scene
        .elements
        .iter()
        .zip(&kept.1.elements)
        .filter(|(before, after)| before.at != after.at)
        .map(|(_, after)| Move {
            id: after.id.clone(),
            to: after.at.unwrap(),
        })
        .collect()
}
