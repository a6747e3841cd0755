//! Keyword-driven rule providers.
//!
//! Each rule reads the transcript window plus the current scene and either
//! returns an edit script or `None` when its cues are absent or ambiguous.
//! Rules are pure; the same inputs always yield the same script.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;

use crate::edits::{AttrSet, EditOp, EditScript};
use crate::layout::{
    flow_positions, resolve_label_overlaps, tidy_positions, LayoutConfig, OrderedTree,
    DEFAULT_MAX_ITERS, MOVE_EPSILON,
};
use crate::scene::{Arrow, Element, ElementKind, Point, Rect, Scene, Shape, DEFAULT_NODE_SIZE};

pub fn rule_bst(context: &str, scene: &Scene) -> Option<EditScript> {
    bst(context, scene, &LayoutConfig::default())
}

pub fn rule_flow(context: &str, scene: &Scene) -> Option<EditScript> {
    flow(context, scene, &LayoutConfig::default())
}

pub fn rule_concept(context: &str, scene: &Scene) -> Option<EditScript> {
    concept(context, scene, &LayoutConfig::default())
}

pub fn rule_annotation(context: &str, scene: &Scene) -> Option<EditScript> {
    annotation(context, scene, &LayoutConfig::default())
}

pub(crate) fn describe(what: &str, script: &EditScript) -> String {
    let count = |f: fn(&EditOp) -> bool| script.ops.iter().filter(|op| f(op)).count();
    format!(
        "{what}: {} added, {} updated, {} moved",
        count(|op| matches!(op, EditOp::Add(_))),
        count(|op| matches!(op, EditOp::Set { .. })),
        count(|op| matches!(op, EditOp::Move { .. })),
    )
}

/// Hands out ids not yet present in the scene or already issued.
struct IdPool<'a> {
    scene: &'a Scene,
    issued: HashSet<String>,
}

impl<'a> IdPool<'a> {
    fn new(scene: &'a Scene) -> Self {
        Self {
            scene,
            issued: HashSet::new(),
        }
    }

    fn fresh(&mut self, base: &str) -> String {
        let base: String = base
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let mut candidate = base.clone();
        let mut k = 2;
        while self.scene.contains(&candidate) || self.issued.contains(&candidate) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        self.issued.insert(candidate.clone());
        candidate
    }
}

fn has_word(haystack_lower: &str, word: &str) -> bool {
    Regex::new(&format!(r"\b{}\b", regex::escape(word)))
        .map(|re| re.is_match(haystack_lower))
        .unwrap_or(false)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn build_script(scene: &Scene, ops: Vec<EditOp>) -> Option<EditScript> {
    (!ops.is_empty()).then(|| EditScript::new(scene.version, ops))
}

// ---------------------------------------------------------------------------
// Binary search tree

static INSERT_CUE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:insert(?:ing)?|start(?:ing)? with|add(?:ing)?)\s+(-?\d+)\b").unwrap()
});
static BEFORE_COMPARISON: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:^|[^\w-])(-?\d+)\s+(?:is\s+)?(?:less|greater|smaller|bigger|larger)\s+than\b")
        .unwrap()
});
static AFTER_COMPARISON: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:less|greater|smaller|bigger|larger)\s+than\s+(-?\d+)\b").unwrap()
});

/// Integers named in insertion or comparison phrases, in spoken order,
/// first occurrence only.
pub fn spoken_values(context: &str) -> Vec<i64> {
    let mut hits: Vec<(usize, i64)> = Vec::new();
    for re in [&*INSERT_CUE, &*BEFORE_COMPARISON, &*AFTER_COMPARISON] {
        for caps in re.captures_iter(context) {
            let m = caps.get(1).unwrap();
            if let Ok(v) = m.as_str().parse() {
                hits.push((m.start(), v));
            }
        }
    }
    hits.sort_unstable();
    hits.dedup_by_key(|h| h.0);
    let mut seen = HashSet::new();
    hits.into_iter()
        .map(|(_, v)| v)
        .filter(|v| seen.insert(*v))
        .collect()
}

#[derive(Debug, Default)]
struct Bst {
    root: Option<i64>,
    kids: BTreeMap<i64, [Option<i64>; 2]>,
    order: Vec<i64>,
}

impl Bst {
    fn insert(&mut self, v: i64) {
        let Some(mut cur) = self.root else {
            self.root = Some(v);
            self.kids.insert(v, [None, None]);
            self.order.push(v);
            return;
        };
        loop {
            if v == cur {
                return;
            }
            let side = usize::from(v > cur);
            match self.kids[&cur][side] {
                Some(next) => cur = next,
                None => {
                    self.kids.get_mut(&cur).unwrap()[side] = Some(v);
                    self.kids.insert(v, [None, None]);
                    self.order.push(v);
                    return;
                }
            }
        }
    }

    /// (parent, child) pairs in insertion order of the child.
    fn links(&self) -> Vec<(i64, i64)> {
        let parent: HashMap<i64, i64> = self
            .kids
            .iter()
            .flat_map(|(p, ks)| ks.iter().flatten().map(move |c| (*c, *p)))
            .collect();
        self.order
            .iter()
            .filter_map(|c| parent.get(c).map(|p| (*p, *c)))
            .collect()
    }
}

fn int_label(e: &Element) -> Option<i64> {
    if e.kind != ElementKind::Node {
        return None;
    }
    e.label.as_deref()?.trim().parse().ok()
}

const HOLE_PREFIX: &str = "\u{0}hole:";

pub(crate) fn bst(context: &str, scene: &Scene, cfg: &LayoutConfig) -> Option<EditScript> {
    let int_nodes: Vec<(&Element, i64)> = scene
        .elements
        .iter()
        .filter_map(|e| int_label(e).map(|v| (e, v)))
        .collect();
    let int_ids: HashSet<&str> = int_nodes.iter().map(|(e, _)| e.id.as_str()).collect();
    let has_int_parent = |id: &str| {
        scene.edges().any(|edge| {
            edge.to.as_deref() == Some(id) && edge.from.as_deref().is_some_and(|f| int_ids.contains(f))
        })
    };
    let (root_el, root_val) = *int_nodes
        .iter()
        .find(|(e, _)| !has_int_parent(&e.id))
        .or_else(|| int_nodes.first())?;

    let values = spoken_values(context);
    if values.len() < 2 {
        return None;
    }
    let mut tree = Bst::default();
    tree.insert(root_val);
    for v in &values {
        tree.insert(*v);
    }

    // value -> element id, existing nodes first
    let mut ids: HashMap<i64, String> = HashMap::new();
    ids.insert(root_val, root_el.id.clone());
    for (e, v) in &int_nodes {
        ids.entry(*v).or_insert_with(|| e.id.clone());
    }
    let mut pool = IdPool::new(scene);
    let new_values: Vec<i64> = tree
        .order
        .iter()
        .copied()
        .filter(|v| !ids.contains_key(v))
        .collect();
    for v in &new_values {
        ids.insert(*v, pool.fresh(&format!("n{v}")));
    }

    // Binary layout: an absent child keeps its slot so single children
    // still lean to their side.
    let mut ordered = OrderedTree {
        root: ids[&root_val].clone(),
        ..OrderedTree::default()
    };
    let width_of = |id: &str| {
        scene
            .get(id)
            .map_or(DEFAULT_NODE_SIZE.w, |e| e.effective_size().w)
    };
    for (v, kids) in &tree.kids {
        let id = ids[v].clone();
        ordered.widths.insert(id.clone(), width_of(&id));
        if kids.iter().all(Option::is_none) {
            continue;
        }
        let slots = kids
            .iter()
            .enumerate()
            .map(|(side, k)| match k {
                Some(c) => ids[c].clone(),
                None => {
                    let hole = format!("{HOLE_PREFIX}{id}:{side}");
                    ordered.widths.insert(hole.clone(), DEFAULT_NODE_SIZE.w);
                    hole
                }
            })
            .collect();
        ordered.children.insert(id, slots);
    }
    let root_at = root_el.at?;
    let positions: HashMap<String, Point> = tidy_positions(&ordered, root_at, cfg)
        .into_iter()
        .filter(|(id, _)| !id.starts_with(HOLE_PREFIX))
        .collect();

    let mut ops = Vec::new();
    for v in &new_values {
        let id = &ids[v];
        ops.push(EditOp::Add(Element::node(id.clone(), v.to_string(), positions[id])));
    }
    let linked = |a: &str, b: &str| {
        scene.edges().any(|e| {
            let (f, t) = (e.from.as_deref(), e.to.as_deref());
            (f == Some(a) && t == Some(b)) || (f == Some(b) && t == Some(a))
        })
    };
    for (p, c) in tree.links() {
        let (pid, cid) = (&ids[&p], &ids[&c]);
        if !linked(pid, cid) {
            let eid = pool.fresh(&format!("e{p}_{c}"));
            ops.push(EditOp::Add(Element::edge(eid, pid.clone(), cid.clone())));
        }
    }
    for v in &tree.order {
        let id = &ids[v];
        if new_values.contains(v) {
            continue;
        }
        let to = positions[id];
        if scene
            .get(id)
            .and_then(|e| e.at)
            .is_some_and(|at| at.distance(&to) > MOVE_EPSILON)
        {
            ops.push(EditOp::Move { id: id.clone(), to });
        }
    }
    build_script(scene, ops)
}

// ---------------------------------------------------------------------------
// Request / response flow

pub const ACTORS: [&str; 5] = ["browser", "server", "database", "client", "cache"];
const ACTOR: &str = r"(browser|server|database|client|cache)s?";
const ARTICLE: &str = r"(?:(?:the|a|an|this|that|its|some)\s+)?";

static SENDS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b{ACTOR}\b[^.!?]*?\bsends?\s+(.+?)\s+to\s+{ARTICLE}{ACTOR}\b"
    ))
    .unwrap()
});
static QUERIES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b{ACTOR}\b[^.!?]*?\bquer(?:y|ies|ying)\s+{ARTICLE}{ACTOR}\b"
    ))
    .unwrap()
});
static RETURNS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\b{ACTOR}\b\s+(?:then\s+|also\s+)?returns?\s+{ARTICLE}([a-z][a-z ]*?)(?:\s+to\b|[,.!?;]|$)"
    ))
    .unwrap()
});
static BACK_TO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?i)\bresponse\b[^.!?]*?\bback\s+to\s+{ARTICLE}{ACTOR}\b")).unwrap()
});
static RESPONSE_PHRASE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:an?|the)\s+((?:[A-Za-z0-9]+\s+)?response)\b").unwrap()
});
static LEADING_ARTICLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)^{ARTICLE}")).unwrap());

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPlan {
    pub chain: Vec<String>,
    /// (from actor, to actor, label) in emission order.
    pub edges: Vec<(String, String, String)>,
}

fn clean_phrase(s: &str) -> String {
    LEADING_ARTICLE.replace(s.trim(), "").trim().to_owned()
}

/// Reads the actor chain and the request/response edges from speech.
pub fn plan_flow(context: &str) -> Option<FlowPlan> {
    let lower = |s: &str| s.to_ascii_lowercase();
    let mut forward: Vec<(usize, String, String, String)> = Vec::new();
    for c in SENDS.captures_iter(context) {
        forward.push((
            c.get(0).unwrap().start(),
            lower(&c[1]),
            lower(&c[3]),
            clean_phrase(&c[2]),
        ));
    }
    for c in QUERIES.captures_iter(context) {
        forward.push((c.get(0).unwrap().start(), lower(&c[1]), lower(&c[2]), "query".into()));
    }
    forward.sort_by_key(|f| f.0);

    let mut chain: Vec<String> = Vec::new();
    let mut labels: HashMap<(String, String), String> = HashMap::new();
    for (_, a, b, label) in forward {
        if a == b {
            continue;
        }
        if chain.is_empty() {
            chain.push(a.clone());
        }
        if chain.last() == Some(&a) && !chain.contains(&b) {
            chain.push(b.clone());
            labels.insert((a, b), label);
        }
    }
    if chain.len() < 2 {
        return None;
    }

    let mut returns: HashMap<String, String> = HashMap::new();
    for c in RETURNS.captures_iter(context) {
        returns.entry(lower(&c[1])).or_insert_with(|| clean_phrase(&c[2]));
    }
    let back_to: HashSet<String> = BACK_TO.captures_iter(context).map(|c| lower(&c[1])).collect();
    let response = RESPONSE_PHRASE
        .captures_iter(context)
        .map(|c| c[1].to_owned())
        .find(|p| p.contains(' '))
        .unwrap_or_else(|| "response".to_owned());

    let mut edges: Vec<(String, String, String)> = chain
        .windows(2)
        .map(|w| {
            let label = labels.get(&(w[0].clone(), w[1].clone())).cloned().unwrap_or_default();
            (w[0].clone(), w[1].clone(), label)
        })
        .collect();
    let mentions_return = !returns.is_empty() || !back_to.is_empty();
    if mentions_return {
        for k in (0..chain.len() - 1).rev() {
            let (from, to) = (&chain[k + 1], &chain[k]);
            let label = returns
                .get(from)
                .cloned()
                .unwrap_or_else(|| response.clone());
            edges.push((from.clone(), to.clone(), label));
        }
    }
    Some(FlowPlan { chain, edges })
}

pub(crate) fn flow(context: &str, scene: &Scene, cfg: &LayoutConfig) -> Option<EditScript> {
    scene.non_edges().next()?;
    let plan = plan_flow(context)?;
    let mut pool = IdPool::new(scene);
    let mut ops = Vec::new();

    // actor -> element id
    let mut mapped: HashMap<String, String> = HashMap::new();
    for actor in &plan.chain {
        if let Some(e) = scene
            .non_edges()
            .find(|e| e.label_str().trim().eq_ignore_ascii_case(actor))
        {
            mapped.insert(actor.clone(), e.id.clone());
        }
    }
    // A rough unlabeled box at the end of an arrow from the previous actor
    // stands in for the next actor.
    for k in 1..plan.chain.len() {
        let actor = &plan.chain[k];
        if mapped.contains_key(actor) {
            continue;
        }
        let Some(prev) = mapped.get(&plan.chain[k - 1]).cloned() else { continue };
        let taken: HashSet<&String> = mapped.values().collect();
        let stand_in = scene
            .edges()
            .filter(|e| e.from.as_deref() == Some(prev.as_str()))
            .filter_map(|e| scene.get(e.to.as_deref()?))
            .find(|t| t.label_str().trim().is_empty() && !t.is_edge() && !taken.contains(&t.id))
            .map(|t| t.id.clone());
        if let Some(id) = stand_in {
            ops.push(EditOp::Set {
                id: id.clone(),
                attrs: AttrSet::label(capitalize(actor)),
            });
            mapped.insert(actor.clone(), id);
        }
    }

    // Provisional scene with every actor present, for the flow layout.
    let mut work = scene.clone();
    let first_mapped = plan
        .chain
        .iter()
        .position(|a| mapped.contains_key(a));
    let anchor = match first_mapped {
        Some(k) => {
            let at = scene.get(&mapped[&plan.chain[k]])?.at?;
            Point::new(at.x - k as f64 * cfg.layer_gap, at.y)
        }
        None => {
            let ext = scene.extent()?;
            Point::new(ext.min_x + DEFAULT_NODE_SIZE.w / 2.0, ext.max_y + cfg.v_gap)
        }
    };
    let box_size = first_mapped
        .and_then(|k| scene.get(&mapped[&plan.chain[k]]))
        .and_then(|e| e.size);
    let mut added = Vec::new();
    for (k, actor) in plan.chain.iter().enumerate() {
        if mapped.contains_key(actor) {
            continue;
        }
        let id = pool.fresh(actor);
        let mut el = Element::node(
            id.clone(),
            capitalize(actor),
            Point::new(anchor.x + k as f64 * cfg.layer_gap, anchor.y),
        );
        el.size = box_size;
        work.elements.push(el);
        added.push(id.clone());
        mapped.insert(actor.clone(), id);
    }
    let chain_ids: Vec<String> = plan.chain.iter().map(|a| mapped[a].clone()).collect();
    let mut positions: HashMap<String, Point> = flow_positions(&work, &chain_ids, cfg)
        .ok()?
        .into_iter()
        .collect();
    if first_mapped != Some(0) {
        // The first actor is new: keep the anchor derived from the mapped one.
        for (k, id) in chain_ids.iter().enumerate() {
            positions.insert(id.clone(), Point::new(anchor.x + k as f64 * cfg.layer_gap, anchor.y));
        }
    }

    for id in &added {
        let mut el = work.get(id)?.clone();
        el.at = Some(positions[id]);
        ops.push(EditOp::Add(el));
    }

    let rank: HashMap<&str, usize> = chain_ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
    for (a, b, label) in &plan.edges {
        let (from, to) = (&mapped[a], &mapped[b]);
        // Never connect actors that are not neighbours in the chain.
        if rank[from.as_str()].abs_diff(rank[to.as_str()]) != 1 {
            return None;
        }
        let existing = scene
            .edges()
            .find(|e| e.from.as_deref() == Some(from.as_str()) && e.to.as_deref() == Some(to.as_str()));
        match existing {
            Some(e) => {
                let mut attrs = AttrSet::default();
                if !label.is_empty() && e.label_str() != label {
                    attrs.label = Some(Some(label.clone()));
                }
                if e.arrow != Some(Arrow::Directed) {
                    attrs.arrow = Some(Some(Arrow::Directed));
                }
                if !attrs.is_empty() {
                    ops.push(EditOp::Set {
                        id: e.id.clone(),
                        attrs,
                    });
                }
            }
            None => {
                let mut edge = Element::edge(pool.fresh(&format!("{from}_to_{to}")), from.clone(), to.clone())
                    .with_arrow(Arrow::Directed);
                if !label.is_empty() {
                    edge.label = Some(label.clone());
                }
                ops.push(EditOp::Add(edge));
            }
        }
    }

    for id in &chain_ids {
        if added.contains(id) {
            continue;
        }
        let to = positions[id];
        if scene
            .get(id)
            .and_then(|e| e.at)
            .is_some_and(|at| at.distance(&to) > MOVE_EPSILON)
        {
            ops.push(EditOp::Move { id: id.clone(), to });
        }
    }
    build_script(scene, ops)
}

// ---------------------------------------------------------------------------
// Input / output concepts

pub struct Term {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    /// Short on-canvas label for the arrow's far end.
    pub symbol: &'static str,
}

pub struct Concept {
    pub process: &'static str,
    pub inputs: &'static [Term],
    pub outputs: &'static [Term],
    /// Input drawn as an icon rather than a text label.
    pub energy_source: Option<&'static str>,
}

pub const CONCEPTS: &[Concept] = &[Concept {
    process: "photosynthesis",
    inputs: &[
        Term { name: "sunlight", aliases: &["sun light", "light energy"], symbol: "Sun" },
        Term { name: "carbon dioxide", aliases: &["co2"], symbol: "CO2" },
        Term { name: "water", aliases: &["h2o"], symbol: "H2O" },
    ],
    outputs: &[
        Term { name: "glucose", aliases: &["sugar"], symbol: "C6H12O6" },
        Term { name: "oxygen", aliases: &["o2"], symbol: "O2" },
    ],
    energy_source: Some("sunlight"),
}];

const TERM_COLUMN_GAP: f64 = 200.0;
const TERM_ROW_GAP: f64 = 80.0;
const ICON_GAP: f64 = 140.0;
const SUMMARY_GAP: f64 = 100.0;
const ICON_SIZE: f64 = 48.0;

fn mentions(lower: &str, term: &Term) -> bool {
    has_word(lower, term.name) || term.aliases.iter().any(|a| has_word(lower, a))
}

fn central_element(scene: &Scene) -> Option<&Element> {
    let placed = || scene.non_edges().filter(|e| e.at.is_some());
    placed()
        .find(|e| e.shape == Some(Shape::Leaf))
        .or_else(|| {
            placed().fold(None, |best: Option<&Element>, e| {
                let area = |e: &Element| {
                    let s = e.effective_size();
                    s.w * s.h
                };
                match best {
                    Some(b) if area(b) >= area(e) => Some(b),
                    _ => Some(e),
                }
            })
        })
}

pub(crate) fn concept(context: &str, scene: &Scene, _cfg: &LayoutConfig) -> Option<EditScript> {
    let lower = context.to_lowercase();
    let center = central_element(scene)?;
    let c_at = center.at?;
    let c_size = center.effective_size();

    let entry = CONCEPTS.iter().find(|c| {
        let named = has_word(&lower, c.process);
        let io_vocab = lower.contains("input") || lower.contains("output");
        let hits = c.inputs.iter().chain(c.outputs).filter(|t| mentions(&lower, t)).count();
        named || (io_vocab && hits >= 2)
    })?;
    let already = |term: &Term| {
        scene.edges().any(|e| {
            e.label_str() == term.name
                && (e.to.as_deref() == Some(center.id.as_str())
                    || e.from.as_deref() == Some(center.id.as_str()))
        })
    };
    let inputs: Vec<&Term> = entry.inputs.iter().filter(|t| mentions(&lower, t)).collect();
    let outputs: Vec<&Term> = entry.outputs.iter().filter(|t| mentions(&lower, t)).collect();
    if inputs.is_empty() && outputs.is_empty() {
        return None;
    }
    if inputs.iter().chain(&outputs).all(|t| already(t)) {
        return None;
    }

    let mut pool = IdPool::new(scene);
    let mut new_elements: Vec<Element> = Vec::new();
    let mut new_edges: Vec<Element> = Vec::new();
    let left_x = c_at.x - c_size.w / 2.0 - TERM_COLUMN_GAP;
    let right_x = c_at.x + c_size.w / 2.0 + TERM_COLUMN_GAP;

    let column = |terms: &[&Term]| -> Vec<f64> {
        let n = terms.len() as f64;
        (0..terms.len())
            .map(|i| c_at.y + (i as f64 - (n - 1.0) / 2.0) * TERM_ROW_GAP)
            .collect()
    };
    let is_source = |t: &Term| entry.energy_source == Some(t.name);

    let text_inputs: Vec<&Term> = inputs.iter().copied().filter(|t| !is_source(t)).collect();
    for (term, y) in text_inputs.iter().zip(column(&text_inputs)) {
        if already(term) {
            continue;
        }
        let id = pool.fresh(&format!("in_{}", term.name));
        new_elements.push(Element::text(id.clone(), term.symbol, Point::new(left_x, y)));
        new_edges.push(
            Element::edge(pool.fresh(&format!("{id}_arrow")), id, center.id.clone())
                .with_label(term.name)
                .with_arrow(Arrow::Directed),
        );
    }
    if let Some(src) = inputs.iter().find(|t| is_source(t)).filter(|t| !already(t)) {
        let id = pool.fresh(&format!("icon_{}", src.name));
        let at = Point::new(c_at.x, c_at.y - c_size.h / 2.0 - ICON_GAP);
        new_elements.push(
            Element::placed(id.clone(), ElementKind::Icon, at)
                .with_label(src.symbol)
                .with_shape(Shape::Ellipse)
                .with_size(ICON_SIZE, ICON_SIZE),
        );
        new_edges.push(
            Element::edge(pool.fresh(&format!("{id}_arrow")), id, center.id.clone())
                .with_label(src.name)
                .with_arrow(Arrow::Directed),
        );
    }
    for (term, y) in outputs.iter().zip(column(&outputs)) {
        if already(term) {
            continue;
        }
        let id = pool.fresh(&format!("out_{}", term.name));
        new_elements.push(Element::text(id.clone(), term.symbol, Point::new(right_x, y)));
        new_edges.push(
            Element::edge(pool.fresh(&format!("{id}_arrow")), center.id.clone(), id)
                .with_label(term.name)
                .with_arrow(Arrow::Directed),
        );
    }

    let summary_y = c_at.y + c_size.h / 2.0 + SUMMARY_GAP;
    for (title, terms, x) in [("Inputs", &inputs, left_x), ("Outputs", &outputs, right_x)] {
        let exists = scene
            .elements
            .iter()
            .any(|e| e.kind == ElementKind::Text && e.label_str().starts_with(title));
        if terms.is_empty() || exists {
            continue;
        }
        let names: Vec<&str> = terms.iter().map(|t| t.name).collect();
        new_elements.push(Element::text(
            pool.fresh(&title.to_lowercase()),
            format!("{title}: {}", names.join(", ")),
            Point::new(x, summary_y),
        ));
    }

    let mut work = scene.clone();
    work.elements.extend(new_elements.iter().cloned());
    work.elements.extend(new_edges.iter().cloned());
    let moves: HashMap<String, Point> = resolve_label_overlaps(&work, DEFAULT_MAX_ITERS)
        .into_iter()
        .map(|m| (m.id, m.to))
        .collect();

    let mut ops = Vec::new();
    for mut el in new_elements.into_iter().chain(new_edges) {
        if let Some(to) = moves.get(&el.id) {
            el.at = Some(*to);
        }
        ops.push(EditOp::Add(el));
    }
    for e in &scene.elements {
        if let Some(to) = moves.get(&e.id) {
            ops.push(EditOp::Move { id: e.id.clone(), to: *to });
        }
    }
    build_script(scene, ops)
}

// ---------------------------------------------------------------------------
// Cause / effect annotation

static HEAT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bheat").unwrap());
static BUNSEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bbunsen\s+burner").unwrap());

pub const CAUSE_TEXT: &str = "Heat";
pub const EFFECT_TEXT: &str = "Liquid boils and turns into vapor";
pub const VAPOR_LABEL: &str = "Vapor";
const FLAME_SIZE: f64 = 48.0;
const ANNOTATION_GAP: f64 = 24.0;

/// Adds a flame under the sketch, an upward "Vapor" arrow above it and
/// cause/effect text. Pre-existing elements are never touched.
pub(crate) fn annotation(context: &str, scene: &Scene, _cfg: &LayoutConfig) -> Option<EditScript> {
    if !HEAT.is_match(context) {
        return None;
    }
    if scene
        .non_edges()
        .any(|e| e.kind == ElementKind::Icon && e.shape == Some(Shape::Flame))
    {
        return None;
    }
    let boxes: Vec<(&Element, Rect)> = scene
        .non_edges()
        .filter_map(|e| scene.bbox(e).ok().map(|r| (e, r)))
        .collect();
    let lowest = boxes.iter().map(|(_, r)| r.max_y).reduce(f64::max)?;
    let topmost = boxes.iter().map(|(_, r)| r.min_y).reduce(f64::min)?;
    let (vessel, vessel_box) = boxes.iter().fold(None, |best: Option<&(&Element, Rect)>, b| match best {
        Some(cur) if cur.1.width() * cur.1.height() >= b.1.width() * b.1.height() => Some(cur),
        _ => Some(b),
    })?;
    let cx = vessel_box.center().x;

    let mut pool = IdPool::new(scene);
    let flame_at = Point::new(cx, lowest + ANNOTATION_GAP + FLAME_SIZE / 2.0);
    let flame_label = if BUNSEN.is_match(context) { "Bunsen burner" } else { "Flame" };
    let flame = Element::placed(pool.fresh("flame"), ElementKind::Icon, flame_at)
        .with_label(flame_label)
        .with_shape(Shape::Flame)
        .with_size(FLAME_SIZE, FLAME_SIZE);
    let cause_width = CAUSE_TEXT.len() as f64 * crate::scene::TEXT_CHAR_WIDTH;
    let cause = Element::text(
        pool.fresh("cause"),
        CAUSE_TEXT,
        Point::new(cx - FLAME_SIZE / 2.0 - ANNOTATION_GAP - cause_width / 2.0, flame_at.y),
    );
    let effect_id = pool.fresh("effect");
    let effect = Element::text(
        effect_id.clone(),
        EFFECT_TEXT,
        Point::new(cx, topmost - 3.0 * ANNOTATION_GAP),
    );
    let vapor = Element::edge(pool.fresh("vapor"), vessel.id.clone(), effect_id)
        .with_label(VAPOR_LABEL)
        .with_arrow(Arrow::Directed);

    build_script(
        scene,
        [flame, cause, effect, vapor].into_iter().map(EditOp::Add).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edits::apply_script;

    #[test]
    fn spoken_values_in_order() {
        let ctx = "We'll start with 50 as our root node. When we insert 30, since it's less than 50, \
                   it goes to the left. And 70 is greater than 50, so that goes on the right side. \
                   Now let's add 20. Twenty is less than 50, so we go left to 30, and since 20 is \
                   less than 30, it becomes the left child of 30. Finally, we'll insert 40...";
        assert_eq!(spoken_values(ctx), vec![50, 30, 70, 20, 40]);
        assert_eq!(spoken_values("we'll start with 50"), vec![50]);
        assert_eq!(spoken_values("insert -5 then insert 7"), vec![-5, 7]);
    }

    #[test]
    fn bst_needs_two_values() {
        let scene = Scene {
            version: 0,
            elements: vec![Element::node("n50", "50", Point::new(0.0, 0.0))],
        };
        assert_eq!(rule_bst("we'll start with 50", &scene), None);
        assert_eq!(rule_bst("insert 30", &Scene::new()), None);
    }

    #[test]
    fn bst_single_child_leans_to_its_side() {
        let scene = Scene {
            version: 0,
            elements: vec![Element::node("n50", "50", Point::new(0.0, 0.0))],
        };
        let script = rule_bst("insert 50 and insert 30", &scene).unwrap();
        let after = apply_script(&scene, &script).unwrap();
        let at = after.get("n30").unwrap().at.unwrap();
        assert_eq!(at, Point::new(-60.0, 80.0));
    }

    #[test]
    fn flow_plan_from_speech() {
        let ctx = "The browser first sends an HTTP request to the server. The server receives this \
                   request and processes it, maybe it needs to query a database to get some \
                   information. Once the database returns the data, the server processes it and \
                   generates an HTTP response. This response travels back to the browser...";
        let plan = plan_flow(ctx).unwrap();
        assert_eq!(plan.chain, vec!["browser", "server", "database"]);
        let edges: Vec<(&str, &str, &str)> = plan
            .edges
            .iter()
            .map(|(a, b, l)| (a.as_str(), b.as_str(), l.as_str()))
            .collect();
        assert_eq!(
            edges,
            vec![
                ("browser", "server", "HTTP request"),
                ("server", "database", "query"),
                ("database", "server", "data"),
                ("server", "browser", "HTTP response"),
            ]
        );
    }

    #[test]
    fn flow_needs_a_chain() {
        let scene = Scene {
            version: 0,
            elements: vec![Element::node("b", "Browser", Point::new(0.0, 0.0))],
        };
        assert_eq!(rule_flow("The browser renders the page.", &scene), None);
        assert!(plan_flow("the client sends a request to the cache").is_some());
    }

    #[test]
    fn concept_without_terms_is_none() {
        let scene = Scene {
            version: 0,
            elements: vec![Element::node("leaf", "Leaf", Point::new(0.0, 0.0)).with_shape(Shape::Leaf)],
        };
        assert_eq!(rule_concept("Today we talk about rocks.", &scene), None);
    }

    #[test]
    fn annotation_requires_heat() {
        let scene = Scene {
            version: 0,
            elements: vec![Element::node("b", "Beaker", Point::new(0.0, 0.0))],
        };
        assert_eq!(rule_annotation("The liquid is blue.", &scene), None);
        let script = rule_annotation("We heat the beaker.", &scene).unwrap();
        assert_eq!(script.ops.len(), 4);
        let after = apply_script(&scene, &script).unwrap();
        assert_eq!(rule_annotation("We heat the beaker.", &after), None);
    }
}
