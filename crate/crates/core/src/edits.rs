//! Edit-script DSL: typed edit operations, the line grammar, and atomic
//! application to a [`Scene`].
//!
//! ```text
//! ADD node n50 label="50" at=(0,0) shape=rect
//! ADD edge e1 from=n50 to=n30 arrow=directed
//! SET n30 label="thirty" style.color="red"
//! MOVE n30 at=(100,210)
//! DEL e1
//! ```
//!
//! In `SET`, the bare value `unset` clears an attribute. It is how the
//! inverse of a `SET` restores an attribute that was previously absent.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::scene::{Arrow, Element, ElementKind, Point, Scene, Shape, Size, Violation};

/// The grammar as shown to remote models.
pub const GRAMMAR: &str = r##"script  := (line NEWLINE)*
line    := add | set | move | del | comment | blank
add     := "ADD" kind id attr+
kind    := "node" | "edge" | "text" | "icon" | "group"
set     := "SET" id attr+
move    := "MOVE" id "at=(" num "," num ")"
del     := "DEL" id
attr    := key "=" value
key     := "label" | "at" | "size" | "shape" | "from" | "to" | "arrow" | "style." ident
value   := '"' chars '"' | num | "(" num "," num ")" | ident
comment := "#" anything
"##;

/// Attribute patch carried by `SET`. `Some(None)` clears the attribute.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttrSet {
    pub label: Option<Option<String>>,
    pub size: Option<Option<Size>>,
    pub shape: Option<Option<Shape>>,
    pub arrow: Option<Option<Arrow>>,
    pub style: BTreeMap<String, Option<String>>,
}

impl AttrSet {
    pub fn is_empty(&self) -> bool {
        self.label.is_none()
            && self.size.is_none()
            && self.shape.is_none()
            && self.arrow.is_none()
            && self.style.is_empty()
    }

    pub fn label(label: impl Into<String>) -> Self {
        Self {
            label: Some(Some(label.into())),
            ..Self::default()
        }
    }

    fn apply_to(&self, e: &mut Element) {
        if let Some(v) = &self.label {
            e.label = v.clone();
        }
        if let Some(v) = self.size {
            e.size = v;
        }
        if let Some(v) = self.shape {
            e.shape = v;
        }
        if let Some(v) = self.arrow {
            e.arrow = v;
        }
        for (k, v) in &self.style {
            match v {
                Some(v) => {
                    e.style.insert(k.clone(), v.clone());
                }
                None => {
                    e.style.remove(k);
                }
            }
        }
    }

    /// The patch restoring `e`'s current values for every attribute this patch touches.
    fn inverse_for(&self, e: &Element) -> AttrSet {
        AttrSet {
            label: self.label.as_ref().map(|_| e.label.clone()),
            size: self.size.map(|_| e.size),
            shape: self.shape.map(|_| e.shape),
            arrow: self.arrow.map(|_| e.arrow),
            style: self
                .style
                .keys()
                .map(|k| (k.clone(), e.style.get(k).cloned()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EditOp {
    Add(Element),
    Set { id: String, attrs: AttrSet },
    Move { id: String, to: Point },
    Del { id: String },
}

impl EditOp {
    pub fn target(&self) -> &str {
        match self {
            EditOp::Add(e) => &e.id,
            EditOp::Set { id, .. } | EditOp::Move { id, .. } | EditOp::Del { id } => id,
        }
    }

    pub fn move_to(id: impl Into<String>, x: f64, y: f64) -> Self {
        EditOp::Move {
            id: id.into(),
            to: Point::new(x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditScript {
    pub base_version: u64,
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn new(base_version: u64, ops: Vec<EditOp>) -> Self {
        Self { base_version, ops }
    }

    /// Checks the script-level invariants: at least one op, no duplicate
    /// `ADD` ids, and no reference to an id deleted earlier in the script.
    pub fn check(&self) -> Result<(), ParseError> {
        if self.ops.is_empty() {
            return Err(ParseError::new(0, "script has no operations"));
        }
        let mut added = HashSet::new();
        let mut deleted = HashSet::new();
        for (i, op) in self.ops.iter().enumerate() {
            let line = i + 1;
            let mut refs = vec![op.target()];
            if let EditOp::Add(e) = op {
                if !added.insert(e.id.as_str()) {
                    return Err(ParseError::new(line, format!("duplicate ADD id {}", e.id)));
                }
                refs.extend(e.from.as_deref());
                refs.extend(e.to.as_deref());
            }
            if let Some(r) = refs.iter().find(|r| deleted.contains(*r)) {
                return Err(ParseError::new(
                    line,
                    format!("references {r}, deleted earlier in the script"),
                ));
            }
            if let EditOp::Del { id } = op {
                deleted.insert(id.as_str());
            }
        }
        Ok(())
    }
}

impl fmt::Display for EditScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_script(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplyError {
    #[error("stale script: computed against version {script}, scene is at {scene}")]
    StaleScript { script: u64, scene: u64 },
    #[error("unknown element id {0}")]
    UnknownId(String),
    #[error("element id {0} already exists")]
    DuplicateId(String),
    #[error("result would be invalid: {}", display_violations(.0))]
    InvariantBreak(Vec<Violation>),
}

fn display_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

// ---------------------------------------------------------------------------
// Parsing

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Debug, PartialEq)]
enum Value {
    Str(String),
    Num(f64),
    Pair(f64, f64),
    Ident(String),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Str(_) => "a quoted string",
            Value::Num(_) => "a number",
            Value::Pair(..) => "a coordinate pair",
            Value::Ident(_) => "an identifier",
        }
    }
}

fn parse_num(s: &str) -> Option<f64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int) || frac.is_some_and(|f| !all_digits(f)) {
        return None;
    }
    s.parse().ok()
}

fn parse_value(raw: &str) -> Result<Value, String> {
    if let Some(rest) = raw.strip_prefix('"') {
        let body = rest
            .strip_suffix('"')
            .ok_or_else(|| format!("unterminated string {raw}"))?;
        return Ok(Value::Str(body.replace("\\\"", "\"")));
    }
    if let Some(rest) = raw.strip_prefix('(') {
        let body = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("malformed pair {raw}"))?;
        let (a, b) = body
            .split_once(',')
            .ok_or_else(|| format!("malformed pair {raw}"))?;
        return match (parse_num(a), parse_num(b)) {
            (Some(a), Some(b)) => Ok(Value::Pair(a, b)),
            _ => Err(format!("malformed pair {raw}")),
        };
    }
    if let Some(n) = parse_num(raw) {
        return Ok(Value::Num(n));
    }
    if is_ident(raw) {
        return Ok(Value::Ident(raw.to_owned()));
    }
    Err(format!("malformed value {raw}"))
}

/// Splits a line on whitespace, keeping quoted strings (with `\"` escapes) intact.
fn tokenize(line: &str) -> Result<Vec<&str>, String> {
    let bytes = line.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let mut in_quotes = false;
        while i < bytes.len() && (in_quotes || !bytes[i].is_ascii_whitespace()) {
            match bytes[i] {
                b'\\' if in_quotes && bytes.get(i + 1) == Some(&b'"') => i += 1,
                b'"' => in_quotes = !in_quotes,
                _ => {}
            }
            i += 1;
        }
        if in_quotes {
            return Err("unterminated string".into());
        }
        tokens.push(&line[start..i]);
    }
    Ok(tokens)
}

fn split_attr(token: &str) -> Result<(&str, Value), String> {
    let (key, raw) = token
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, found {token}"))?;
    let known = matches!(
        key,
        "label" | "at" | "size" | "shape" | "from" | "to" | "arrow"
    ) || key.strip_prefix("style.").is_some_and(is_ident);
    if !known {
        return Err(format!("unknown attribute {key}"));
    }
    Ok((key, parse_value(raw)?))
}

fn expect_id(token: Option<&&str>, what: &str) -> Result<String, String> {
    match token {
        Some(t) if is_ident(t) => Ok((*t).to_owned()),
        Some(t) => Err(format!("malformed {what} {t}")),
        None => Err(format!("missing {what}")),
    }
}

fn want_str(key: &str, v: Value) -> Result<String, String> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(format!("{key} expects a quoted string, found {}", other.describe())),
    }
}

fn want_pair(key: &str, v: Value) -> Result<(f64, f64), String> {
    match v {
        Value::Pair(a, b) => Ok((a, b)),
        other => Err(format!("{key} expects (x,y), found {}", other.describe())),
    }
}

fn want_size(key: &str, v: Value) -> Result<Size, String> {
    let (w, h) = want_pair(key, v)?;
    if w <= 0.0 || h <= 0.0 {
        return Err(format!("{key} components must be positive"));
    }
    Ok(Size::new(w, h))
}

fn want_ident(key: &str, v: Value) -> Result<String, String> {
    match v {
        Value::Ident(s) => Ok(s),
        other => Err(format!("{key} expects an identifier, found {}", other.describe())),
    }
}

fn want_shape(v: Value) -> Result<Shape, String> {
    let name = want_ident("shape", v)?;
    Shape::parse(&name).ok_or_else(|| format!("unknown shape {name}"))
}

fn want_arrow(v: Value) -> Result<Arrow, String> {
    let name = want_ident("arrow", v)?;
    Arrow::parse(&name).ok_or_else(|| format!("unknown arrow {name}"))
}

fn is_unset(v: &Value) -> bool {
    matches!(v, Value::Ident(s) if s == "unset")
}

fn parse_add(tokens: &[&str]) -> Result<EditOp, String> {
    let kind = match tokens.get(1) {
        Some(k) => ElementKind::parse(k).ok_or_else(|| format!("unknown kind {k}"))?,
        None => return Err("missing kind".into()),
    };
    let id = expect_id(tokens.get(2), "id")?;
    if tokens.len() < 4 {
        return Err("ADD needs at least one attribute".into());
    }
    let mut e = Element {
        id,
        kind,
        label: None,
        at: None,
        size: None,
        shape: None,
        from: None,
        to: None,
        arrow: None,
        style: BTreeMap::new(),
    };
    let mut seen = HashSet::new();
    for token in &tokens[3..] {
        let (key, value) = split_attr(token)?;
        if !seen.insert(key) {
            return Err(format!("duplicate attribute {key}"));
        }
        match key {
            "label" => e.label = Some(want_str(key, value)?),
            "at" => {
                let (x, y) = want_pair(key, value)?;
                e.at = Some(Point::new(x, y));
            }
            "size" => e.size = Some(want_size(key, value)?),
            "shape" => e.shape = Some(want_shape(value)?),
            "from" => e.from = Some(want_ident(key, value)?),
            "to" => e.to = Some(want_ident(key, value)?),
            "arrow" => e.arrow = Some(want_arrow(value)?),
            _ => {
                let style_key = &key["style.".len()..];
                e.style.insert(style_key.to_owned(), want_str(key, value)?);
            }
        }
    }
    if kind == ElementKind::Edge {
        if e.from.is_none() || e.to.is_none() {
            return Err("edge needs from= and to=".into());
        }
        if e.at.is_some() {
            return Err("edge cannot carry at=".into());
        }
    } else {
        if e.at.is_none() {
            return Err(format!("{kind} needs at="));
        }
        if e.from.is_some() || e.to.is_some() || e.arrow.is_some() {
            return Err(format!("{kind} cannot carry from=, to= or arrow="));
        }
    }
    Ok(EditOp::Add(e))
}

fn parse_set(tokens: &[&str]) -> Result<EditOp, String> {
    let id = expect_id(tokens.get(1), "id")?;
    if tokens.len() < 3 {
        return Err("SET needs at least one attribute".into());
    }
    let mut attrs = AttrSet::default();
    let mut seen = HashSet::new();
    for token in &tokens[2..] {
        let (key, value) = split_attr(token)?;
        if !seen.insert(key) {
            return Err(format!("duplicate attribute {key}"));
        }
        let unset = is_unset(&value);
        match key {
            "label" => {
                attrs.label = Some(if unset { None } else { Some(want_str(key, value)?) })
            }
            "size" => attrs.size = Some(if unset { None } else { Some(want_size(key, value)?) }),
            "shape" => attrs.shape = Some(if unset { None } else { Some(want_shape(value)?) }),
            "arrow" => attrs.arrow = Some(if unset { None } else { Some(want_arrow(value)?) }),
            "at" => return Err("use MOVE to change at".into()),
            "from" | "to" => return Err(format!("{key} cannot be changed by SET")),
            _ => {
                let v = if unset { None } else { Some(want_str(key, value)?) };
                attrs.style.insert(key["style.".len()..].to_owned(), v);
            }
        }
    }
    Ok(EditOp::Set { id, attrs })
}

fn parse_move(tokens: &[&str]) -> Result<EditOp, String> {
    let id = expect_id(tokens.get(1), "id")?;
    match tokens.get(2..) {
        Some([attr]) => {
            let (key, value) = split_attr(attr)?;
            if key != "at" {
                return Err(format!("MOVE expects at=(x,y), found {key}"));
            }
            let (x, y) = want_pair(key, value)?;
            Ok(EditOp::Move {
                id,
                to: Point::new(x, y),
            })
        }
        _ => Err("MOVE expects exactly one at=(x,y)".into()),
    }
}

fn parse_line(tokens: &[&str]) -> Result<EditOp, String> {
    match tokens[0] {
        "ADD" => parse_add(tokens),
        "SET" => parse_set(tokens),
        "MOVE" => parse_move(tokens),
        "DEL" => {
            let id = expect_id(tokens.get(1), "id")?;
            if tokens.len() > 2 {
                return Err("DEL takes only an id".into());
            }
            Ok(EditOp::Del { id })
        }
        other => Err(format!("unknown command {other}")),
    }
}

/// Parses a whole script. Any malformed line fails the entire parse.
pub fn parse_script(text: &str, base_version: u64) -> Result<EditScript, ParseError> {
    let mut ops = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let op = tokenize(trimmed)
            .and_then(|tokens| parse_line(&tokens))
            .map_err(|reason| ParseError::new(line_no, reason))?;
        ops.push(op);
    }
    let script = EditScript { base_version, ops };
    // check() reports op indices; map them back to source lines.
    script.check().map_err(|err| {
        if err.line == 0 {
            return err;
        }
        let source_line = text
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let t = l.trim();
                !t.is_empty() && !t.starts_with('#')
            })
            .nth(err.line - 1)
            .map(|(i, _)| i + 1)
            .unwrap_or(err.line);
        ParseError::new(source_line, err.reason)
    })?;
    Ok(script)
}

// ---------------------------------------------------------------------------
// Serialization

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

fn pair(a: f64, b: f64) -> String {
    format!("({a},{b})")
}

fn serialize_op(op: &EditOp, out: &mut String) {
    match op {
        EditOp::Add(e) => {
            let _ = write!(out, "ADD {} {}", e.kind, e.id);
            if let Some(l) = &e.label {
                let _ = write!(out, " label={}", quote(l));
            }
            if let Some(p) = e.at {
                let _ = write!(out, " at={}", pair(p.x, p.y));
            }
            if let Some(s) = e.size {
                let _ = write!(out, " size={}", pair(s.w, s.h));
            }
            if let Some(s) = e.shape {
                let _ = write!(out, " shape={s}");
            }
            if let Some(f) = &e.from {
                let _ = write!(out, " from={f}");
            }
            if let Some(t) = &e.to {
                let _ = write!(out, " to={t}");
            }
            if let Some(a) = e.arrow {
                let _ = write!(out, " arrow={a}");
            }
            for (k, v) in &e.style {
                let _ = write!(out, " style.{k}={}", quote(v));
            }
        }
        EditOp::Set { id, attrs } => {
            let _ = write!(out, "SET {id}");
            let opt = |v: Option<String>| v.unwrap_or_else(|| "unset".to_owned());
            if let Some(l) = &attrs.label {
                let _ = write!(out, " label={}", opt(l.as_deref().map(quote)));
            }
            if let Some(s) = attrs.size {
                let _ = write!(out, " size={}", opt(s.map(|s| pair(s.w, s.h))));
            }
            if let Some(s) = attrs.shape {
                let _ = write!(out, " shape={}", opt(s.map(|s| s.to_string())));
            }
            if let Some(a) = attrs.arrow {
                let _ = write!(out, " arrow={}", opt(a.map(|a| a.to_string())));
            }
            for (k, v) in &attrs.style {
                let _ = write!(out, " style.{k}={}", opt(v.as_deref().map(quote)));
            }
        }
        EditOp::Move { id, to } => {
            let _ = write!(out, "MOVE {id} at={}", pair(to.x, to.y));
        }
        EditOp::Del { id } => {
            let _ = write!(out, "DEL {id}");
        }
    }
}

/// One op per line, attributes in a fixed order
/// (label, at, size, shape, from, to, arrow, style.*).
pub fn serialize_script(script: &EditScript) -> String {
    let mut out = String::new();
    for op in &script.ops {
        serialize_op(op, &mut out);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Application

fn apply_op(elements: &mut Vec<Element>, op: &EditOp) -> Result<(), ApplyError> {
    let find = |elements: &[Element], id: &str| elements.iter().position(|e| e.id == id);
    match op {
        EditOp::Add(e) => {
            if find(elements, &e.id).is_some() {
                return Err(ApplyError::DuplicateId(e.id.clone()));
            }
            elements.push(e.clone());
        }
        EditOp::Set { id, attrs } => {
            let i = find(elements, id).ok_or_else(|| ApplyError::UnknownId(id.clone()))?;
            attrs.apply_to(&mut elements[i]);
        }
        EditOp::Move { id, to } => {
            let i = find(elements, id).ok_or_else(|| ApplyError::UnknownId(id.clone()))?;
            elements[i].at = Some(*to);
        }
        EditOp::Del { id } => {
            let i = find(elements, id).ok_or_else(|| ApplyError::UnknownId(id.clone()))?;
            elements.remove(i);
        }
    }
    Ok(())
}

/// Applies every op in order, all or nothing. The result is validated and
/// carries `scene.version + 1`; on error the input is untouched.
pub fn apply_script(scene: &Scene, script: &EditScript) -> Result<Scene, ApplyError> {
    if script.base_version != scene.version {
        return Err(ApplyError::StaleScript {
            script: script.base_version,
            scene: scene.version,
        });
    }
    let mut elements = scene.elements.clone();
    for op in &script.ops {
        apply_op(&mut elements, op)?;
    }
    let next = Scene {
        version: scene.version + 1,
        elements,
    };
    next.validate().map_err(ApplyError::InvariantBreak)?;
    Ok(next)
}

/// Builds the script that undoes `script` when applied right after it.
pub fn invert_script(script: &EditScript, scene_before: &Scene) -> Result<EditScript, ApplyError> {
    apply_script(scene_before, script)?;
    let mut elements = scene_before.elements.clone();
    let mut inverse = Vec::with_capacity(script.ops.len());
    for op in &script.ops {
        let current = |id: &str| {
            elements
                .iter()
                .find(|e| e.id == id)
                .ok_or_else(|| ApplyError::UnknownId(id.to_owned()))
        };
        let undo = match op {
            EditOp::Add(e) => EditOp::Del { id: e.id.clone() },
            EditOp::Del { id } => EditOp::Add(current(id)?.clone()),
            EditOp::Set { id, attrs } => EditOp::Set {
                id: id.clone(),
                attrs: attrs.inverse_for(current(id)?),
            },
            EditOp::Move { id, .. } => {
                let prior = current(id)?.at.ok_or_else(|| {
                    ApplyError::InvariantBreak(vec![Violation {
                        element_id: id.clone(),
                        rule: crate::scene::Rule::EdgeHasPosition,
                    }])
                })?;
                EditOp::Move {
                    id: id.clone(),
                    to: prior,
                }
            }
        };
        inverse.push(undo);
        apply_op(&mut elements, op)?;
    }
    inverse.reverse();
    Ok(EditScript {
        base_version: scene_before.version + 1,
        ops: inverse,
    })
}
