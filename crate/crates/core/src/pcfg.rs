//! Probabilistic control-flow graphs.
//!
//! Node ids are arbitrary integers; the graph stores them in a `BTreeMap` so
//! every traversal, DOT rendering and JSON dump is ordered by id.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde_json::{json, Value};

use crate::syntax::{self, BoolExpr, DistSpec, Expr, Stmt, Universe, VarId};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Skip,
    Assign(VarId, Expr),
    RAssign(VarId, DistSpec),
    Observe(BoolExpr),
    Branch(BoolExpr),
    Return(Expr),
    Unlabeled,
}

impl NodeLabel {
    pub fn kind(&self) -> &'static str {
        match self {
            NodeLabel::Skip => "skip",
            NodeLabel::Assign(..) => "assign",
            NodeLabel::RAssign(..) => "rassign",
            NodeLabel::Observe(_) => "observe",
            NodeLabel::Branch(_) => "branch",
            NodeLabel::Return(_) => "return",
            NodeLabel::Unlabeled => "unlabeled",
        }
    }

    /// Source text of the label, without the kind prefix for conditions.
    pub fn text(&self, u: &Universe) -> String {
        match self {
            NodeLabel::Skip => "skip".into(),
            NodeLabel::Assign(x, e) => format!("{} := {}", u.name(*x), e.display(u)),
            NodeLabel::RAssign(x, psi) => format!("{} ~ {psi}", u.name(*x)),
            NodeLabel::Observe(b) | NodeLabel::Branch(b) => b.display(u).to_string(),
            NodeLabel::Return(e) => e.display(u).to_string(),
            NodeLabel::Unlabeled => String::new(),
        }
    }

    fn describe(&self, u: &Universe) -> String {
        match self {
            NodeLabel::Observe(b) => format!("observe({})", b.display(u)),
            NodeLabel::Return(e) => format!("return {}", e.display(u)),
            other => other.text(u),
        }
    }

    /// The label of an atomic statement, or `None` for compound statements.
    pub fn of_atomic(stmt: &Stmt) -> Option<NodeLabel> {
        match stmt {
            Stmt::Skip => Some(NodeLabel::Skip),
            Stmt::Assign(x, e) => Some(NodeLabel::Assign(*x, e.clone())),
            Stmt::RAssign(x, psi) => Some(NodeLabel::RAssign(*x, psi.clone())),
            Stmt::Observe(b) => Some(NodeLabel::Observe(b.clone())),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Successors {
    None,
    One(NodeId),
    Branch { on_true: NodeId, on_false: NodeId },
}

impl Successors {
    pub fn to_vec(self) -> Vec<NodeId> {
        match self {
            Successors::None => vec![],
            Successors::One(w) => vec![w],
            Successors::Branch { on_true, on_false } => vec![on_true, on_false],
        }
    }

    fn map(self, f: impl Fn(NodeId) -> NodeId) -> Successors {
        match self {
            Successors::None => Successors::None,
            Successors::One(w) => Successors::One(f(w)),
            Successors::Branch { on_true, on_false } => Successors::Branch {
                on_true: f(on_true),
                on_false: f(on_false),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: NodeLabel,
    pub succ: Successors,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pcfg {
    universe: Universe,
    nodes: BTreeMap<NodeId, Node>,
    start: NodeId,
    end: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    MissingStart(NodeId),
    MissingEnd(NodeId),
    EndHasSuccessor(NodeId),
    DanglingEdge { from: NodeId, to: NodeId },
    Unreachable(NodeId),
    CannotReachEnd(NodeId),
    /// Branch labels need two successors, the other non-End labels one.
    SuccessorMismatch(NodeId),
    /// `return` or unlabeled anywhere but End.
    EndOnlyLabel(NodeId),
    /// End carries a label other than `return`/unlabeled/skip.
    BadEndLabel(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingStart(v) => write!(f, "start node {v} does not exist"),
            Violation::MissingEnd(v) => write!(f, "end node {v} does not exist"),
            Violation::EndHasSuccessor(v) => write!(f, "end node {v} has an outgoing edge"),
            Violation::DanglingEdge { from, to } => {
                write!(f, "edge {from} -> {to} points to a missing node")
            }
            Violation::Unreachable(v) => write!(f, "node {v} is unreachable from start"),
            Violation::CannotReachEnd(v) => write!(f, "end is unreachable from node {v}"),
            Violation::SuccessorMismatch(v) => {
                write!(f, "node {v} has the wrong number of successors for its label")
            }
            Violation::EndOnlyLabel(v) => {
                write!(f, "node {v} is not end but is unlabeled or labeled return")
            }
            Violation::BadEndLabel(v) => write!(f, "end node {v} carries a statement label"),
        }
    }
}

impl Pcfg {
    pub fn new(universe: Universe, start: NodeId, end: NodeId) -> Self {
        Pcfg { universe, nodes: BTreeMap::new(), start, end }
    }

    /// Inserts or replaces a node.
    pub fn insert(&mut self, id: NodeId, label: NodeLabel, succ: Successors) {
        self.nodes.insert(id, Node { label, succ });
    }

    pub fn set_label(&mut self, id: NodeId, label: NodeLabel) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.label = label;
        }
    }

    pub fn set_successors(&mut self, id: NodeId, succ: Successors) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.succ = succ;
        }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn end(&self) -> NodeId {
        self.end
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains_key(&v)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }

    pub fn node(&self, v: NodeId) -> Option<&Node> {
        self.nodes.get(&v)
    }

    /// # Panics
    /// If `v` is not a node.
    pub fn label(&self, v: NodeId) -> &NodeLabel {
        &self.nodes[&v].label
    }

    /// Successors of `v`, true-successor first; empty for unknown ids.
    pub fn successors(&self, v: NodeId) -> Vec<NodeId> {
        self.nodes.get(&v).map(|n| n.succ.to_vec()).unwrap_or_default()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.values().map(|n| n.succ.to_vec().len()).sum()
    }

    pub fn predecessors(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut preds: BTreeMap<NodeId, Vec<NodeId>> =
            self.nodes.keys().map(|v| (*v, Vec::new())).collect();
        for (v, n) in &self.nodes {
            for w in n.succ.to_vec() {
                if let Some(p) = preds.get_mut(&w) {
                    p.push(*v);
                }
            }
        }
        preds
    }

    fn reach(&self, from: NodeId, step: impl Fn(NodeId) -> Vec<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if self.contains(v) && seen.insert(v) {
                stack.extend(step(v));
            }
        }
        seen
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.contains(self.start) {
            out.push(Violation::MissingStart(self.start));
        }
        if !self.contains(self.end) {
            out.push(Violation::MissingEnd(self.end));
        }
        for (v, n) in &self.nodes {
            for w in n.succ.to_vec() {
                if !self.contains(w) {
                    out.push(Violation::DanglingEdge { from: *v, to: w });
                }
            }
            if *v == self.end {
                if n.succ != Successors::None {
                    out.push(Violation::EndHasSuccessor(*v));
                }
                if !matches!(n.label, NodeLabel::Return(_) | NodeLabel::Unlabeled | NodeLabel::Skip)
                {
                    out.push(Violation::BadEndLabel(*v));
                }
                continue;
            }
            let ok = match (&n.label, n.succ) {
                (NodeLabel::Return(_) | NodeLabel::Unlabeled, _) => {
                    out.push(Violation::EndOnlyLabel(*v));
                    true
                }
                (NodeLabel::Branch(_), Successors::Branch { .. }) => true,
                (NodeLabel::Branch(_), _) => false,
                (_, Successors::One(_)) => true,
                _ => false,
            };
            if !ok {
                out.push(Violation::SuccessorMismatch(*v));
            }
        }
        if self.contains(self.start) {
            let fwd = self.reach(self.start, |v| self.successors(v));
            out.extend(self.node_ids().filter(|v| !fwd.contains(v)).map(Violation::Unreachable));
        }
        if self.contains(self.end) {
            let preds = self.predecessors();
            let back = self.reach(self.end, |v| preds[&v].clone());
            out.extend(self.node_ids().filter(|v| !back.contains(v)).map(Violation::CannotReachEnd));
        }
        out
    }

    /// No observe and no random assignment.
    pub fn is_deterministic(&self) -> bool {
        self.nodes
            .values()
            .all(|n| !matches!(n.label, NodeLabel::Observe(_) | NodeLabel::RAssign(..)))
    }

    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm
        let mut indeg: BTreeMap<NodeId, usize> = self.nodes.keys().map(|v| (*v, 0)).collect();
        for n in self.nodes.values() {
            for w in n.succ.to_vec() {
                if let Some(d) = indeg.get_mut(&w) {
                    *d += 1;
                }
            }
        }
        let mut queue: Vec<NodeId> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        let mut removed = 0;
        while let Some(v) = queue.pop() {
            removed += 1;
            for w in self.successors(v) {
                if let Some(d) = indeg.get_mut(&w) {
                    *d -= 1;
                    if *d == 0 {
                        queue.push(w);
                    }
                }
            }
        }
        removed == self.nodes.len()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph pcfg {\n    node [shape=box];\n");
        for (v, n) in &self.nodes {
            let mut text = format!("{v}: {}", n.label.describe(&self.universe));
            if *v == self.start {
                text.push_str(" (Start)");
            }
            if *v == self.end {
                text.push_str(" (End)");
            }
            out.push_str(&format!("    {v} [label={}];\n", dot_quote(text.trim())));
        }
        for (v, n) in &self.nodes {
            match n.succ {
                Successors::None => {}
                Successors::One(w) => out.push_str(&format!("    {v} -> {w};\n")),
                Successors::Branch { on_true, on_false } => {
                    out.push_str(&format!("    {v} -> {on_true} [label=\"T\"];\n"));
                    out.push_str(&format!("    {v} -> {on_false} [label=\"F\"];\n"));
                }
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|(v, n)| json!({"id": v, "kind": n.label.kind(), "text": n.label.text(&self.universe)}))
            .collect();
        let mut edges = Vec::new();
        for (v, n) in &self.nodes {
            match n.succ {
                Successors::None => {}
                Successors::One(w) => edges.push(json!({"from": v, "to": w})),
                Successors::Branch { on_true, on_false } => {
                    edges.push(json!({"from": v, "to": on_true, "tag": "T"}));
                    edges.push(json!({"from": v, "to": on_false, "tag": "F"}));
                }
            }
        }
        json!({
            "universe": self.universe.names(),
            "start": self.start,
            "end": self.end,
            "nodes": nodes,
            "edges": edges,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json serialization") + "\n"
    }

    /// Parses the layout written by [`Pcfg::to_json`]. The result is not validated.
    pub fn from_json(text: &str) -> Result<Pcfg, PcfgJsonError> {
        let value: Value = serde_json::from_str(text).map_err(|e| PcfgJsonError::Json(e.to_string()))?;
        let shape = PcfgJsonError::Shape;
        let names = value["universe"]
            .as_array()
            .ok_or(shape("missing \"universe\" array"))?
            .iter()
            .map(|n| n.as_str().map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .ok_or(shape("universe entries must be strings"))?;
        let universe = Universe::new(names).map_err(PcfgJsonError::Universe)?;
        let id = |v: &Value| v.as_u64().map(|n| n as NodeId);
        let start = id(&value["start"]).ok_or(shape("missing integer \"start\""))?;
        let end = id(&value["end"]).ok_or(shape("missing integer \"end\""))?;
        let mut g = Pcfg::new(universe, start, end);
        for node in value["nodes"].as_array().ok_or(shape("missing \"nodes\" array"))? {
            let v = id(&node["id"]).ok_or(shape("node without integer \"id\""))?;
            let kind = node["kind"].as_str().ok_or(shape("node without \"kind\""))?;
            let text = node["text"].as_str().unwrap_or("");
            let label = parse_label(kind, text, &g.universe)
                .map_err(|message| PcfgJsonError::Label { node: v, message })?;
            if g.contains(v) {
                return Err(PcfgJsonError::DuplicateNode(v));
            }
            g.insert(v, label, Successors::None);
        }
        // untagged, "T" and "F" targets
        type Slots = (Option<NodeId>, Option<NodeId>, Option<NodeId>);
        let mut out_edges: BTreeMap<NodeId, Slots> = BTreeMap::new();
        for edge in value["edges"].as_array().ok_or(shape("missing \"edges\" array"))? {
            let from = id(&edge["from"]).ok_or(shape("edge without integer \"from\""))?;
            let to = id(&edge["to"]).ok_or(shape("edge without integer \"to\""))?;
            let slot = out_edges.entry(from).or_default();
            let target = match edge["tag"].as_str() {
                None => &mut slot.0,
                Some("T") => &mut slot.1,
                Some("F") => &mut slot.2,
                Some(_) => return Err(shape("edge tag must be \"T\" or \"F\"")),
            };
            if target.replace(to).is_some() {
                return Err(PcfgJsonError::ExtraEdge(from));
            }
        }
        for (from, slots) in out_edges {
            let succ = match slots {
                (Some(w), None, None) => Successors::One(w),
                (None, Some(t), Some(f)) => Successors::Branch { on_true: t, on_false: f },
                _ => return Err(PcfgJsonError::ExtraEdge(from)),
            };
            if !g.contains(from) {
                return Err(PcfgJsonError::UnknownNode(from));
            }
            g.set_successors(from, succ);
        }
        Ok(g)
    }

    /// Removes every non-Start Skip node with a single successor other than
    /// itself, redirecting its in-edges, until none is left.
    pub fn compress_skips(&self) -> Pcfg {
        let mut g = self.clone();
        loop {
            let victim = g.nodes.iter().find_map(|(v, n)| match (&n.label, n.succ) {
                (NodeLabel::Skip, Successors::One(w)) if *v != g.start && w != *v => Some((*v, w)),
                _ => None,
            });
            let Some((v, w)) = victim else {
                return g;
            };
            g.nodes.remove(&v);
            for n in g.nodes.values_mut() {
                n.succ = n.succ.map(|x| if x == v { w } else { x });
            }
        }
    }

    /// Renumbers nodes 1.. in breadth-first order from Start, true-successor
    /// before false-successor. Isomorphic graphs built by translation have
    /// equal canonical forms. Unreachable nodes are dropped.
    pub fn canonical_form(&self) -> Pcfg {
        let mut order: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut queue = VecDeque::from([self.start]);
        while let Some(v) = queue.pop_front() {
            if !self.contains(v) || order.contains_key(&v) {
                continue;
            }
            order.insert(v, order.len() + 1);
            queue.extend(self.successors(v));
        }
        let rename = |v: NodeId| order.get(&v).copied().unwrap_or(0);
        let mut g = Pcfg::new(self.universe.clone(), rename(self.start), rename(self.end));
        for (v, n) in &self.nodes {
            if order.contains_key(v) {
                g.insert(rename(*v), n.label.clone(), n.succ.map(rename));
            }
        }
        g
    }

    pub fn is_isomorphic_by_canonical_form(&self, other: &Pcfg) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn parse_label(kind: &str, text: &str, u: &Universe) -> Result<NodeLabel, String> {
    let err = |e: syntax::ParseError| e.to_string();
    Ok(match kind {
        "skip" => NodeLabel::Skip,
        "unlabeled" => NodeLabel::Unlabeled,
        "assign" | "rassign" => match syntax::parse_stmt(text, u).map_err(err)? {
            Stmt::Assign(x, e) if kind == "assign" => NodeLabel::Assign(x, e),
            Stmt::RAssign(x, psi) if kind == "rassign" => NodeLabel::RAssign(x, psi),
            _ => return Err(format!("`{text}` is not a {kind} statement")),
        },
        "observe" => NodeLabel::Observe(syntax::parse_bool_expr(text, u).map_err(err)?),
        "branch" => NodeLabel::Branch(syntax::parse_bool_expr(text, u).map_err(err)?),
        "return" => NodeLabel::Return(syntax::parse_expr(text, u).map_err(err)?),
        other => return Err(format!("unknown node kind `{other}`")),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PcfgJsonError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("malformed graph: {0}")]
    Shape(&'static str),
    #[error("invalid universe: {0}")]
    Universe(String),
    #[error("node {node}: {message}")]
    Label { node: NodeId, message: String },
    #[error("node {0} listed twice")]
    DuplicateNode(NodeId),
    #[error("edge from unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} has an inconsistent set of outgoing edges")]
    ExtraEdge(NodeId),
}
