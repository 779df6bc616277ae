//! Postdominators, first proper postdominators, longest acyclic paths and
//! cycle-inducing nodes.
//!
//! Path-based queries enumerate simple paths and are exponential in the
//! worst case, so they refuse graphs above a node guard.

use std::collections::{BTreeMap, BTreeSet};

use crate::pcfg::{NodeId, NodeLabel, Pcfg, Violation};

pub const DEFAULT_NODE_GUARD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("graph is not well formed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("graph has {nodes} nodes, above the path-enumeration guard of {guard}")]
    TooLarge { nodes: usize, guard: usize },
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("the end node has no proper postdominator")]
    EndHasNoFppd,
    #[error("({0}, {1}) is not a postdominator pair")]
    NotPostdominated(NodeId, NodeId),
    #[error("{1} is not a proper postdominator of {0}")]
    NotProper(NodeId, NodeId),
}

/// `PD(v)` for every node: the nodes on all paths from `v` to End, `v` included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdRelation {
    sets: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl PdRelation {
    pub fn of(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.sets[&v]
    }

    /// `(v, w) ∈ PD`: `w` postdominates `v`.
    pub fn contains(&self, v: NodeId, w: NodeId) -> bool {
        self.sets.get(&v).is_some_and(|s| s.contains(&w))
    }

    pub fn proper(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.sets[&v].iter().copied().filter(move |w| *w != v)
    }

    /// All pairs `(v, w)` with `w ∈ PD(v)`, ordered.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.sets.iter().flat_map(|(v, s)| s.iter().map(move |w| (*v, *w)))
    }
}

/// Iterative intersection from the all-nodes initialization.
pub fn postdominators(g: &Pcfg) -> PdRelation {
    let all: BTreeSet<NodeId> = g.node_ids().collect();
    let mut sets: BTreeMap<NodeId, BTreeSet<NodeId>> = g
        .node_ids()
        .map(|v| (v, if v == g.end() { BTreeSet::from([v]) } else { all.clone() }))
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for v in g.node_ids() {
            if v == g.end() {
                continue;
            }
            let mut next: Option<BTreeSet<NodeId>> = None;
            for w in g.successors(v) {
                let Some(sw) = sets.get(&w) else { continue };
                next = Some(match next {
                    None => sw.clone(),
                    Some(acc) => acc.intersection(sw).copied().collect(),
                });
            }
            let mut next = next.unwrap_or_default();
            next.insert(v);
            if next != sets[&v] {
                sets.insert(v, next);
                changed = true;
            }
        }
    }
    PdRelation { sets }
}

/// The immediate postdominator: the proper postdominator `w` of `v` whose own
/// postdominators are exactly the other proper postdominators of `v`.
pub fn fppd(g: &Pcfg, pd: &PdRelation, v: NodeId) -> Result<NodeId, AnalysisError> {
    if !g.contains(v) {
        return Err(AnalysisError::UnknownNode(v));
    }
    if v == g.end() {
        return Err(AnalysisError::EndHasNoFppd);
    }
    let proper: BTreeSet<NodeId> = pd.proper(v).collect();
    proper
        .iter()
        .copied()
        .find(|w| *pd.of(*w) == proper)
        .ok_or(AnalysisError::NotPostdominated(v, g.end()))
}

fn guard(g: &Pcfg, node_guard: usize) -> Result<(), AnalysisError> {
    if g.len() > node_guard {
        Err(AnalysisError::TooLarge { nodes: g.len(), guard: node_guard })
    } else {
        Ok(())
    }
}

/// Calls `visit` with every simple path from `from` to `to`.
pub fn for_each_simple_path(g: &Pcfg, from: NodeId, to: NodeId, mut visit: impl FnMut(&[NodeId])) {
    fn go(
        g: &Pcfg,
        to: NodeId,
        path: &mut Vec<NodeId>,
        on_path: &mut BTreeSet<NodeId>,
        visit: &mut dyn FnMut(&[NodeId]),
    ) {
        let v = *path.last().expect("non-empty path");
        if v == to {
            visit(path);
            return;
        }
        for w in g.successors(v) {
            if on_path.insert(w) {
                path.push(w);
                go(g, to, path, on_path, visit);
                path.pop();
                on_path.remove(&w);
            }
        }
    }
    if !g.contains(from) {
        return;
    }
    go(g, to, &mut vec![from], &mut BTreeSet::from([from]), &mut visit);
}

/// Length in edges of the longest simple path from `v` to `v2`, where `v2`
/// postdominates `v`.
pub fn lap(g: &Pcfg, pd: &PdRelation, v: NodeId, v2: NodeId, node_guard: usize) -> Result<usize, AnalysisError> {
    guard(g, node_guard)?;
    if !pd.contains(v, v2) {
        return Err(AnalysisError::NotPostdominated(v, v2));
    }
    let mut best = 0;
    for_each_simple_path(g, v, v2, |p| best = best.max(p.len() - 1));
    Ok(best)
}

/// `v1 ≺ v2` relative to `v`: on every simple path from `v` to End, `v1`
/// occurs strictly before `v2`.
pub fn prec(
    g: &Pcfg,
    pd: &PdRelation,
    v: NodeId,
    v1: NodeId,
    v2: NodeId,
    node_guard: usize,
) -> Result<bool, AnalysisError> {
    guard(g, node_guard)?;
    for w in [v1, v2] {
        if w == v || !pd.contains(v, w) {
            return Err(AnalysisError::NotProper(v, w));
        }
    }
    if v1 == v2 {
        return Ok(false);
    }
    let mut all = true;
    for_each_simple_path(g, v, g.end(), |p| {
        let i1 = p.iter().position(|w| *w == v1);
        let i2 = p.iter().position(|w| *w == v2);
        if !matches!((i1, i2), (Some(a), Some(b)) if a < b) {
            all = false;
        }
    });
    Ok(all)
}

/// Every simple cycle once, as a node list starting at its smallest id.
pub fn simple_cycles(g: &Pcfg, node_guard: usize) -> Result<Vec<Vec<NodeId>>, AnalysisError> {
    guard(g, node_guard)?;
    let mut out = Vec::new();
    for s in g.node_ids() {
        fn go(
            g: &Pcfg,
            s: NodeId,
            path: &mut Vec<NodeId>,
            on_path: &mut BTreeSet<NodeId>,
            out: &mut Vec<Vec<NodeId>>,
        ) {
            let v = *path.last().expect("non-empty path");
            for w in g.successors(v) {
                if w == s {
                    out.push(path.clone());
                } else if w > s && on_path.insert(w) {
                    path.push(w);
                    go(g, s, path, on_path, out);
                    path.pop();
                    on_path.remove(&w);
                }
            }
        }
        go(g, s, &mut vec![s], &mut BTreeSet::from([s]), &mut out);
    }
    Ok(out)
}

/// Precomputed analyses of a well-formed graph.
#[derive(Clone, Debug)]
pub struct Analysis {
    pd: PdRelation,
    fppd: BTreeMap<NodeId, NodeId>,
    /// For each branch node, whether each successor (true, false) has a
    /// strictly smaller LAP to the fppd than the node itself.
    descends: BTreeMap<NodeId, [bool; 2]>,
    node_guard: usize,
}

impl Analysis {
    pub fn new(g: &Pcfg) -> Result<Self, AnalysisError> {
        Analysis::with_guard(g, DEFAULT_NODE_GUARD)
    }

    pub fn with_guard(g: &Pcfg, node_guard: usize) -> Result<Self, AnalysisError> {
        let violations = g.validate();
        if !violations.is_empty() {
            return Err(AnalysisError::Invalid(violations));
        }
        guard(g, node_guard)?;
        let pd = postdominators(g);
        let mut fppds = BTreeMap::new();
        for v in g.node_ids().filter(|v| *v != g.end()) {
            fppds.insert(v, fppd(g, &pd, v)?);
        }
        let mut descends = BTreeMap::new();
        for v in g.node_ids() {
            if let NodeLabel::Branch(_) = g.label(v) {
                let target = fppds[&v];
                let own = lap(g, &pd, v, target, node_guard)?;
                let succ = g.successors(v);
                let mut flags = [false; 2];
                for (i, w) in succ.iter().enumerate() {
                    flags[i] = lap(g, &pd, *w, target, node_guard)? < own;
                }
                descends.insert(v, flags);
            }
        }
        Ok(Analysis { pd, fppd: fppds, descends, node_guard })
    }

    pub fn pd(&self) -> &PdRelation {
        &self.pd
    }

    /// `None` for End.
    pub fn fppd(&self, v: NodeId) -> Option<NodeId> {
        self.fppd.get(&v).copied()
    }

    pub fn node_guard(&self) -> usize {
        self.node_guard
    }

    /// For a branch node: `[true-successor descends, false-successor descends]`.
    pub fn descends(&self, v: NodeId) -> Option<[bool; 2]> {
        self.descends.get(&v).copied()
    }

    pub fn is_cycle_inducing(&self, v: NodeId) -> bool {
        self.descends.get(&v).is_some_and(|d| !d[0] || !d[1])
    }

    pub fn cycle_inducing(&self) -> BTreeSet<NodeId> {
        self.descends.keys().copied().filter(|v| self.is_cycle_inducing(*v)).collect()
    }

    pub fn lap(&self, g: &Pcfg, v: NodeId, v2: NodeId) -> Result<usize, AnalysisError> {
        lap(g, &self.pd, v, v2, self.node_guard)
    }

    /// LAP for every postdominator pair.
    pub fn lap_table(&self, g: &Pcfg) -> Result<BTreeMap<(NodeId, NodeId), usize>, AnalysisError> {
        self.pd.pairs().map(|(v, w)| Ok(((v, w), self.lap(g, v, w)?))).collect()
    }
}

/// Standalone form of the cycle-inducing test.
pub fn cycle_inducing(g: &Pcfg, pd: &PdRelation, v: NodeId, node_guard: usize) -> Result<bool, AnalysisError> {
    let target = fppd(g, pd, v)?;
    let own = lap(g, pd, v, target, node_guard)?;
    for w in g.successors(v) {
        if lap(g, pd, w, target, node_guard)? >= own {
            return Ok(true);
        }
    }
    Ok(false)
}
