//! Structural translation of statements and programs to graphs.
//!
//! Every sub-translation draws fresh ids from one counter, so the node sets of
//! sibling sub-graphs are disjoint by construction. Ids start at 1 and follow
//! construction order: for `if` and `while` the branch node is allocated
//! before the sub-statements and the join node after them.

use crate::pcfg::{NodeId, NodeLabel, Pcfg, Successors};
use crate::syntax::{Program, Stmt, Universe};

struct Builder {
    next: NodeId,
    nodes: Vec<(NodeId, NodeLabel, Successors)>,
}

impl Builder {
    fn fresh(&mut self) -> NodeId {
        self.next += 1;
        self.nodes.push((self.next, NodeLabel::Unlabeled, Successors::None));
        self.next
    }

    fn set(&mut self, id: NodeId, label: NodeLabel, succ: Successors) {
        let slot = &mut self.nodes[id - 1];
        slot.1 = label;
        slot.2 = succ;
    }

    /// Returns the (Start, End) pair of the sub-graph for `stmt`.
    fn stmt(&mut self, stmt: &Stmt) -> (NodeId, NodeId) {
        if let Some(label) = NodeLabel::of_atomic(stmt) {
            let start = self.fresh();
            let end = self.fresh();
            self.set(start, label, Successors::One(end));
            return (start, end);
        }
        match stmt {
            Stmt::Seq(a, b) => {
                let (s1, e1) = self.stmt(a);
                let (s2, e2) = self.stmt(b);
                self.set(e1, NodeLabel::Skip, Successors::One(s2));
                (s1, e2)
            }
            Stmt::If(c, a, b) => {
                let branch = self.fresh();
                let (s1, e1) = self.stmt(a);
                let (s2, e2) = self.stmt(b);
                let end = self.fresh();
                self.set(
                    branch,
                    NodeLabel::Branch(c.clone()),
                    Successors::Branch { on_true: s1, on_false: s2 },
                );
                self.set(e1, NodeLabel::Skip, Successors::One(end));
                self.set(e2, NodeLabel::Skip, Successors::One(end));
                (branch, end)
            }
            Stmt::While(c, body) => {
                let branch = self.fresh();
                let (s1, e1) = self.stmt(body);
                let end = self.fresh();
                self.set(
                    branch,
                    NodeLabel::Branch(c.clone()),
                    Successors::Branch { on_true: s1, on_false: end },
                );
                self.set(e1, NodeLabel::Skip, Successors::One(branch));
                (branch, end)
            }
            _ => unreachable!("atomic statements handled above"),
        }
    }
}

/// The raw translation; its End is unlabeled.
pub fn translate_stmt(stmt: &Stmt, universe: &Universe) -> Pcfg {
    let mut b = Builder { next: 0, nodes: Vec::new() };
    let (start, end) = b.stmt(stmt);
    let mut g = Pcfg::new(universe.clone(), start, end);
    for (id, label, succ) in b.nodes {
        g.insert(id, label, succ);
    }
    g
}

/// The raw translation of the body with End labeled by the return expression.
pub fn translate_program(p: &Program) -> Pcfg {
    let mut g = translate_stmt(&p.body, &p.universe);
    g.set_label(g.end(), NodeLabel::Return(p.ret.clone()));
    g
}
