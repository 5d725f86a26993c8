//! Finite behavior prefixes.
//!
//! A [`StreamPrefix`] is a truncation `c0 -a0-> c1 -a1-> … -a(n-1)-> cn` of an
//! infinite stream of labeled transitions between colored nodes; a
//! [`TreePrefix`] is a depth-bounded, finitely branching tree with labeled
//! edges and colored nodes. Both carry the structure maps the extension
//! checker needs: head/step/tail and decoration for streams, children and
//! decoration for trees, plus bounded-bisimilarity canonicalization for
//! trees. Everything here is an explicit truncation; queries that would look
//! past the recorded material report an error instead of guessing.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::Term;

/// A transition label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub String);

impl Letter {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Letter {
    fn from(s: &str) -> Self {
        Letter(s.to_string())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("prefix has no recorded step")]
    EmptyPrefix,
    #[error("tail index {k} exceeds prefix length {len}")]
    TailOutOfRange { k: usize, len: usize },
    #[error("tree depth budget exhausted; children unknown at this node")]
    BudgetExhausted,
}

/// A finite stream prefix with nodes of color `C`.
///
/// `steps[i]` holds the i-th node together with the label of the transition
/// leaving it; `tail` is the final node after all recorded steps.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamPrefix<C = Term> {
    pub steps: Vec<(C, Letter)>,
    pub tail: C,
}

impl<C: Clone + Eq> StreamPrefix<C> {
    pub fn single(node: C) -> Self {
        StreamPrefix { steps: Vec::new(), tail: node }
    }

    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Node at position `i`, for `0 <= i <= len`.
    pub fn node(&self, i: usize) -> Option<&C> {
        if i < self.steps.len() {
            Some(&self.steps[i].0)
        } else if i == self.steps.len() {
            Some(&self.tail)
        } else {
            None
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = &Letter> {
        self.steps.iter().map(|(_, l)| l)
    }

    /// The counit: color of the first node.
    pub fn head(&self) -> &C {
        self.node(0).expect("prefix always has a first node")
    }

    /// First label and second node, when at least one step is recorded.
    pub fn step(&self) -> Result<(&Letter, &C), BehaviorError> {
        if self.steps.is_empty() {
            return Err(BehaviorError::EmptyPrefix);
        }
        Ok((&self.steps[0].1, self.node(1).expect("step implies node 1")))
    }

    /// Drops the first `k` steps.
    pub fn tail_at(&self, k: usize) -> Result<StreamPrefix<C>, BehaviorError> {
        if k > self.steps.len() {
            return Err(BehaviorError::TailOutOfRange { k, len: self.steps.len() });
        }
        Ok(StreamPrefix {
            steps: self.steps[k..].to_vec(),
            tail: self.tail.clone(),
        })
    }

    /// Comultiplication on prefixes: recolors node `i` with the suffix that
    /// starts at it. Labels are unchanged and the output has the same length.
    pub fn decorate(&self) -> StreamPrefix<StreamPrefix<C>> {
        let steps = (0..self.steps.len())
            .map(|i| {
                (
                    self.tail_at(i).expect("index within length"),
                    self.steps[i].1.clone(),
                )
            })
            .collect();
        StreamPrefix {
            steps,
            tail: self.tail_at(self.steps.len()).expect("full tail"),
        }
    }

    pub fn map<D, F: FnMut(&C) -> D>(&self, mut f: F) -> StreamPrefix<D> {
        StreamPrefix {
            steps: self.steps.iter().map(|(c, l)| (f(c), l.clone())).collect(),
            tail: f(&self.tail),
        }
    }
}

impl<C: fmt::Display> fmt::Display for StreamPrefix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (node, label) in &self.steps {
            write!(f, "{node} -{label}-> ")?;
        }
        write!(f, "{}", self.tail)
    }
}

impl<C: fmt::Display> fmt::Debug for StreamPrefix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A depth-bounded tree prefix with nodes of color `C`.
///
/// `budget` records to which depth the children of this node are meaningful:
/// with budget 0 the children were cut off by truncation and must not be
/// consulted; with budget >= 1 the recorded children are exactly the
/// successors. Children of a node carry budget one less than their parent.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreePrefix<C = Term> {
    pub node: C,
    pub children: Vec<(Letter, TreePrefix<C>)>,
    pub budget: usize,
}

impl<C: Clone> TreePrefix<C> {
    /// A truncation point: a node whose successors are unknown.
    pub fn cut(node: C) -> Self {
        TreePrefix { node, children: Vec::new(), budget: 0 }
    }

    /// A node with known successor list.
    pub fn known(node: C, children: Vec<(Letter, TreePrefix<C>)>, budget: usize) -> Self {
        TreePrefix { node, children, budget }
    }

    /// Immediate subtrees with their edge labels. Requires budget >= 1.
    pub fn children(&self) -> Result<&[(Letter, TreePrefix<C>)], BehaviorError> {
        if self.budget == 0 {
            return Err(BehaviorError::BudgetExhausted);
        }
        Ok(&self.children)
    }

    /// Recolors every node with the subtree rooted in it.
    pub fn decorate(&self) -> TreePrefix<TreePrefix<C>> {
        TreePrefix {
            node: self.clone(),
            children: self
                .children
                .iter()
                .map(|(l, t)| (l.clone(), t.decorate()))
                .collect(),
            budget: self.budget,
        }
    }

    pub fn map<D, F: FnMut(&C) -> D>(&self, f: &mut F) -> TreePrefix<D> {
        TreePrefix {
            node: f(&self.node),
            children: self
                .children
                .iter()
                .map(|(l, t)| (l.clone(), t.map(f)))
                .collect(),
            budget: self.budget,
        }
    }

    /// Maximal branching factor anywhere in the recorded tree.
    pub fn max_branching(&self) -> usize {
        let mine = self.children.len();
        self.children
            .iter()
            .map(|(_, t)| t.max_branching())
            .max()
            .unwrap_or(0)
            .max(mine)
    }
}

impl<C: Clone + Ord> TreePrefix<C> {
    /// Canonical representative of the depth-`d` bisimilarity class: children
    /// are recursively canonicalized, sorted, and deduplicated, and material
    /// beyond depth `d` is discarded. Idempotent for fixed `d`.
    pub fn canon(&self, d: usize) -> TreePrefix<C> {
        if d == 0 {
            return TreePrefix::cut(self.node.clone());
        }
        if self.budget == 0 {
            return TreePrefix::cut(self.node.clone());
        }
        let mut children: Vec<(Letter, TreePrefix<C>)> = self
            .children
            .iter()
            .map(|(l, t)| (l.clone(), t.canon(d - 1)))
            .collect();
        children.sort_by(|a, b| cmp_child(a, b));
        children.dedup();
        TreePrefix {
            node: self.node.clone(),
            children,
            budget: self.budget.min(d),
        }
    }
}

fn cmp_child<C: Ord>(
    a: &(Letter, TreePrefix<C>),
    b: &(Letter, TreePrefix<C>),
) -> std::cmp::Ordering {
    a.0.cmp(&b.0).then_with(|| cmp_tree(&a.1, &b.1))
}

fn cmp_tree<C: Ord>(a: &TreePrefix<C>, b: &TreePrefix<C>) -> std::cmp::Ordering {
    a.node
        .cmp(&b.node)
        .then_with(|| a.budget.cmp(&b.budget))
        .then_with(|| a.children.len().cmp(&b.children.len()))
        .then_with(|| {
            for (x, y) in a.children.iter().zip(b.children.iter()) {
                let c = cmp_child(x, y);
                if c != std::cmp::Ordering::Equal {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        })
}

impl<C: fmt::Display> TreePrefix<C> {
    /// Renders the tree as a DOT digraph; node labels are the rendered
    /// colors, edge labels the letters.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph behavior {\n  node [shape=box];\n");
        let mut counter = 0usize;
        self.dot_node(&mut out, &mut counter);
        out.push_str("}\n");
        out
    }

    fn dot_node(&self, out: &mut String, counter: &mut usize) -> usize {
        let id = *counter;
        *counter += 1;
        let label = self.node.to_string().replace('"', "\\\"");
        out.push_str(&format!("  n{id} [label=\"{label}\"];\n"));
        for (letter, child) in &self.children {
            let cid = child.dot_node(out, counter);
            let el = letter.to_string().replace('"', "\\\"");
            out.push_str(&format!("  n{id} -> n{cid} [label=\"{el}\"];\n"));
        }
        id
    }
}

impl<C: fmt::Display> fmt::Debug for TreePrefix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node)?;
        if !self.children.is_empty() {
            write!(f, "{{")?;
            for (i, (l, t)) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "-{l}-> {t:?}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}
