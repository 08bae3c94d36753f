//! Finite materialised trees, derived trees and specialization maps.
//!
//! Given a strictly increasing `f` into ℚ_κ whose values at club levels
//! stay below the level, [`build_special_map`] produces the regressive map
//! `g` of the specialization argument together with a certificate that
//! every fiber is covered by finitely many antichains.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{is_below_eq, LimitStructure, NodeRef, QCmp, QKappaSeq, TreeError};
use crate::ordinals::{godel_encode, is_pairing_closed, Ordinal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("malformed tree: {0}")]
    BadTree(String),
    #[error("f is not strictly increasing at nodes {0} < {1}")]
    NotIncreasing(usize, usize),
    #[error("f({node}) is not a sequence below its level {level}")]
    NotBelow { node: usize, level: Ordinal },
    #[error("level {0} is not materialized")]
    LevelMissing(Ordinal),
    #[error("tuple is not injective or not level-constant")]
    BadTuple,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Read access to a tree order.
pub trait TreeView {
    type N: Clone + Eq;
    fn level(&self, n: &Self::N) -> Ordinal;
    fn below_eq(&self, a: &Self::N, b: &Self::N) -> Result<bool, SpecialError>;

    fn comparable(&self, a: &Self::N, b: &Self::N) -> Result<bool, SpecialError> {
        Ok(self.below_eq(a, b)? || self.below_eq(b, a)?)
    }
}

/// Tree-order view on [`NodeRef`]s through a limit structure.
pub struct NodeView<'a>(pub &'a dyn LimitStructure);

impl TreeView for NodeView<'_> {
    type N = NodeRef;

    fn level(&self, n: &NodeRef) -> Ordinal {
        n.level().clone()
    }

    fn below_eq(&self, a: &NodeRef, b: &NodeRef) -> Result<bool, SpecialError> {
        Ok(is_below_eq(self.0, a, b)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtNode {
    pub level: Ordinal,
    /// The predecessor at the previous materialized level.
    pub below: Option<usize>,
}

/// A finite tree whose materialized levels are all full: every node sits
/// directly above a node of the previous materialized level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteTree {
    pub nodes: Vec<FtNode>,
}

impl FiniteTree {
    pub fn levels(&self) -> Vec<Ordinal> {
        let set: BTreeSet<Ordinal> = self.nodes.iter().map(|n| n.level.clone()).collect();
        set.into_iter().collect()
    }

    pub fn validate(&self) -> Result<(), SpecialError> {
        let levels = self.levels();
        if self.nodes.is_empty() || levels[0] != Ordinal::zero() {
            return Err(SpecialError::BadTree("the lowest level must be 0".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let pos = levels.binary_search(&n.level).expect("level is listed");
            match (pos, n.below) {
                (0, None) => {}
                (0, Some(_)) => return Err(SpecialError::BadTree(format!("node {i} at level 0 has a predecessor"))),
                (_, None) => return Err(SpecialError::BadTree(format!("node {i} lacks a predecessor"))),
                (p, Some(b)) => {
                    let ok = self.nodes.get(b).map(|m| m.level == levels[p - 1]).unwrap_or(false);
                    if !ok {
                        return Err(SpecialError::BadTree(format!(
                            "node {i} does not sit on the previous level"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Height: one more than the top materialized level.
    pub fn height(&self) -> Ordinal {
        self.levels().last().map(Ordinal::succ).unwrap_or_default()
    }

    pub fn is_minimal(&self, x: usize) -> bool {
        self.nodes[x].below.is_none()
    }

    /// The ancestor of `x` at `level`, if that level is materialized.
    pub fn restrict(&self, x: usize, level: &Ordinal) -> Option<usize> {
        let mut cur = x;
        loop {
            let l = &self.nodes[cur].level;
            if l == level {
                return Some(cur);
            }
            if l < level {
                return None;
            }
            cur = self.nodes[cur].below?;
        }
    }

    pub fn strictly_below(&self, a: usize, b: usize) -> bool {
        a != b && self.restrict(b, &self.nodes[a].level) == Some(a)
    }

    pub fn at_level(&self, level: &Ordinal) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].level == *level).collect()
    }
}

impl TreeView for FiniteTree {
    type N = usize;

    fn level(&self, n: &usize) -> Ordinal {
        self.nodes[*n].level.clone()
    }

    fn below_eq(&self, a: &usize, b: &usize) -> Result<bool, SpecialError> {
        if *a >= self.nodes.len() || *b >= self.nodes.len() {
            return Err(SpecialError::BadTree("node index out of range".into()));
        }
        Ok(a == b || self.strictly_below(*a, *b))
    }
}

fn check_tuple<V: TreeView>(view: &V, t: &[V::N]) -> Result<bool, SpecialError> {
    let Some(first) = t.first() else { return Ok(false) };
    let lvl = view.level(first);
    for (i, a) in t.iter().enumerate() {
        if view.level(a) != lvl || t[..i].contains(a) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Members of the derived tree `T(w_0,…,w_{n-1})` among `candidates`:
/// injective level-constant tuples whose entries are comparable with the
/// matching `w_i`.
pub fn derived_tree_members<V: TreeView>(
    view: &V,
    w: &[V::N],
    candidates: &[Vec<V::N>],
) -> Result<Vec<Vec<V::N>>, SpecialError> {
    if !check_tuple(view, w)? {
        return Err(SpecialError::BadTuple);
    }
    let mut out = Vec::new();
    for c in candidates {
        if c.len() != w.len() || !check_tuple(view, c)? {
            continue;
        }
        let mut ok = true;
        for (x, wi) in c.iter().zip(w) {
            if !view.comparable(x, wi)? {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(c.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKind {
    /// Nodes of one level sharing the value `f_value`.
    Antichain { f_value: QKappaSeq },
    /// Nodes spread over finitely many levels below `bound`, one antichain
    /// per level.
    LevelSpan { levels: Vec<Ordinal>, bound: Ordinal },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    pub y: usize,
    pub members: Vec<usize>,
    pub kind: FiberKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialMapCertificate {
    pub d_levels: Vec<Ordinal>,
    pub height: Ordinal,
    pub g: Vec<usize>,
    pub fibers: Vec<Fiber>,
}

/// Checks that every node at level `alpha` has `f`-value in `^{<ω}alpha`.
pub fn check_f_below(tree: &FiniteTree, f: &[QKappaSeq], alpha: &Ordinal) -> Result<(), SpecialError> {
    for x in tree.at_level(alpha) {
        if !f[x].is_below(alpha) {
            return Err(SpecialError::NotBelow { node: x, level: alpha.clone() });
        }
    }
    Ok(())
}

fn d_set(club: &[Ordinal]) -> Vec<Ordinal> {
    let set: BTreeSet<Ordinal> = club
        .iter()
        .filter(|a| a.is_limit() && is_pairing_closed(a))
        .cloned()
        .collect();
    set.into_iter().collect()
}

fn next_d(d: &[Ordinal], eps: &Ordinal, height: &Ordinal) -> Ordinal {
    d.iter().find(|a| *a > eps).cloned().unwrap_or_else(|| height.clone())
}

pub fn build_special_map(
    tree: &FiniteTree,
    f: &[QKappaSeq],
    club: &[Ordinal],
) -> Result<SpecialMapCertificate, SpecialError> {
    tree.validate()?;
    if f.len() != tree.nodes.len() {
        return Err(SpecialError::BadTree("f must have one value per node".into()));
    }
    for x in 0..tree.nodes.len() {
        let mut cur = tree.nodes[x].below;
        while let Some(y) = cur {
            if super::qkappa_cmp(&f[y], &f[x]) != QCmp::LL {
                return Err(SpecialError::NotIncreasing(y, x));
            }
            cur = tree.nodes[y].below;
        }
    }
    let levels = tree.levels();
    for a in club {
        if levels.contains(a) {
            check_f_below(tree, f, a)?;
        }
    }
    let d = d_set(club);
    let height = tree.height();
    let mut g = Vec::with_capacity(tree.nodes.len());
    for (node, fx) in tree.nodes.iter().zip(f) {
        let h = &node.level;
        let target = if d.contains(h) {
            let code = godel_encode(fx.entries()).map_err(|e| SpecialError::BadTree(e.to_string()))?;
            code.succ()
        } else {
            d.iter().filter(|a| *a < h).max().cloned().unwrap_or_default()
        };
        let y = tree.restrict(g.len(), &target).ok_or(SpecialError::LevelMissing(target))?;
        g.push(y);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (x, &y) in g.iter().enumerate() {
        groups.entry(y).or_default().push(x);
    }
    let mut fibers = Vec::new();
    for (y, members) in groups {
        let eps = &tree.nodes[y].level;
        let kind = if eps.is_successor() {
            FiberKind::Antichain { f_value: f[members[0]].clone() }
        } else {
            let lv: BTreeSet<Ordinal> = members.iter().map(|&m| tree.nodes[m].level.clone()).collect();
            FiberKind::LevelSpan { levels: lv.into_iter().collect(), bound: next_d(&d, eps, &height) }
        };
        fibers.push(Fiber { y, members, kind });
    }
    Ok(SpecialMapCertificate { d_levels: d, height, g, fibers })
}

fn pairwise_incomparable(tree: &FiniteTree, xs: &[usize]) -> bool {
    xs.iter().enumerate().all(|(i, &a)| {
        xs[i + 1..].iter().all(|&b| a != b && !tree.strictly_below(a, b) && !tree.strictly_below(b, a))
    })
}

/// Re-checks a certificate against the tree: `g` is regressive off the
/// minimal nodes and the recorded fibers decompose into antichains.
pub fn verify_special(tree: &FiniteTree, f: &[QKappaSeq], cert: &SpecialMapCertificate) -> bool {
    if tree.validate().is_err() || cert.g.len() != tree.nodes.len() || f.len() != tree.nodes.len() {
        return false;
    }
    for (x, &y) in cert.g.iter().enumerate() {
        if y >= tree.nodes.len() {
            return false;
        }
        let ok = if tree.is_minimal(x) { y == x } else { tree.strictly_below(y, x) };
        if !ok {
            return false;
        }
    }
    let mut seen = vec![false; tree.nodes.len()];
    let mut ys = BTreeSet::new();
    for fiber in &cert.fibers {
        if !ys.insert(fiber.y) || fiber.members.is_empty() {
            return false;
        }
        for &m in &fiber.members {
            if m >= tree.nodes.len() || seen[m] || cert.g[m] != fiber.y {
                return false;
            }
            seen[m] = true;
        }
        let eps = &tree.nodes[fiber.y].level;
        match &fiber.kind {
            FiberKind::Antichain { f_value } => {
                if !eps.is_successor()
                    || !fiber.members.iter().all(|&m| f[m] == *f_value)
                    || !pairwise_incomparable(tree, &fiber.members)
                {
                    return false;
                }
            }
            FiberKind::LevelSpan { levels, bound } => {
                if eps.is_successor() || *bound != next_d(&cert.d_levels, eps, &cert.height) {
                    return false;
                }
                for l in levels {
                    if l >= bound {
                        return false;
                    }
                    let block: Vec<usize> =
                        fiber.members.iter().copied().filter(|&m| tree.nodes[m].level == *l).collect();
                    if !pairwise_incomparable(tree, &block) {
                        return false;
                    }
                }
                if !fiber.members.iter().all(|&m| levels.contains(&tree.nodes[m].level)) {
                    return false;
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}
