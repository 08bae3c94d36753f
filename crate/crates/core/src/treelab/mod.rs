//! Nodes of the coordinate tree over the rationals, together with
//! restriction, semantic equality, c-value interval bounds, the basic
//! open sets `U(x,q)` and the square order.
//!
//! A node is an immutable descriptor: the root, a successor `t⌢⟨q⟩`, or a
//! limit node `b_x^α` whose values along the ladder of `α` are produced by
//! a [`LimitStructure`] (in practice, the tree builder). Limit nodes are
//! canonicalised at construction so that structural equality coincides
//! with equality of the branches they denote.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ordinals::Ordinal;

pub mod qkappa;
pub mod special;

pub use qkappa::{qkappa_cmp, QCmp, QKappaSeq};
pub use special::{
    build_special_map, check_f_below, derived_tree_members, verify_special, FiberKind,
    FiniteTree, SpecialError, SpecialMapCertificate, TreeView,
};

/// Exact rationals, always kept in lowest terms.
pub type Rational = BigRational;

/// `n/d` as a [`Rational`].
pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^-k`.
pub fn pow2_inv(k: u32) -> Rational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("level {requested} exceeds the node level {level}")]
    AboveLevel { requested: Ordinal, level: Ordinal },
    #[error("{0} is not a limit ordinal")]
    NotLimit(Ordinal),
    #[error("level {level} is not on the ladder of {alpha}")]
    NotLadderPoint { alpha: Ordinal, level: Ordinal },
    #[error("value {0} is outside (c(parent), 1)")]
    OutOfRange(Rational),
    #[error("c-value comparison undecided at precision {0}")]
    Undecided(Rational),
    #[error("no limit structure for level {0}")]
    NoStructure(Ordinal),
    #[error("pair is not level-matched: {0} vs {1}")]
    LevelMismatch(Ordinal, Ordinal),
    #[error("tuple is not injective")]
    NotInjective,
    #[error("precision must be positive")]
    BadPrecision,
    #[error("{0}")]
    Invalid(String),
}

pub type TreeResult<T> = Result<T, TreeError>;

#[derive(Debug)]
pub enum NodeKind {
    Root,
    Succ { parent: NodeRef, q: Rational },
    Limit { alpha: Ordinal, x: NodeRef },
}

#[derive(Debug)]
pub struct Node {
    kind: NodeKind,
    level: Ordinal,
    hash: u64,
}

/// Shared handle to an immutable node.
#[derive(Clone)]
pub struct NodeRef(Arc<Node>);

impl NodeRef {
    pub fn root() -> NodeRef {
        let mut h = DefaultHasher::new();
        0u8.hash(&mut h);
        NodeRef(Arc::new(Node { kind: NodeKind::Root, level: Ordinal::zero(), hash: h.finish() }))
    }

    fn succ_raw(parent: &NodeRef, q: Rational) -> NodeRef {
        let mut h = DefaultHasher::new();
        1u8.hash(&mut h);
        parent.0.hash.hash(&mut h);
        q.numer().hash(&mut h);
        q.denom().hash(&mut h);
        let level = parent.level().succ();
        NodeRef(Arc::new(Node {
            kind: NodeKind::Succ { parent: parent.clone(), q },
            level,
            hash: h.finish(),
        }))
    }

    fn limit_raw(alpha: &Ordinal, x: &NodeRef) -> NodeRef {
        let mut h = DefaultHasher::new();
        2u8.hash(&mut h);
        alpha.hash(&mut h);
        x.0.hash.hash(&mut h);
        NodeRef(Arc::new(Node {
            kind: NodeKind::Limit { alpha: alpha.clone(), x: x.clone() },
            level: alpha.clone(),
            hash: h.finish(),
        }))
    }

    pub fn kind(&self) -> &NodeKind {
        &self.0.kind
    }

    pub fn level(&self) -> &Ordinal {
        &self.0.level
    }

    pub fn is_root(&self) -> bool {
        matches!(self.0.kind, NodeKind::Root)
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.0.kind, NodeKind::Limit { .. })
    }

    /// The c-value when it is a single rational (root and successors).
    pub fn exact_c(&self) -> Option<Rational> {
        match &self.0.kind {
            NodeKind::Root => Some(Rational::zero()),
            NodeKind::Succ { q, .. } => Some(q.clone()),
            NodeKind::Limit { .. } => None,
        }
    }

    pub fn ptr_eq(&self, other: &NodeRef) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn to_desc(&self) -> NodeDesc {
        match &self.0.kind {
            NodeKind::Root => NodeDesc::Root(true),
            NodeKind::Succ { parent, q } => NodeDesc::Succ(Box::new(parent.to_desc()), RatJson(q.clone())),
            NodeKind::Limit { alpha, x } => NodeDesc::Lim { alpha: alpha.clone(), x: Box::new(x.to_desc()) },
        }
    }
}

impl PartialEq for NodeRef {
    fn eq(&self, other: &NodeRef) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.level != other.0.level {
            return false;
        }
        match (&self.0.kind, &other.0.kind) {
            (NodeKind::Root, NodeKind::Root) => true,
            (NodeKind::Succ { parent: p, q: a }, NodeKind::Succ { parent: r, q: b }) => a == b && p == r,
            (NodeKind::Limit { alpha: a, x: u }, NodeKind::Limit { alpha: b, x: v }) => a == b && u == v,
            _ => false,
        }
    }
}

impl Eq for NodeRef {}

impl Hash for NodeRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

fn tag(k: &NodeKind) -> u8 {
    match k {
        NodeKind::Root => 0,
        NodeKind::Succ { .. } => 1,
        NodeKind::Limit { .. } => 2,
    }
}

impl Ord for NodeRef {
    fn cmp(&self, other: &NodeRef) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        self.level()
            .cmp(other.level())
            .then_with(|| tag(self.kind()).cmp(&tag(other.kind())))
            .then_with(|| match (self.kind(), other.kind()) {
                (NodeKind::Succ { parent: p, q: a }, NodeKind::Succ { parent: r, q: b }) => {
                    p.cmp(r).then_with(|| a.cmp(b))
                }
                (NodeKind::Limit { x: u, .. }, NodeKind::Limit { x: v, .. }) => u.cmp(v),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for NodeRef {
    fn partial_cmp(&self, other: &NodeRef) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            NodeKind::Root => write!(f, "()"),
            NodeKind::Succ { parent, q } => {
                if parent.is_root() {
                    write!(f, "({q})")
                } else {
                    write!(f, "{parent}+({q})")
                }
            }
            NodeKind::Limit { alpha, x } => write!(f, "b[{alpha}]({x})"),
        }
    }
}

impl fmt::Debug for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for NodeRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_desc().serialize(s)
    }
}

/// A rational serialised as `[num, den]`; components that overflow `i64`
/// are written as decimal strings.
#[derive(Clone, Debug, PartialEq)]
pub struct RatJson(pub Rational);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntJson {
    Small(i64),
    Big(String),
}

impl IntJson {
    fn from_big(b: &BigInt) -> IntJson {
        match b.to_i64() {
            Some(v) => IntJson::Small(v),
            None => IntJson::Big(b.to_string()),
        }
    }

    fn to_big(&self) -> Result<BigInt, String> {
        match self {
            IntJson::Small(v) => Ok(BigInt::from(*v)),
            IntJson::Big(s) => s.parse().map_err(|_| format!("bad integer {s:?}")),
        }
    }
}

impl Serialize for RatJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (IntJson::from_big(self.0.numer()), IntJson::from_big(self.0.denom())).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (n, m) = <(IntJson, IntJson)>::deserialize(d)?;
        let n = n.to_big().map_err(serde::de::Error::custom)?;
        let m = m.to_big().map_err(serde::de::Error::custom)?;
        if m.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(RatJson(BigRational::new(n, m)))
    }
}

/// JSON shape of a node: `{"root":true}`, `{"succ":[parent,[n,d]]}` or
/// `{"lim":{"alpha":o,"x":desc}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeDesc {
    Root(bool),
    Succ(Box<NodeDesc>, RatJson),
    Lim { alpha: Ordinal, x: Box<NodeDesc> },
}

/// Ladders and level-to-level elevators needed to unfold limit nodes.
pub trait LimitStructure {
    /// `β_n` of the ladder of the limit `alpha`.
    fn ladder_point(&self, alpha: &Ordinal, n: usize) -> TreeResult<Ordinal>;
    /// The elevator `e_n` of `alpha` applied to a node at level `β_n`.
    fn step(&self, alpha: &Ordinal, n: usize, t: &NodeRef) -> TreeResult<NodeRef>;
    /// Upper bound on `c(b_x^α) - c(b_x^α(β_n))`: `q_n` or `q_n/4`.
    fn bound(&self, alpha: &Ordinal, n: usize) -> TreeResult<Rational>;

    fn ladder_index(&self, alpha: &Ordinal, beta: &Ordinal) -> TreeResult<Option<usize>> {
        let n = self.ladder_floor(alpha, beta)?;
        Ok((self.ladder_point(alpha, n)? == *beta).then_some(n))
    }

    /// The `n` with `β_n ≤ beta < β_{n+1}`; requires `β_0 ≤ beta < alpha`.
    fn ladder_floor(&self, alpha: &Ordinal, beta: &Ordinal) -> TreeResult<usize> {
        if beta >= alpha || *beta < self.ladder_point(alpha, 0)? {
            return Err(TreeError::NotLadderPoint { alpha: alpha.clone(), level: beta.clone() });
        }
        let mut n = 0;
        while self.ladder_point(alpha, n + 1)? <= *beta {
            n += 1;
        }
        Ok(n)
    }
}

/// Context for trees with no limit levels.
pub struct NoLimits;

impl LimitStructure for NoLimits {
    fn ladder_point(&self, alpha: &Ordinal, _: usize) -> TreeResult<Ordinal> {
        Err(TreeError::NoStructure(alpha.clone()))
    }
    fn step(&self, alpha: &Ordinal, _: usize, _: &NodeRef) -> TreeResult<NodeRef> {
        Err(TreeError::NoStructure(alpha.clone()))
    }
    fn bound(&self, alpha: &Ordinal, _: usize) -> TreeResult<Rational> {
        Err(TreeError::NoStructure(alpha.clone()))
    }
}

/// `b_x^α(β_n)` for `x` at ladder level `β_k`, `k ≤ n`.
pub fn ladder_value(
    ctx: &dyn LimitStructure,
    alpha: &Ordinal,
    x: &NodeRef,
    k: usize,
    n: usize,
) -> TreeResult<NodeRef> {
    let mut cur = x.clone();
    for j in k..n {
        cur = ctx.step(alpha, j, &cur)?;
    }
    Ok(cur)
}

fn anchor_index(ctx: &dyn LimitStructure, alpha: &Ordinal, x: &NodeRef) -> TreeResult<usize> {
    ctx.ladder_index(alpha, x.level())?
        .ok_or_else(|| TreeError::NotLadderPoint { alpha: alpha.clone(), level: x.level().clone() })
}

/// The unique ancestor of `y` at level `beta`.
pub fn restrict(ctx: &dyn LimitStructure, y: &NodeRef, beta: &Ordinal) -> TreeResult<NodeRef> {
    let mut cur = y.clone();
    loop {
        if beta > cur.level() {
            return Err(TreeError::AboveLevel { requested: beta.clone(), level: cur.level().clone() });
        }
        if beta == cur.level() {
            return Ok(cur);
        }
        let next = match cur.kind() {
            NodeKind::Root => unreachable!("root has level 0"),
            NodeKind::Succ { parent, .. } => parent.clone(),
            NodeKind::Limit { alpha, x } => {
                if beta <= x.level() {
                    x.clone()
                } else {
                    let k = anchor_index(ctx, alpha, x)?;
                    let n = ctx.ladder_floor(alpha, beta)?;
                    let at_n = ladder_value(ctx, alpha, x, k, n)?;
                    if at_n.level() == beta {
                        return Ok(at_n);
                    }
                    ctx.step(alpha, n, &at_n)?
                }
            }
        };
        cur = next;
    }
}

/// `x ⊆ y` in the tree order.
pub fn is_below_eq(ctx: &dyn LimitStructure, x: &NodeRef, y: &NodeRef) -> TreeResult<bool> {
    if x.level() > y.level() {
        return Ok(false);
    }
    Ok(restrict(ctx, y, x.level())? == *x)
}

/// `x ⊊ y`.
pub fn is_strictly_below(ctx: &dyn LimitStructure, x: &NodeRef, y: &NodeRef) -> TreeResult<bool> {
    Ok(x.level() < y.level() && is_below_eq(ctx, x, y)?)
}

/// Semantic equality. Limit nodes at a common level are compared at the
/// first ladder point reached by both anchors.
pub fn equals(ctx: &dyn LimitStructure, a: &NodeRef, b: &NodeRef) -> TreeResult<bool> {
    if a == b {
        return Ok(true);
    }
    if a.level() != b.level() {
        return Ok(false);
    }
    match (a.kind(), b.kind()) {
        (NodeKind::Succ { parent: p, q: s }, NodeKind::Succ { parent: r, q: t }) => {
            Ok(s == t && equals(ctx, p, r)?)
        }
        (NodeKind::Limit { alpha, x: u }, NodeKind::Limit { x: v, .. }) => {
            let i = anchor_index(ctx, alpha, u)?;
            let j = anchor_index(ctx, alpha, v)?;
            let k = i.max(j);
            let uu = ladder_value(ctx, alpha, u, i, k)?;
            let vv = ladder_value(ctx, alpha, v, j, k)?;
            equals(ctx, &uu, &vv)
        }
        _ => Ok(false),
    }
}

/// Builds `parent⌢⟨q⟩`, checking `c(parent) < q < 1`.
pub fn make_succ(ctx: &dyn LimitStructure, parent: &NodeRef, q: Rational) -> TreeResult<NodeRef> {
    if q >= Rational::one() || !q.is_positive() {
        return Err(TreeError::OutOfRange(q));
    }
    match c_less_than(ctx, parent, &q, &default_precision())? {
        Verdict::True => Ok(NodeRef::succ_raw(parent, q)),
        Verdict::False => Err(TreeError::OutOfRange(q)),
        Verdict::Undecided => Err(TreeError::Undecided(default_precision())),
    }
}

/// `parent⌢⟨q⟩` for a `q` already known to lie in `(c(parent), 1)`.
pub(crate) fn succ_trusted(parent: &NodeRef, q: Rational) -> NodeRef {
    NodeRef::succ_raw(parent, q)
}

/// Builds `b_x^α` in canonical form: the anchor is moved down the ladder
/// as long as the elevators reproduce it.
pub fn make_limit(ctx: &dyn LimitStructure, alpha: &Ordinal, x: &NodeRef) -> TreeResult<NodeRef> {
    if !alpha.is_limit() {
        return Err(TreeError::NotLimit(alpha.clone()));
    }
    let mut j = anchor_index(ctx, alpha, x)?;
    let mut cur = x.clone();
    while j > 0 {
        let below = restrict(ctx, &cur, &ctx.ladder_point(alpha, j - 1)?)?;
        if ctx.step(alpha, j - 1, &below)? != cur {
            break;
        }
        cur = below;
        j -= 1;
    }
    Ok(NodeRef::limit_raw(alpha, &cur))
}

/// Rebuilds a node from its descriptor, validating every step.
pub fn from_desc(ctx: &dyn LimitStructure, d: &NodeDesc) -> TreeResult<NodeRef> {
    match d {
        NodeDesc::Root(true) => Ok(NodeRef::root()),
        NodeDesc::Root(false) => Err(TreeError::Invalid("root marker must be true".into())),
        NodeDesc::Succ(p, q) => {
            let parent = from_desc(ctx, p)?;
            make_succ(ctx, &parent, q.0.clone())
        }
        NodeDesc::Lim { alpha, x } => {
            let x = from_desc(ctx, x)?;
            make_limit(ctx, alpha, &x)
        }
    }
}

/// Bounds on the c-value of a node: a single point for the root and for
/// successors, an open interval `(lo, hi)` for limit nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CInterval {
    #[serde(serialize_with = "ser_rat")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub hi: Rational,
    pub exact: bool,
}

pub fn ser_rat<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    RatJson(r.clone()).serialize(s)
}

impl CInterval {
    pub fn point(r: Rational) -> CInterval {
        CInterval { lo: r.clone(), hi: r, exact: true }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Default refinement precision `2^-32`, overridable through the
/// `LAB_PRECISION` environment variable (`n/d`, an integer `k` meaning
/// `2^-k`, or a decimal).
pub fn default_precision() -> Rational {
    std::env::var("LAB_PRECISION")
        .ok()
        .and_then(|s| parse_precision(&s))
        .unwrap_or_else(|| pow2_inv(32))
}

pub fn parse_precision(s: &str) -> Option<Rational> {
    let s = s.trim();
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        BigRational::new(n, d)
    } else if let Ok(k) = s.parse::<u32>() {
        pow2_inv(k)
    } else {
        BigRational::from_float(s.parse::<f64>().ok()?)?
    };
    r.is_positive().then_some(r)
}

/// Interval bounds on `c(y)` of width at most `precision`.
pub fn c_bounds(ctx: &dyn LimitStructure, y: &NodeRef, precision: &Rational) -> TreeResult<CInterval> {
    if !precision.is_positive() {
        return Err(TreeError::BadPrecision);
    }
    match y.kind() {
        NodeKind::Root => Ok(CInterval::point(Rational::zero())),
        NodeKind::Succ { q, .. } => Ok(CInterval::point(q.clone())),
        NodeKind::Limit { alpha, x } => {
            let k = anchor_index(ctx, alpha, x)?;
            let mut n = k;
            let mut cur = x.clone();
            loop {
                let width = ctx.bound(alpha, n)?;
                if width <= *precision {
                    let lo = match cur.exact_c() {
                        Some(c) => c,
                        None => c_bounds(ctx, &cur, precision)?.lo,
                    };
                    let hi = &lo + width;
                    return Ok(CInterval { lo, hi, exact: false });
                }
                cur = ctx.step(alpha, n, &cur)?;
                n += 1;
            }
        }
    }
}

/// Three-valued outcome of a refinement-based test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Undecided,
}

impl Verdict {
    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
}

/// Decides `c(y) < c(x) + q`, refining from `2^-4` down to `precision`.
pub fn c_lt_shifted(
    ctx: &dyn LimitStructure,
    y: &NodeRef,
    x: &NodeRef,
    q: &Rational,
    precision: &Rational,
) -> TreeResult<Verdict> {
    let mut p = pow2_inv(4);
    loop {
        let iy = c_bounds(ctx, y, &p)?;
        let ix = c_bounds(ctx, x, &p)?;
        let rhs_lo = &ix.lo + q;
        let rhs_hi = &ix.hi + q;
        if iy.exact && ix.exact {
            return Ok(if iy.lo < rhs_lo { Verdict::True } else { Verdict::False });
        }
        if iy.hi < rhs_lo || (iy.hi == rhs_lo && (!iy.exact || !ix.exact)) {
            return Ok(Verdict::True);
        }
        if iy.lo > rhs_hi || (iy.lo == rhs_hi && (!iy.exact || !ix.exact)) {
            return Ok(Verdict::False);
        }
        if p <= *precision {
            return Ok(Verdict::Undecided);
        }
        p = (p / rat(2, 1)).max(precision.clone());
    }
}

/// Decides `c(y) < r` for a rational `r`.
pub fn c_less_than(
    ctx: &dyn LimitStructure,
    y: &NodeRef,
    r: &Rational,
    precision: &Rational,
) -> TreeResult<Verdict> {
    c_lt_shifted(ctx, y, &NodeRef::root(), r, precision)
}

/// Membership `y ∈ U(x,q)`: `x ⊊ y` and `c(y) < c(x) + q`.
pub fn in_u(
    ctx: &dyn LimitStructure,
    y: &NodeRef,
    x: &NodeRef,
    q: &Rational,
    precision: &Rational,
) -> TreeResult<Verdict> {
    if !is_strictly_below(ctx, x, y)? {
        return Ok(Verdict::False);
    }
    c_lt_shifted(ctx, y, x, q, precision)
}

/// A rational strictly above `c(y)` and strictly below `min(target, 1)`,
/// never using more than a quarter of the distance to 1.
pub fn pick_above(ctx: &dyn LimitStructure, y: &NodeRef, target: &Rational) -> TreeResult<Rational> {
    let one = Rational::one();
    let cap = target.clone().min(one.clone());
    let mut p = pow2_inv(4);
    let floor = pow2_inv(200);
    loop {
        let b = c_bounds(ctx, y, &p)?;
        if b.hi < cap {
            let room = (&cap - &b.hi).min((&one - &b.hi) / rat(2, 1));
            return Ok(&b.hi + room / rat(2, 1));
        }
        if p < floor {
            return Err(TreeError::Undecided(p));
        }
        p /= rat(2, 1);
    }
}

/// A level-matched pair of nodes: an element of the square `T^2`.
pub type Pair = (NodeRef, NodeRef);

pub fn check_pair(p: &Pair) -> TreeResult<()> {
    if p.0.level() != p.1.level() {
        return Err(TreeError::LevelMismatch(p.0.level().clone(), p.1.level().clone()));
    }
    Ok(())
}

/// `a ⊆² b`: componentwise weak extension of level-matched pairs.
pub fn square_leq(ctx: &dyn LimitStructure, a: &Pair, b: &Pair) -> TreeResult<bool> {
    check_pair(a)?;
    check_pair(b)?;
    Ok(is_below_eq(ctx, &a.0, &b.0)? && is_below_eq(ctx, &a.1, &b.1)?)
}

/// Whether no two distinct members are `⊆²`-comparable.
pub fn is_square_antichain(ctx: &dyn LimitStructure, set: &[Pair]) -> TreeResult<bool> {
    for (i, a) in set.iter().enumerate() {
        for (j, b) in set.iter().enumerate() {
            if i != j && a != b && square_leq(ctx, a, b)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
