//! The coarsening relation ⊴ induced by an antichain of distinguished
//! pairs, q-elevators, and constructive coordination witnesses.
//!
//! Elevators are lazily total: a default rule plus a finite exception
//! table, evaluated node by node. Validation checks both elevator
//! obligations on a supplied sample together with every exception and
//! every node of the avoided set.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::ordinals::Ordinal;
use crate::treelab::{
    c_bounds, check_pair, in_u, is_below_eq, make_limit, pick_above, pow2_inv, rat, restrict,
    square_leq, LimitStructure, NodeKind, NodeRef, Pair, Rational, TreeError, TreeResult, Verdict,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElevatorError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("level mismatch: {0}")]
    Levels(String),
    #[error("pin precondition violated: {0}")]
    Pin(String),
    #[error("rational selection infeasible: {0}")]
    Infeasible(String),
    #[error("both distinguished anchors lie in the image: {0}")]
    Anchor(String),
}

pub type ElevatorResult<T> = Result<T, ElevatorError>;

/// The distinguished pairs `a_ε` for `ε ∈ E`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CoarseningContext {
    pub a: BTreeMap<Ordinal, Pair>,
}

impl CoarseningContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, eps: Ordinal, pair: Pair) {
        self.a.insert(eps, pair);
    }

    pub fn contains(&self, eps: &Ordinal) -> bool {
        self.a.contains_key(eps)
    }

    /// Levels of `E` in the half-open window `(lo, hi]`.
    pub fn window(&self, lo: &Ordinal, hi: &Ordinal) -> Vec<Ordinal> {
        self.a.keys().filter(|e| *e > lo && *e <= hi).cloned().collect()
    }
}

/// What elevator constructions need from a tree: limit unfolding, the
/// schedule `q_n` and the distinguished pairs.
pub trait TreeContext: LimitStructure {
    fn coarsening(&self) -> &CoarseningContext;
    /// `q_n` of the limit level `alpha`.
    fn q(&self, alpha: &Ordinal, n: usize) -> TreeResult<Rational>;
}

/// A context for trees without limit levels.
#[derive(Default)]
pub struct FlatContext {
    pub cc: CoarseningContext,
}

impl LimitStructure for FlatContext {
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

impl TreeContext for FlatContext {
    fn coarsening(&self) -> &CoarseningContext {
        &self.cc
    }
    fn q(&self, alpha: &Ordinal, _: usize) -> TreeResult<Rational> {
        Err(TreeError::NoStructure(alpha.clone()))
    }
}

fn oriented(p: &Pair, j: usize) -> Pair {
    if j == 0 {
        p.clone()
    } else {
        (p.1.clone(), p.0.clone())
    }
}

fn some_a_below(ctx: &dyn LimitStructure, cc: &CoarseningContext, p: &Pair) -> TreeResult<bool> {
    for (eps, a) in cc.a.range(..=p.0.level().clone()) {
        debug_assert!(eps <= p.0.level());
        if square_leq(ctx, a, p)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `x ⊴ y`: clause (ℵ) `x ⊆² y`, and clause (ℶ): for each orientation, if
/// no distinguished pair lies below `x` then none lies below `y`.
pub fn le_coarse(ctx: &dyn LimitStructure, cc: &CoarseningContext, x: &Pair, y: &Pair) -> TreeResult<bool> {
    if !square_leq(ctx, x, y)? {
        return Ok(false);
    }
    for j in 0..2 {
        if !some_a_below(ctx, cc, &oriented(x, j))? && some_a_below(ctx, cc, &oriented(y, j))? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn upper_below(ctx: &dyn LimitStructure, t: &NodeRef, budget: &Rational) -> TreeResult<Rational> {
    if let Some(c) = t.exact_c() {
        return if c < *budget { Ok(c) } else { Err(TreeError::OutOfRange(budget.clone())) };
    }
    let mut p = pow2_inv(4);
    loop {
        let b = c_bounds(ctx, t, &p)?;
        if b.hi < *budget {
            return Ok(b.hi);
        }
        if p < pow2_inv(200) {
            return Err(TreeError::Undecided(p));
        }
        p /= rat(2, 1);
    }
}

fn lower_c(ctx: &dyn LimitStructure, t: &NodeRef, precision: &Rational) -> TreeResult<Rational> {
    match t.exact_c() {
        Some(c) => Ok(c),
        None => Ok(c_bounds(ctx, t, precision)?.lo),
    }
}

/// Canonical lift of `t` to `alpha` with `c(result) < budget`.
///
/// Successor targets append a rational picked above the lifted parent;
/// limit targets pass through the first ladder point with `q_m` below half
/// the remaining room. At a level carrying a distinguished pair the lift
/// steers clear of both anchors, so default images never realise `a_ε`.
pub fn canonical_lift(ctx: &dyn TreeContext, t: &NodeRef, alpha: &Ordinal, budget: &Rational) -> TreeResult<NodeRef> {
    if alpha == t.level() {
        return Ok(t.clone());
    }
    if alpha < t.level() {
        return Err(TreeError::AboveLevel { requested: t.level().clone(), level: alpha.clone() });
    }
    let hi_t = upper_below(ctx, t, budget)?;
    let gap = budget - &hi_t;
    if let Some(gamma) = alpha.pred() {
        let u = canonical_lift(ctx, t, &gamma, &(&hi_t + &gap / rat(2, 1)))?;
        let v = pick_above(ctx, &u, budget)?;
        return Ok(succ_unchecked(&u, v));
    }
    let half = &gap / rat(2, 1);
    let mut m = 1;
    while ctx.ladder_point(alpha, m)? < *t.level() || ctx.q(alpha, m)? > half {
        m += 1;
    }
    let u = canonical_lift(ctx, t, &ctx.ladder_point(alpha, m)?, &(&hi_t + &half))?;
    let cand = make_limit(ctx, alpha, &u)?;
    let Some(a) = ctx.coarsening().a.get(alpha) else { return Ok(cand) };
    if cand != a.0 && cand != a.1 {
        return Ok(cand);
    }
    // Step to a sibling of the anchor's next ladder value.
    let next = ctx.ladder_point(alpha, m + 1)?;
    if next != u.level().succ() {
        return Err(TreeError::Invalid(format!("ladder of {alpha} is not consecutive at {m}")));
    }
    let taken: Vec<Rational> = [&a.0, &a.1]
        .iter()
        .filter_map(|b| restrict(ctx, b, &next).ok())
        .filter_map(|n| n.exact_c())
        .collect();
    let cap = &hi_t + &gap * rat(3, 4);
    let cu = u.exact_c().ok_or_else(|| TreeError::Invalid("ladder point is not a successor".into()))?;
    let mut v = pick_above(ctx, &u, &cap)?;
    while taken.contains(&v) {
        v = (&cu + &v) / rat(2, 1);
    }
    make_limit(ctx, alpha, &succ_unchecked(&u, v))
}

fn succ_unchecked(parent: &NodeRef, q: Rational) -> NodeRef {
    crate::treelab::succ_trusted(parent, q)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Canonical lift with budget `c(t) + slack`.
    Lift,
    /// One successor step `t ↦ t⌢⟨c(t)+q'⟩`.
    Shift {
        #[serde(serialize_with = "crate::treelab::ser_rat")]
        q_prime: Rational,
    },
    /// `second ∘ first`.
    Compose { first: Box<Elevator>, second: Box<Elevator> },
    /// `f_m ∘ inner`, where `f_m(x) = b_x^α`.
    ThroughLimit { inner: Box<Elevator>, alpha: Ordinal, m: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct Elevator {
    pub source: Ordinal,
    pub target: Ordinal,
    #[serde(serialize_with = "crate::treelab::ser_rat")]
    pub slack: Rational,
    pub exceptions: Vec<(NodeRef, NodeRef)>,
    pub rule: Rule,
    /// The finite set the image was built to avoid.
    pub avoids: Vec<NodeRef>,
}

impl Elevator {
    pub fn lift(source: Ordinal, target: Ordinal, slack: Rational) -> Elevator {
        Elevator { source, target, slack, exceptions: Vec::new(), rule: Rule::Lift, avoids: Vec::new() }
    }

    pub fn eval(&self, ctx: &dyn TreeContext, t: &NodeRef) -> TreeResult<NodeRef> {
        if *t.level() != self.source {
            return Err(TreeError::Invalid(format!("node {t} is not at level {}", self.source)));
        }
        if let Some((_, y)) = self.exceptions.iter().find(|(x, _)| x == t) {
            return Ok(y.clone());
        }
        match &self.rule {
            Rule::Lift => {
                let lo = lower_c(ctx, t, &(&self.slack / rat(4, 1)))?;
                canonical_lift(ctx, t, &self.target, &(lo + &self.slack))
            }
            Rule::Shift { q_prime } => {
                let v = match t.exact_c() {
                    Some(c) if &c + q_prime < Rational::one() => c + q_prime,
                    _ => {
                        let lo = lower_c(ctx, t, &(q_prime / rat(4, 1)))?;
                        pick_above(ctx, t, &(lo + q_prime))?
                    }
                };
                Ok(succ_unchecked(t, v))
            }
            Rule::Compose { first, second } => second.eval(ctx, &first.eval(ctx, t)?),
            Rule::ThroughLimit { inner, alpha, .. } => make_limit(ctx, alpha, &inner.eval(ctx, t)?),
        }
    }

    /// Pins as an ordered list (used to report the pinned part).
    pub fn with_exceptions(mut self, pins: &[(NodeRef, NodeRef)]) -> Elevator {
        for (x, y) in pins {
            self.exceptions.retain(|(a, _)| a != x);
            self.exceptions.push((x.clone(), y.clone()));
        }
        self
    }
}

/// `e2 ∘ e1`, a `(p+q)`-elevator.
pub fn compose(e1: &Elevator, e2: &Elevator) -> ElevatorResult<Elevator> {
    if e1.target != e2.source {
        return Err(ElevatorError::Levels(format!("{} -> {} then {} -> {}", e1.source, e1.target, e2.source, e2.target)));
    }
    Ok(Elevator {
        source: e1.source.clone(),
        target: e2.target.clone(),
        slack: &e1.slack + &e2.slack,
        exceptions: Vec::new(),
        rule: Rule::Compose { first: Box::new(e1.clone()), second: Box::new(e2.clone()) },
        avoids: e2.avoids.clone(),
    })
}

fn check_pins(
    ctx: &dyn TreeContext,
    source: &Ordinal,
    target: &Ordinal,
    q: &Rational,
    w: &[NodeRef],
    pins: &[(NodeRef, NodeRef)],
) -> ElevatorResult<()> {
    if pins.len() > 2 {
        return Err(ElevatorError::Pin("at most two pins".into()));
    }
    let prec = crate::treelab::default_precision();
    for (x, y) in pins {
        if x.level() != source || y.level() != target {
            return Err(ElevatorError::Pin(format!("{x} -> {y} is not {source} -> {target}")));
        }
        if in_u(ctx, y, x, q, &prec)? != Verdict::True {
            return Err(ElevatorError::Pin(format!("{y} is not in U({x}, {q})")));
        }
        if w.contains(y) {
            return Err(ElevatorError::Pin(format!("{y} lies in the avoided set")));
        }
    }
    if let [(x0, y0), (x1, y1)] = pins {
        if x0 == x1 {
            return Err(ElevatorError::Pin("the two pins share a source".into()));
        }
        if !le_coarse(ctx, ctx.coarsening(), &(x0.clone(), x1.clone()), &(y0.clone(), y1.clone()))? {
            return Err(ElevatorError::Pin("pinned pair is not ⊴-related".into()));
        }
    }
    Ok(())
}

/// Bounds `(lo, hi)` on `c(y) - c(x)` of width at most `2·precision`.
fn diff_bounds(ctx: &dyn LimitStructure, y: &NodeRef, x: &NodeRef, precision: &Rational) -> TreeResult<(Rational, Rational)> {
    let by = c_bounds(ctx, y, precision)?;
    let bx = c_bounds(ctx, x, precision)?;
    Ok((&by.lo - &bx.hi, &by.hi - &bx.lo))
}

/// The successor-level witness from `T_γ` to `T_{γ+1}`: shift every node
/// by `q' < min(q, c(w) - c(w↾γ))` and override the pins.
pub fn successor_elevator(
    ctx: &dyn TreeContext,
    gamma: &Ordinal,
    q: &Rational,
    w: &[NodeRef],
    pins: &[(NodeRef, NodeRef)],
) -> ElevatorResult<Elevator> {
    let target = gamma.succ();
    if !q.is_positive() {
        return Err(ElevatorError::Infeasible(format!("slack {q} is not positive")));
    }
    check_pins(ctx, gamma, &target, q, w, pins)?;
    let mut r = q.clone();
    for x in w {
        if *x.level() != target {
            return Err(ElevatorError::Levels(format!("avoided node {x} is not at {target}")));
        }
        let cw = x.exact_c().expect("successor-level nodes have exact c");
        let below = restrict(ctx, x, gamma)?;
        let hi = upper_below(ctx, &below, &cw)?;
        r = r.min(cw - hi);
    }
    let q_prime = r / rat(2, 1);
    Ok(Elevator {
        source: gamma.clone(),
        target,
        slack: q.clone(),
        exceptions: Vec::new(),
        rule: Rule::Shift { q_prime },
        avoids: w.to_vec(),
    }
    .with_exceptions(pins))
}

/// A coordination witness between two fixed levels.
pub trait ElevatorFactory {
    fn source(&self) -> Ordinal;
    fn target(&self) -> Ordinal;
    fn build(
        &self,
        ctx: &dyn TreeContext,
        q: &Rational,
        w: &[NodeRef],
        pins: &[(NodeRef, NodeRef)],
    ) -> ElevatorResult<Elevator>;
}

pub struct SuccessorFactory(pub Ordinal);

impl ElevatorFactory for SuccessorFactory {
    fn source(&self) -> Ordinal {
        self.0.clone()
    }
    fn target(&self) -> Ordinal {
        self.0.succ()
    }
    fn build(&self, ctx: &dyn TreeContext, q: &Rational, w: &[NodeRef], pins: &[(NodeRef, NodeRef)]) -> ElevatorResult<Elevator> {
        successor_elevator(ctx, &self.0, q, w, pins)
    }
}

/// Witness through an intermediate level, per the transitivity lemma.
pub struct TransitiveFactory {
    pub lower: Box<dyn ElevatorFactory>,
    pub upper: Box<dyn ElevatorFactory>,
}

impl ElevatorFactory for TransitiveFactory {
    fn source(&self) -> Ordinal {
        self.lower.source()
    }
    fn target(&self) -> Ordinal {
        self.upper.target()
    }
    fn build(&self, ctx: &dyn TreeContext, q: &Rational, w: &[NodeRef], pins: &[(NodeRef, NodeRef)]) -> ElevatorResult<Elevator> {
        transitive_elevator(ctx, self.lower.as_ref(), self.upper.as_ref(), q, w, pins)
    }
}

/// Witness into a limit level: `f_m ∘ ē` for a suitable ladder index `m`.
pub struct LimitFactory {
    pub source: Ordinal,
    pub alpha: Ordinal,
}

impl ElevatorFactory for LimitFactory {
    fn source(&self) -> Ordinal {
        self.source.clone()
    }
    fn target(&self) -> Ordinal {
        self.alpha.clone()
    }
    fn build(&self, ctx: &dyn TreeContext, q: &Rational, w: &[NodeRef], pins: &[(NodeRef, NodeRef)]) -> ElevatorResult<Elevator> {
        coordinate_into_limit(ctx, &self.source, &self.alpha, q, w, pins)
    }
}

/// The witness factory for `source < target` chosen by the shape of the
/// target: one successor step, a transitive chain, or a limit.
pub fn coordination(source: &Ordinal, target: &Ordinal) -> ElevatorResult<Box<dyn ElevatorFactory>> {
    if source >= target {
        return Err(ElevatorError::Levels(format!("{source} is not below {target}")));
    }
    match target.pred() {
        Some(g) if g == *source => Ok(Box::new(SuccessorFactory(g))),
        Some(g) => Ok(Box::new(TransitiveFactory {
            lower: coordination(source, &g)?,
            upper: Box::new(SuccessorFactory(g)),
        })),
        None => Ok(Box::new(LimitFactory { source: source.clone(), alpha: target.clone() })),
    }
}

fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / rat(2, 1)
}

/// Composite witness `γ → β → α` honoring up to two pins and avoiding `w`.
pub fn transitive_elevator(
    ctx: &dyn TreeContext,
    lower: &dyn ElevatorFactory,
    upper: &dyn ElevatorFactory,
    q: &Rational,
    w: &[NodeRef],
    pins: &[(NodeRef, NodeRef)],
) -> ElevatorResult<Elevator> {
    let beta = lower.target();
    if upper.source() != beta {
        return Err(ElevatorError::Levels(format!("{} vs {}", beta, upper.source())));
    }
    check_pins(ctx, &lower.source(), &upper.target(), q, w, pins)?;
    match pins {
        [] => {
            let half = q / rat(2, 1);
            let e0 = lower.build(ctx, &half, &[], &[])?;
            let e1 = upper.build(ctx, &half, w, &[])?;
            compose(&e0, &e1)
        }
        [(x, z)] => {
            let prec = q / rat(64, 1);
            let (_, d_hi) = diff_bounds(ctx, z, x, &prec)?;
            if d_hi >= *q {
                return Err(ElevatorError::Infeasible(format!("c(z)-c(x)+2ε<q has no ε > 0 for q = {q}")));
            }
            let eps = (q - &d_hi) / rat(4, 1);
            let y = restrict(ctx, z, &beta)?;
            let p = &eps / rat(8, 1);
            let (lo0, hi0) = diff_bounds(ctx, &y, x, &p)?;
            let q0 = midpoint(&hi0, &(&lo0 + &eps));
            let (lo1, hi1) = diff_bounds(ctx, z, &y, &p)?;
            let q1 = midpoint(&hi1, &(&lo1 + &eps));
            let e0 = lower.build(ctx, &q0, &[], &[(x.clone(), y.clone())])?;
            let e1 = upper.build(ctx, &q1, w, &[(y, z.clone())])?;
            let mut e = compose(&e0, &e1)?;
            e.slack = q.clone();
            Ok(e)
        }
        [(x0, z0), (x1, z1)] => {
            let y0 = restrict(ctx, z0, &beta)?;
            let y1 = restrict(ctx, z1, &beta)?;
            let prec = q / rat(64, 1);
            let (_, a) = diff_bounds(ctx, &y0, x0, &prec)?;
            let (_, b) = diff_bounds(ctx, &y1, x1, &prec)?;
            let floor = a.max(b).max(Rational::zero());
            if floor >= *q {
                return Err(ElevatorError::Infeasible(format!("no q0 in (0,{q}) covers both pins")));
            }
            let q0 = midpoint(&floor, q);
            let q1 = q - &q0;
            let e0 = lower.build(ctx, &q0, &[], &[(x0.clone(), y0), (x1.clone(), y1)])?;
            let e1 = upper.build(ctx, &q1, w, &[])?;
            Ok(compose(&e0, &e1)?.with_exceptions(pins))
        }
        _ => Err(ElevatorError::Pin("at most two pins".into())),
    }
}

/// `f_m ∘ ē` into the limit level `alpha`, with slack `p + q_m`.
pub fn limit_elevator(ctx: &dyn TreeContext, bar_e: &Elevator, alpha: &Ordinal, m: usize) -> ElevatorResult<Elevator> {
    let bm = ctx.ladder_point(alpha, m)?;
    if bar_e.target != bm {
        return Err(ElevatorError::Levels(format!("ē ends at {} rather than β_{m} = {bm}", bar_e.target)));
    }
    if let Some(a) = ctx.coarsening().a.get(alpha) {
        let mut hit = 0;
        for b in [&a.0, &a.1] {
            let top = restrict(ctx, b, &bm)?;
            let src = restrict(ctx, b, &bar_e.source)?;
            if bar_e.eval(ctx, &src)? == top {
                hit += 1;
            }
        }
        if hit == 2 {
            return Err(ElevatorError::Anchor(format!("{} and {} restricted to {bm}", a.0, a.1)));
        }
    }
    Ok(Elevator {
        source: bar_e.source.clone(),
        target: alpha.clone(),
        slack: &bar_e.slack + ctx.q(alpha, m)?,
        exceptions: Vec::new(),
        rule: Rule::ThroughLimit { inner: Box::new(bar_e.clone()), alpha: alpha.clone(), m },
        avoids: bar_e.avoids.clone(),
    })
}

/// Least ladder index at which the limit node `y` is its own anchor lift.
fn anchor_floor(ctx: &dyn LimitStructure, y: &NodeRef) -> TreeResult<usize> {
    match y.kind() {
        NodeKind::Limit { alpha, x } => ctx
            .ladder_index(alpha, x.level())?
            .ok_or_else(|| TreeError::NotLadderPoint { alpha: alpha.clone(), level: x.level().clone() }),
        _ => Err(TreeError::Invalid(format!("{y} is not a limit node"))),
    }
}

fn coordinate_into_limit(
    ctx: &dyn TreeContext,
    beta: &Ordinal,
    alpha: &Ordinal,
    q: &Rational,
    w: &[NodeRef],
    pins: &[(NodeRef, NodeRef)],
) -> ElevatorResult<Elevator> {
    check_pins(ctx, beta, alpha, q, w, pins)?;
    let mut w: Vec<NodeRef> = w.to_vec();
    if let Some(a) = ctx.coarsening().a.get(alpha) {
        let targets: Vec<&NodeRef> = pins.iter().map(|(_, y)| y).collect();
        if targets.len() == 2 && targets.contains(&&a.0) && targets.contains(&&a.1) {
            return Err(ElevatorError::Pin("pins realise the distinguished pair itself".into()));
        }
        let b = if targets.contains(&&a.0) { &a.1 } else { &a.0 };
        if !w.contains(b) {
            w.push(b.clone());
        }
    }
    let prec = q / rat(64, 1);
    let mut p = q / rat(2, 1);
    for (x, y) in pins {
        let (_, hi) = diff_bounds(ctx, y, x, &prec)?;
        if hi >= *q {
            return Err(ElevatorError::Infeasible(format!("{y} is too far above {x} for slack {q}")));
        }
        p = p.max(midpoint(&hi, q));
    }
    let room = q - &p;
    let mut m = 0;
    for y in w.iter().chain(pins.iter().map(|(_, y)| y)) {
        m = m.max(anchor_floor(ctx, y)?);
    }
    while ctx.q(alpha, m)? >= room || ctx.ladder_point(alpha, m)? <= *beta {
        m += 1;
    }
    let bm = ctx.ladder_point(alpha, m)?;
    let w_bar = w.iter().map(|x| restrict(ctx, x, &bm)).collect::<TreeResult<Vec<_>>>()?;
    let pins_bar = pins
        .iter()
        .map(|(x, y)| Ok((x.clone(), restrict(ctx, y, &bm)?)))
        .collect::<TreeResult<Vec<_>>>()?;
    let bar_e = coordination(beta, &bm)?.build(ctx, &p, &w_bar, &pins_bar)?;
    let mut e = limit_elevator(ctx, &bar_e, alpha, m)?;
    e.avoids = w;
    Ok(e)
}

/// Outcome of checking the elevator obligations on evaluated nodes.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ElevatorReport {
    pub nodes_checked: usize,
    pub pairs_checked: usize,
    pub undecided: usize,
    pub violations: Vec<String>,
}

impl ElevatorReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.undecided == 0
    }
}

/// Checks `e(x) ∈ U(x, slack)` and `(x₀,x₁) ⊴ (e(x₀),e(x₁))` on the sample,
/// the exception sources and the restrictions of the avoided set, and
/// checks that no avoided node is hit.
pub fn validate(ctx: &dyn TreeContext, e: &Elevator, sample: &[NodeRef]) -> TreeResult<ElevatorReport> {
    let prec = crate::treelab::default_precision();
    let mut nodes: Vec<NodeRef> = Vec::new();
    let push = |n: NodeRef, nodes: &mut Vec<NodeRef>| {
        if !nodes.contains(&n) {
            nodes.push(n);
        }
    };
    for s in sample {
        push(s.clone(), &mut nodes);
    }
    for (x, _) in &e.exceptions {
        push(x.clone(), &mut nodes);
    }
    for w in &e.avoids {
        push(restrict(ctx, w, &e.source)?, &mut nodes);
    }
    let mut rep = ElevatorReport::default();
    let mut images = Vec::with_capacity(nodes.len());
    for x in &nodes {
        let y = e.eval(ctx, x)?;
        rep.nodes_checked += 1;
        if *y.level() != e.target {
            rep.violations.push(format!("e({x}) lands at {}", y.level()));
        }
        match in_u(ctx, &y, x, &e.slack, &prec)? {
            Verdict::True => {}
            Verdict::False => rep.violations.push(format!("e({x}) = {y} is not in U(x, {})", e.slack)),
            Verdict::Undecided => rep.undecided += 1,
        }
        if e.avoids.contains(&y) {
            rep.violations.push(format!("e({x}) hits the avoided node {y}"));
        }
        images.push(y);
    }
    let cc = ctx.coarsening();
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            let x = (nodes[i].clone(), nodes[j].clone());
            let y = (images[i].clone(), images[j].clone());
            check_pair(&y)?;
            rep.pairs_checked += 1;
            if !le_coarse(ctx, cc, &x, &y)? {
                rep.violations.push(format!("({}, {}) is not ⊴ its image", x.0, x.1));
            }
        }
    }
    Ok(rep)
}

/// `x ⊆ y` convenience re-export for callers holding a [`TreeContext`].
pub fn extends(ctx: &dyn TreeContext, x: &NodeRef, y: &NodeRef) -> TreeResult<bool> {
    is_below_eq(ctx, x, y)
}
