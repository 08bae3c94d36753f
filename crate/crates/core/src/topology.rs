//! The interval topology on trees, handled syntactically.
//!
//! Open sets are finite unions of basis intervals `(lo, hi]` (or `[∅, hi]`)
//! and isolated points; open sets of the square are finite unions of
//! products. Membership and pairwise intersection of basis intervals are
//! decided exactly through restriction, so no point set is ever built.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{ladder, Case, Hit, TreeState};
use crate::ordinals::Ordinal;
use crate::treelab::{
    c_bounds, from_desc, is_below_eq, is_strictly_below, make_limit, pow2_inv, rat, restrict, LimitStructure,
    NodeDesc, NodeKind, NodeRef, Pair, TreeError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopoError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("levels must differ: both at {0}")]
    SameLevel(Ordinal),
    #[error("not an antichain: {0}")]
    NotAntichain(String),
    #[error("separator recipe infeasible at {0}")]
    Infeasible(String),
    #[error("bad input: {0}")]
    Input(String),
}

pub type TopoResult<T> = Result<T, TopoError>;

/// `(lo, hi]`, or `[∅, hi] = {∅} ∪ (∅, hi]` when `lo` is `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisInterval {
    pub lo: Option<NodeRef>,
    pub hi: NodeRef,
}

impl BasisInterval {
    pub fn closed(hi: &NodeRef) -> BasisInterval {
        BasisInterval { lo: None, hi: hi.clone() }
    }

    pub fn half_open(ctx: &dyn LimitStructure, lo: &NodeRef, hi: &NodeRef) -> TopoResult<BasisInterval> {
        if !is_strictly_below(ctx, lo, hi)? {
            return Err(TopoError::Input(format!("{lo} is not strictly below {hi}")));
        }
        Ok(BasisInterval { lo: Some(lo.clone()), hi: hi.clone() })
    }

    /// The basic neighbourhood `{t}` of an isolated point.
    pub fn singleton(ctx: &dyn LimitStructure, t: &NodeRef) -> TopoResult<BasisInterval> {
        match t.level().pred() {
            None if t.is_root() => Ok(BasisInterval::closed(t)),
            Some(p) => BasisInterval::half_open(ctx, &restrict(ctx, t, &p)?, t),
            None => Err(TopoError::Input(format!("{t} is not isolated"))),
        }
    }

    pub fn contains(&self, ctx: &dyn LimitStructure, z: &NodeRef) -> TopoResult<bool> {
        if !is_below_eq(ctx, z, &self.hi)? {
            return Ok(false);
        }
        Ok(match &self.lo {
            None => true,
            Some(l) => is_strictly_below(ctx, l, z)?,
        })
    }

    /// Least level a member must exceed-or-reach: `dom(lo)+1`, or 0.
    fn floor(&self) -> Ordinal {
        self.lo.as_ref().map_or(Ordinal::zero(), |l| l.level().succ())
    }

    /// Nonempty intersection. Members of both lie below both tops, and
    /// agreement is downward closed, so it suffices to test the lowest
    /// admissible level.
    pub fn meets(&self, ctx: &dyn LimitStructure, other: &BasisInterval) -> TopoResult<bool> {
        let g = self.floor().max(other.floor());
        if g > *self.hi.level() || g > *other.hi.level() {
            return Ok(false);
        }
        Ok(restrict(ctx, &self.hi, &g)? == restrict(ctx, &other.hi, &g)?)
    }
}

pub fn is_isolated(t: &NodeRef) -> bool {
    !t.level().is_limit()
}

/// A finite union of basis intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OpenSetExpr {
    pub parts: Vec<BasisInterval>,
}

impl OpenSetExpr {
    pub fn contains(&self, ctx: &dyn LimitStructure, z: &NodeRef) -> TopoResult<bool> {
        for p in &self.parts {
            if p.contains(ctx, z)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn meets(&self, ctx: &dyn LimitStructure, other: &OpenSetExpr) -> TopoResult<bool> {
        for a in &self.parts {
            for b in &other.parts {
                if a.meets(ctx, b)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// JSON form of a basis interval: `{"lo": desc | null, "hi": desc}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalDesc {
    pub lo: Option<NodeDesc>,
    pub hi: NodeDesc,
}

impl IntervalDesc {
    pub fn resolve(&self, ctx: &dyn LimitStructure) -> TopoResult<BasisInterval> {
        let hi = from_desc(ctx, &self.hi)?;
        match &self.lo {
            None => Ok(BasisInterval::closed(&hi)),
            Some(lo) => BasisInterval::half_open(ctx, &from_desc(ctx, lo)?, &hi),
        }
    }
}

impl OpenSetExpr {
    pub fn from_descs(ctx: &dyn LimitStructure, parts: &[IntervalDesc]) -> TopoResult<OpenSetExpr> {
        Ok(OpenSetExpr { parts: parts.iter().map(|p| p.resolve(ctx)).collect::<TopoResult<_>>()? })
    }

    pub fn to_descs(&self) -> Vec<IntervalDesc> {
        self.parts
            .iter()
            .map(|p| IntervalDesc { lo: p.lo.as_ref().map(|l| l.to_desc()), hi: p.hi.to_desc() })
            .collect()
    }
}

pub type BasisBox = (BasisInterval, BasisInterval);

/// A finite union of products of basis intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SquareOpen {
    pub boxes: Vec<BasisBox>,
}

pub fn box_contains(ctx: &dyn LimitStructure, b: &BasisBox, p: &Pair) -> TopoResult<bool> {
    Ok(b.0.contains(ctx, &p.0)? && b.1.contains(ctx, &p.1)?)
}

impl SquareOpen {
    pub fn contains(&self, ctx: &dyn LimitStructure, p: &Pair) -> TopoResult<bool> {
        for b in &self.boxes {
            if box_contains(ctx, b, p)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// A product neighbourhood of an off-diagonal pair missing `T²`: the lower
/// node gets `[∅, x_i]`, the higher one the interval above its restriction.
pub fn separate_off_square(ctx: &dyn LimitStructure, x0: &NodeRef, x1: &NodeRef) -> TopoResult<BasisBox> {
    if x0.level() == x1.level() {
        return Err(TopoError::SameLevel(x0.level().clone()));
    }
    let (low, high, swap) = if x0.level() < x1.level() { (x0, x1, false) } else { (x1, x0, true) };
    let i_low = BasisInterval::closed(low);
    let i_high = BasisInterval::half_open(ctx, &restrict(ctx, high, low.level())?, high)?;
    Ok(if swap { (i_high, i_low) } else { (i_low, i_high) })
}

/// Whether the box contains a level-matched pair from `nodes`.
pub fn box_meets_square(ctx: &dyn LimitStructure, b: &BasisBox, nodes: &[NodeRef]) -> TopoResult<bool> {
    let mut left = Vec::new();
    for z in nodes {
        if b.0.contains(ctx, z)? {
            left.push(z.level().clone());
        }
    }
    for z in nodes {
        if b.1.contains(ctx, z)? && left.contains(z.level()) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// An open box around `p` meeting the antichain `set` in at most `p`.
pub fn antichain_discrete_witness(ctx: &dyn LimitStructure, set: &[Pair], p: &Pair) -> TopoResult<BasisBox> {
    let mut below = Vec::new();
    for y in set {
        if is_strictly_below(ctx, &y.0, &p.0)? && is_strictly_below(ctx, &y.1, &p.1)? {
            below.push(y);
        }
    }
    match below.as_slice() {
        [] => Ok((BasisInterval::closed(&p.0), BasisInterval::closed(&p.1))),
        [y] => Ok((BasisInterval::half_open(ctx, &y.0, &p.0)?, BasisInterval::half_open(ctx, &y.1, &p.1)?)),
        [a, b, ..] => Err(TopoError::NotAntichain(format!("({}, {}) and ({}, {}) both lie below", a.0, a.1, b.0, b.1))),
    }
}

/// Per-`z` outcome of the separator.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatedPoint {
    pub z: NodeRef,
    pub v: BasisInterval,
    /// `isolated`, `case_i`, `clear` or `shrunk`.
    pub provenance: String,
    pub n: Option<usize>,
    pub disjoint: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Separator {
    /// `U_a` for each member of the antichain, in input order.
    pub u: Vec<(NodeRef, BasisInterval)>,
    pub points: Vec<SeparatedPoint>,
}

impl Separator {
    pub fn u_set(&self) -> OpenSetExpr {
        OpenSetExpr { parts: self.u.iter().map(|(_, i)| i.clone()).collect() }
    }

    pub fn all_disjoint(&self) -> bool {
        self.points.iter().all(|p| p.disjoint)
    }
}

/// `a''` on the ladder of `a`'s level, above `a'`, above every level of
/// `d` below `dom(a)`, and with `c(a'') ≥ (c(a') + c(a))/2`.
fn pick_foot(st: &TreeState, a: &NodeRef, a1: &NodeRef, d: &[Ordinal]) -> TopoResult<NodeRef> {
    let NodeKind::Limit { alpha, x } = a.kind() else {
        return Err(TopoError::Input(format!("{a} is not a limit node")));
    };
    let sup_d = d.iter().filter(|l| *l < alpha).max().cloned().unwrap_or_default();
    let c1 = match a1.exact_c() {
        Some(c) => c,
        None => c_bounds(st, a1, &pow2_inv(40))?.lo,
    };
    let start = st.ladder_index(alpha, x.level())?.unwrap_or(0);
    let mut prec = pow2_inv(8);
    for m in start..start + 200 {
        let lv = ladder(alpha, m)?;
        if lv <= sup_d || lv <= *a1.level() {
            continue;
        }
        let cand = restrict(st, a, &lv)?;
        let c = cand.exact_c().expect("ladder points are successor levels");
        loop {
            let b = c_bounds(st, a, &prec)?;
            let mid_hi = (&c1 + &b.hi) / rat(2, 1);
            if c >= mid_hi {
                return Ok(cand);
            }
            let mid_lo = (&c1 + &b.lo) / rat(2, 1);
            if c < mid_lo || prec < pow2_inv(120) {
                break;
            }
            prec /= rat(2, 1);
        }
    }
    Err(TopoError::Infeasible(format!("no foot a'' for {a}")))
}

fn u_of(st: &TreeState, a: &NodeRef, o: &OpenSetExpr, d: &[Ordinal]) -> TopoResult<BasisInterval> {
    if is_isolated(a) {
        return BasisInterval::singleton(st, a);
    }
    let part = o
        .parts
        .iter()
        .find(|p| p.contains(st, a).unwrap_or(false))
        .ok_or_else(|| TopoError::Input(format!("O_a does not contain {a}")))?;
    let a1 = part.lo.clone().unwrap_or_else(NodeRef::root);
    let a2 = pick_foot(st, a, &a1, d)?;
    BasisInterval::half_open(st, &a2, a)
}

/// The normality separator for an antichain `a_set`, a level set `d`
/// disjoint from its levels, and a pairwise disjoint family `o` with
/// `o[i] ∋ a_set[i]`. Each `z` in `zs` (nodes at levels in `d`) gets a
/// neighbourhood `V_z`, checked disjoint from `U` exactly.
pub fn normality_separator(
    st: &TreeState,
    a_set: &[NodeRef],
    d: &[Ordinal],
    o: &[OpenSetExpr],
    zs: &[NodeRef],
) -> TopoResult<Separator> {
    if a_set.len() != o.len() {
        return Err(TopoError::Input("one open set per antichain member is required".into()));
    }
    for (i, a) in a_set.iter().enumerate() {
        if d.contains(a.level()) {
            return Err(TopoError::Input(format!("{a} sits on a level of D")));
        }
        if !o[i].contains(st, a)? {
            return Err(TopoError::Input(format!("O_{i} does not contain {a}")));
        }
        for (j, b) in a_set.iter().enumerate().skip(i + 1) {
            if is_below_eq(st, a, b)? || is_below_eq(st, b, a)? {
                return Err(TopoError::NotAntichain(format!("{a} and {b}")));
            }
            if o[i].meets(st, &o[j])? {
                return Err(TopoError::Input(format!("O_{i} and O_{j} meet")));
            }
        }
    }
    let mut u = Vec::with_capacity(a_set.len());
    for (a, oa) in a_set.iter().zip(o) {
        u.push((a.clone(), u_of(st, a, oa, d)?));
    }
    let u_set = OpenSetExpr { parts: u.iter().map(|(_, i)| i.clone()).collect() };
    let mut points = Vec::new();
    for z in zs {
        if !d.contains(z.level()) {
            return Err(TopoError::Input(format!("{z} is not on a level of D")));
        }
        let (v, provenance, n) = v_of(st, z, a_set, &u)?;
        let disjoint = !OpenSetExpr { parts: vec![v.clone()] }.meets(st, &u_set)?;
        points.push(SeparatedPoint { z: z.clone(), v, provenance: provenance.into(), n, disjoint });
    }
    Ok(Separator { u, points })
}

fn v_of(
    st: &TreeState,
    z: &NodeRef,
    a_set: &[NodeRef],
    u: &[(NodeRef, BasisInterval)],
) -> TopoResult<(BasisInterval, &'static str, Option<usize>)> {
    if is_isolated(z) {
        return Ok((BasisInterval::singleton(st, z)?, "isolated", None));
    }
    let NodeKind::Limit { alpha, x } = z.kind() else { unreachable!("limit level") };
    // Start past the anchor and past every antichain member below z.
    let mut n = st.ladder_index(alpha, x.level())?.unwrap_or(0);
    for a in a_set {
        if is_strictly_below(st, a, z)? {
            while ladder(alpha, n + 1)? <= *a.level() {
                n += 1;
            }
        }
    }
    let at = |m: usize| -> TopoResult<BasisInterval> { BasisInterval::half_open(st, &restrict(st, z, &ladder(alpha, m)?)?, z) };
    let v = at(n + 1)?;
    if st.case(alpha, n)? == Case::I {
        let top = restrict(st, z, &ladder(alpha, n + 1)?)?;
        let hit_ok = matches!(&st.record(alpha).and_then(|r| r.steps.get(n)).and_then(|s| s.hit.clone()),
            Some(Hit::One { target, .. }) if *target == top);
        for a in a_set {
            if hit_ok && is_below_eq(st, a, &top)? {
                return Ok((v, "case_i", Some(n)));
            }
        }
    }
    let hits: Vec<&BasisInterval> = u.iter().map(|(_, i)| i).filter(|i| v.meets(st, i).unwrap_or(true)).collect();
    if hits.is_empty() {
        return Ok((v, "clear", Some(n)));
    }
    for m in n + 2..n + 2 + 200 {
        let vm = at(m)?;
        let mut clear = true;
        for i in &hits {
            if vm.meets(st, i)? {
                clear = false;
                break;
            }
        }
        if clear {
            return Ok((vm, "shrunk", Some(m)));
        }
    }
    Err(TopoError::Infeasible(format!("{z}")))
}

/// A pairwise disjoint fixture `O_a = (a↾β_k, a]` (or `{a}`), raising `k`
/// until the family is disjoint.
pub fn fixture_o_family(st: &TreeState, a_set: &[NodeRef]) -> TopoResult<Vec<OpenSetExpr>> {
    let mut out: Vec<OpenSetExpr> = Vec::new();
    for a in a_set {
        out.push(OpenSetExpr { parts: vec![foot_interval(st, a, 0)?] });
    }
    for k in 1..64 {
        let mut clash = false;
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if out[i].meets(st, &out[j])? {
                    clash = true;
                }
            }
        }
        if !clash {
            return Ok(out);
        }
        for (i, a) in a_set.iter().enumerate() {
            out[i] = OpenSetExpr { parts: vec![foot_interval(st, a, k)?] };
        }
    }
    Err(TopoError::Infeasible("no disjoint fixture family".into()))
}

fn foot_interval(st: &TreeState, a: &NodeRef, k: usize) -> TopoResult<BasisInterval> {
    match a.kind() {
        NodeKind::Limit { alpha, x } => {
            let base = st.ladder_index(alpha, x.level())?.unwrap_or(0);
            BasisInterval::half_open(st, &restrict(st, a, &ladder(alpha, base + k)?)?, a)
        }
        _ => BasisInterval::singleton(st, a),
    }
}

/// `U_n = ⋃ (a_ε(0)↾β_k, a_ε(0)] × (a_ε(1)↾β_k, a_ε(1)]` over `a_ε ∈ D_n`,
/// for `n = 0..=levels`.
pub fn neighborhood_family(st: &TreeState, k: usize, levels: u64) -> TopoResult<Vec<SquareOpen>> {
    let mut out = Vec::new();
    for n in 0..=levels {
        let mut boxes = Vec::new();
        for (eps, a) in st.dn_family(n) {
            let lo0 = restrict(st, &a.0, &ladder(&eps, k)?)?;
            let lo1 = restrict(st, &a.1, &ladder(&eps, k)?)?;
            boxes.push((BasisInterval::half_open(st, &lo0, &a.0)?, BasisInterval::half_open(st, &lo1, &a.1)?));
        }
        out.push(SquareOpen { boxes });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderProbe {
    pub tau: Ordinal,
    pub f: Option<u64>,
    pub inside: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CmcEntry {
    pub alpha: Ordinal,
    pub g: u64,
    pub foot: Option<(Ordinal, Ordinal)>,
    pub probes: Vec<LadderProbe>,
    /// Every ladder restriction past the foot lies in `U_{g(α)}`, so `f`
    /// exceeds `g(α)` there: the opposite of what cofinal `f ≤ g(α)` needs.
    pub pattern: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CmcReport {
    /// No probed pair lies in every supplied `U_n`.
    pub vanishes: bool,
    pub entries: Vec<CmcEntry>,
}

/// `f(p)` = least `n` with `p ∉ U_n`, or `None` when `p` is in all of them.
pub fn f_value(ctx: &dyn LimitStructure, u: &[SquareOpen], p: &Pair) -> TopoResult<Option<u64>> {
    for (n, un) in u.iter().enumerate() {
        if !un.contains(ctx, p)? {
            return Ok(Some(n as u64));
        }
    }
    Ok(None)
}

/// Probes the local pattern of the cmc argument on `D_n` (from the state)
/// and a supplied decreasing family `u` with `u[n] ⊇ D_n`.
pub fn cmc_harness(st: &TreeState, d: &[Vec<Pair>], u: &[SquareOpen], probes: usize) -> TopoResult<CmcReport> {
    for n in 1..d.len() {
        if d[n].iter().any(|p| !d[n - 1].contains(p)) {
            return Err(TopoError::Input(format!("D_{n} is not contained in D_{}", n - 1)));
        }
    }
    for (n, dn) in d.iter().enumerate() {
        let Some(un) = u.get(n) else { break };
        for p in dn {
            if !un.contains(st, p)? {
                return Err(TopoError::Input(format!("U_{n} misses a member of D_{n}")));
            }
        }
    }
    let mut entries = Vec::new();
    let mut vanishes = true;
    for (alpha, a) in &st.e_table().a {
        let g = st.g_of(alpha).map_err(|e| TopoError::Input(e.to_string()))?;
        let Some(ug) = u.get(g as usize) else { continue };
        let foot = ug.boxes.iter().find(|b| box_contains(st, b, a).unwrap_or(false)).map(|b| {
            let lv = |i: &BasisInterval| i.lo.as_ref().map_or(Ordinal::zero(), |l| l.level().clone());
            (lv(&b.0), lv(&b.1))
        });
        let mut out = Vec::new();
        let mut pattern = foot.is_some();
        let floor = foot.clone().map(|(a0, a1)| a0.max(a1)).unwrap_or_default();
        let mut m = 0;
        while out.len() < probes {
            let tau = ladder(alpha, m)?;
            m += 1;
            if tau <= floor {
                continue;
            }
            let p = (restrict(st, &a.0, &tau)?, restrict(st, &a.1, &tau)?);
            let f = f_value(st, u, &p)?;
            let inside = ug.contains(st, &p)?;
            if f.is_none() {
                vanishes = false;
            }
            pattern &= inside && f.is_none_or(|v| v > g);
            out.push(LadderProbe { tau, f, inside });
        }
        if f_value(st, u, a)?.is_none() {
            vanishes = false;
        }
        entries.push(CmcEntry { alpha: alpha.clone(), g, foot, probes: out, pattern });
    }
    Ok(CmcReport { vanishes, entries })
}

/// `b_x^α` for each sampled anchor: a convenient antichain source.
pub fn limit_antichain(st: &TreeState, alpha: &Ordinal) -> TopoResult<Vec<NodeRef>> {
    let mut out: Vec<NodeRef> = Vec::new();
    for x in st.sample(&ladder(alpha, 1)?)? {
        let b = make_limit(st, alpha, &x)?;
        if !out.contains(&b) {
            out.push(b);
        }
    }
    Ok(out)
}
