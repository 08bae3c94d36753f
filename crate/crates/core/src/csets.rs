//! Symbolic closed sets of ordinals and piecewise C-sequences.
//!
//! A [`ClosedSetExpr`] is a list of blocks. Every query flattens the blocks
//! into [`Atom`]s, of which there are two shapes:
//!
//! - a span: every multiple of ω^e in `[lo, hi)` (positive when `e > 0`);
//! - a progression: `first ⊕ j` for `j < count`, where `⊕` adds `j` to the
//!   coefficient of ω^e and keeps every other term of `first`.
//!
//! Spans carry limit points of their own; progressions never do. Equality of
//! sets is decided exactly by a covering walk (see [`ClosedSetExpr::is_subset`]).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordinals::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsetError {
    #[error("blocks out of order or overlapping near {0}")]
    Disorder(Ordinal),
    #[error("set is not closed: missing limit point {0}")]
    NotClosed(Ordinal),
    #[error("bad ladder: {0}")]
    BadLadder(String),
    #[error("limit-union certification failed: {0}")]
    Certification(String),
    #[error("C-sequence: {0}")]
    Sequence(String),
}

/// Adds `j` to the coefficient of ω^e.
fn bump(x: &Ordinal, e: u32, j: u64) -> Ordinal {
    let c = x
        .coefficient(e)
        .checked_add(j)
        .expect("ordinal coefficient overflow");
    x.with_coefficient(e, c)
}

fn omega_pow(e: u32) -> Ordinal {
    Ordinal::omega_pow(e)
}

/// A maximal elementary piece of a closed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Span { exp: u32, lo: Ordinal, hi: Ordinal },
    Prog { exp: u32, first: Ordinal, count: Option<u64> },
}

impl Atom {
    fn span(exp: u32, lo: Ordinal, hi: Ordinal) -> Option<Atom> {
        let a = Atom::Span { exp, lo, hi };
        let min = a.min_raw();
        match &a {
            Atom::Span { hi, .. } if min < *hi => Some(Atom::Span { exp, lo: min, hi: hi.clone() }),
            _ => None,
        }
    }

    fn prog(exp: u32, first: Ordinal, count: Option<u64>) -> Option<Atom> {
        match count {
            Some(0) => None,
            Some(1) => Some(Atom::Prog { exp: 0, first, count: Some(1) }),
            _ => Some(Atom::Prog { exp, first, count }),
        }
    }

    fn point(a: Ordinal) -> Atom {
        Atom::Prog { exp: 0, first: a, count: Some(1) }
    }

    /// Index of the first multiple of ω^e in a span, as a coefficient.
    fn span_start(exp: u32, lo: &Ordinal) -> Ordinal {
        let a = lo.ceil_div_omega_pow(exp);
        if exp > 0 && a.is_zero() {
            Ordinal::one()
        } else {
            a
        }
    }

    fn min_raw(&self) -> Ordinal {
        match self {
            Atom::Span { exp, lo, .. } => Self::span_start(*exp, lo).omega_pow_times(*exp),
            Atom::Prog { first, .. } => first.clone(),
        }
    }

    pub fn min(&self) -> Ordinal {
        self.min_raw()
    }

    pub fn elem(&self, j: u64) -> Option<Ordinal> {
        match self {
            Atom::Prog { exp, first, count } => {
                (count.is_none_or(|c| j < c)).then(|| bump(first, *exp, j))
            }
            Atom::Span { .. } => self.element_at(&Ordinal::nat(j)),
        }
    }

    /// Largest element, if attained.
    pub fn max(&self) -> Option<Ordinal> {
        match self {
            Atom::Prog { exp, first, count } => count.map(|c| bump(first, *exp, c - 1)),
            Atom::Span { exp, hi, .. } => {
                let h = hi.high_part(*exp);
                if h < *hi {
                    Some(h)
                } else if hi.last_exponent() == Some(*exp) {
                    Some(hi.with_coefficient(*exp, hi.coefficient(*exp) - 1))
                } else {
                    None
                }
            }
        }
    }

    /// Supremum when it is not attained.
    pub fn unattained_sup(&self) -> Option<Ordinal> {
        if self.max().is_some() {
            return None;
        }
        Some(match self {
            Atom::Span { hi, .. } => hi.clone(),
            Atom::Prog { exp, first, .. } => first.high_part(exp + 1).add(&omega_pow(exp + 1)),
        })
    }

    /// Least ordinal strictly above every element.
    pub fn ssup(&self) -> Ordinal {
        match self.max() {
            Some(m) => m.succ(),
            None => self.unattained_sup().unwrap(),
        }
    }

    pub fn contains(&self, x: &Ordinal) -> bool {
        match self {
            Atom::Span { exp, lo, hi } => {
                lo <= x && x < hi && x.is_multiple_of_omega_pow(*exp) && (*exp == 0 || !x.is_zero())
            }
            Atom::Prog { exp, first, count } => {
                if x.high_part(exp + 1) != first.high_part(exp + 1)
                    || x.low_part(*exp) != first.low_part(*exp)
                {
                    return false;
                }
                let (cx, cf) = (x.coefficient(*exp), first.coefficient(*exp));
                cx >= cf && count.is_none_or(|c| cx - cf < c)
            }
        }
    }

    pub fn otp(&self) -> Ordinal {
        match self {
            Atom::Prog { count: Some(c), .. } => Ordinal::nat(*c),
            Atom::Prog { count: None, .. } => Ordinal::omega(),
            Atom::Span { exp, lo, hi } => {
                let a = Self::span_start(*exp, lo);
                let b = hi.ceil_div_omega_pow(*exp);
                a.sub_left(&b).unwrap_or_default()
            }
        }
    }

    pub fn element_at(&self, xi: &Ordinal) -> Option<Ordinal> {
        match self {
            Atom::Prog { .. } => xi.as_nat().and_then(|j| self.elem(j)),
            Atom::Span { exp, lo, hi } => {
                let x = Self::span_start(*exp, lo).add(xi).omega_pow_times(*exp);
                (x < *hi).then_some(x)
            }
        }
    }

    /// Number of progression elements below `alpha` (`None` = infinitely many).
    fn prog_count_below(exp: u32, first: &Ordinal, count: Option<u64>, alpha: &Ordinal) -> Option<u64> {
        if alpha <= first {
            return Some(0);
        }
        let h = first.high_part(exp + 1);
        if *alpha >= h.add(&omega_pow(exp + 1)) {
            return count;
        }
        let n = alpha.coefficient(exp) - first.coefficient(exp)
            + u64::from(first.low_part(exp) < alpha.low_part(exp));
        Some(count.map_or(n, |c| c.min(n)))
    }

    pub fn intersect_below(&self, alpha: &Ordinal) -> Option<Atom> {
        match self {
            Atom::Span { exp, lo, hi } => Atom::span(*exp, lo.clone(), hi.clone().min(alpha.clone())),
            Atom::Prog { exp, first, count } => {
                let n = Self::prog_count_below(*exp, first, *count, alpha);
                Atom::prog(*exp, first.clone(), n)
            }
        }
    }

    fn acc_internal(&self) -> Option<Atom> {
        match self {
            Atom::Span { exp, lo, hi } => Atom::span(exp + 1, lo.succ(), hi.clone()),
            Atom::Prog { .. } => None,
        }
    }

    /// The first `n` elements in increasing order.
    pub fn first_elements(&self, n: usize) -> Vec<Ordinal> {
        let mut out = Vec::new();
        match self {
            Atom::Prog { .. } => {
                for j in 0..n as u64 {
                    match self.elem(j) {
                        Some(x) => out.push(x),
                        None => break,
                    }
                }
            }
            Atom::Span { exp, hi, .. } => {
                let step = omega_pow(*exp);
                let mut x = self.min();
                while out.len() < n && x < *hi {
                    let next = x.add(&step);
                    out.push(x);
                    x = next;
                }
            }
        }
        out
    }
}

/// An ω-ladder: finitely many prefix points followed by `first ⊕ n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LadderRule {
    pub exp: u32,
    pub first: Ordinal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ladder {
    pub prefix: Vec<Ordinal>,
    pub rule: LadderRule,
}

impl Ladder {
    pub fn new(prefix: Vec<Ordinal>, exp: u32, first: Ordinal) -> Result<Self, CsetError> {
        for w in prefix.windows(2) {
            if w[0] >= w[1] {
                return Err(CsetError::BadLadder("prefix not increasing".into()));
            }
        }
        if prefix.last().is_some_and(|p| *p >= first) {
            return Err(CsetError::BadLadder("prefix reaches the rule".into()));
        }
        Ok(Ladder { prefix, rule: LadderRule { exp, first } })
    }

    /// `n ↦ base + ω^exp·n` for `n >= start`.
    pub fn arithmetic(base: &Ordinal, exp: u32, start: u64) -> Self {
        let first = base.add(&Ordinal::term(exp, start));
        Ladder { prefix: Vec::new(), rule: LadderRule { exp, first } }
    }

    pub fn sup(&self) -> Ordinal {
        self.rule.first.high_part(self.rule.exp + 1).add(&omega_pow(self.rule.exp + 1))
    }

    pub fn point(&self, n: u64) -> Ordinal {
        match self.prefix.get(n as usize) {
            Some(p) => p.clone(),
            None => bump(&self.rule.first, self.rule.exp, n - self.prefix.len() as u64),
        }
    }

    fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.prefix.iter().cloned().map(Atom::point).collect();
        v.push(Atom::Prog { exp: self.rule.exp, first: self.rule.first.clone(), count: None });
        v
    }
}

/// A finitely materialized end-extension chain with an ω-continuation. The
/// denoted set is the last stage followed by the continuation ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitUnion {
    pub stages: Vec<ClosedSetExpr>,
    pub cont: Ladder,
    pub otp: Ordinal,
}

impl LimitUnion {
    pub fn new(stages: Vec<ClosedSetExpr>, cont: Ladder, otp: Ordinal) -> Result<Self, CsetError> {
        let lu = LimitUnion { stages, cont, otp };
        lu.certify()?;
        Ok(lu)
    }

    /// Checks end-extension of the stages and the order-type annotation.
    pub fn certify(&self) -> Result<(), CsetError> {
        let bad = |m: String| Err(CsetError::Certification(m));
        let Some(last) = self.stages.last() else {
            return bad("no stages".into());
        };
        for (i, w) in self.stages.windows(2).enumerate() {
            if !w[1].end_extends(&w[0]) {
                return bad(format!("stage {} does not end-extend stage {}", i + 1, i));
            }
        }
        if self.cont.point(0) < last.ssup() {
            return bad("continuation starts inside the last stage".into());
        }
        let expected = last.otp().add(&Ordinal::omega());
        if self.otp != expected {
            return bad(format!("annotation {} but unfolding gives {}", self.otp, expected));
        }
        if let Some(s) = self.stages.iter().find(|s| s.otp() > self.otp) {
            return bad(format!("stage of type {} exceeds annotation", s.otp()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Point(Ordinal),
    /// Multiples of ω^exp in `[lo, hi)`; `exp = 0` is a plain interval.
    Span { exp: u32, lo: Ordinal, hi: Ordinal },
    /// Finite progression `first ⊕ j`, `j < count`.
    Prog { exp: u32, first: Ordinal, count: u64 },
    Ladder(Ladder),
    Lim(Box<LimitUnion>),
}

impl Block {
    fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Block::Point(a) => out.push(Atom::point(a.clone())),
            Block::Span { exp, lo, hi } => out.extend(Atom::span(*exp, lo.clone(), hi.clone())),
            Block::Prog { exp, first, count } => out.extend(Atom::prog(*exp, first.clone(), Some(*count))),
            Block::Ladder(l) => out.extend(l.atoms()),
            Block::Lim(lu) => {
                out.extend(lu.stages.last().map(|s| s.atoms()).unwrap_or_default());
                out.extend(lu.cont.atoms());
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BlockRepr {
    Pt(Ordinal),
    Iv((Ordinal, Ordinal)),
    Span { exp: u32, lo: Ordinal, hi: Ordinal },
    Prog { exp: u32, first: Ordinal, count: u64 },
    Ladder { prefix: Vec<Ordinal>, rule: LadderRule, sup: Ordinal },
    Lim { stages: Vec<ClosedSetExpr>, cont: Box<BlockRepr>, otp: Ordinal },
}

impl From<&Ladder> for BlockRepr {
    fn from(l: &Ladder) -> Self {
        BlockRepr::Ladder { prefix: l.prefix.clone(), rule: l.rule.clone(), sup: l.sup() }
    }
}

impl From<&Block> for BlockRepr {
    fn from(b: &Block) -> Self {
        match b {
            Block::Point(a) => BlockRepr::Pt(a.clone()),
            Block::Span { exp: 0, lo, hi } => BlockRepr::Iv((lo.clone(), hi.clone())),
            Block::Span { exp, lo, hi } => BlockRepr::Span { exp: *exp, lo: lo.clone(), hi: hi.clone() },
            Block::Prog { exp, first, count } => BlockRepr::Prog { exp: *exp, first: first.clone(), count: *count },
            Block::Ladder(l) => l.into(),
            Block::Lim(lu) => BlockRepr::Lim {
                stages: lu.stages.clone(),
                cont: Box::new((&lu.cont).into()),
                otp: lu.otp.clone(),
            },
        }
    }
}

fn ladder_from_repr(r: BlockRepr) -> Result<Ladder, CsetError> {
    match r {
        BlockRepr::Ladder { prefix, rule, sup } => {
            let l = Ladder::new(prefix, rule.exp, rule.first)?;
            if l.sup() != sup {
                return Err(CsetError::BadLadder(format!("declared sup {sup}, rule gives {}", l.sup())));
            }
            Ok(l)
        }
        _ => Err(CsetError::BadLadder("continuation must be a ladder".into())),
    }
}

impl TryFrom<BlockRepr> for Block {
    type Error = CsetError;

    fn try_from(r: BlockRepr) -> Result<Self, CsetError> {
        Ok(match r {
            BlockRepr::Pt(a) => Block::Point(a),
            BlockRepr::Iv((lo, hi)) => Block::Span { exp: 0, lo, hi },
            BlockRepr::Span { exp, lo, hi } => Block::Span { exp, lo, hi },
            BlockRepr::Prog { exp, first, count } => Block::Prog { exp, first, count },
            r @ BlockRepr::Ladder { .. } => Block::Ladder(ladder_from_repr(r)?),
            BlockRepr::Lim { stages, cont, otp } => {
                Block::Lim(Box::new(LimitUnion::new(stages, ladder_from_repr(*cont)?, otp)?))
            }
        })
    }
}

/// A closed set of ordinals, closed in the order topology of its supremum.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ClosedSetExpr {
    blocks: Vec<Block>,
}

impl Serialize for ClosedSetExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<BlockRepr> = self.blocks.iter().map(BlockRepr::from).collect();
        reprs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedSetExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let reprs = Vec::<BlockRepr>::deserialize(d)?;
        let blocks = reprs
            .into_iter()
            .map(Block::try_from)
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        ClosedSetExpr::from_blocks(blocks).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for ClosedSetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match a {
                Atom::Span { exp: 0, lo, hi } => write!(f, "[{lo}, {hi})")?,
                Atom::Span { exp, lo, hi } => write!(f, "w^{exp}-multiples in [{lo}, {hi})")?,
                Atom::Prog { count: Some(1), first, .. } => write!(f, "{first}")?,
                Atom::Prog { exp, first, count } => {
                    write!(f, "{first} +w^{exp} x {}", count.map_or("w".to_string(), |c| c.to_string()))?
                }
            }
        }
        write!(f, "}}")
    }
}

impl ClosedSetExpr {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn point(a: Ordinal) -> Self {
        ClosedSetExpr { blocks: vec![Block::Point(a)] }
    }

    /// `[lo, hi)`.
    pub fn interval(lo: Ordinal, hi: Ordinal) -> Self {
        if lo >= hi {
            return Self::empty();
        }
        ClosedSetExpr { blocks: vec![Block::Span { exp: 0, lo, hi }] }
    }

    pub fn ladder(l: Ladder) -> Self {
        ClosedSetExpr { blocks: vec![Block::Ladder(l)] }
    }

    pub fn limit_union(lu: LimitUnion) -> Self {
        ClosedSetExpr { blocks: vec![Block::Lim(Box::new(lu))] }
    }

    /// Builds a set from finitely many points, in any order.
    pub fn points<I: IntoIterator<Item = Ordinal>>(pts: I) -> Self {
        let mut v: Vec<Ordinal> = pts.into_iter().collect();
        v.sort();
        v.dedup();
        ClosedSetExpr { blocks: v.into_iter().map(Block::Point).collect() }
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self, CsetError> {
        let s = ClosedSetExpr { blocks };
        s.validate()?;
        Ok(s)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Concatenates a set lying entirely above this one.
    pub fn then(&self, other: &ClosedSetExpr) -> Result<Self, CsetError> {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Self::from_blocks(blocks)
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        for b in &self.blocks {
            b.atoms(&mut out);
        }
        out
    }

    /// Ordering, disjointness and closedness of the flattened atoms.
    pub fn validate(&self) -> Result<(), CsetError> {
        let atoms = self.atoms();
        for w in atoms.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.min() < a.ssup() {
                return Err(CsetError::Disorder(b.min()));
            }
            if let Some(s) = a.unattained_sup() {
                if b.min() != s {
                    return Err(CsetError::NotClosed(s));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.atoms().is_empty()
    }

    pub fn contains(&self, x: &Ordinal) -> bool {
        self.atoms().iter().any(|a| a.contains(x))
    }

    pub fn min(&self) -> Option<Ordinal> {
        self.atoms().first().map(Atom::min)
    }

    pub fn max(&self) -> Option<Ordinal> {
        self.atoms().last().and_then(Atom::max)
    }

    /// Least upper bound (0 for the empty set).
    pub fn sup(&self) -> Ordinal {
        match self.atoms().last() {
            None => Ordinal::zero(),
            Some(a) => a.max().unwrap_or_else(|| a.unattained_sup().unwrap()),
        }
    }

    /// Least ordinal strictly above every element.
    pub fn ssup(&self) -> Ordinal {
        self.atoms().last().map(Atom::ssup).unwrap_or_default()
    }

    pub fn otp(&self) -> Ordinal {
        self.atoms().iter().fold(Ordinal::zero(), |acc, a| acc.add(&a.otp()))
    }

    /// `s ∩ α`.
    pub fn intersect_below(&self, alpha: &Ordinal) -> Self {
        let mut blocks = Vec::new();
        for a in self.atoms() {
            if a.min() >= *alpha {
                break;
            }
            if let Some(cut) = a.intersect_below(alpha) {
                blocks.push(atom_block(cut));
            }
        }
        ClosedSetExpr { blocks }
    }

    /// `s ∖ β`.
    pub fn intersect_from(&self, beta: &Ordinal) -> Self {
        let mut blocks = Vec::new();
        for a in self.atoms() {
            if a.ssup() <= *beta {
                continue;
            }
            let cut = match &a {
                Atom::Span { exp, lo, hi } => Atom::span(*exp, lo.clone().max(beta.clone()), hi.clone()),
                Atom::Prog { exp, first, count } => {
                    let k = Atom::prog_count_below(*exp, first, *count, beta).unwrap_or(0);
                    Atom::prog(*exp, bump(first, *exp, k), count.map(|c| c - k))
                }
            };
            blocks.extend(cut.map(atom_block));
        }
        ClosedSetExpr { blocks }
    }

    /// The ξ-th element in increasing order.
    pub fn element_at(&self, xi: &Ordinal) -> Option<Ordinal> {
        let mut xi = xi.clone();
        for a in self.atoms() {
            let o = a.otp();
            if xi < o {
                return a.element_at(&xi);
            }
            xi = o.sub_left(&xi).unwrap();
        }
        None
    }

    /// The first `n` elements (the initial ω-segment when the set is longer).
    pub fn first_elements(&self, n: usize) -> Vec<Ordinal> {
        let mut out = Vec::new();
        for a in self.atoms() {
            if out.len() >= n {
                break;
            }
            let finite = a.otp().as_nat().is_some();
            out.extend(a.first_elements(n - out.len()));
            if !finite {
                break;
            }
        }
        out
    }

    /// Accumulation points: `{α ∈ s : sup(s ∩ α) = α > 0}`.
    pub fn acc(&self) -> Self {
        let atoms = self.atoms();
        let mut out = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            let m = a.min();
            if i > 0 && !m.is_zero() && atoms[i - 1].unattained_sup().as_ref() == Some(&m) {
                out.push(Atom::point(m));
            }
            out.extend(a.acc_internal());
        }
        ClosedSetExpr { blocks: out.into_iter().map(atom_block).collect() }
    }

    pub fn is_acc(&self, x: &Ordinal) -> bool {
        self.acc().contains(x)
    }

    /// `s ∖ acc(s)`, as a membership view.
    pub fn nacc(&self) -> Nacc {
        Nacc { set: self.clone(), acc: self.acc() }
    }

    /// Exact inclusion test.
    pub fn is_subset(&self, other: &ClosedSetExpr) -> bool {
        let theirs = other.atoms();
        self.atoms().iter().all(|a| atom_covered(a, &theirs))
    }

    /// Exact set equality.
    pub fn same_set(&self, other: &ClosedSetExpr) -> bool {
        self.atoms() == other.atoms() || (self.is_subset(other) && other.is_subset(self))
    }

    /// `self ∩ ssup(prev) = prev`.
    pub fn end_extends(&self, prev: &ClosedSetExpr) -> bool {
        self.intersect_below(&prev.ssup()).same_set(prev)
    }
}

fn atom_block(a: Atom) -> Block {
    match a {
        Atom::Span { exp, lo, hi } => Block::Span { exp, lo, hi },
        Atom::Prog { first, count: Some(1), .. } => Block::Point(first),
        Atom::Prog { exp, first, count: Some(c) } => Block::Prog { exp, first, count: c },
        Atom::Prog { exp, first, count: None } => {
            Block::Ladder(Ladder { prefix: Vec::new(), rule: LadderRule { exp, first } })
        }
    }
}

const COVER_STEP_CAP: usize = 1 << 20;

/// Whether every element of `a` lies in one of `bs`. Each step either
/// passes the end of a covering atom or advances a run by one element; an
/// atom that does not share the run's step meets each run at most once, so
/// the walk is finite.
fn atom_covered(a: &Atom, bs: &[Atom]) -> bool {
    let find = |x: &Ordinal| bs.iter().find(|b| b.contains(x));
    match a {
        Atom::Span { exp, hi, .. } => {
            let e = *exp;
            let mut x = a.min();
            for _ in 0..COVER_STEP_CAP {
                if x >= *hi {
                    return true;
                }
                let Some(b) = find(&x) else { return false };
                x = match b {
                    Atom::Span { exp: eb, .. } if *eb <= e => {
                        Atom::span_start(e, &b.ssup()).omega_pow_times(e)
                    }
                    Atom::Prog { exp: eb, first, count } if *eb == e && first.low_part(e).is_zero() => {
                        match count {
                            None => Atom::span_start(e, &b.ssup()).omega_pow_times(e),
                            Some(_) => b.max().unwrap().add(&omega_pow(e)),
                        }
                    }
                    _ => x.add(&omega_pow(e)),
                };
            }
            false
        }
        Atom::Prog { exp, first, count } => {
            let e = *exp;
            let low = first.low_part(e);
            let high = first.high_part(e + 1);
            let mut j = 0u64;
            for _ in 0..COVER_STEP_CAP {
                if count.is_some_and(|c| j >= c) {
                    return true;
                }
                let x = bump(first, e, j);
                let Some(b) = find(&x) else { return false };
                let next = match b {
                    Atom::Span { exp: eb, .. } if *eb <= e && low.is_multiple_of_omega_pow(*eb) => {
                        Atom::prog_count_below(e, first, *count, &b.ssup())
                    }
                    Atom::Prog { exp: eb, first: fb, count: cb }
                        if *eb == e && fb.low_part(e) == low && fb.high_part(e + 1) == high =>
                    {
                        cb.map(|c| fb.coefficient(e) + c - first.coefficient(e))
                    }
                    _ => Some(j + 1),
                };
                match next {
                    None => return true,
                    Some(n) => j = n.max(j + 1),
                }
            }
            false
        }
    }
}

/// Non-accumulation points of a closed set.
#[derive(Debug, Clone)]
pub struct Nacc {
    set: ClosedSetExpr,
    acc: ClosedSetExpr,
}

impl Nacc {
    pub fn contains(&self, x: &Ordinal) -> bool {
        self.set.contains(x) && !self.acc.contains(x)
    }

    /// The first `n` non-accumulation points.
    pub fn first_elements(&self, n: usize) -> Vec<Ordinal> {
        // acc points are sparse in each ω-run, so a modest overscan suffices
        let mut scan = n.max(1) * 2;
        loop {
            let cand = self.set.first_elements(scan);
            let out: Vec<Ordinal> = cand.iter().filter(|x| !self.acc.contains(x)).take(n).cloned().collect();
            if out.len() >= n || cand.len() < scan {
                return out;
            }
            scan *= 2;
        }
    }
}

/// One piece of a piecewise C-sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    /// `C_at = set`.
    Explicit { at: Ordinal, set: ClosedSetExpr },
    /// `C_α = {α-1}` for every α in `(lo, hi)`; the range holds no limits.
    Succ { lo: Ordinal, hi: Ordinal },
    /// `C_α = [base, α)` for every α in `(lo, hi)`.
    Tail { lo: Ordinal, hi: Ordinal, base: Ordinal },
}

impl Segment {
    /// Covered levels as a half-open interval `[from, to)`.
    pub fn range(&self) -> (Ordinal, Ordinal) {
        match self {
            Segment::Explicit { at, .. } => (at.clone(), at.succ()),
            Segment::Succ { lo, hi } | Segment::Tail { lo, hi, .. } => (lo.succ(), hi.clone()),
        }
    }

    pub fn applies(&self, alpha: &Ordinal) -> bool {
        let (from, to) = self.range();
        from <= *alpha && *alpha < to
    }

    fn value(&self, alpha: &Ordinal) -> ClosedSetExpr {
        match self {
            Segment::Explicit { set, .. } => set.clone(),
            Segment::Succ { .. } => ClosedSetExpr::point(alpha.pred().expect("successor level")),
            Segment::Tail { base, .. } => ClosedSetExpr::interval(base.clone(), alpha.clone()),
        }
    }

    /// Checks that every level in range receives a legal club.
    fn check_levels(&self) -> Result<(), CsetError> {
        let fail = |m: String| Err(CsetError::Sequence(m));
        match self {
            Segment::Explicit { at, set } => {
                if set.ssup() > *at {
                    return fail(format!("C_{at} is not a subset of {at}"));
                }
                if set.sup() != at.sup_of_set() {
                    return fail(format!("sup C_{at} = {} but sup {at} = {}", set.sup(), at.sup_of_set()));
                }
            }
            Segment::Succ { lo, hi } => {
                if *hi > lo.high_part(1).add(&Ordinal::omega()) {
                    return fail(format!("successor rule over ({lo}, {hi}) crosses a limit"));
                }
            }
            Segment::Tail { lo, base, .. } => {
                if base > lo {
                    return fail(format!("tail base {base} above range start {lo}"));
                }
            }
        }
        Ok(())
    }
}

/// A C-sequence on `[0, bound]`, possibly sharing an earlier sequence as its
/// initial part.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CSequenceRepr", try_from = "CSequenceRepr")]
pub struct CSequence {
    pub bound: Ordinal,
    pub prefix: Option<Arc<CSequence>>,
    pub segments: Vec<Segment>,
}

/// Flat JSON form: the shared prefix is inlined as leading segments.
#[derive(Serialize, Deserialize)]
struct CSequenceRepr {
    bound: Ordinal,
    segments: Vec<Segment>,
}

impl From<CSequence> for CSequenceRepr {
    fn from(c: CSequence) -> Self {
        CSequenceRepr {
            bound: c.bound.clone(),
            segments: c.all_segments().into_iter().cloned().collect(),
        }
    }
}

impl TryFrom<CSequenceRepr> for CSequence {
    type Error = CsetError;

    fn try_from(r: CSequenceRepr) -> Result<Self, CsetError> {
        CSequence::new(r.bound, None, r.segments)
    }
}

impl fmt::Debug for CSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CSequence")
            .field("bound", &self.bound)
            .field("segments", &self.all_segments())
            .finish()
    }
}

/// Where a quantified claim was established.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// `(α, β)` with `α ∈ acc(C_β)` but `C_β ∩ α ≠ C_α`.
    pub violations: Vec<(Ordinal, Ordinal)>,
    pub segments_proved: usize,
    pub pairs_exact: usize,
    pub pairs_sampled: usize,
}

impl CoherenceReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Levels `β` over which a regressiveness test quantifies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Betas {
    Points(Vec<Ordinal>),
    /// `β ∈ (lo, hi]`.
    Range { lo: Ordinal, hi: Ordinal },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub holds: bool,
    pub failures: Vec<Ordinal>,
    pub segments_proved: usize,
    pub points_checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LevelKind {
    Regressive,
    Avoiding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeStatus {
    None,
    Bounded,
    UnboundedSoFar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeLine {
    pub witnesses: usize,
    pub largest: Option<Ordinal>,
    pub status: ProbeStatus,
}

/// Named membership predicates for probes.
pub type Predicate<'a> = Box<dyn Fn(&Ordinal) -> bool + 'a>;

pub fn pred_successor<'a>() -> Predicate<'a> {
    Box::new(|x: &Ordinal| x.is_successor())
}

pub fn pred_even_coefficients<'a>() -> Predicate<'a> {
    Box::new(|x: &Ordinal| x.terms().iter().all(|&(_, c)| c % 2 == 0))
}

pub fn pred_finite_set<'a>(s: Vec<Ordinal>) -> Predicate<'a> {
    Box::new(move |x: &Ordinal| s.contains(x))
}

const ACC_EXACT_CAP: usize = 256;
const ACC_SAMPLE: usize = 64;

impl CSequence {
    pub fn new(
        bound: Ordinal,
        prefix: Option<Arc<CSequence>>,
        segments: Vec<Segment>,
    ) -> Result<Self, CsetError> {
        let cs = CSequence { bound, prefix, segments };
        cs.validate()?;
        Ok(cs)
    }

    /// First level covered by this sequence's own segments.
    pub fn own_start(&self) -> Ordinal {
        self.prefix.as_ref().map(|p| p.bound.succ()).unwrap_or_default()
    }

    /// Coverage of `[own_start, bound]` and level-wise legality.
    pub fn validate(&self) -> Result<(), CsetError> {
        let mut ranges: Vec<(Ordinal, Ordinal)> = self.segments.iter().map(Segment::range).collect();
        ranges.sort();
        let mut cursor = self.own_start();
        for (from, to) in ranges {
            if from != cursor || to <= from {
                return Err(CsetError::Sequence(format!("levels near {cursor} not covered exactly once")));
            }
            cursor = to;
        }
        if cursor != self.bound.succ() {
            return Err(CsetError::Sequence(format!("coverage stops at {cursor}, bound {}", self.bound)));
        }
        for s in &self.segments {
            s.check_levels()?;
        }
        Ok(())
    }

    pub fn segment_for(&self, alpha: &Ordinal) -> Option<&Segment> {
        if *alpha > self.bound {
            return None;
        }
        if let Some(p) = &self.prefix {
            if *alpha <= p.bound {
                return p.segment_for(alpha);
            }
        }
        self.segments.iter().find(|s| s.applies(alpha))
    }

    /// `C_α`, for `α <= bound`.
    pub fn get(&self, alpha: &Ordinal) -> Option<ClosedSetExpr> {
        self.segment_for(alpha).map(|s| s.value(alpha))
    }

    /// Every segment, prefix first, in level order.
    pub fn all_segments(&self) -> Vec<&Segment> {
        let mut out = self.prefix.as_ref().map(|p| p.all_segments()).unwrap_or_default();
        let mut own: Vec<&Segment> = self.segments.iter().collect();
        own.sort_by(|a, b| a.range().0.cmp(&b.range().0));
        out.extend(own);
        out
    }

    fn check_pair(&self, alpha: &Ordinal, beta: &Ordinal) -> Option<bool> {
        let cb = self.get(beta)?;
        if !cb.is_acc(alpha) {
            return None;
        }
        let ca = self.get(alpha)?;
        Some(cb.intersect_below(alpha).same_set(&ca))
    }

    /// Verifies that every limit in `(base, top]` carries `C_α = [base, α)`.
    fn tail_consistent_below(&self, base: &Ordinal, top: &Ordinal, report: &mut CoherenceReport, beta: &Ordinal) {
        for s in self.all_segments() {
            let (from, to) = s.range();
            if to <= base.succ() || from > *top {
                continue;
            }
            match s {
                Segment::Succ { .. } => {}
                Segment::Tail { base: b, .. } if b == base => {}
                Segment::Tail { lo, .. } => {
                    let first_limit = lo.high_part(1).add(&Ordinal::omega());
                    if first_limit < to && first_limit <= *top && first_limit > *base {
                        report.violations.push((first_limit, beta.clone()));
                    }
                }
                Segment::Explicit { at, set } => {
                    if at.is_limit() && at > base && at <= top {
                        report.pairs_exact += 1;
                        if !set.same_set(&ClosedSetExpr::interval(base.clone(), at.clone())) {
                            report.violations.push((at.clone(), beta.clone()));
                        }
                    }
                }
            }
        }
    }

    /// Coherence: `α ∈ acc(C_β)` implies `C_β ∩ α = C_α`. Rule segments are
    /// handled symbolically, explicit levels point by point, and `samples`
    /// are checked directly.
    pub fn check_coherence(&self, samples: &[(Ordinal, Ordinal)]) -> CoherenceReport {
        let mut report = CoherenceReport::default();
        for s in self.all_segments() {
            match s {
                Segment::Succ { .. } => report.segments_proved += 1,
                Segment::Tail { lo, hi, base } => {
                    if base != lo {
                        self.tail_consistent_below(base, lo, &mut report, &hi.clone());
                    }
                    report.segments_proved += 1;
                }
                Segment::Explicit { at, set } => {
                    for atom in set.acc().atoms() {
                        let finite = atom.otp().as_nat().is_some_and(|n| n as usize <= ACC_EXACT_CAP);
                        let pts = atom.first_elements(if finite { ACC_EXACT_CAP } else { ACC_SAMPLE });
                        for alpha in pts {
                            if finite {
                                report.pairs_exact += 1;
                            } else {
                                report.pairs_sampled += 1;
                            }
                            if self.check_pair(&alpha, at) == Some(false) {
                                report.violations.push((alpha, at.clone()));
                            }
                        }
                    }
                }
            }
        }
        for (alpha, beta) in samples {
            if alpha < beta && *beta <= self.bound {
                report.pairs_sampled += 1;
                if self.check_pair(alpha, beta) == Some(false) {
                    report.violations.push((alpha.clone(), beta.clone()));
                }
            }
        }
        report.violations.sort();
        report.violations.dedup();
        report
    }

    fn level_holds(kind: LevelKind, cut: &ClosedSetExpr, alpha: &Ordinal) -> bool {
        match kind {
            LevelKind::Regressive => cut.otp() < *alpha,
            LevelKind::Avoiding => cut.sup() < *alpha,
        }
    }

    fn level_test(&self, kind: LevelKind, alpha: &Ordinal, betas: &Betas) -> LevelReport {
        let mut rep = LevelReport { holds: true, ..Default::default() };
        let check_point = |rep: &mut LevelReport, beta: &Ordinal| {
            if beta <= alpha {
                return;
            }
            if let Some(cb) = self.get(beta) {
                rep.points_checked += 1;
                if !Self::level_holds(kind, &cb.intersect_below(alpha), alpha) {
                    rep.failures.push(beta.clone());
                }
            }
        };
        match betas {
            Betas::Points(bs) => bs.iter().for_each(|b| check_point(&mut rep, b)),
            Betas::Range { lo, hi } => {
                let (qlo, qhi) = (lo.succ().max(alpha.succ()), hi.clone().min(self.bound.clone()));
                for s in self.all_segments() {
                    let (from, to) = s.range();
                    let (a, b) = (from.max(qlo.clone()), to.min(qhi.succ()));
                    if a >= b {
                        continue;
                    }
                    match s {
                        Segment::Explicit { at, .. } => check_point(&mut rep, at),
                        Segment::Succ { .. } => rep.segments_proved += 1,
                        Segment::Tail { base, .. } => {
                            // every β > α in range cuts to [base, α)
                            rep.segments_proved += 1;
                            let cut = ClosedSetExpr::interval(base.clone(), alpha.clone());
                            if !Self::level_holds(kind, &cut, alpha) {
                                rep.failures.push(a);
                            }
                        }
                    }
                }
            }
        }
        rep.holds = rep.failures.is_empty();
        rep
    }

    /// `otp(C_β ∩ α) < α` for every `β > α` in `betas`.
    pub fn r_test(&self, alpha: &Ordinal, betas: &Betas) -> LevelReport {
        self.level_test(LevelKind::Regressive, alpha, betas)
    }

    /// `sup(C_β ∩ α) < α` for every `β > α` in `betas`.
    pub fn a_test(&self, alpha: &Ordinal, betas: &Betas) -> LevelReport {
        self.level_test(LevelKind::Avoiding, alpha, betas)
    }

    /// Scans the first `depth` points of `nacc(C_α)` against each predicate.
    /// A predicate whose last witness falls in the first half of the scan is
    /// reported as bounded; stationarity itself is not decided.
    pub fn proxy_clause3_probe(&self, preds: &[Predicate<'_>], alpha: &Ordinal, depth: usize) -> Vec<ProbeLine> {
        let pts = self.get(alpha).map(|c| c.nacc().first_elements(depth)).unwrap_or_default();
        preds
            .iter()
            .map(|p| {
                let hits: Vec<usize> = (0..pts.len()).filter(|&i| p(&pts[i])).collect();
                let status = match hits.last() {
                    None => ProbeStatus::None,
                    Some(&i) if 2 * i < pts.len() => ProbeStatus::Bounded,
                    Some(_) => ProbeStatus::UnboundedSoFar,
                };
                ProbeLine {
                    witnesses: hits.len(),
                    largest: hits.last().map(|&i| pts[i].clone()),
                    status,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    fn iv(a: &str, b: &str) -> ClosedSetExpr {
        ClosedSetExpr::interval(o(a), o(b))
    }

    #[test]
    fn acc_of_interval() {
        let acc = iv("w", "w*3").acc();
        assert!(acc.same_set(&ClosedSetExpr::point(o("w*2"))));
        assert!(ClosedSetExpr::point(o("5")).acc().is_empty());
    }

    #[test]
    fn ladder_has_no_accumulation() {
        let l = ClosedSetExpr::ladder(Ladder::arithmetic(&Ordinal::zero(), 1, 1));
        assert_eq!(l.sup(), o("w^2"));
        assert!(l.acc().is_empty());
        let n = l.nacc();
        assert!(n.contains(&o("w*7")));
        assert!(!n.contains(&o("w*7+1")));
    }

    #[test]
    fn order_types() {
        assert_eq!(iv("w+5", "w*2").otp(), o("w"));
        assert_eq!(ClosedSetExpr::points([o("3"), o("9")]).otp(), o("2"));
        let l = ClosedSetExpr::ladder(Ladder::arithmetic(&o("w^2"), 1, 0));
        assert_eq!(l.otp(), o("w"));
        assert_eq!(iv("0", "w^2").otp(), o("w^2"));
        assert_eq!(iv("0", "w^2").acc().otp(), o("w"));
    }

    #[test]
    fn element_lookup_and_cuts() {
        let s = iv("0", "w").then(&iv("w", "w*2+3")).unwrap();
        assert_eq!(s.element_at(&o("w+1")), Some(o("w+1")));
        assert_eq!(s.intersect_below(&o("w+2")).otp(), o("w+2"));
        assert_eq!(s.max(), Some(o("w*2+2")));
        let l = ClosedSetExpr::ladder(Ladder::arithmetic(&Ordinal::zero(), 1, 1));
        assert_eq!(l.intersect_below(&o("w*4+1")).otp(), o("4"));
        assert_eq!(l.intersect_below(&o("w*4")).otp(), o("3"));
    }

    #[test]
    fn set_equality_across_representations() {
        // {ω} followed by the multiples of ω from ω·2 on, versus one span
        let a = ClosedSetExpr::from_blocks(vec![
            Block::Point(o("w")),
            Block::Span { exp: 1, lo: o("w*2"), hi: o("w^2") },
        ])
        .unwrap();
        let b = ClosedSetExpr::from_blocks(vec![Block::Span { exp: 1, lo: o("0"), hi: o("w^2") }]).unwrap();
        let c = ClosedSetExpr::ladder(Ladder::arithmetic(&Ordinal::zero(), 1, 1));
        assert!(a.same_set(&b));
        assert!(b.same_set(&c));
        assert!(!b.same_set(&iv("w", "w^2")));
        assert!(iv("0", "w").then(&iv("w", "w*2")).unwrap().same_set(&iv("0", "w*2")));
    }

    #[test]
    fn closedness_is_enforced() {
        let gap = ClosedSetExpr::from_blocks(vec![
            Block::Span { exp: 0, lo: o("0"), hi: o("w") },
            Block::Point(o("w+1")),
        ]);
        assert!(matches!(gap, Err(CsetError::NotClosed(_))));
    }

    #[test]
    fn json_shapes() {
        let s = iv("w", "w*2");
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"[{"iv":[[[1,1]],[[1,2]]]}]"#);
        let l = ClosedSetExpr::ladder(Ladder::arithmetic(&Ordinal::zero(), 1, 1));
        let j = serde_json::to_value(&l).unwrap();
        assert_eq!(j[0]["ladder"]["sup"], serde_json::json!([[2, 1]]));
        let back: ClosedSetExpr = serde_json::from_value(j).unwrap();
        assert_eq!(back, l);
        let bad = serde_json::json!([{"ladder": {"prefix": [], "rule": {"exp": 1, "first": [[1, 1]]}, "sup": [[1, 5]]}}]);
        assert!(serde_json::from_value::<ClosedSetExpr>(bad).is_err());
    }

    fn bootstrap_like() -> CSequence {
        CSequence::new(
            o("w"),
            None,
            vec![
                Segment::Explicit { at: o("0"), set: ClosedSetExpr::empty() },
                Segment::Succ { lo: o("0"), hi: o("w") },
                Segment::Explicit { at: o("w"), set: iv("0", "w") },
            ],
        )
        .unwrap()
    }

    #[test]
    fn coherence_of_bootstrap_shape() {
        let cs = bootstrap_like();
        assert!(cs.check_coherence(&[(o("3"), o("w"))]).ok());
    }

    #[test]
    fn coherence_violation_is_flagged() {
        let base = bootstrap_like();
        let bad_omega = ClosedSetExpr::interval(o("5"), o("w"));
        let mut segs = base.segments.clone();
        segs[2] = Segment::Explicit { at: o("w"), set: bad_omega };
        segs.push(Segment::Succ { lo: o("w"), hi: o("w*2") });
        segs.push(Segment::Explicit { at: o("w*2"), set: iv("0", "w*2") });
        let cs = CSequence::new(o("w*2"), None, segs).unwrap();
        let rep = cs.check_coherence(&[]);
        assert_eq!(rep.violations, vec![(o("w"), o("w*2"))]);
    }

    #[test]
    fn level_tests() {
        let mut segs = bootstrap_like().segments;
        segs.push(Segment::Tail { lo: o("w"), hi: o("w*2"), base: o("w") });
        segs.push(Segment::Explicit { at: o("w*2"), set: iv("w+5", "w*2") });
        let cs = CSequence::new(o("w*2"), None, segs).unwrap();
        let range = Betas::Range { lo: o("w"), hi: o("w*2") };
        assert!(cs.r_test(&o("w"), &range).holds);
        assert!(cs.a_test(&o("w"), &range).holds);
        assert!(cs.r_test(&o("w"), &Betas::Points(vec![])).holds);

        let mut full = bootstrap_like().segments;
        full.push(Segment::Tail { lo: o("w"), hi: o("w*2"), base: o("0") });
        full.push(Segment::Explicit { at: o("w*2"), set: iv("0", "w*2") });
        let cs = CSequence::new(o("w*2"), None, full).unwrap();
        assert!(!cs.r_test(&o("w"), &range).holds);
        assert!(!cs.a_test(&o("w"), &Betas::Points(vec![o("w*2")])).holds);
    }

    #[test]
    fn probes() {
        let mut segs = bootstrap_like().segments;
        segs.push(Segment::Succ { lo: o("w"), hi: o("w*2") });
        segs.push(Segment::Explicit {
            at: o("w*2"),
            set: ClosedSetExpr::ladder(Ladder::new(vec![], 0, o("w+1")).unwrap()),
        });
        let cs = CSequence::new(o("w*2"), None, segs).unwrap();
        let lines = cs.proxy_clause3_probe(&[pred_successor(), pred_finite_set(vec![o("w+7")])], &o("w*2"), 40);
        assert_eq!(lines[0].witnesses, 40);
        assert_eq!(lines[0].status, ProbeStatus::UnboundedSoFar);
        assert_eq!(lines[1].status, ProbeStatus::Bounded);

        let lad = ClosedSetExpr::ladder(Ladder::new(vec![], 1, o("1")).unwrap());
        let cs = CSequence::new(
            o("w^2"),
            None,
            vec![
                Segment::Explicit { at: o("0"), set: ClosedSetExpr::empty() },
                Segment::Tail { lo: o("0"), hi: o("w^2"), base: o("0") },
                Segment::Explicit { at: o("w^2"), set: lad },
            ],
        )
        .unwrap();
        let lines = cs.proxy_clause3_probe(&[pred_even_coefficients()], &o("w^2"), 50);
        assert_eq!(lines[0].status, ProbeStatus::None);
    }
}
