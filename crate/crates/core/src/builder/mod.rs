//! The level-by-level construction engine for heights below ω².
//!
//! Successor levels are the lazy rule `t ↦ t⌢⟨q⟩` for `q ∈ (c(t), 1)`.
//! Each limit level `α` gets a ladder with `β_0 = 1`, a schedule `q_n`,
//! and elevators `e_n : T_{β_n} → T_{β_{n+1}}` chosen by the three-way
//! case test against the oracle. The first `unfold` steps are decided
//! explicitly; later steps fall to the default case.

pub mod checks;
pub mod oracle;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::elevators::{canonical_lift, coordination, le_coarse, CoarseningContext, Elevator, ElevatorError, TreeContext};
use crate::ordinals::Ordinal;
use crate::treelab::{
    c_bounds, c_lt_shifted, default_precision, from_desc, in_u, is_below_eq, is_strictly_below, ladder_value,
    make_limit, pick_above, rat, restrict, succ_trusted, LimitStructure, NodeRef, Pair, Rational, TreeError,
    TreeResult, Verdict,
};

/// A hit together with the candidate pairs it was chosen from.
type HitWithPairs = (Hit, Vec<(NodeRef, NodeRef)>);

pub use checks::{CheckLine, InvariantReport, Transcript};
pub use oracle::{
    level_one_pool, OmegaFn, OmegaSpec, Oracle, OtherOracle, PseudoRandomOracle, PsiSpec, ScriptEntry, ScriptedOracle,
};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("height {0} is outside the supported range (0, ω²)")]
    Height(Ordinal),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("step {n} of level {alpha}: {source}")]
    Elevator { alpha: Ordinal, n: usize, source: ElevatorError },
    #[error("{0} is not in E")]
    NotInE(Ordinal),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    I,
    II,
    III,
}

/// What a Case I or Case II step pinned.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum Hit {
    /// `e_n(from) = target`, where `from = b_w^α(β_n)` and `target`
    /// extends `omega_element`.
    #[serde(rename = "I")]
    One { w: NodeRef, from: NodeRef, omega_element: NodeRef, target: NodeRef, candidates: usize },
    /// `e_n(b_⟨j⟩^α(β_n)) = s_j` with `Ω(s_0↾τ, s_1↾τ) = k`.
    #[serde(rename = "II")]
    Two { k: u64, tau: Ordinal, from: Pair, s: Pair, candidates: usize },
}

pub struct StepRecord {
    pub n: usize,
    pub case: Case,
    pub elevator: Elevator,
    pub hit: Option<Hit>,
}

pub struct LimitRecord {
    pub alpha: Ordinal,
    pub steps: Vec<StepRecord>,
    pub complete: bool,
    /// `K_α` when `Ω_α` is a function, else `None`.
    pub k_set: Option<Vec<u64>>,
}

/// `β_n` for a limit `alpha = ρ + ω < ω²`: `β_0 = 1`, then `ρ + n`
/// (or `n + 1` when `ρ = 0`).
pub fn ladder(alpha: &Ordinal, n: usize) -> TreeResult<Ordinal> {
    let j = match alpha.terms() {
        [(1, j)] => *j,
        _ => return Err(TreeError::NoStructure(alpha.clone())),
    };
    if n == 0 {
        return Ok(Ordinal::one());
    }
    let rho = Ordinal::term(1, j - 1);
    Ok(if rho.is_zero() { Ordinal::nat(n as u64 + 1) } else { rho.add(&Ordinal::nat(n as u64)) })
}

/// The two pre-materialized level-one nodes `⟨1/3⟩` and `⟨2/3⟩`, standing
/// for `⟨0⟩` and `⟨1⟩`.
pub fn anchor(j: usize) -> NodeRef {
    succ_trusted(&NodeRef::root(), rat(j as i64 + 1, 3))
}

const SAMPLE_CAP: usize = 6;

pub struct TreeState {
    pub height: Ordinal,
    pub unfold: usize,
    pub oracle: String,
    limits: BTreeMap<Ordinal, LimitRecord>,
    cc: CoarseningContext,
    g: BTreeMap<Ordinal, u64>,
    cache: RefCell<HashMap<(Ordinal, usize, NodeRef), NodeRef>>,
    samples: RefCell<BTreeMap<Ordinal, Vec<NodeRef>>>,
}

impl LimitStructure for TreeState {
    fn ladder_point(&self, alpha: &Ordinal, n: usize) -> TreeResult<Ordinal> {
        if !self.limits.contains_key(alpha) {
            return Err(TreeError::NoStructure(alpha.clone()));
        }
        ladder(alpha, n)
    }

    fn step(&self, alpha: &Ordinal, n: usize, t: &NodeRef) -> TreeResult<NodeRef> {
        let key = (alpha.clone(), n, t.clone());
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(v.clone());
        }
        let rec = self.limits.get(alpha).ok_or_else(|| TreeError::NoStructure(alpha.clone()))?;
        let out = if let Some(s) = rec.steps.get(n) {
            s.elevator.eval(self, t)?
        } else if rec.complete {
            Elevator::lift(ladder(alpha, n)?, ladder(alpha, n + 1)?, self.q(alpha, n + 1)?).eval(self, t)?
        } else {
            return Err(TreeError::NoStructure(alpha.clone()));
        };
        self.cache.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    fn bound(&self, alpha: &Ordinal, n: usize) -> TreeResult<Rational> {
        let q = self.q(alpha, n)?;
        Ok(match self.case(alpha, n)? {
            Case::III => q / rat(4, 1),
            _ => q,
        })
    }
}

impl TreeContext for TreeState {
    fn coarsening(&self) -> &CoarseningContext {
        &self.cc
    }

    fn q(&self, alpha: &Ordinal, n: usize) -> TreeResult<Rational> {
        let mut q = Rational::one();
        for k in 0..n {
            q /= match self.case(alpha, k)? {
                Case::III => rat(8, 1),
                _ => rat(2, 1),
            };
        }
        Ok(q)
    }
}

impl TreeState {
    /// Builds every limit level below `height` in increasing order.
    pub fn build(height: &Ordinal, unfold: usize, oracle: &dyn Oracle) -> Result<TreeState, BuildError> {
        if height.is_zero() || height.leading_exponent().is_some_and(|e| e > 1) {
            return Err(BuildError::Height(height.clone()));
        }
        let mut st = TreeState {
            height: height.clone(),
            unfold,
            oracle: oracle.name(),
            limits: BTreeMap::new(),
            cc: CoarseningContext::new(),
            g: BTreeMap::new(),
            cache: RefCell::new(HashMap::new()),
            samples: RefCell::new(BTreeMap::new()),
        };
        let mut j = 1;
        loop {
            let alpha = Ordinal::term(1, j);
            if alpha >= *height {
                break;
            }
            st.limit_step(&alpha, oracle)?;
            j += 1;
        }
        Ok(st)
    }

    /// Case of `e_n` at `alpha`; steps past the unfolded prefix are Case III.
    pub fn case(&self, alpha: &Ordinal, n: usize) -> TreeResult<Case> {
        let rec = self.limits.get(alpha).ok_or_else(|| TreeError::NoStructure(alpha.clone()))?;
        match rec.steps.get(n) {
            Some(s) => Ok(s.case),
            None if rec.complete => Ok(Case::III),
            None => Err(TreeError::NoStructure(alpha.clone())),
        }
    }

    pub fn limit_levels(&self) -> impl Iterator<Item = &Ordinal> {
        self.limits.keys()
    }

    pub fn record(&self, alpha: &Ordinal) -> Option<&LimitRecord> {
        self.limits.get(alpha)
    }

    pub fn e_table(&self) -> &CoarseningContext {
        &self.cc
    }

    pub fn g_table(&self) -> &BTreeMap<Ordinal, u64> {
        &self.g
    }

    /// `g(α) = min K_α`.
    pub fn g_of(&self, alpha: &Ordinal) -> Result<u64, BuildError> {
        self.g.get(alpha).copied().ok_or_else(|| BuildError::NotInE(alpha.clone()))
    }

    /// `D_n = {a_ε | ε ∈ E, g(ε) ≥ n}`.
    pub fn dn_family(&self, n: u64) -> Vec<(Ordinal, Pair)> {
        self.cc
            .a
            .iter()
            .filter(|(e, _)| self.g.get(*e).is_some_and(|g| *g >= n))
            .map(|(e, p)| (e.clone(), p.clone()))
            .collect()
    }

    /// `x ⊴ y` in the state's coarsening.
    pub fn coarsening_query(&self, x: &Pair, y: &Pair) -> TreeResult<bool> {
        le_coarse(self, &self.cc, x, y)
    }

    /// A child `t⌢⟨q⟩`, rejecting `q ∉ (c(t), 1)`.
    pub fn child(&self, t: &NodeRef, q: Rational) -> TreeResult<NodeRef> {
        crate::treelab::make_succ(self, t, q)
    }

    pub fn node(&self, d: &crate::treelab::NodeDesc) -> TreeResult<NodeRef> {
        let n = from_desc(self, d)?;
        if *n.level() >= self.height {
            return Err(TreeError::OutOfRange(Rational::one()));
        }
        Ok(n)
    }

    /// A small deterministic set of nodes at `level`, used by checkers.
    pub fn sample(&self, level: &Ordinal) -> TreeResult<Vec<NodeRef>> {
        if let Some(v) = self.samples.borrow().get(level) {
            return Ok(v.clone());
        }
        let mut out: Vec<NodeRef> = if level.is_zero() {
            vec![NodeRef::root()]
        } else if *level == Ordinal::one() {
            level_one_pool()
        } else if let Some(g) = level.pred() {
            let mut v = Vec::new();
            for p in self.sample(&g)?.iter().take(SAMPLE_CAP / 2) {
                let q1 = pick_above(self, p, &Rational::one())?;
                let q2 = (&q1 + Rational::one()) / rat(2, 1);
                v.push(succ_trusted(p, q1));
                v.push(succ_trusted(p, q2));
            }
            v
        } else {
            let mut v = Vec::new();
            for k in 0..3 {
                for x in self.sample(&ladder(level, k)?)?.iter().take(2) {
                    v.push(make_limit(self, level, x)?);
                }
            }
            if let Some(a) = self.cc.a.get(level) {
                v.push(a.0.clone());
                v.push(a.1.clone());
            }
            v
        };
        out.sort();
        out.dedup();
        out.truncate(SAMPLE_CAP);
        self.samples.borrow_mut().insert(level.clone(), out.clone());
        Ok(out)
    }

    fn limit_step(&mut self, alpha: &Ordinal, oracle: &dyn Oracle) -> Result<(), BuildError> {
        self.limits.insert(
            alpha.clone(),
            LimitRecord { alpha: alpha.clone(), steps: Vec::new(), complete: false, k_set: None },
        );
        for n in 0..self.unfold {
            let wrap = |source: ElevatorError| BuildError::Elevator { alpha: alpha.clone(), n, source };
            let qn = self.q(alpha, n)?;
            let (case, hit, pins) = if let Some((h, p)) = self.try_case_one(alpha, n, &qn, oracle)? {
                (Case::I, Some(h), p)
            } else if let Some((h, p)) = self.try_case_two(alpha, n, &qn, oracle)? {
                (Case::II, Some(h), p)
            } else {
                (Case::III, None, Vec::new())
            };
            let q_next = match case {
                Case::III => &qn / rat(8, 1),
                _ => &qn / rat(2, 1),
            };
            let factory = coordination(&ladder(alpha, n)?, &ladder(alpha, n + 1)?).map_err(wrap)?;
            let elevator = factory.build(self, &q_next, &[], &pins).map_err(wrap)?;
            let rec = self.limits.get_mut(alpha).expect("inserted above");
            rec.steps.push(StepRecord { n, case, elevator, hit });
        }
        self.limits.get_mut(alpha).expect("inserted above").complete = true;
        self.decide_e(alpha, oracle)?;
        self.samples.borrow_mut().clear();
        Ok(())
    }

    /// `b_⟨j⟩^α(β_n)`.
    pub fn anchor_value(&self, alpha: &Ordinal, j: usize, n: usize) -> TreeResult<NodeRef> {
        ladder_value(self, alpha, &anchor(j), 0, n)
    }

    /// Window of ladder indices over which `K_α` is evaluated: the last
    /// quarter (at least one point) of the unfolded prefix.
    pub fn k_window(&self) -> std::ops::RangeInclusive<usize> {
        let w = (self.unfold / 4).max(1);
        self.unfold.saturating_sub(w)..=self.unfold
    }

    /// Recomputes `K_α` from `Ω_α`; `None` when `Ω_α` is not a function.
    pub fn compute_k(&self, alpha: &Ordinal, oracle: &dyn Oracle) -> TreeResult<Option<Vec<u64>>> {
        let OmegaSpec::Function(f) = oracle.omega_at(alpha) else { return Ok(None) };
        let mut ks = Vec::new();
        for n in self.k_window() {
            if let Some(k) = f.eval(&self.anchor_value(alpha, 0, n)?, &self.anchor_value(alpha, 1, n)?) {
                ks.push(k);
            }
        }
        ks.sort_unstable();
        ks.dedup();
        Ok(Some(ks))
    }

    fn decide_e(&mut self, alpha: &Ordinal, oracle: &dyn Oracle) -> TreeResult<()> {
        let k = self.compute_k(alpha, oracle)?;
        if let Some(ks) = &k {
            if let Some(&g) = ks.first() {
                let a = (make_limit(self, alpha, &anchor(0))?, make_limit(self, alpha, &anchor(1))?);
                self.cc.insert(alpha.clone(), a);
                self.g.insert(alpha.clone(), g);
            }
        }
        self.limits.get_mut(alpha).expect("present").k_set = k;
        Ok(())
    }

    fn try_case_one(
        &self,
        alpha: &Ordinal,
        n: usize,
        qn: &Rational,
        oracle: &dyn Oracle,
    ) -> TreeResult<Option<HitWithPairs>> {
        let (bn, b1) = (ladder(alpha, n)?, ladder(alpha, n + 1)?);
        let OmegaSpec::Subset(descs) = oracle.omega_at(&b1) else { return Ok(None) };
        let mut omega = Vec::new();
        for d in &descs {
            match from_desc(self, d) {
                Ok(a) if *a.level() < b1 => omega.push(a),
                _ => return Ok(None),
            }
        }
        let PsiSpec::Node(wd) = oracle.psi_at(&b1) else { return Ok(None) };
        let Ok(w) = from_desc(self, &wd) else { return Ok(None) };
        let k = match self.ladder_index(alpha, w.level()) {
            Ok(Some(k)) if k <= n => k,
            _ => return Ok(None),
        };
        let y = ladder_value(self, alpha, &w, k, n)?;
        let half = qn / rat(2, 1);
        let cy = y.exact_c().ok_or_else(|| TreeError::Invalid(format!("{y} at a ladder point is a limit node")))?;
        let cap = &cy + &half;
        let prec = default_precision();
        let mut cands: Vec<(NodeRef, NodeRef)> = Vec::new();
        for a in &omega {
            let t = if a.level() <= &bn {
                if !is_below_eq(self, a, &y)? {
                    continue;
                }
                canonical_lift(self, &y, &b1, &(&cy + qn / rat(4, 1)))?
            } else {
                if !is_strictly_below(self, &y, a)? || c_lt_shifted(self, a, &y, &half, &prec)? != Verdict::True {
                    continue;
                }
                let hi = c_bounds(self, a, &prec)?.hi;
                if hi >= cap {
                    continue;
                }
                canonical_lift(self, a, &b1, &((hi + &cap) / rat(2, 1)))?
            };
            if in_u(self, &t, &y, &half, &prec)? == Verdict::True && !cands.iter().any(|(_, u)| *u == t) {
                cands.push((a.clone(), t));
            }
        }
        let keys: Vec<String> = cands.iter().map(|(_, t)| serde_json::to_string(&t.to_desc()).unwrap_or_default()).collect();
        let Some(i) = oracle.choose_min(&keys) else { return Ok(None) };
        let (a, t) = cands[i].clone();
        let hit = Hit::One { w, from: y.clone(), omega_element: a, target: t.clone(), candidates: cands.len() };
        Ok(Some((hit, vec![(y, t)])))
    }

    fn try_case_two(
        &self,
        alpha: &Ordinal,
        n: usize,
        qn: &Rational,
        oracle: &dyn Oracle,
    ) -> TreeResult<Option<HitWithPairs>> {
        let b1 = ladder(alpha, n + 1)?;
        let OmegaSpec::Function(f) = oracle.omega_at(&b1) else { return Ok(None) };
        let PsiSpec::Nat(k) = oracle.psi_at(&b1) else { return Ok(None) };
        let tau = ladder(alpha, n)?;
        let y = (self.anchor_value(alpha, 0, n)?, self.anchor_value(alpha, 1, n)?);
        let half = qn / rat(2, 1);
        let prec = default_precision();
        let mut s = Vec::with_capacity(2);
        for yj in [&y.0, &y.1] {
            let c = yj.exact_c().ok_or_else(|| TreeError::Invalid(format!("{yj} at a ladder point is a limit node")))?;
            let sj = canonical_lift(self, yj, &b1, &(c + qn / rat(4, 1)))?;
            if in_u(self, &sj, yj, &half, &prec)? != Verdict::True {
                return Ok(None);
            }
            s.push(sj);
        }
        let s = (s[0].clone(), s[1].clone());
        if !le_coarse(self, &self.cc, &y, &s)? {
            return Ok(None);
        }
        if f.eval(&restrict(self, &s.0, &tau)?, &restrict(self, &s.1, &tau)?) != Some(k) {
            return Ok(None);
        }
        let pins = vec![(y.0.clone(), s.0.clone()), (y.1.clone(), s.1.clone())];
        Ok(Some((Hit::Two { k, tau, from: y, s, candidates: 1 }, pins)))
    }
}
