//! The end-extension poset of C-sequence conditions.
//!
//! A condition is either the top element or a triple `(γ, ⟨C_α | α ≤ γ⟩, D)`.
//! Forcing statements are modelled by a [`BNameOracle`]: whenever a proof
//! says "q decides β ∈ Ḃ", the oracle supplies `(q, β)` and the decision is
//! written to a ledger.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csets::{Betas, CSequence, ClosedSetExpr, CsetError, Ladder, LimitUnion, Segment};
use crate::ordinals::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForcingError {
    #[error("invalid condition, clause {clause}: {detail}")]
    Invalid { clause: &'static str, detail: String },
    #[error("operation needs a nontrivial condition")]
    TopNotAllowed,
    #[error("oracle broke its contract: {0}")]
    OracleContract(String),
    #[error(transparent)]
    Set(#[from] CsetError),
}

fn invalid(clause: &'static str, detail: impl Into<String>) -> ForcingError {
    ForcingError::Invalid { clause, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondData {
    pub gamma: Ordinal,
    pub cseq: Arc<CSequence>,
    pub d: ClosedSetExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Top,
    Cond(CondData),
}

impl Condition {
    pub fn data(&self) -> Option<&CondData> {
        match self {
            Condition::Top => None,
            Condition::Cond(d) => Some(d),
        }
    }

    fn need(&self) -> Result<&CondData, ForcingError> {
        self.data().ok_or(ForcingError::TopNotAllowed)
    }

    pub fn gamma(&self) -> Option<&Ordinal> {
        self.data().map(|d| &d.gamma)
    }

    /// `C_γ`, the club at the top level.
    pub fn top_club(&self) -> Option<ClosedSetExpr> {
        self.data().and_then(|d| d.cseq.get(&d.gamma))
    }

    pub fn c(&self, alpha: &Ordinal) -> Option<ClosedSetExpr> {
        self.data().and_then(|d| d.cseq.get(alpha))
    }
}

/// γ = ω, `C_0 = ∅`, `C_{n+1} = {n}`, `C_ω = [0, ω)`, `D = {ω}`.
pub fn bootstrap() -> Condition {
    let w = Ordinal::omega();
    let cseq = CSequence::new(
        w.clone(),
        None,
        vec![
            Segment::Explicit { at: Ordinal::zero(), set: ClosedSetExpr::empty() },
            Segment::Succ { lo: Ordinal::zero(), hi: w.clone() },
            Segment::Explicit { at: w.clone(), set: ClosedSetExpr::interval(Ordinal::zero(), w.clone()) },
        ],
    )
    .expect("bootstrap sequence is well formed");
    Condition::Cond(CondData { gamma: w.clone(), cseq: Arc::new(cseq), d: ClosedSetExpr::point(w) })
}

/// Coherence sample pairs: every limit in `D` and every explicit level
/// against every explicit level above it.
fn sample_pairs(d: &CondData) -> Vec<(Ordinal, Ordinal)> {
    let mut levels: Vec<Ordinal> = d.d.first_elements(64);
    for s in d.cseq.all_segments() {
        if let Segment::Explicit { at, .. } = s {
            levels.push(at.clone());
        }
    }
    levels.sort();
    levels.dedup();
    let mut out = Vec::new();
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[i + 1..] {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

/// Full check of the definition of the poset, clause by clause.
pub fn validate(p: &Condition) -> Result<(), ForcingError> {
    let Condition::Cond(d) = p else { return Ok(()) };
    if !d.gamma.is_limit() {
        return Err(invalid("1", format!("γ = {} is not a limit", d.gamma)));
    }
    if d.d.max().as_ref() != Some(&d.gamma) {
        return Err(invalid("2", format!("max D = {:?}, γ = {}", d.d.max(), d.gamma)));
    }
    for x in d.d.first_elements(256) {
        if !x.is_limit() {
            return Err(invalid("2", format!("{x} in D is not a limit")));
        }
    }
    if d.cseq.bound != d.gamma {
        return Err(invalid("3", format!("sequence bound {} differs from γ", d.cseq.bound)));
    }
    d.cseq.validate().map_err(|e| invalid("3", e.to_string()))?;
    let coh = d.cseq.check_coherence(&sample_pairs(d));
    if let Some((a, b)) = coh.violations.first() {
        return Err(invalid("4a", format!("C_{b} ∩ {a} ≠ C_{a}")));
    }
    for alpha in d.d.first_elements(256) {
        if alpha >= d.gamma {
            continue;
        }
        let rep = d.cseq.r_test(&alpha, &Betas::Range { lo: alpha.clone(), hi: d.gamma.clone() });
        if let Some(b) = rep.failures.first() {
            return Err(invalid("4b", format!("otp(C_{b} ∩ {alpha}) is not below {alpha}")));
        }
    }
    Ok(())
}

/// Whether two segment lists assign the same club to every level of `[0, top]`.
fn same_assignment(a: &[&Segment], b: &[&Segment], top: &Ordinal) -> bool {
    let (mut i, mut j) = (0, 0);
    let end = top.succ();
    while i < a.len() && j < b.len() {
        let (af, at) = a[i].range();
        let (bf, bt) = b[j].range();
        if af >= end || bf >= end {
            break;
        }
        let lo = af.clone().max(bf.clone());
        let hi = at.clone().min(bt.clone()).min(end.clone());
        if lo < hi && !segments_agree(a[i], b[j], &lo, &hi) {
            return false;
        }
        if at <= bt {
            i += 1;
        }
        if bt <= at {
            j += 1;
        }
    }
    true
}

/// Agreement of two segments on the levels `[lo, hi)`.
fn segments_agree(x: &Segment, y: &Segment, lo: &Ordinal, hi: &Ordinal) -> bool {
    use Segment::*;
    match (x, y) {
        (Explicit { at, set }, other) | (other, Explicit { at, set }) => {
            other.applies(at) && value_at(other, at).is_some_and(|v| v.same_set(set))
        }
        (Succ { .. }, Succ { .. }) => true,
        (Tail { base: b1, .. }, Tail { base: b2, .. }) => b1 == b2,
        (Succ { .. }, Tail { base, .. }) | (Tail { base, .. }, Succ { .. }) => {
            // {α-1} = [base, α) only at α = base+1
            *lo == base.succ() && *hi == lo.succ()
        }
    }
}

fn value_at(s: &Segment, alpha: &Ordinal) -> Option<ClosedSetExpr> {
    match s {
        Segment::Explicit { set, .. } => Some(set.clone()),
        Segment::Succ { .. } => alpha.pred().map(ClosedSetExpr::point),
        Segment::Tail { base, .. } => Some(ClosedSetExpr::interval(base.clone(), alpha.clone())),
    }
}

fn shares_prefix(q: &Arc<CSequence>, p: &Arc<CSequence>) -> bool {
    let mut cur = Some(q);
    while let Some(c) = cur {
        if Arc::ptr_eq(c, p) {
            return true;
        }
        cur = c.prefix.as_ref();
    }
    false
}

/// `q ≤ p`: end-extension on both coordinates.
pub fn leq(q: &Condition, p: &Condition) -> bool {
    let (q, p) = match (q, p) {
        (_, Condition::Top) => return true,
        (Condition::Top, _) => return false,
        (Condition::Cond(q), Condition::Cond(p)) => (q, p),
    };
    if q.gamma < p.gamma {
        return false;
    }
    let cs_ok = shares_prefix(&q.cseq, &p.cseq)
        || same_assignment(&q.cseq.all_segments(), &p.cseq.all_segments(), &p.gamma);
    cs_ok && q.d.intersect_below(&p.gamma.succ()).same_set(&p.d)
}

/// The one-step extension: `γ^q = γ^p + β + ω`, the intermediate levels get
/// `α ∖ γ^p`, and the new top gets the tail `γ^q ∖ (γ^p + β)`.
pub fn extend_past(p: &Condition, beta: &Ordinal) -> Result<Condition, ForcingError> {
    let d = p.need()?;
    let g = &d.gamma;
    let from = g.add(beta);
    let gq = from.add(&Ordinal::omega());
    let cseq = CSequence::new(
        gq.clone(),
        Some(d.cseq.clone()),
        vec![
            Segment::Tail { lo: g.clone(), hi: gq.clone(), base: g.clone() },
            Segment::Explicit { at: gq.clone(), set: ClosedSetExpr::interval(from, gq.clone()) },
        ],
    )?;
    let dq = d.d.then(&ClosedSetExpr::point(gq.clone()))?;
    Ok(Condition::Cond(CondData { gamma: gq, cseq: Arc::new(cseq), d: dq }))
}

/// Supplies decisions "q ⊩ β ∈ Ḃ" with `q ≤ p` and `β > floor`.
pub trait BNameOracle {
    fn decide(&mut self, p: &Condition, floor: &Ordinal) -> Result<(Condition, Ordinal), ForcingError>;
}

/// Decides `floor + k` for k = 1, 2, 3, … without extending.
#[derive(Debug, Default, Clone)]
pub struct CountingOracle {
    pub calls: u64,
}

impl BNameOracle for CountingOracle {
    fn decide(&mut self, p: &Condition, floor: &Ordinal) -> Result<(Condition, Ordinal), ForcingError> {
        self.calls += 1;
        Ok((p.clone(), floor.add(&Ordinal::nat(self.calls))))
    }
}

/// Seeded oracle that sometimes extends before deciding and picks β a
/// random distance above the floor.
#[derive(Debug, Clone)]
pub struct SeededOracle {
    rng: ChaCha8Rng,
}

impl SeededOracle {
    pub fn new(seed: u64) -> Self {
        SeededOracle { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl BNameOracle for SeededOracle {
    fn decide(&mut self, p: &Condition, floor: &Ordinal) -> Result<(Condition, Ordinal), ForcingError> {
        let q = if self.rng.gen_bool(0.5) {
            extend_past(p, &Ordinal::nat(self.rng.gen_range(0..4)))?
        } else {
            p.clone()
        };
        let jump = Ordinal::term(1, self.rng.gen_range(0..3)).add(&Ordinal::nat(self.rng.gen_range(1..9)));
        Ok((q, floor.add(&jump)))
    }
}

/// Length of the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    /// Moves `0..=n`.
    Finite(u64),
    /// Moves `0..=materialize`, then one limit move at ω.
    Omega { materialize: u64 },
}

impl Sigma {
    /// `ω·σ`.
    pub fn omega_times(&self) -> Ordinal {
        match self {
            Sigma::Finite(n) => Ordinal::term(1, *n),
            Sigma::Omega { .. } => Ordinal::omega_pow(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    I,
    II,
}

/// Strategy for player I.
pub trait Opponent {
    fn play(&mut self, history: &[Condition]) -> Condition;
}

/// Plays `extend_past(last, 0)`; the first move extends the bootstrap.
#[derive(Debug, Default, Clone)]
pub struct PassThrough;

impl Opponent for PassThrough {
    fn play(&mut self, history: &[Condition]) -> Condition {
        let last = match history.last() {
            Some(c @ Condition::Cond(_)) => c.clone(),
            _ => bootstrap(),
        };
        extend_past(&last, &Ordinal::zero()).expect("extension of a valid condition")
    }
}

/// Extends the last condition a random number of times by random amounts.
#[derive(Debug, Clone)]
pub struct RandomOpponent {
    rng: ChaCha8Rng,
}

impl RandomOpponent {
    pub fn new(seed: u64) -> Self {
        RandomOpponent { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Opponent for RandomOpponent {
    fn play(&mut self, history: &[Condition]) -> Condition {
        let mut cur = match history.last() {
            Some(c @ Condition::Cond(_)) => c.clone(),
            _ => bootstrap(),
        };
        for _ in 0..self.rng.gen_range(1..3) {
            let beta = Ordinal::term(1, self.rng.gen_range(0..2)).add(&Ordinal::nat(self.rng.gen_range(0..6)));
            cur = extend_past(&cur, &beta).expect("extension of a valid condition");
        }
        cur
    }
}

/// Replays the bootstrap condition, which is illegal from move 3 on.
#[derive(Debug, Default, Clone)]
pub struct IllegalOpponent;

impl Opponent for IllegalOpponent {
    fn play(&mut self, _history: &[Condition]) -> Condition {
        bootstrap()
    }
}

/// Certificates for the invariants of the strategy at an even move `j`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLedger {
    pub move_index: u64,
    /// otp(C^{p_2}) < γ^{p_2}.
    pub clause_i: bool,
    /// γ^{p_4} > γ^{p_2} + ω·σ (only recorded at move 4).
    pub clause_ii: Option<bool>,
    /// acc of the top club is acc at move 2 plus the earlier even γ's.
    pub clause_iii: Option<bool>,
    /// β_j, the condition that decided it, and β_j = min(C ∖ (γ^{p_{j-2}}+1)).
    pub clause_iv: Option<OracleDecision>,
    /// otp(C^{p_j}) ≤ γ^{p_2} + ω·j < γ^{p_j}.
    pub clause_v: bool,
    /// otp(C^{p_j} ∖ β_j) = ω.
    pub clause_vi: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleDecision {
    pub beta: Ordinal,
    pub decided_by_gamma: Ordinal,
    pub is_min_above_previous: bool,
}

impl StepLedger {
    pub fn all_hold(&self) -> bool {
        self.clause_i
            && self.clause_ii.unwrap_or(true)
            && self.clause_iii.unwrap_or(true)
            && self.clause_iv.as_ref().is_none_or(|d| d.is_min_above_previous)
            && self.clause_v
            && self.clause_vi.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    /// Move number; `None` marks the limit move at ω.
    #[serde(rename = "move")]
    pub index: Option<u64>,
    pub player: Player,
    pub condition: Condition,
    pub ledger: Option<StepLedger>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    IiWins,
    /// Player I made an illegal move at this index.
    ILoses(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub sigma: Sigma,
    pub moves: Vec<Move>,
    pub outcome: Outcome,
}

impl GameState {
    pub fn final_condition(&self) -> &Condition {
        &self.moves.last().expect("move zero is always played").condition
    }

    pub fn ledgers(&self) -> impl Iterator<Item = &StepLedger> {
        self.moves.iter().filter_map(|m| m.ledger.as_ref())
    }

    /// The β's decided along the play, in order.
    pub fn decided(&self) -> Vec<Ordinal> {
        self.ledgers().filter_map(|l| l.clause_iv.as_ref().map(|d| d.beta.clone())).collect()
    }
}

/// Limit of a descending chain whose top clubs end-extend: the first
/// `chain.len()` stages are materialized and the rest of the ω-chain is
/// represented by the ladder `γ_N + ω^d·n`, where `ω^{d+1}` bounds the
/// increments seen so far.
pub fn limit_join(chain: &[Condition]) -> Result<Condition, ForcingError> {
    let datas = chain.iter().map(Condition::need).collect::<Result<Vec<_>, _>>()?;
    let last = *datas.last().ok_or(ForcingError::TopNotAllowed)?;
    let mut d_exp = 1;
    for w in datas.windows(2) {
        let inc = w[0]
            .gamma
            .sub_left(&w[1].gamma)
            .ok_or_else(|| invalid("chain", "γ decreases along the chain"))?;
        d_exp = d_exp.max(inc.leading_exponent().unwrap_or(0));
    }
    let gn = &last.gamma;
    let gamma = gn.add(&Ordinal::omega_pow(d_exp + 1));
    let stages: Vec<ClosedSetExpr> = chain.iter().map(|c| c.top_club().unwrap()).collect();
    let cont = Ladder::new(Vec::new(), d_exp, gn.clone())?;
    let otp = stages.last().unwrap().otp().add(&Ordinal::omega());
    let top = ClosedSetExpr::limit_union(LimitUnion::new(stages, cont, otp)?);
    let cseq = CSequence::new(
        gamma.clone(),
        Some(last.cseq.clone()),
        vec![
            Segment::Tail { lo: gn.clone(), hi: gamma.clone(), base: gn.clone() },
            Segment::Explicit { at: gamma.clone(), set: top },
        ],
    )?;
    let d = last.d.then(&ClosedSetExpr::point(gamma.clone()))?;
    Ok(Condition::Cond(CondData { gamma, cseq: Arc::new(cseq), d }))
}

/// II's answer at an even move `i + 2 >= 4`.
fn strategy_step(
    p_i: &Condition,
    p_next: &Condition,
    sigma: Sigma,
    oracle: &mut dyn BNameOracle,
) -> Result<(Condition, Ordinal, Ordinal), ForcingError> {
    let floor = p_next.need()?.gamma.add(&sigma.omega_times());
    let (mut q, beta) = oracle.decide(p_next, &floor)?;
    if !leq(&q, p_next) {
        return Err(ForcingError::OracleContract("returned condition does not extend its input".into()));
    }
    if beta <= floor {
        return Err(ForcingError::OracleContract(format!("β = {beta} not above floor {floor}")));
    }
    if q.need()?.gamma <= beta {
        q = extend_past(&q, &beta)?;
    }
    let qd = q.need()?;
    let gq = qd.gamma.clone();
    let g_new = gq.add(&Ordinal::omega());
    let gi = p_i.need()?.gamma.clone();
    let top = p_i
        .top_club()
        .unwrap()
        .then(&ClosedSetExpr::points([gi, beta.clone()]))?
        .then(&ClosedSetExpr::interval(gq.clone(), g_new.clone()))?;
    let cseq = CSequence::new(
        g_new.clone(),
        Some(qd.cseq.clone()),
        vec![
            Segment::Succ { lo: gq.clone(), hi: g_new.clone() },
            Segment::Explicit { at: g_new.clone(), set: top },
        ],
    )?;
    let d = qd.d.then(&ClosedSetExpr::point(g_new.clone()))?;
    Ok((Condition::Cond(CondData { gamma: g_new, cseq: Arc::new(cseq), d }), beta, gq))
}

fn ledger_for(j: u64, evens: &[(u64, Condition)], sigma: Sigma, decision: Option<(Ordinal, Ordinal)>) -> StepLedger {
    let p2 = &evens[0].1;
    let pj = &evens.last().unwrap().1;
    let (g2, c2) = (p2.gamma().unwrap(), p2.top_club().unwrap());
    let (gj, cj) = (pj.gamma().unwrap(), pj.top_club().unwrap());
    let mut l = StepLedger { move_index: j, clause_i: c2.otp() < *g2, ..Default::default() };
    if j == 4 {
        l.clause_ii = Some(*gj > g2.add(&sigma.omega_times()));
    }
    if j >= 4 {
        let earlier: Vec<Ordinal> = evens[..evens.len() - 1].iter().map(|(_, c)| c.gamma().unwrap().clone()).collect();
        let expected = c2.acc().then(&ClosedSetExpr::points(earlier));
        l.clause_iii = Some(expected.is_ok_and(|e| e.same_set(&cj.acc())));
        let bound = g2.add(&Ordinal::term(1, j));
        l.clause_v = cj.otp() <= bound && bound < *gj;
    } else {
        l.clause_v = cj.otp() < *gj;
    }
    if let Some((beta, by)) = decision {
        let prev = evens[evens.len() - 2].1.gamma().unwrap().succ();
        let is_min = cj.intersect_from(&prev).min().as_ref() == Some(&beta);
        l.clause_vi = Some(cj.intersect_from(&beta).otp() == Ordinal::omega());
        l.clause_iv = Some(OracleDecision { beta, decided_by_gamma: by, is_min_above_previous: is_min });
    }
    l
}

/// Plays the strategic-closure game with II following the explicit
/// strategy. Every move of II is re-validated.
pub fn play_strategy(
    sigma: Sigma,
    opponent: &mut dyn Opponent,
    oracle: &mut dyn BNameOracle,
) -> Result<GameState, ForcingError> {
    play_with(sigma, opponent, oracle, false)
}

/// With `keep_regressive`, II's move 2 repeats move 1 whenever that
/// condition already has `otp(C_γ) < γ`, so the play end-extends its club.
fn play_with(
    sigma: Sigma,
    opponent: &mut dyn Opponent,
    oracle: &mut dyn BNameOracle,
    keep_regressive: bool,
) -> Result<GameState, ForcingError> {
    let last_finite = match sigma {
        Sigma::Finite(n) => n,
        Sigma::Omega { materialize } => materialize.max(2),
    };
    let mut moves = vec![Move { index: Some(0), player: Player::II, condition: Condition::Top, ledger: None }];
    let mut history = vec![Condition::Top];
    let mut evens: Vec<(u64, Condition)> = Vec::new();
    for i in 1..=last_finite {
        if i % 2 == 1 {
            let c = opponent.play(&history);
            let legal = validate(&c).is_ok() && history.iter().all(|h| leq(&c, h));
            moves.push(Move { index: Some(i), player: Player::I, condition: c.clone(), ledger: None });
            if !legal {
                return Ok(GameState { sigma, moves, outcome: Outcome::ILoses(i) });
            }
            history.push(c);
            continue;
        }
        let (c, decision) = if i == 2 {
            let p1 = &history[1];
            let regressive = p1.top_club().zip(p1.gamma()).is_some_and(|(c, g)| c.otp() < *g);
            if keep_regressive && regressive {
                (p1.clone(), None)
            } else {
                (extend_past(p1, &Ordinal::zero())?, None)
            }
        } else {
            let p_i = &evens.last().unwrap().1;
            let (c, beta, gq) = strategy_step(p_i, &history[i as usize - 1], sigma, oracle)?;
            (c, Some((beta, gq)))
        };
        validate(&c)?;
        evens.push((i, c.clone()));
        let ledger = ledger_for(i, &evens, sigma, decision);
        moves.push(Move { index: Some(i), player: Player::II, condition: c.clone(), ledger: Some(ledger) });
        history.push(c);
    }
    if let (Sigma::Omega { .. }, false) = (sigma, evens.is_empty()) {
        let chain: Vec<Condition> = evens.iter().map(|(_, c)| c.clone()).collect();
        let c = limit_join(&chain)?;
        validate(&c)?;
        moves.push(Move { index: None, player: Player::II, condition: c, ledger: None });
    }
    Ok(GameState { sigma, moves, outcome: Outcome::IiWins })
}

/// Per-step record of a fusion run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuseStep {
    pub step: u64,
    pub gamma: Ordinal,
    pub decided: Vec<Ordinal>,
    /// Each decided β is a non-accumulation point of the new top club.
    pub decided_in_nacc: bool,
    pub end_extends: bool,
    pub otp_below_gamma: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuseResult {
    pub condition: Condition,
    pub steps: Vec<FuseStep>,
    /// Decided β's lying in nacc of the final top club.
    pub decided_in_final_nacc: usize,
    /// Annotation of the final limit union, and the sum of stage increments.
    pub otp_annotation: Option<Ordinal>,
    pub otp_incremental: Option<Ordinal>,
}

/// Sub-game length used for each fusion step.
pub const FUSE_SUBGAME_SIGMA: u64 = 6;

/// ω-fusion truncated at `steps` materialized stages.
pub fn fuse(p: &Condition, oracle: &mut dyn BNameOracle, steps: u64) -> Result<FuseResult, ForcingError> {
    p.need()?;
    let p0 = extend_past(p, &Ordinal::zero())?;
    let mut chain = vec![p0.clone()];
    let mut log = Vec::new();
    let mut all_decided = Vec::new();
    let mut incremental = p0.top_club().unwrap().otp();
    for n in 0..steps {
        let pn = chain.last().unwrap().clone();
        let mut opp = SubgameOpponent { start: Some(pn.clone()) };
        let sigma = Sigma::Finite(FUSE_SUBGAME_SIGMA);
        let game = play_with(sigma, &mut opp, oracle, true)?;
        let next = game.final_condition().clone();
        let (old_top, new_top) = (pn.top_club().unwrap(), next.top_club().unwrap());
        let decided = game.decided();
        let nacc = new_top.nacc();
        incremental = incremental.add(&old_top.otp().sub_left(&new_top.otp()).unwrap_or_default());
        log.push(FuseStep {
            step: n + 1,
            gamma: next.gamma().unwrap().clone(),
            decided_in_nacc: decided.iter().all(|b| nacc.contains(b)),
            decided: decided.clone(),
            end_extends: new_top.end_extends(&old_top) && leq(&next, &pn),
            otp_below_gamma: new_top.otp() < *next.gamma().unwrap(),
        });
        all_decided.extend(decided);
        chain.push(next);
    }
    if steps == 0 {
        return Ok(FuseResult {
            condition: p0,
            steps: log,
            decided_in_final_nacc: 0,
            otp_annotation: None,
            otp_incremental: None,
        });
    }
    let q = limit_join(&chain)?;
    validate(&q)?;
    let top = q.top_club().unwrap();
    let nacc = top.nacc();
    Ok(FuseResult {
        decided_in_final_nacc: all_decided.iter().filter(|b| nacc.contains(b)).count(),
        otp_annotation: Some(top.otp()),
        otp_incremental: Some(incremental.add(&Ordinal::omega())),
        condition: q,
        steps: log,
    })
}

/// Inside a fusion step the sub-game starts from the current stage: move 1
/// hands it over unchanged, II keeps it as move 2, and later moves pass
/// through.
struct SubgameOpponent {
    start: Option<Condition>,
}

impl Opponent for SubgameOpponent {
    fn play(&mut self, history: &[Condition]) -> Condition {
        match self.start.take() {
            Some(c) => c,
            None => PassThrough.play(history),
        }
    }
}

/// `X_α = {C(ω·ι+1) : ι < otp(acc C)}`, materialized for at most `cap`
/// values of ι.
pub fn x_alpha(c: &ClosedSetExpr, cap: u64) -> Vec<Ordinal> {
    let n = c.acc().otp().as_nat().unwrap_or(u64::MAX).min(cap);
    (0..n)
        .filter_map(|i| c.element_at(&Ordinal::term(1, i).add(&Ordinal::one())))
        .collect()
}
