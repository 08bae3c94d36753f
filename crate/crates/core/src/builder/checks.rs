//! Post-hoc verification of a built state and its JSON export.
//!
//! Every check quantifies over materialized data only: the first
//! `unfold` ladder steps, the sampled nodes of each level, and the
//! recorded hits.

use serde::Serialize;
use serde_json::{json, Value};

use super::{anchor, ladder, Case, Hit, OmegaSpec, Oracle, PsiSpec, TreeState};
use crate::elevators::{validate, TreeContext};
use crate::ordinals::Ordinal;
use crate::treelab::{
    default_precision, equals, from_desc, in_u, is_below_eq, is_square_antichain, ladder_value, make_limit, rat,
    restrict, square_leq, LimitStructure, NodeKind, NodeRef, RatJson, Rational, TreeResult, Verdict,
};

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantReport {
    pub lines: Vec<CheckLine>,
    pub failures: Vec<String>,
}

impl InvariantReport {
    fn record(&mut self, name: &str, ok: bool, what: impl FnOnce() -> String) {
        let line = match self.lines.iter_mut().find(|l| l.name == name) {
            Some(l) => l,
            None => {
                self.lines.push(CheckLine { name: name.into(), ..CheckLine::default() });
                self.lines.last_mut().expect("just pushed")
            }
        };
        if ok {
            line.passed += 1;
        } else {
            line.failed += 1;
            if self.failures.len() < 50 {
                self.failures.push(format!("{name}: {}", what()));
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.lines.iter().all(|l| l.failed == 0)
    }

    pub fn line(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

/// The sequence `b_x^α(β_n)` for `n = start..=unfold`, kept extensionally.
#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub alpha: Ordinal,
    pub anchor: NodeRef,
    pub start: usize,
    pub levels: Vec<Ordinal>,
    pub values: Vec<NodeRef>,
}

fn is_true(v: Verdict) -> bool {
    v == Verdict::True
}

impl TreeState {
    /// Anchors used by the checkers: `⟨0⟩`, `⟨1⟩` and sampled nodes at the
    /// next two ladder points, with their ladder indices.
    pub fn check_anchors(&self, alpha: &Ordinal) -> TreeResult<Vec<(NodeRef, usize)>> {
        let mut out = vec![(anchor(0), 0), (anchor(1), 0)];
        for k in 1..=2 {
            for x in self.sample(&ladder(alpha, k)?)?.into_iter().take(2) {
                out.push((x, k));
            }
        }
        Ok(out)
    }

    pub fn transcripts(&self, alpha: &Ordinal) -> TreeResult<Vec<Transcript>> {
        let mut out = Vec::new();
        for (x, k) in self.check_anchors(alpha)? {
            let mut levels = Vec::new();
            let mut values = Vec::new();
            let mut cur = x.clone();
            for n in k..=self.unfold {
                levels.push(ladder(alpha, n)?);
                values.push(cur.clone());
                if n < self.unfold {
                    cur = self.step(alpha, n, &cur)?;
                }
            }
            out.push(Transcript { alpha: alpha.clone(), anchor: x, start: k, levels, values });
        }
        Ok(out)
    }

    /// Clauses (i)–(iii) and the extensional comparison with the limit node.
    pub fn check_transcript(&self, t: &Transcript) -> TreeResult<Vec<String>> {
        let mut bad = Vec::new();
        let a = &t.alpha;
        if self.ladder_index(a, t.anchor.level())? != Some(t.start) {
            bad.push(format!("{} does not start at its own ladder index", t.anchor));
        }
        for (i, l) in t.levels.iter().enumerate() {
            if *l != ladder(a, t.start + i)? || t.values[i].level() != l {
                bad.push(format!("clause (i): value {i} sits at {}", t.values[i].level()));
            }
        }
        if t.values.first() != Some(&t.anchor) {
            bad.push("clause (ii): first value is not the anchor".into());
        }
        for i in 0..t.values.len().saturating_sub(1) {
            if self.step(a, t.start + i, &t.values[i])? != t.values[i + 1] {
                bad.push(format!("clause (iii): step {}", t.start + i));
            }
        }
        let b = make_limit(self, a, &t.anchor)?;
        for (l, v) in t.levels.iter().zip(&t.values) {
            if restrict(self, &b, l)? != *v {
                bad.push(format!("restriction of {b} to {l} differs from the transcript"));
            }
        }
        Ok(bad)
    }

    /// The full invariant suite; `oracle` must be the one used to build.
    pub fn check_invariants(&self, oracle: &dyn Oracle) -> TreeResult<InvariantReport> {
        let mut rep = InvariantReport::default();
        let prec = default_precision();
        let alphas: Vec<Ordinal> = self.limit_levels().cloned().collect();
        for alpha in &alphas {
            self.check_schedule(alpha, &mut rep)?;
            self.check_cfeature(alpha, &mut rep, &prec)?;
            self.check_tailf(alpha, &mut rep)?;
            for t in self.transcripts(alpha)? {
                let bad = self.check_transcript(&t)?;
                rep.record("clauses_i_iii", bad.is_empty(), || bad.join("; "));
            }
            self.check_hits(alpha, oracle, &mut rep, &prec)?;
            self.check_k(alpha, oracle, &mut rep)?;
            self.check_step_elevators(alpha, &mut rep)?;
        }
        self.check_clanti(&mut rep)?;
        self.check_dn(&mut rep)?;
        Ok(rep)
    }

    fn check_schedule(&self, alpha: &Ordinal, rep: &mut InvariantReport) -> TreeResult<()> {
        let big_n = self.unfold;
        let q: Vec<Rational> = (0..=big_n).map(|n| self.q(alpha, n)).collect::<TreeResult<_>>()?;
        let tail = &q[big_n] / rat(7, 1);
        for n in 0..=big_n {
            let mut total = tail.clone();
            for qm in &q[n + 1..] {
                total += qm;
            }
            let cap = self.bound(alpha, n)?;
            let expect = match self.case(alpha, n)? {
                Case::III => &q[n] / rat(4, 1),
                _ => q[n].clone(),
            };
            let next_ok = n == big_n
                || q[n + 1]
                    == match self.case(alpha, n)? {
                        Case::III => &q[n] / rat(8, 1),
                        _ => &q[n] / rat(2, 1),
                    };
            rep.record("schedule_sum_bounds", total <= cap && cap == expect && next_ok, || {
                format!("{alpha} n={n}: tail sum {total} vs {cap}")
            });
        }
        rep.record("schedule_q0", q[0] == Rational::from_integer(1.into()), || format!("{alpha}: q_0 = {}", q[0]));
        Ok(())
    }

    fn check_cfeature(&self, alpha: &Ordinal, rep: &mut InvariantReport, prec: &Rational) -> TreeResult<()> {
        let xs = self.check_anchors(alpha)?;
        let top = self.unfold.min(6);
        for n in 0..top {
            let here: Vec<&(NodeRef, usize)> = xs.iter().filter(|(_, k)| *k <= n).collect();
            for m in n + 1..=top {
                for (x, k) in &here {
                    for (x2, k2) in &here {
                        let lo = (ladder_value(self, alpha, x, *k, n)?, ladder_value(self, alpha, x2, *k2, n)?);
                        let hi = (ladder_value(self, alpha, x, *k, m)?, ladder_value(self, alpha, x2, *k2, m)?);
                        rep.record("cfeature_coarsening", self.coarsening_query(&lo, &hi)?, || {
                            format!("{alpha}: ({x},{x2}) from {n} to {m}")
                        });
                    }
                }
            }
        }
        for (x, k) in &xs {
            let b = make_limit(self, alpha, x)?;
            for n in *k..=self.unfold {
                let at = ladder_value(self, alpha, x, *k, n)?;
                let bound = self.bound(alpha, n)?;
                let p = prec.clone().min(&bound / rat(64, 1));
                rep.record("cfeature_c_interval", is_true(in_u(self, &b, &at, &bound, &p)?), || {
                    format!("{alpha}: b_{x} not in U(b({n}), {bound})")
                });
            }
        }
        Ok(())
    }

    fn check_tailf(&self, alpha: &Ordinal, rep: &mut InvariantReport) -> TreeResult<()> {
        for y in self.sample(alpha)? {
            let NodeKind::Limit { x, .. } = y.kind() else { continue };
            let k = self.ladder_index(alpha, x.level())?.unwrap_or(0);
            for m in k..=self.unfold {
                let r = restrict(self, &y, &ladder(alpha, m)?)?;
                let back = make_limit(self, alpha, &r)?;
                rep.record("tailf", back == y && equals(self, &back, &y)?, || format!("{y} at index {m}"));
            }
        }
        Ok(())
    }

    fn check_hits(&self, alpha: &Ordinal, oracle: &dyn Oracle, rep: &mut InvariantReport, prec: &Rational) -> TreeResult<()> {
        let rec = self.record(alpha).expect("listed level");
        for s in &rec.steps {
            let n = s.n;
            let (bn, b1) = (ladder(alpha, n)?, ladder(alpha, n + 1)?);
            let half = self.q(alpha, n)? / rat(2, 1);
            match (&s.hit, s.case) {
                (Some(Hit::One { w, from, omega_element, target, .. }), Case::I) => {
                    let omega_ok = match oracle.omega_at(&b1) {
                        OmegaSpec::Subset(ds) => ds.iter().any(|d| from_desc(self, d).ok().as_ref() == Some(omega_element)),
                        _ => false,
                    };
                    let psi_ok = matches!(oracle.psi_at(&b1), PsiSpec::Node(d) if from_desc(self, &d).ok().as_ref() == Some(w));
                    let k = self.ladder_index(alpha, w.level())?.unwrap_or(usize::MAX);
                    let from_ok = k <= n && ladder_value(self, alpha, w, k, n)? == *from;
                    let ok = omega_ok
                        && psi_ok
                        && from_ok
                        && *target.level() == b1
                        && is_true(in_u(self, target, from, &half, prec)?)
                        && is_below_eq(self, omega_element, target)?
                        && self.step(alpha, n, from)? == *target;
                    rep.record("case_i_membership", ok, || format!("{alpha} step {n}"));
                }
                (Some(Hit::Two { k, tau, from, s: pair, .. }), Case::II) => {
                    let f_val = match oracle.omega_at(&b1) {
                        OmegaSpec::Function(f) => f.eval(&restrict(self, &pair.0, tau)?, &restrict(self, &pair.1, tau)?),
                        _ => None,
                    };
                    let ok = f_val == Some(*k)
                        && oracle.psi_at(&b1) == PsiSpec::Nat(*k)
                        && *tau >= bn
                        && *tau < b1
                        && from.0 == self.anchor_value(alpha, 0, n)?
                        && from.1 == self.anchor_value(alpha, 1, n)?
                        && is_true(in_u(self, &pair.0, &from.0, &half, prec)?)
                        && is_true(in_u(self, &pair.1, &from.1, &half, prec)?)
                        && self.coarsening_query(from, pair)?
                        && self.step(alpha, n, &from.0)? == pair.0
                        && self.step(alpha, n, &from.1)? == pair.1;
                    rep.record("case_ii_membership", ok, || format!("{alpha} step {n}"));
                }
                (None, Case::III) => {}
                _ => rep.record("case_records", false, || format!("{alpha} step {n}: case and hit disagree")),
            }
        }
        Ok(())
    }

    fn check_k(&self, alpha: &Ordinal, oracle: &dyn Oracle, rep: &mut InvariantReport) -> TreeResult<()> {
        let k = self.compute_k(alpha, oracle)?;
        let recorded = self.record(alpha).expect("listed level").k_set.clone();
        let in_e = self.e_table().contains(alpha);
        let min_ok = match (&k, self.g_table().get(alpha)) {
            (Some(ks), Some(g)) => ks.first() == Some(g),
            (Some(ks), None) => ks.is_empty(),
            (None, g) => g.is_none(),
        };
        rep.record("g_is_min_k", k == recorded && min_ok && in_e == self.g_table().contains_key(alpha), || {
            format!("{alpha}: K recomputed {k:?} vs recorded {recorded:?}")
        });
        if let Some(a) = self.e_table().a.get(alpha) {
            let ok = a.0 == make_limit(self, alpha, &anchor(0))? && a.1 == make_limit(self, alpha, &anchor(1))?;
            rep.record("a_alpha_anchors", ok, || format!("{alpha}: a_α is not (b_⟨0⟩, b_⟨1⟩)"));
        }
        Ok(())
    }

    fn check_step_elevators(&self, alpha: &Ordinal, rep: &mut InvariantReport) -> TreeResult<()> {
        let rec = self.record(alpha).expect("listed level");
        for s in rec.steps.iter().take(4) {
            let sample = self.sample(&ladder(alpha, s.n)?)?;
            let r = validate(self, &s.elevator, &sample)?;
            rep.record("step_elevators", r.ok(), || format!("{alpha} e_{}: {:?}", s.n, r.violations));
        }
        Ok(())
    }

    fn check_clanti(&self, rep: &mut InvariantReport) -> TreeResult<()> {
        let pairs: Vec<_> = self.e_table().a.values().cloned().collect();
        rep.record("clanti_antichain", is_square_antichain(self, &pairs)?, || "a-table is not an antichain".into());
        let zero_one = (anchor(0), anchor(1));
        for (alpha, aa) in &self.e_table().a {
            rep.record("e_has_no_successors", alpha.is_limit() && !alpha.is_zero(), || format!("{alpha} in E"));
            for (eps, ae) in self.e_table().a.range(..alpha.clone()) {
                let mut m = 1;
                while ladder(alpha, m)? <= *eps {
                    m += 1;
                }
                let at_m = (self.anchor_value(alpha, 0, m)?, self.anchor_value(alpha, 1, m)?);
                let ok = self.coarsening_query(&zero_one, &at_m)?
                    && !square_leq(self, ae, &at_m)?
                    && !square_leq(self, ae, aa)?;
                rep.record("clanti_targeted", ok, || format!("a_{eps} against a_{alpha}"));
            }
        }
        Ok(())
    }

    fn check_dn(&self, rep: &mut InvariantReport) -> TreeResult<()> {
        let full = self.dn_family(0);
        rep.record("dn_family", full.len() == self.e_table().a.len(), || "D_0 is not the full a-table".into());
        let top = self.g_table().values().max().copied().unwrap_or(0);
        let mut prev = full;
        for n in 1..=top + 1 {
            let d = self.dn_family(n);
            let pairs: Vec<_> = d.iter().map(|(_, p)| p.clone()).collect();
            let ok = d.iter().all(|x| prev.contains(x)) && is_square_antichain(self, &pairs)?;
            rep.record("dn_family", ok, || format!("D_{n}"));
            prev = d;
        }
        rep.record("dn_family", prev.is_empty(), || "D_n does not vanish past max g".into());
        Ok(())
    }

    /// The emitted state artifact (without the schema tag).
    pub fn to_json(&self) -> Value {
        let mut limits = Vec::new();
        for (alpha, rec) in self.limits.iter() {
            let ladder_pts: Vec<Ordinal> = (0..=self.unfold).filter_map(|n| ladder(alpha, n).ok()).collect();
            let q: Vec<RatJson> = (0..=self.unfold).filter_map(|n| self.q(alpha, n).ok()).map(RatJson).collect();
            let cases: Vec<Case> = rec.steps.iter().map(|s| s.case).collect();
            let hits: Vec<Value> = rec
                .steps
                .iter()
                .filter_map(|s| s.hit.as_ref().map(|h| json!({"n": s.n, "hit": h})))
                .collect();
            limits.push(json!({
                "alpha": alpha,
                "ladder": ladder_pts,
                "cases": cases,
                "q": q,
                "hits": hits,
                "k_set": rec.k_set,
                "in_e": self.e_table().contains(alpha),
            }));
        }
        let e: Vec<Value> = self
            .e_table()
            .a
            .iter()
            .map(|(eps, a)| json!({"eps": eps, "a": [a.0, a.1], "g": self.g_table().get(eps)}))
            .collect();
        json!({
            "height": self.height,
            "unfold": self.unfold,
            "oracle": self.oracle,
            "limits": limits,
            "e": e,
        })
    }

    pub fn transcripts_json(&self) -> TreeResult<Value> {
        let mut all = Vec::new();
        for alpha in self.limit_levels() {
            all.extend(self.transcripts(alpha)?);
        }
        Ok(json!({ "transcripts": all }))
    }
}
