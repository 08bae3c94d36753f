mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lab_core::builder::{Case, Hit, PseudoRandomOracle, TreeState};
use lab_core::elevators::{self, coordination, Rule};
use lab_core::treelab::{c_bounds, pow2_inv, rat, restrict, square_leq, Pair};
use lab_core::{NodeRef, Ordinal, Rational};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn w(k: u64) -> Ordinal {
    Ordinal::term(1, k)
}

fn engine(height: &Ordinal, seed: u64) -> TreeState {
    TreeState::build(height, 12, &PseudoRandomOracle { seed }).expect("engine build")
}

fn c_hi(st: &TreeState, x: &NodeRef) -> Rational {
    x.exact_c().unwrap_or_else(|| c_bounds(st, x, &pow2_inv(40)).unwrap().hi)
}

fn slack<R: Rng>(rng: &mut R) -> Rational {
    pow2_inv(rng.gen_range(1..5))
}

/// Levels below `ω·2` used for elevator tasks.
fn level_pool() -> Vec<Ordinal> {
    let mut v: Vec<Ordinal> = (0..5).map(Ordinal::nat).collect();
    v.extend((0..4).map(|k| w(1).add(&Ordinal::nat(k))));
    v
}

fn pick_triple<R: Rng>(rng: &mut R, successor_top: bool) -> (Ordinal, Ordinal, Ordinal) {
    let pool = level_pool();
    loop {
        let mut idx: Vec<usize> = (0..pool.len()).collect::<Vec<_>>().choose_multiple(rng, 3).copied().collect();
        idx.sort();
        let (g, b, a) = (pool[idx[0]].clone(), pool[idx[1]].clone(), pool[idx[2]].clone());
        if !successor_top || a.is_successor() {
            return (g, b, a);
        }
    }
}

fn criterion_1() -> Outcome {
    let bad = common::ordinal_mismatches(10_000, 1);
    if bad.is_empty() {
        Ok("10000 add/mul/cmp instances below ω³, 0 mismatches".into())
    } else {
        Err(format!("{} mismatches, first {}", bad.len(), bad[0]))
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trees: Vec<TreeState> = (0..5).map(|s| engine(&w(2), s)).collect();
    let (mut built, mut skipped, mut nodes, mut pairs) = (0, 0, 0, 0);
    let mut violations = Vec::new();
    while built < 500 {
        let st = &trees[built % trees.len()];
        let (g, b, a) = pick_triple(&mut rng, false);
        let (q1, q2) = (slack(&mut rng), slack(&mut rng));
        let sample = st.sample(&g).unwrap();
        let pins = if rng.gen_bool(0.3) {
            let x = sample.choose(&mut rng).unwrap().clone();
            let y = elevators::canonical_lift(st, &x, &b, &(c_hi(st, &x) + &q1 / rat(2, 1))).unwrap();
            vec![(x, y)]
        } else {
            vec![]
        };
        let n_avoid = rng.gen_range(0..3);
        let avoid: Vec<NodeRef> = st.sample(&a).unwrap().choose_multiple(&mut rng, n_avoid).cloned().collect();
        let e1 = coordination(&g, &b).unwrap().build(st, &q1, &[], &pins);
        let e2 = coordination(&b, &a).unwrap().build(st, &q2, &avoid, &[]);
        let (Ok(e1), Ok(e2)) = (e1, e2) else {
            skipped += 1;
            continue;
        };
        let c = elevators::compose(&e1, &e2).map_err(|e| e.to_string())?;
        // a witness with smaller slack is a stronger elevator
        if c.slack > &q1 + &q2 || c.slack != &e1.slack + &e2.slack {
            violations.push(format!("slack of {g}->{b}->{a}"));
        }
        let rep = elevators::validate(st, &c, &sample).map_err(|e| e.to_string())?;
        nodes += rep.nodes_checked;
        pairs += rep.pairs_checked;
        if !rep.ok() {
            violations.push(format!("{g}->{b}->{a}: {:?} undecided {}", rep.violations, rep.undecided));
        }
        built += 1;
    }
    if violations.is_empty() {
        Ok(format!("{built} composites ({skipped} infeasible draws redrawn), {nodes} nodes, {pairs} pairs, 0 violations"))
    } else {
        Err(format!("{} violations, first {}", violations.len(), violations[0]))
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trees: Vec<TreeState> = (0..5).map(|s| engine(&w(2), s + 10)).collect();
    let (mut done, mut skipped, mut two_pin) = (0, 0, 0);
    let mut violations = Vec::new();
    while done < 200 {
        let st = &trees[done % trees.len()];
        let (g, b, a) = pick_triple(&mut rng, true);
        let q = slack(&mut rng);
        let sample = st.sample(&g).unwrap();
        let n_avoid = rng.gen_range(0..3);
        let avoid: Vec<NodeRef> = st.sample(&a).unwrap().choose_multiple(&mut rng, n_avoid).cloned().collect();
        let k = rng.gen_range(0..3);
        let mut pins = Vec::new();
        for x in sample.choose_multiple(&mut rng, k) {
            let z = elevators::canonical_lift(st, x, &a, &(c_hi(st, x) + &q / rat(2, 1))).unwrap();
            pins.push((x.clone(), z));
        }
        let lower = coordination(&g, &b).unwrap();
        let upper = coordination(&b, &a).unwrap();
        let e = match elevators::transitive_elevator(st, lower.as_ref(), upper.as_ref(), &q, &avoid, &pins) {
            Ok(e) => e,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let tag = format!("{g}<{b}<{a} q={q} pins={}", pins.len());
        let rep = elevators::validate(st, &e, &sample).map_err(|e| e.to_string())?;
        if !rep.ok() || e.slack > q || e.source != g || e.target != a {
            violations.push(format!("{tag}: slack {} {:?} undecided {}", e.slack, rep.violations, rep.undecided));
        }
        for (x, z) in &pins {
            if e.eval(st, x).map_err(|e| e.to_string())? != *z {
                violations.push(format!("{tag}: pin {x} not honoured"));
            }
        }
        if pins.len() == 2 {
            two_pin += 1;
            let Rule::Compose { first, .. } = &e.rule else {
                return Err(format!("{tag}: two-pin witness is not a composite"));
            };
            for t in &sample {
                let img = e.eval(st, t).map_err(|e| e.to_string())?;
                if restrict(st, &img, &b).map_err(|e| e.to_string())? != first.eval(st, t).map_err(|e| e.to_string())? {
                    violations.push(format!("{tag}: e(t)↾β ≠ e₀(t) at {t}"));
                }
            }
        }
        done += 1;
    }
    if violations.is_empty() {
        Ok(format!("{done} tasks ({two_pin} two-pin, {skipped} infeasible draws redrawn), 0 violations"))
    } else {
        Err(format!("{} violations, first {}", violations.len(), violations[0]))
    }
}

const ENGINE_LINES: [&str; 14] = [
    "schedule_q0",
    "schedule_sum_bounds",
    "cfeature_coarsening",
    "cfeature_c_interval",
    "tailf",
    "clauses_i_iii",
    "case_i_membership",
    "case_ii_membership",
    "g_is_min_k",
    "a_alpha_anchors",
    "step_elevators",
    "clanti_antichain",
    "e_has_no_successors",
    "dn_family",
];

fn criterion_4() -> Outcome {
    let mut totals: std::collections::BTreeMap<String, (usize, usize)> = Default::default();
    let (mut case_one, mut case_two, mut e_levels) = (0, 0, 0);
    for seed in 0..10 {
        let oracle = PseudoRandomOracle { seed };
        let st = TreeState::build(&w(3), 12, &oracle).map_err(|e| e.to_string())?;
        let rep = st.check_invariants(&oracle).map_err(|e| e.to_string())?;
        if !rep.ok() {
            return Err(format!("seed {seed}: {:?}", &rep.failures[..rep.failures.len().min(3)]));
        }
        for l in &rep.lines {
            let t = totals.entry(l.name.clone()).or_default();
            t.0 += l.passed;
            t.1 += l.failed;
        }
        for alpha in st.limit_levels() {
            for n in 0..12 {
                match st.case(alpha, n).map_err(|e| e.to_string())? {
                    Case::I => case_one += 1,
                    Case::II => case_two += 1,
                    Case::III => {}
                }
            }
        }
        e_levels += st.e_table().a.len();
    }
    for name in ENGINE_LINES {
        match totals.get(name) {
            Some((p, 0)) if *p > 0 => {}
            other => return Err(format!("line {name}: {other:?}")),
        }
    }
    if case_one == 0 || case_two == 0 {
        return Err(format!("hit coverage: {case_one} Case I, {case_two} Case II"));
    }
    let checks: usize = totals.values().map(|t| t.0).sum();
    Ok(format!(
        "seeds 0..9 at ω·3: {checks} checks over {} lines, 0 failures; {case_one} Case I and {case_two} Case II hits verified; {e_levels} E-levels",
        totals.len()
    ))
}

/// Materialized levels of an `ω·3` engine tree used for exhaustive pair scans.
fn scan_levels() -> Vec<Ordinal> {
    let mut v = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            v.push(w(j).add(&Ordinal::nat(k)));
        }
    }
    v
}

fn pairs_at(st: &TreeState, level: &Ordinal) -> Vec<Pair> {
    let nodes = st.sample(level).unwrap();
    let mut out: Vec<Pair> = Vec::new();
    for a in &nodes {
        for b in &nodes {
            out.push((a.clone(), b.clone()));
        }
    }
    if let Some(a) = st.e_table().a.get(level) {
        for p in [a.clone(), (a.1.clone(), a.0.clone())] {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn le(st: &TreeState, x: &Pair, y: &Pair) -> bool {
    elevators::le_coarse(st, st.e_table(), x, y).unwrap()
}

fn restrict_pair(st: &TreeState, y: &Pair, beta: &Ordinal) -> Pair {
    (restrict(st, &y.0, beta).unwrap(), restrict(st, &y.1, beta).unwrap())
}

fn swap(p: &Pair) -> Pair {
    (p.1.clone(), p.0.clone())
}

fn criterion_5() -> Outcome {
    let levels = scan_levels();
    let (mut compared, mut windowed, mut mismatches) = (0usize, 0usize, Vec::new());
    let seeds = [9u64, 5, 0];
    let trees: Vec<TreeState> = seeds.iter().map(|&s| engine(&w(3), s)).collect();
    for (st, seed) in trees.iter().zip(seeds) {
        for (i, lb) in levels.iter().enumerate() {
            let xs = pairs_at(st, lb);
            for la in &levels[i..] {
                if !st.e_table().window(lb, la).is_empty() {
                    windowed += 1;
                    continue;
                }
                for y in pairs_at(st, la) {
                    for x in &xs {
                        compared += 1;
                        if le(st, x, &y) != square_leq(st, x, &y).unwrap() {
                            mismatches.push(format!("seed {seed}: {} {} vs {} {}", x.0, x.1, y.0, y.1));
                        }
                    }
                }
            }
        }
    }
    if !mismatches.is_empty() {
        return Err(format!("{} E-free mismatches, first {}", mismatches.len(), mismatches[0]));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut related, mut interval_checks) = (0, 0);
    let mut bad = Vec::new();
    for t in 0..1000 {
        let st = &trees[t % trees.len()];
        let mut idx: Vec<usize> = (0..3).map(|_| rng.gen_range(0..levels.len())).collect();
        idx.sort();
        let [l1, l2, l3] = [&levels[idx[0]], &levels[idx[1]], &levels[idx[2]]];
        let z = pairs_at(st, l3).choose(&mut rng).unwrap().clone();
        // half the triples are restrictions of one pair, so ⊆² holds along them
        let (x, y) = if rng.gen_bool(0.5) {
            (restrict_pair(st, &z, l1), restrict_pair(st, &z, l2))
        } else {
            (pairs_at(st, l1).choose(&mut rng).unwrap().clone(), pairs_at(st, l2).choose(&mut rng).unwrap().clone())
        };
        for (a, b) in [(&x, &y), (&y, &z), (&x, &z)] {
            if !le(st, a, b) {
                continue;
            }
            related += 1;
            if !square_leq(st, a, b).unwrap() {
                bad.push(format!("⊴ without ⊆² at {} {}", a.0, b.0));
            }
            if !le(st, &swap(a), &swap(b)) {
                bad.push(format!("swap fails at {} {}", a.0, b.0));
            }
            for beta in levels.iter().filter(|l| *l > a.0.level() && *l < b.0.level()) {
                interval_checks += 1;
                let mid = restrict_pair(st, b, beta);
                if !le(st, a, &mid) || !le(st, &mid, b) {
                    bad.push(format!("interval fails at {beta} for {} {}", a.0, b.0));
                }
            }
        }
        if le(st, &x, &y) && le(st, &y, &z) && !le(st, &x, &z) {
            bad.push(format!("transitivity fails at {} {} {}", x.0, y.0, z.0));
        }
    }
    if !bad.is_empty() {
        return Err(format!("{} bullet failures, first {}", bad.len(), bad[0]));
    }
    Ok(format!(
        "{compared} E-free pairs equal to ⊆² ({windowed} level pairs with E in the window skipped); 1000 triples, {related} related pairs, {interval_checks} interval checks, 0 failures"
    ))
}

fn criterion_6() -> Outcome {
    use lab_core::forcing::{self, Condition, Opponent, PassThrough, RandomOpponent, SeededOracle, Sigma};
    let mut validated = 0;
    let mut check = |c: &Condition, what: &str| -> Result<(), String> {
        validated += 1;
        forcing::validate(c).map_err(|e| format!("{what}: {e}"))
    };
    let boot = forcing::bootstrap();
    check(&boot, "bootstrap")?;
    let mut cur = boot.clone();
    for k in 0..6 {
        cur = forcing::extend_past(&cur, &w(k % 2).add(&Ordinal::nat(k))).map_err(|e| e.to_string())?;
        check(&cur, "extend_past")?;
    }
    let mut games = 0;
    for sigma in 6..=20u64 {
        for opp_kind in 0..2 {
            let mut opp: Box<dyn Opponent> =
                if opp_kind == 0 { Box::new(PassThrough) } else { Box::new(RandomOpponent::new(sigma)) };
            let mut oracle = SeededOracle::new(sigma);
            let game = forcing::play_strategy(Sigma::Finite(sigma), opp.as_mut(), &mut oracle).map_err(|e| e.to_string())?;
            games += 1;
            for m in &game.moves {
                check(&m.condition, &format!("σ={sigma} move {:?}", m.index))?;
            }
            if let Some(l) = game.ledgers().find(|l| !l.all_hold()) {
                return Err(format!("σ={sigma}: ledger at move {} fails: {l:?}", l.move_index));
            }
            let expect = (sigma / 2).saturating_sub(1) as usize;
            if game.decided().len() != expect {
                return Err(format!("σ={sigma}: {} decided β's, expected {expect}", game.decided().len()));
            }
        }
    }
    let mut oracle = SeededOracle::new(0);
    let omega = forcing::play_strategy(Sigma::Omega { materialize: 8 }, &mut PassThrough, &mut oracle).map_err(|e| e.to_string())?;
    check(omega.final_condition(), "ω-play limit")?;
    let mut oracle = SeededOracle::new(8);
    let fz = forcing::fuse(&boot, &mut oracle, 8).map_err(|e| e.to_string())?;
    check(&fz.condition, "fuse")?;
    if fz.decided_in_final_nacc < 8 {
        return Err(format!("fuse decided only {} elements into nacc", fz.decided_in_final_nacc));
    }
    if let Some(st) = fz.steps.iter().find(|s| !(s.end_extends && s.otp_below_gamma && s.decided_in_nacc)) {
        return Err(format!("fuse step {} breaks bookkeeping: {st:?}", st.step));
    }
    if fz.otp_annotation.is_none() || fz.otp_annotation != fz.otp_incremental {
        return Err(format!("otp annotation {:?} vs incremental {:?}", fz.otp_annotation, fz.otp_incremental));
    }
    Ok(format!(
        "{validated} conditions validated; {games} plays σ=6..20 with every ledger clause certified; fuse(8) put {} decided elements into nacc, otp {}",
        fz.decided_in_final_nacc,
        fz.otp_annotation.unwrap()
    ))
}

use lab_core::treelab::special::FtNode;
use lab_core::treelab::{FiberKind, FiniteTree, QKappaSeq, SpecialMapCertificate};

/// A random entry that is bigger than `o`, sometimes infinite when allowed.
fn bump<R: Rng>(rng: &mut R, o: &Ordinal, infinite: bool) -> Ordinal {
    let step = if infinite && rng.gen_bool(0.2) { w(1) } else { Ordinal::nat(rng.gen_range(1..4)) };
    o.add(&step)
}

/// A value `≫` the parent's: raise one entry past `floor` and append a
/// random tail, or cut the sequence back to a proper prefix.
fn above<R: Rng>(rng: &mut R, p: &[Ordinal], floor: usize, infinite: bool) -> Vec<Ordinal> {
    if p.len() > floor + 1 && rng.gen_bool(0.25) {
        return p[..rng.gen_range(floor + 1..p.len())].to_vec();
    }
    let i = rng.gen_range(floor..p.len());
    let mut v = p[..i].to_vec();
    v.push(bump(rng, &p[i], infinite));
    for _ in 0..rng.gen_range(0..3) {
        v.push(Ordinal::nat(rng.gen_range(0..5)));
    }
    v
}

/// A random tree with finite levels `0..=k` and optionally `ω..ω+extra`,
/// labelled by a strictly `≪`-increasing `f` with small codes at `ω`.
fn special_instance<R: Rng>(rng: &mut R) -> (FiniteTree, Vec<QKappaSeq>, Vec<Ordinal>) {
    let k = rng.gen_range(7..=12u64);
    let extra = rng.gen_range(0..=6u64);
    let mut levels: Vec<Ordinal> = (0..=k).map(Ordinal::nat).collect();
    levels.extend((0..extra).map(|j| w(1).add(&Ordinal::nat(j))));
    let mut nodes: Vec<FtNode> = Vec::new();
    let mut f: Vec<Vec<Ordinal>> = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    for lv in &levels {
        let mut cur = Vec::new();
        if lv.is_zero() {
            for _ in 0..rng.gen_range(1..=2) {
                nodes.push(FtNode { level: lv.clone(), below: None });
                f.push(vec![Ordinal::zero(), Ordinal::nat(rng.gen_range(0..3))]);
                cur.push(nodes.len() - 1);
            }
        } else {
            for (i, &y) in prev.iter().enumerate() {
                let kids = if nodes.len() > 340 { usize::from(i == 0) } else { rng.gen_range(usize::from(i == 0)..=3) };
                for _ in 0..kids {
                    let val = if *lv == w(1) {
                        [vec![Ordinal::one()], vec![Ordinal::one(), Ordinal::zero()], vec![Ordinal::nat(2)]]
                            .choose(rng)
                            .unwrap()
                            .clone()
                    } else if lv.is_finite() {
                        above(rng, &f[y], 1, false)
                    } else {
                        above(rng, &f[y], 0, true)
                    };
                    nodes.push(FtNode { level: lv.clone(), below: Some(y) });
                    f.push(val);
                    cur.push(nodes.len() - 1);
                }
            }
        }
        prev = cur;
    }
    let club = if extra > 0 { vec![w(1)] } else { vec![] };
    let f = f.into_iter().map(|v| QKappaSeq::new(v).unwrap()).collect();
    (FiniteTree { nodes }, f, club)
}

fn incomparable(t: &FiniteTree, xs: &[usize]) -> bool {
    xs.iter().enumerate().all(|(i, &a)| xs[i + 1..].iter().all(|&b| !t.strictly_below(a, b) && !t.strictly_below(b, a)))
}

/// Explicit re-check of the certificate shape, independent of `verify_special`.
fn certificate_shape(t: &FiniteTree, f: &[QKappaSeq], cert: &SpecialMapCertificate) -> Result<(), String> {
    for (x, &y) in cert.g.iter().enumerate() {
        let ok = if t.is_minimal(x) { y == x } else { t.strictly_below(y, x) };
        if !ok {
            return Err(format!("g({x}) = {y} is not regressive"));
        }
    }
    for fib in &cert.fibers {
        match &fib.kind {
            FiberKind::Antichain { f_value } => {
                if !t.nodes[fib.y].level.is_successor() || fib.members.iter().any(|&m| f[m] != *f_value) {
                    return Err(format!("fiber of {} is not constant at a successor height", fib.y));
                }
                if !incomparable(t, &fib.members) {
                    return Err(format!("fiber of {} is not an antichain", fib.y));
                }
            }
            FiberKind::LevelSpan { levels, bound } => {
                if levels.iter().any(|l| l >= bound) {
                    return Err(format!("fiber of {} leaves its level block", fib.y));
                }
            }
        }
    }
    Ok(())
}

/// Certificate mutations that must all be rejected.
fn tamperings(t: &FiniteTree, cert: &SpecialMapCertificate) -> Vec<(&'static str, SpecialMapCertificate)> {
    let mut out = Vec::new();
    if let Some(x) = (0..t.nodes.len()).find(|&x| !t.is_minimal(x)) {
        let mut c = cert.clone();
        c.g[x] = x;
        out.push(("g(x) = x off the minima", c));
        if let Some(z) = (0..t.nodes.len()).find(|&z| z != x && !t.strictly_below(z, x)) {
            let mut c = cert.clone();
            c.g[x] = z;
            out.push(("g(x) not below x", c));
        }
    }
    let mut c = cert.clone();
    c.fibers[0].members.pop();
    out.push(("member dropped", c));
    if cert.fibers.len() > 1 {
        let mut c = cert.clone();
        let m = c.fibers[0].members[0];
        c.fibers[1].members.push(m);
        out.push(("member in two fibers", c));
    }
    if let Some(i) = cert.fibers.iter().position(|fb| matches!(fb.kind, FiberKind::Antichain { .. })) {
        let mut c = cert.clone();
        c.fibers[i].kind = FiberKind::Antichain { f_value: QKappaSeq::nats(&[99, 99]).unwrap() };
        out.push(("wrong constant f", c));
    }
    if let Some(i) = cert.fibers.iter().position(|fb| matches!(fb.kind, FiberKind::LevelSpan { .. })) {
        let mut c = cert.clone();
        if let FiberKind::LevelSpan { bound, .. } = &mut c.fibers[i].kind {
            *bound = bound.succ();
        }
        out.push(("level block bound moved", c));
        let mut c = cert.clone();
        let lv = t.nodes[c.fibers[i].y].level.clone();
        c.fibers[i].kind = FiberKind::Antichain { f_value: QKappaSeq::nats(&[0]).unwrap() };
        if !lv.is_successor() {
            out.push(("limit fiber claimed as antichain", c));
        }
    }
    let mut c = cert.clone();
    c.g.pop();
    out.push(("g truncated", c));
    out
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut nodes, mut fibers, mut mutations, mut tallest) = (0, 0, 0, Ordinal::zero());
    for i in 0..50 {
        let (t, f, club) = special_instance(&mut rng);
        if t.nodes.len() > 400 {
            return Err(format!("tree {i} has {} nodes", t.nodes.len()));
        }
        let cert = lab_core::treelab::build_special_map(&t, &f, &club).map_err(|e| format!("tree {i}: {e}"))?;
        if !lab_core::treelab::verify_special(&t, &f, &cert) {
            return Err(format!("tree {i}: certificate does not verify"));
        }
        certificate_shape(&t, &f, &cert).map_err(|e| format!("tree {i}: {e}"))?;
        for (what, bad) in tamperings(&t, &cert) {
            mutations += 1;
            if lab_core::treelab::verify_special(&t, &f, &bad) {
                return Err(format!("tree {i}: tampering '{what}' accepted"));
            }
        }
        nodes += t.nodes.len();
        fibers += cert.fibers.len();
        tallest = tallest.max(t.height());
    }
    Ok(format!("50 trees, {nodes} nodes, {fibers} fibers verified, tallest height {tallest}; {mutations} tamperings all rejected"))
}

/// `q ≪ p` straight from the two clauses: `p` is a proper initial segment
/// of `q`, or they first differ at some `i` with `q(i) < p(i)`.
fn brute_ll(q: &[Ordinal], p: &[Ordinal]) -> bool {
    let clause_one = p.len() < q.len() && q[..p.len()] == *p;
    let clause_two = (0..q.len().min(p.len())).any(|i| q[..i] == p[..i] && q[i] < p[i]);
    clause_one || clause_two
}

fn random_seq<R: Rng>(rng: &mut R) -> QKappaSeq {
    let len = rng.gen_range(1..5);
    let v = (0..len)
        .map(|_| {
            let o = Ordinal::nat(rng.gen_range(0..3));
            if rng.gen_bool(0.2) { w(rng.gen_range(1..3)).add(&o) } else { o }
        })
        .collect();
    QKappaSeq::new(v).unwrap()
}

fn criterion_8() -> Outcome {
    use lab_core::treelab::{qkappa_cmp, QCmp};
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut related = 0;
    for i in 0..10_000 {
        let t: Vec<QKappaSeq> = (0..3).map(|_| random_seq(&mut rng)).collect();
        let ll = |a: usize, b: usize| qkappa_cmp(&t[a], &t[b]) == QCmp::LL;
        for a in 0..3 {
            if qkappa_cmp(&t[a], &t[a]) != QCmp::EQ {
                return Err(format!("triple {i}: {} is not equal to itself", t[a]));
            }
            for b in 0..3 {
                let c = qkappa_cmp(&t[a], &t[b]);
                let flipped = qkappa_cmp(&t[b], &t[a]);
                let ok = match c {
                    QCmp::LL => flipped == QCmp::GG,
                    QCmp::GG => flipped == QCmp::LL,
                    QCmp::EQ => flipped == QCmp::EQ && t[a] == t[b],
                };
                if !ok {
                    return Err(format!("triple {i}: trichotomy fails on {} {}", t[a], t[b]));
                }
                if (c == QCmp::LL) != brute_ll(t[a].entries(), t[b].entries()) {
                    return Err(format!("triple {i}: disagrees with the two-clause comparator on {} {}", t[a], t[b]));
                }
                for c3 in 0..3 {
                    if ll(a, b) && ll(b, c3) {
                        related += 1;
                        if !ll(a, c3) {
                            return Err(format!("triple {i}: transitivity fails"));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("10000 triples: irreflexive, trichotomous, {related} transitive chains, brute-force agreement exact"))
}

use lab_core::topology::{self, box_contains, BasisBox};
use lab_core::treelab::{is_square_antichain, make_limit, make_succ, NoLimits};

/// A finite subtree of 𝕋 with successor levels only.
fn desk_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> Vec<NodeRef> {
    let mut nodes = vec![NodeRef::root()];
    let mut prev = vec![NodeRef::root()];
    while nodes.len() < max_nodes {
        let mut cur = Vec::new();
        for p in &prev {
            let c = p.exact_c().unwrap();
            for _ in 0..rng.gen_range(1..=3) {
                if nodes.len() + cur.len() >= max_nodes {
                    break;
                }
                let v = &c + (rat(1, 1) - &c) * rat(rng.gen_range(1..16), 16);
                let child = make_succ(&NoLimits, p, v).unwrap();
                if !cur.contains(&child) {
                    cur.push(child);
                }
            }
        }
        if cur.is_empty() {
            break;
        }
        nodes.extend(cur.iter().cloned());
        prev = cur;
    }
    nodes
}

fn level_matched(nodes: &[NodeRef]) -> Vec<Pair> {
    let mut out = Vec::new();
    for a in nodes {
        for b in nodes {
            if a.level() == b.level() {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// A `⊆²`-antichain, maximal within `pairs`, found greedily in a shuffled order.
fn greedy_antichain<R: Rng>(rng: &mut R, ctx: &dyn lab_core::treelab::LimitStructure, pairs: &[Pair]) -> Vec<Pair> {
    let mut order: Vec<&Pair> = pairs.iter().collect();
    order.shuffle(rng);
    let mut out: Vec<Pair> = Vec::new();
    for p in order {
        let clash = out.iter().any(|a| square_leq(ctx, a, p).unwrap() || square_leq(ctx, p, a).unwrap());
        if !clash {
            out.push(p.clone());
        }
    }
    out
}

#[derive(Default)]
struct SquareTally {
    off_square: usize,
    witnesses: usize,
}

/// Closedness of the square and discreteness of antichains on one node set.
fn square_checks<R: Rng>(
    rng: &mut R,
    ctx: &dyn lab_core::treelab::LimitStructure,
    nodes: &[NodeRef],
    tally: &mut SquareTally,
) -> Result<(), String> {
    let e = |e: topology::TopoError| e.to_string();
    for x0 in nodes {
        for x1 in nodes {
            if x0.level() == x1.level() {
                continue;
            }
            let bx: BasisBox = topology::separate_off_square(ctx, x0, x1).map_err(e)?;
            if !box_contains(ctx, &bx, &(x0.clone(), x1.clone())).map_err(e)? {
                return Err(format!("box around ({x0}, {x1}) misses it"));
            }
            if topology::box_meets_square(ctx, &bx, nodes).map_err(e)? {
                return Err(format!("box around ({x0}, {x1}) meets the square"));
            }
            tally.off_square += 1;
        }
    }
    let pairs = level_matched(nodes);
    {
        let pool: Vec<Pair> = pairs.choose_multiple(rng, 400).cloned().collect();
        let a = greedy_antichain(rng, ctx, &pool);
        if !is_square_antichain(ctx, &a).unwrap() {
            return Err("greedy set is not an antichain".into());
        }
        for p in &pairs {
            let bx = topology::antichain_discrete_witness(ctx, &a, p).map_err(e)?;
            if !box_contains(ctx, &bx, p).map_err(e)? {
                return Err(format!("witness box misses ({}, {})", p.0, p.1));
            }
            let mut inside = 0;
            for y in &a {
                if box_contains(ctx, &bx, y).map_err(e)? {
                    inside += 1;
                }
            }
            if inside > 1 {
                return Err(format!("witness box at ({}, {}) holds {inside} antichain members", p.0, p.1));
            }
            tally.witnesses += 1;
        }
    }
    Ok(())
}

/// Antichain/level configurations for the separator on an `ω·3` tree.
fn separator_configs(st: &TreeState) -> Vec<(Vec<NodeRef>, Vec<Ordinal>)> {
    let at_w = topology::limit_antichain(st, &w(1)).unwrap();
    let at_w2 = topology::limit_antichain(st, &w(2)).unwrap();
    let succ = st.sample(&w(1).add(&Ordinal::one())).unwrap();
    let mut mixed = at_w.clone();
    for z in st.sample(&w(2).add(&Ordinal::one())).unwrap() {
        if !mixed.iter().any(|a| lab_core::treelab::is_below_eq(st, a, &z).unwrap()) {
            mixed.push(z);
        }
    }
    vec![
        (at_w, vec![w(1).add(&Ordinal::nat(2)), w(2)]),
        (at_w2, vec![w(1)]),
        (succ, vec![w(1), w(2)]),
        (mixed, vec![w(2)]),
    ]
}

/// For every Case I step: the antichain `{b_w^α↾β_n}` and the single point
/// `z = b_w^α`, whose `V_z` comes from the recorded hit.
fn case_one_configs(st: &TreeState) -> Vec<(Vec<NodeRef>, Ordinal, NodeRef)> {
    let mut out = Vec::new();
    for alpha in st.limit_levels() {
        for step in &st.record(alpha).unwrap().steps {
            if let Some(Hit::One { from, .. }) = &step.hit {
                out.push((vec![from.clone()], alpha.clone(), make_limit(st, alpha, from).unwrap()));
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let e = |e: topology::TopoError| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tally = SquareTally::default();
    let mut desk_sizes = Vec::new();
    for size in [60, 120, 200, 300] {
        let nodes = desk_tree(&mut rng, size);
        desk_sizes.push(nodes.len());
        square_checks(&mut rng, &NoLimits, &nodes, &mut tally).map_err(|m| format!("desk tree: {m}"))?;
    }
    let desk = (tally.off_square, tally.witnesses);
    for seed in [9u64, 5] {
        let st = engine(&w(3), seed);
        let mut nodes: Vec<NodeRef> = Vec::new();
        for l in scan_levels() {
            nodes.extend(st.sample(&l).unwrap());
        }
        for a in st.e_table().a.values() {
            nodes.extend([a.0.clone(), a.1.clone()]);
        }
        nodes.dedup();
        square_checks(&mut rng, &st, &nodes, &mut tally).map_err(|m| format!("engine seed {seed}: {m}"))?;
    }

    let (mut points, mut configs) = (0, 0);
    let mut provenance: std::collections::BTreeMap<String, usize> = Default::default();
    let (mut cmc_entries, mut probes) = (0, 0);
    for seed in 0..10 {
        let st = engine(&w(3), seed);
        for (a, d) in separator_configs(&st) {
            let o = topology::fixture_o_family(&st, &a).map_err(e)?;
            let mut zs = Vec::new();
            for l in &d {
                zs.extend(st.sample(l).unwrap());
            }
            let sep = topology::normality_separator(&st, &a, &d, &o, &zs).map_err(e)?;
            let u = sep.u_set();
            for x in &a {
                if !u.contains(&st, x).map_err(e)? {
                    return Err(format!("seed {seed}: U misses {x}"));
                }
            }
            for pt in &sep.points {
                if !pt.disjoint {
                    return Err(format!("seed {seed}: V_z meets U at z = {}", pt.z));
                }
                *provenance.entry(pt.provenance.clone()).or_default() += 1;
            }
            points += sep.points.len();
            configs += 1;
        }
        for (a, alpha, z) in case_one_configs(&st) {
            let o = topology::fixture_o_family(&st, &a).map_err(e)?;
            let sep = topology::normality_separator(&st, &a, std::slice::from_ref(&alpha), &o, std::slice::from_ref(&z)).map_err(e)?;
            let pt = &sep.points[0];
            if !pt.disjoint {
                return Err(format!("seed {seed}: V_z meets U at the Case I point {z}"));
            }
            *provenance.entry(pt.provenance.clone()).or_default() += 1;
            points += 1;
            configs += 1;
        }
        let top = st.g_table().values().max().copied().unwrap_or(0);
        let family = topology::neighborhood_family(&st, 1, top + 1).map_err(e)?;
        let d: Vec<Vec<Pair>> = (0..=top + 1).map(|n| st.dn_family(n).into_iter().map(|x| x.1).collect()).collect();
        let rep = topology::cmc_harness(&st, &d, &family, 6).map_err(e)?;
        if !rep.vanishes {
            return Err(format!("seed {seed}: supplied family does not vanish"));
        }
        for en in &rep.entries {
            if !en.pattern {
                return Err(format!("seed {seed}: no pattern at α = {}", en.alpha));
            }
            probes += en.probes.len();
        }
        if rep.entries.len() != st.e_table().a.len() {
            return Err(format!("seed {seed}: {} entries for {} E-levels", rep.entries.len(), st.e_table().a.len()));
        }
        cmc_entries += rep.entries.len();
    }
    if cmc_entries == 0 {
        return Err("no seed produced an E-level".into());
    }
    Ok(format!(
        "desk trees {desk_sizes:?}: {} off-square boxes, {} antichain witnesses; engine squares: {} boxes, {} witnesses; separator: {configs} configurations, {points} points disjoint {provenance:?}; cmc pattern at all {cmc_entries} E-levels ({probes} probes)",
        desk.0,
        desk.1,
        tally.off_square - desk.0,
        tally.witnesses - desk.1
    ))
}

/// Runs every CLI pipeline with outputs under `dir`; returns stdout and
/// file bytes in a fixed order.
fn cli_pipelines(dir: &std::path::Path) -> Result<Vec<Vec<u8>>, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let at = |f: &str| dir.join(f).to_string_lossy().into_owned();
    let a = r#"[{"lim":{"alpha":[[1,1]],"x":{"succ":[{"root":true},[1,3]]}}},{"lim":{"alpha":[[1,1]],"x":{"succ":[{"root":true},[2,3]]}}}]"#;
    std::fs::write(at("a.json"), a).map_err(|e| e.to_string())?;
    std::fs::write(at("d.json"), r#"["w*2"]"#).map_err(|e| e.to_string())?;
    std::fs::write(at("t.json"), r#"{"nodes":[{"level":[],"below":null},{"level":[[0,1]],"below":0},{"level":[[0,1]],"below":0}]}"#)
        .map_err(|e| e.to_string())?;
    std::fs::write(at("f.json"), "[[[]], [[[0,1]]], [[[0,2]]]]").map_err(|e| e.to_string())?;
    std::fs::write(at("c.json"), "[]").map_err(|e| e.to_string())?;
    std::fs::write(at("cond.json"), serde_json::to_string(&lab_core::forcing::bootstrap()).unwrap()).map_err(|e| e.to_string())?;
    let runs: Vec<Vec<String>> = vec![
        vec!["builder", "run", "--height", "w*3", "--seed", "9", "--emit", "s.json", "--transcript", "tr.json"],
        vec!["builder", "run", "--height", "w*2", "--seed", "1", "--oracle", "other"],
        vec!["builder", "check", "--height", "w*2", "--seed", "2", "--emit", "k.json"],
        vec!["forcing", "play", "--sigma", "8", "--seed", "3", "--opponent", "random", "--transcript", "p.json"],
        vec!["forcing", "play", "--sigma", "w", "--seed", "3", "--transcript", "pw.json"],
        vec!["forcing", "fuse", "--steps", "8", "--seed", "3", "--emit", "fz.json"],
        vec!["forcing", "validate", "--condition", "cond.json"],
        vec!["treelab", "qcmp", "[ [ [0,3] ] ]", "[ [ [0,2] ],[ [0,9] ] ]"],
        vec!["treelab", "special", "--tree", "t.json", "--f", "f.json", "--club", "c.json", "--emit", "sp.json"],
        vec!["topology", "separator", "--state", "s.json", "--antichain", "a.json", "--levels", "d.json", "--emit", "sep.json"],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(|x| if x.ends_with(".json") { at(x) } else { x.to_string() }).collect())
    .collect();
    let mut bytes = Vec::new();
    for r in &runs {
        let out = lab_cli::run(std::iter::once("lab".to_string()).chain(r.iter().cloned()));
        if out.code != 0 {
            return Err(format!("{r:?} exited {}: {}", out.code, out.stderr));
        }
        bytes.push(out.stdout.into_bytes());
    }
    for f in ["s.json", "tr.json", "k.json", "p.json", "pw.json", "fz.json", "sp.json", "sep.json"] {
        bytes.push(std::fs::read(at(f)).map_err(|e| e.to_string())?);
    }
    Ok(bytes)
}

fn criterion_10() -> Outcome {
    let base = std::env::temp_dir().join(format!("lab-acceptance-{}", std::process::id()));
    let first = cli_pipelines(&base.join("a"))?;
    let second = cli_pipelines(&base.join("b"))?;
    let _ = std::fs::remove_dir_all(&base);
    let total: usize = first.iter().map(Vec::len).sum();
    match first.iter().zip(&second).position(|(x, y)| x != y) {
        None => Ok(format!("10 pipelines run twice, {} outputs ({total} bytes) byte-identical", first.len())),
        Some(i) => Err(format!("output {i} differs between runs")),
    }
}

fn run(n: usize, name: &str, f: fn() -> Outcome) -> bool {
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    match out {
        Ok(detail) => {
            println!("criterion {n:>2} PASS {name}: {detail}");
            true
        }
        Err(why) => {
            println!("criterion {n:>2} FAIL {name}: {why}");
            false
        }
    }
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("ordinal arithmetic oracle", criterion_1),
        ("elevator composition", criterion_2),
        ("transitivity witnesses", criterion_3),
        ("engine invariants", criterion_4),
        ("coarsening laws", criterion_5),
        ("forcing constructions", criterion_6),
        ("specialization certificates", criterion_7),
        ("ℚ_κ order", criterion_8),
        ("topology", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !run(i + 1, name, *f) {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
