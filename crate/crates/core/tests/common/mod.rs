#![allow(dead_code)]

use lab_core::Ordinal;
use rand::Rng;

/// An ordinal as a plain word of powers `ω^{e_1} + ω^{e_2} + ...` in any order.
/// Normalising means deleting every power followed by a strictly larger one.
#[derive(Clone, Debug)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn normal(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for &e in &self.0 {
            while out.last().is_some_and(|&l| l < e) {
                out.pop();
            }
            out.push(e);
        }
        out
    }

    pub fn add(&self, o: &Word) -> Word {
        Word(self.0.iter().chain(&o.0).copied().collect())
    }

    /// `α·β` distributes on the right: each `ω^b` of β contributes
    /// `ω^{lead α + b}` when b > 0 and a full copy of α when b = 0.
    pub fn mul(&self, o: &Word) -> Word {
        let a = self.normal();
        let Some(&lead) = a.first() else { return Word(vec![]) };
        let mut out = Vec::new();
        for &b in &o.0 {
            if b == 0 {
                out.extend(&a);
            } else {
                out.push(lead + b);
            }
        }
        Word(out)
    }

    pub fn cmp(&self, o: &Word) -> std::cmp::Ordering {
        self.normal().cmp(&o.normal())
    }

    pub fn to_ordinal(&self) -> Ordinal {
        let mut acc = Ordinal::zero();
        for &e in &self.0 {
            acc = acc.add(&Ordinal::omega_pow(e));
        }
        acc
    }

    /// The normal word read back as CNF terms.
    pub fn terms(&self) -> Vec<(u32, u64)> {
        let mut out: Vec<(u32, u64)> = Vec::new();
        for e in self.normal() {
            match out.last_mut() {
                Some((x, c)) if *x == e => *c += 1,
                _ => out.push((e, 1)),
            }
        }
        out
    }
}

/// A random word with exponents below `max_exp`, so the value is below `ω^max_exp`.
pub fn random_word<R: Rng>(rng: &mut R, max_exp: u32, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word((0..len).map(|_| rng.gen_range(0..max_exp)).collect())
}

/// Runs add/mul/cmp against the word oracle; returns the mismatches.
pub fn ordinal_mismatches(instances: usize, seed: u64) -> Vec<String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for _ in 0..instances {
        let a = random_word(&mut rng, 3, 6);
        let b = random_word(&mut rng, 3, 6);
        let (oa, ob) = (a.to_ordinal(), b.to_ordinal());
        if oa.terms() != a.terms().as_slice() {
            bad.push(format!("build {a:?}"));
        }
        if oa.add(&ob).terms() != a.add(&b).terms().as_slice() {
            bad.push(format!("add {a:?} {b:?}"));
        }
        if oa.cmp(&ob) != a.cmp(&b) {
            bad.push(format!("cmp {a:?} {b:?}"));
        }
        let prod = a.mul(&b);
        if oa.mul(&ob).terms() != prod.terms().as_slice() {
            bad.push(format!("mul {a:?} {b:?}"));
        }
    }
    bad
}
