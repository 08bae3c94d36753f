//! Deterministic stand-ins for the guessing data the construction reads:
//! `Ω_β`, `ψ(β)`, a partition class, and a well-order choice.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ordinals::Ordinal;
use crate::treelab::{rat, NodeDesc, NodeRef};

/// The value of `Ω_β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSpec {
    Subset(Vec<NodeDesc>),
    Function(OmegaFn),
    Other,
}

/// A function from level-matched pairs to `ω`, given finitely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaFn {
    /// Explicit entries; pairs not listed map to `default` (if any).
    Table { entries: Vec<(NodeDesc, NodeDesc, u64)>, default: Option<u64> },
    /// A hash of the two descriptors modulo `modulus`.
    Hashed { seed: u64, modulus: u64 },
}

fn key(n: &NodeRef) -> String {
    serde_json::to_string(&n.to_desc()).expect("descriptors serialize")
}

impl OmegaFn {
    pub fn eval(&self, x0: &NodeRef, x1: &NodeRef) -> Option<u64> {
        match self {
            OmegaFn::Table { entries, default } => {
                let (k0, k1) = (key(x0), key(x1));
                entries
                    .iter()
                    .find(|(a, b, _)| {
                        serde_json::to_string(a).ok().as_deref() == Some(k0.as_str())
                            && serde_json::to_string(b).ok().as_deref() == Some(k1.as_str())
                    })
                    .map(|e| e.2)
                    .or(*default)
            }
            OmegaFn::Hashed { seed, modulus } => {
                let mut h = DefaultHasher::new();
                seed.hash(&mut h);
                key(x0).hash(&mut h);
                key(x1).hash(&mut h);
                Some(h.finish() % (*modulus).max(1))
            }
        }
    }
}

/// The value of `ψ(β)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSpec {
    Node(NodeDesc),
    Nat(u64),
    None,
}

pub trait Oracle {
    fn name(&self) -> String;
    fn omega_at(&self, beta: &Ordinal) -> OmegaSpec;
    fn psi_at(&self, beta: &Ordinal) -> PsiSpec;
    /// Index of the partition cell containing `beta`.
    fn class_at(&self, _beta: &Ordinal) -> u64 {
        0
    }
    /// Index of the least key; the keys are serialized candidates.
    fn choose_min(&self, keys: &[String]) -> Option<usize> {
        keys.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i)
    }
}

/// Answers `Other` everywhere, so every ladder step falls to the default case.
pub struct OtherOracle;

impl Oracle for OtherOracle {
    fn name(&self) -> String {
        "other".into()
    }
    fn omega_at(&self, _: &Ordinal) -> OmegaSpec {
        OmegaSpec::Other
    }
    fn psi_at(&self, _: &Ordinal) -> PsiSpec {
        PsiSpec::None
    }
}

/// Seeded oracle drawing fresh data at each ordinal.
pub struct PseudoRandomOracle {
    pub seed: u64,
}

/// The four level-one nodes the pseudorandom oracle guesses with.
pub fn level_one_pool() -> Vec<NodeRef> {
    [(1, 3), (2, 3), (1, 2), (1, 4)]
        .iter()
        .map(|&(n, d)| crate::treelab::succ_trusted(&NodeRef::root(), rat(n, d)))
        .collect()
}

impl PseudoRandomOracle {
    fn rng(&self, beta: &Ordinal) -> ChaCha8Rng {
        let mut h = DefaultHasher::new();
        beta.hash(&mut h);
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ h.finish())
    }

    fn draw(&self, beta: &Ordinal) -> (OmegaSpec, PsiSpec, u64) {
        let mut r = self.rng(beta);
        let roll = r.gen_range(0..10);
        let class = r.gen_range(0..2);
        if roll < 4 {
            let pool = level_one_pool();
            let mut picked: Vec<NodeDesc> = pool.iter().filter(|_| r.gen_bool(0.5)).map(|n| n.to_desc()).collect();
            if picked.is_empty() {
                picked.push(pool[r.gen_range(0..pool.len())].to_desc());
            }
            let w = pool[r.gen_range(0..2)].to_desc();
            (OmegaSpec::Subset(picked), PsiSpec::Node(w), class)
        } else if roll < 8 {
            let f = OmegaFn::Hashed { seed: r.gen(), modulus: 3 };
            (OmegaSpec::Function(f), PsiSpec::Nat(r.gen_range(0..3)), class)
        } else {
            (OmegaSpec::Other, PsiSpec::Nat(0), class)
        }
    }
}

impl Oracle for PseudoRandomOracle {
    fn name(&self) -> String {
        format!("pseudorandom:{}", self.seed)
    }
    fn omega_at(&self, beta: &Ordinal) -> OmegaSpec {
        self.draw(beta).0
    }
    fn psi_at(&self, beta: &Ordinal) -> PsiSpec {
        self.draw(beta).1
    }
    fn class_at(&self, beta: &Ordinal) -> u64 {
        self.draw(beta).2
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default = "other")]
    pub omega: OmegaSpec,
    #[serde(default = "none")]
    pub psi: PsiSpec,
    #[serde(default)]
    pub class: u64,
}

fn other() -> OmegaSpec {
    OmegaSpec::Other
}

fn none() -> PsiSpec {
    PsiSpec::None
}

/// A table keyed by ordinal literals such as `"w+3"`; unlisted ordinals
/// answer `Other`.
pub struct ScriptedOracle {
    pub entries: BTreeMap<Ordinal, ScriptEntry>,
}

impl ScriptedOracle {
    pub fn from_json(text: &str) -> Result<ScriptedOracle, String> {
        let raw: BTreeMap<String, ScriptEntry> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut entries = BTreeMap::new();
        for (k, v) in raw {
            let o: Ordinal = k.parse().map_err(|e| format!("key {k:?}: {e}"))?;
            entries.insert(o, v);
        }
        Ok(ScriptedOracle { entries })
    }
}

impl Oracle for ScriptedOracle {
    fn name(&self) -> String {
        "scripted".into()
    }
    fn omega_at(&self, beta: &Ordinal) -> OmegaSpec {
        self.entries.get(beta).map_or(OmegaSpec::Other, |e| e.omega.clone())
    }
    fn psi_at(&self, beta: &Ordinal) -> PsiSpec {
        self.entries.get(beta).map_or(PsiSpec::None, |e| e.psi.clone())
    }
    fn class_at(&self, beta: &Ordinal) -> u64 {
        self.entries.get(beta).map_or(0, |e| e.class)
    }
}
