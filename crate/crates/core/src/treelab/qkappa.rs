//! The linear order ℚ_κ on nonempty finite sequences of ordinals: a proper
//! end-extension lies below, otherwise the first difference decides.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TreeError;
use crate::ordinals::Ordinal;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Ordinal>", into = "Vec<Ordinal>")]
pub struct QKappaSeq(Vec<Ordinal>);

impl TryFrom<Vec<Ordinal>> for QKappaSeq {
    type Error = TreeError;

    fn try_from(v: Vec<Ordinal>) -> Result<Self, TreeError> {
        QKappaSeq::new(v)
    }
}

impl From<QKappaSeq> for Vec<Ordinal> {
    fn from(q: QKappaSeq) -> Self {
        q.0
    }
}

impl QKappaSeq {
    pub fn new(v: Vec<Ordinal>) -> Result<QKappaSeq, TreeError> {
        if v.is_empty() {
            return Err(TreeError::Invalid("a ℚ_κ sequence must be nonempty".into()));
        }
        Ok(QKappaSeq(v))
    }

    pub fn nats(v: &[u64]) -> Result<QKappaSeq, TreeError> {
        QKappaSeq::new(v.iter().map(|&n| Ordinal::nat(n)).collect())
    }

    pub fn entries(&self) -> &[Ordinal] {
        &self.0
    }

    /// Whether every entry lies below `alpha`.
    pub fn is_below(&self, alpha: &Ordinal) -> bool {
        self.0.iter().all(|o| o < alpha)
    }
}

impl fmt::Display for QKappaSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|o| o.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

/// Outcome of [`qkappa_cmp`]: `LL` means `q ≪ p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QCmp {
    LL,
    EQ,
    GG,
}

impl fmt::Display for QCmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QCmp::LL => "LL",
            QCmp::EQ => "EQ",
            QCmp::GG => "GG",
        })
    }
}

pub fn qkappa_cmp(q: &QKappaSeq, p: &QKappaSeq) -> QCmp {
    for (a, b) in q.0.iter().zip(p.0.iter()) {
        match a.cmp(b) {
            Ordering::Less => return QCmp::LL,
            Ordering::Greater => return QCmp::GG,
            Ordering::Equal => {}
        }
    }
    match q.0.len().cmp(&p.0.len()) {
        Ordering::Greater => QCmp::LL,
        Ordering::Less => QCmp::GG,
        Ordering::Equal => QCmp::EQ,
    }
}
