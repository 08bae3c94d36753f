//! Ordinals below ω^ω in Cantor normal form.
//!
//! An [`Ordinal`] is a finite list of `(exponent, coefficient)` terms with
//! strictly decreasing exponents and positive coefficients, denoting
//! `Σ ω^e·c`. The empty list is zero. Because the representation is
//! canonical, derived equality and hashing are ordinal equality.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrdinalError {
    #[error("non-canonical term list: {0}")]
    NonCanonical(String),
    #[error("ordinal {0} lies outside the working universe below {1}")]
    OutOfUniverse(Ordinal, Ordinal),
    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),
    #[error("cannot parse ordinal literal {0:?}")]
    Parse(String),
}

/// An ordinal below ω^ω in Cantor normal form.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, u64)>", into = "Vec<(u32, u64)>")]
pub struct Ordinal {
    terms: Vec<(u32, u64)>,
}

impl TryFrom<Vec<(u32, u64)>> for Ordinal {
    type Error = OrdinalError;

    fn try_from(terms: Vec<(u32, u64)>) -> Result<Self, Self::Error> {
        Ordinal::from_terms(terms)
    }
}

impl From<Ordinal> for Vec<(u32, u64)> {
    fn from(o: Ordinal) -> Self {
        o.terms
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kind {
    Zero,
    Successor(Ordinal),
    Limit,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::nat(1)
    }

    pub fn nat(n: u64) -> Self {
        Self::term(0, n)
    }

    pub fn omega() -> Self {
        Self::term(1, 1)
    }

    /// ω^e
    pub fn omega_pow(e: u32) -> Self {
        Self::term(e, 1)
    }

    /// ω^e·c
    pub fn term(e: u32, c: u64) -> Self {
        if c == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(e, c)] }
        }
    }

    pub fn from_terms(terms: Vec<(u32, u64)>) -> Result<Self, OrdinalError> {
        for w in terms.windows(2) {
            if w[0].0 <= w[1].0 {
                return Err(OrdinalError::NonCanonical(format!("{terms:?}")));
            }
        }
        if terms.iter().any(|&(_, c)| c == 0) {
            return Err(OrdinalError::NonCanonical(format!("{terms:?}")));
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|&(e, _)| e == 0)
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(0, c)] => Some(*c),
            _ => None,
        }
    }

    /// Exponent of the leading term; `None` for zero.
    pub fn leading_exponent(&self) -> Option<u32> {
        self.terms.first().map(|t| t.0)
    }

    /// Coefficient of ω^e (zero when absent).
    pub fn coefficient(&self, e: u32) -> u64 {
        self.terms
            .iter()
            .find(|t| t.0 == e)
            .map(|t| t.1)
            .unwrap_or(0)
    }

    pub fn classify(&self) -> Kind {
        match self.terms.last() {
            None => Kind::Zero,
            Some(&(0, c)) => {
                let mut terms = self.terms.clone();
                if c == 1 {
                    terms.pop();
                } else {
                    terms.last_mut().unwrap().1 = c - 1;
                }
                Kind::Successor(Ordinal { terms })
            }
            Some(_) => Kind::Limit,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.classify(), Kind::Limit)
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some(&(0, _)))
    }

    /// Member of the set of infinite countable limit ordinals.
    pub fn is_in_lambda(&self) -> bool {
        self.is_limit()
    }

    pub fn pred(&self) -> Option<Ordinal> {
        match self.classify() {
            Kind::Successor(p) => Some(p),
            _ => None,
        }
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::one())
    }

    /// `sup` of the ordinal viewed as the set of its predecessors.
    pub fn sup_of_set(&self) -> Ordinal {
        self.pred().unwrap_or_else(|| self.clone())
    }

    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(&(lead, lead_c)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(u32, u64)> = self
            .terms
            .iter()
            .copied()
            .take_while(|&(e, _)| e >= lead)
            .collect();
        match terms.last_mut() {
            Some(last) if last.0 == lead => {
                last.1 = last.1.checked_add(lead_c).expect("ordinal coefficient overflow");
                terms.extend_from_slice(&other.terms[1..]);
            }
            _ => terms.extend_from_slice(&other.terms),
        }
        Ordinal { terms }
    }

    pub fn mul(&self, other: &Ordinal) -> Ordinal {
        let Some(&(lead, lead_c)) = self.terms.first() else {
            return Ordinal::zero();
        };
        let mut acc = Ordinal::zero();
        for &(f, d) in &other.terms {
            let piece = if f > 0 {
                Ordinal::term(lead + f, d)
            } else {
                let mut terms = self.terms.clone();
                terms[0].1 = lead_c.checked_mul(d).expect("ordinal coefficient overflow");
                Ordinal { terms }
            };
            acc = acc.add(&piece);
        }
        acc
    }

    /// The unique `d` with `self + d = other`, when `self <= other`.
    pub fn sub_left(&self, other: &Ordinal) -> Option<Ordinal> {
        if self > other {
            return None;
        }
        for (i, (a, b)) in self.terms.iter().zip(other.terms.iter()).enumerate() {
            if a == b {
                continue;
            }
            if b.0 > a.0 {
                return Some(Ordinal { terms: other.terms[i..].to_vec() });
            }
            // same exponent, larger coefficient on the right
            let mut terms = vec![(b.0, b.1 - a.1)];
            terms.extend_from_slice(&other.terms[i + 1..]);
            return Some(Ordinal { terms });
        }
        Some(Ordinal { terms: other.terms[self.terms.len()..].to_vec() })
    }

    /// Part of the ordinal made of terms with exponent at least `e`.
    pub fn high_part(&self, e: u32) -> Ordinal {
        Ordinal {
            terms: self.terms.iter().copied().filter(|t| t.0 >= e).collect(),
        }
    }

    /// Part of the ordinal made of terms with exponent below `e`.
    pub fn low_part(&self, e: u32) -> Ordinal {
        Ordinal {
            terms: self.terms.iter().copied().filter(|t| t.0 < e).collect(),
        }
    }

    /// Exponent of the last (smallest) term; `None` for zero.
    pub fn last_exponent(&self) -> Option<u32> {
        self.terms.last().map(|t| t.0)
    }

    /// Same ordinal with the coefficient of ω^e replaced by `c`.
    pub fn with_coefficient(&self, e: u32, c: u64) -> Ordinal {
        let mut terms: Vec<(u32, u64)> =
            self.terms.iter().copied().filter(|t| t.0 != e).collect();
        if c > 0 {
            let at = terms.iter().position(|t| t.0 < e).unwrap_or(terms.len());
            terms.insert(at, (e, c));
        }
        Ordinal { terms }
    }

    pub fn is_multiple_of_omega_pow(&self, e: u32) -> bool {
        self.terms.iter().all(|t| t.0 >= e)
    }

    /// ω^e · self (shifts every exponent up by `e`; coefficients of the
    /// finite part become coefficients of ω^e).
    pub fn omega_pow_times(&self, e: u32) -> Ordinal {
        Ordinal {
            terms: self.terms.iter().map(|&(x, c)| (x + e, c)).collect(),
        }
    }

    /// Exact quotient by ω^e on the left; `None` unless divisible.
    pub fn div_omega_pow(&self, e: u32) -> Option<Ordinal> {
        self.is_multiple_of_omega_pow(e).then(|| Ordinal {
            terms: self.terms.iter().map(|&(x, c)| (x - e, c)).collect(),
        })
    }

    /// Least `d` with `ω^e·d >= self`.
    pub fn ceil_div_omega_pow(&self, e: u32) -> Ordinal {
        let high = self.high_part(e);
        let base = if high == *self {
            high
        } else {
            high.add(&Ordinal::omega_pow(e))
        };
        base.div_omega_pow(e).expect("high part is divisible")
    }

    /// Degree used by the pairing bijection: 0 for finite ordinals, the
    /// leading exponent otherwise.
    fn degree(&self) -> u32 {
        self.leading_exponent().unwrap_or(0)
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            let ord = a.0.cmp(&b.0).then(a.1.cmp(&b.1));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match (e, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "w")?,
                (1, c) => write!(f, "w*{c}")?,
                (e, 1) => write!(f, "w^{e}")?,
                (e, c) => write!(f, "w^{e}*{c}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `w`, `w^2`, `w*3+5`, `w^2*2+w+1`; summands are added left to
/// right with ordinal addition, so `5+w` parses to `w`.
impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || OrdinalError::Parse(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err());
        }
        let mut acc = Ordinal::zero();
        for summand in compact.split('+') {
            let mut factors = summand.split('*');
            let head = factors.next().ok_or_else(err)?;
            let base = if let Some(rest) = head.strip_prefix('w') {
                let e = match rest.strip_prefix('^') {
                    Some(exp) => exp.parse::<u32>().map_err(|_| err())?,
                    None if rest.is_empty() => 1,
                    None => return Err(err()),
                };
                Ordinal::omega_pow(e)
            } else {
                Ordinal::nat(head.parse::<u64>().map_err(|_| err())?)
            };
            let mut value = base;
            for factor in factors {
                let c = factor.parse::<u64>().map_err(|_| err())?;
                value = value.mul(&Ordinal::nat(c));
            }
            acc = acc.add(&value);
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Pairing bijection between finite sequences of ordinals and ordinals.
//
// Sequences and ordinals are both split by degree. Degree-0 sequences (all
// entries finite) are coded by naturals through iterated Cantor pairing.
// For m >= 1, a sequence of degree m is split at its first degree-m entry
// into (prefix over ω^m, that entry, suffix over ω^(m+1)); the triple is
// coded by a natural, which in turn indexes the degree-m ordinals
// ω^m·(c+1)+ρ. Each degree class is mapped onto itself, so ω^m is closed
// under the bijection for every m >= 1.
// ---------------------------------------------------------------------------

fn pair(x: u128, y: u128) -> Result<u128, OrdinalError> {
    let s = x.checked_add(y).ok_or(OrdinalError::Overflow("pairing"))?;
    let tri = s
        .checked_mul(s + 1)
        .ok_or(OrdinalError::Overflow("pairing"))?
        / 2;
    tri.checked_add(y).ok_or(OrdinalError::Overflow("pairing"))
}

fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

fn unpair(z: u128) -> (u128, u128) {
    let w = (isqrt(8 * z + 1) - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = z - t;
    (w - y, y)
}

fn tuple_encode(v: &[u128]) -> Result<u128, OrdinalError> {
    match v {
        [] => Ok(0),
        [x] => Ok(*x),
        [x, rest @ ..] => pair(*x, tuple_encode(rest)?),
    }
}

fn tuple_decode(z: u128, len: usize) -> Vec<u128> {
    let mut out = Vec::with_capacity(len);
    let mut z = z;
    for _ in 1..len {
        let (x, rest) = unpair(z);
        out.push(x);
        z = rest;
    }
    if len > 0 {
        out.push(z);
    }
    out
}

fn natseq_encode(s: &[u128]) -> Result<u128, OrdinalError> {
    if s.is_empty() {
        return Ok(0);
    }
    let code = pair((s.len() - 1) as u128, tuple_encode(s)?)?;
    code.checked_add(1).ok_or(OrdinalError::Overflow("pairing"))
}

fn natseq_decode(z: u128) -> Vec<u128> {
    if z == 0 {
        return Vec::new();
    }
    let (len_minus_one, body) = unpair(z - 1);
    tuple_decode(body, len_minus_one as usize + 1)
}

fn to_u64(x: u128) -> Result<u64, OrdinalError> {
    u64::try_from(x).map_err(|_| OrdinalError::Overflow("decoding a coefficient"))
}

/// Code of an ordinal below ω^m (m >= 1) by its m coefficients.
fn below_pow_encode(a: &Ordinal, m: u32) -> Result<u128, OrdinalError> {
    let coeffs: Vec<u128> = (0..m).rev().map(|e| a.coefficient(e) as u128).collect();
    tuple_encode(&coeffs)
}

fn below_pow_decode(z: u128, m: u32) -> Result<Ordinal, OrdinalError> {
    let coeffs = tuple_decode(z, m as usize);
    let mut terms = Vec::new();
    for (i, c) in coeffs.into_iter().enumerate() {
        if c > 0 {
            terms.push((m - 1 - i as u32, to_u64(c)?));
        }
    }
    Ok(Ordinal { terms })
}

/// Code of an ordinal of degree exactly m >= 1.
fn degree_encode(a: &Ordinal, m: u32) -> Result<u128, OrdinalError> {
    let lead = a.coefficient(m) as u128;
    let rest = Ordinal { terms: a.terms[1..].to_vec() };
    pair(lead - 1, below_pow_encode(&rest, m)?)
}

fn degree_decode(z: u128, m: u32) -> Result<Ordinal, OrdinalError> {
    let (c, r) = unpair(z);
    let head = Ordinal::term(m, to_u64(c + 1)?);
    Ok(head.add(&below_pow_decode(r, m)?))
}

/// Code of a sequence whose entries are all below ω^m.
fn seq_below_encode(s: &[Ordinal], m: u32) -> Result<u128, OrdinalError> {
    if m == 0 {
        return Ok(s.len() as u128);
    }
    let codes = s
        .iter()
        .map(|a| below_pow_encode(a, m))
        .collect::<Result<Vec<_>, _>>()?;
    natseq_encode(&codes)
}

fn seq_below_decode(z: u128, m: u32) -> Result<Vec<Ordinal>, OrdinalError> {
    if m == 0 {
        return Ok(vec![Ordinal::zero(); z as usize]);
    }
    natseq_decode(z)
        .into_iter()
        .map(|c| below_pow_decode(c, m))
        .collect()
}

/// Encodes a finite sequence of ordinals as an ordinal. The empty sequence
/// is sent to 0.
pub fn godel_encode(s: &[Ordinal]) -> Result<Ordinal, OrdinalError> {
    let m = s.iter().map(Ordinal::degree).max().unwrap_or(0);
    if m == 0 {
        let nats: Vec<u128> = s.iter().map(|a| a.coefficient(0) as u128).collect();
        return Ok(Ordinal::nat(to_u64(natseq_encode(&nats)?)?));
    }
    let j = s.iter().position(|a| a.degree() == m).expect("max is attained");
    let prefix = seq_below_encode(&s[..j], m)?;
    let entry = degree_encode(&s[j], m)?;
    let suffix = seq_below_encode(&s[j + 1..], m + 1)?;
    degree_decode(tuple_encode(&[prefix, entry, suffix])?, m)
}

/// Inverse of [`godel_encode`], restricted to ordinals below `bound`.
pub fn godel_decode(a: &Ordinal, bound: &Ordinal) -> Result<Vec<Ordinal>, OrdinalError> {
    if a >= bound {
        return Err(OrdinalError::OutOfUniverse(a.clone(), bound.clone()));
    }
    let m = a.degree();
    if m == 0 {
        return natseq_decode(a.coefficient(0) as u128)
            .into_iter()
            .map(|n| to_u64(n).map(Ordinal::nat))
            .collect::<Result<_, _>>();
    }
    let parts = tuple_decode(degree_encode(a, m)?, 3);
    let mut out = seq_below_decode(parts[0], m)?;
    out.push(degree_decode(parts[1], m)?);
    out.extend(seq_below_decode(parts[2], m + 1)?);
    Ok(out)
}

/// Whether the pairing bijection maps the finite sequences over `a` onto
/// `a`. Exactly the powers ω^m with m >= 1 qualify.
pub fn is_pairing_closed(a: &Ordinal) -> bool {
    matches!(a.terms.as_slice(), [(e, 1)] if *e >= 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn addition_examples() {
        assert_eq!(o("w").add(&o("1")), o("w+1"));
        assert_eq!(o("1").add(&o("w")), o("w"));
        assert_eq!(o("w^2*2+3").add(&o("w*4")), o("w^2*2+w*4"));
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(o("w*2").mul(&o("w")), o("w^2"));
        assert_eq!(o("w^2+w+7").mul(&Ordinal::zero()), Ordinal::zero());
        assert_eq!(o("w").mul(&o("3")), o("w*3"));
        assert_eq!(o("w+1").mul(&o("2")), o("w*2+1"));
    }

    #[test]
    fn comparison_examples() {
        assert_eq!(o("w").cmp(&o("5")), Ordering::Greater);
        assert_eq!(o("w*2+1").cmp(&o("w*2+1")), Ordering::Equal);
        assert_eq!(o("w^2+w").cmp(&o("w^2+5")), Ordering::Greater);
    }

    #[test]
    fn classification() {
        assert_eq!(o("w+3").classify(), Kind::Successor(o("w+2")));
        assert_eq!(o("w^2").classify(), Kind::Limit);
        assert_eq!(Ordinal::zero().classify(), Kind::Zero);
        assert!(o("w*2").is_in_lambda());
        assert!(!o("7").is_in_lambda());
    }

    #[test]
    fn left_subtraction() {
        assert_eq!(o("w+5").sub_left(&o("w*2")), Some(o("w")));
        assert_eq!(o("3").sub_left(&o("w")), Some(o("w")));
        assert_eq!(o("w*2").sub_left(&o("w*5+1")), Some(o("w*3+1")));
        assert_eq!(o("w*2").sub_left(&o("w")), None);
    }

    #[test]
    fn omega_division() {
        assert_eq!(o("w+3").ceil_div_omega_pow(1), o("2"));
        assert_eq!(o("w^2+w").ceil_div_omega_pow(1), o("w+1"));
        assert_eq!(o("w^2").div_omega_pow(1), Some(o("w")));
        assert_eq!(o("w^2+1").div_omega_pow(1), None);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "7", "w", "w*3+5", "w^2", "w^2*2+w+1"] {
            assert_eq!(o(s).to_string(), s);
        }
        assert!("w^".parse::<Ordinal>().is_err());
        assert!("".parse::<Ordinal>().is_err());
    }

    #[test]
    fn json_form_is_term_pairs() {
        let a = o("w^2*2+3");
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[2,2],[0,3]]");
        let back: Ordinal = serde_json::from_str("[[2,2],[0,3]]").unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<Ordinal>("[[0,3],[2,2]]").is_err());
        assert!(serde_json::from_str::<Ordinal>("[[1,0]]").is_err());
    }

    #[test]
    fn pairing_examples() {
        let bound = o("w^3");
        assert_eq!(godel_encode(&[]).unwrap(), Ordinal::zero());
        let s = vec![o("w"), o("1")];
        assert_eq!(godel_decode(&godel_encode(&s).unwrap(), &bound).unwrap(), s);
        assert!(matches!(
            godel_decode(&o("w^3"), &bound),
            Err(OrdinalError::OutOfUniverse(..))
        ));
    }

    #[test]
    fn pairing_injective_on_small_sequences() {
        let mut seen = std::collections::HashSet::new();
        let mut count = 0;
        let mut all: Vec<Vec<u64>> = vec![vec![]];
        for len in 1..=3u32 {
            for mut code in 0..10u64.pow(len) {
                let mut v = Vec::new();
                for _ in 0..len {
                    v.push(code % 10);
                    code /= 10;
                }
                all.push(v);
            }
        }
        for v in all {
            let s: Vec<Ordinal> = v.iter().map(|&n| Ordinal::nat(n)).collect();
            assert!(seen.insert(godel_encode(&s).unwrap()));
            count += 1;
        }
        assert_eq!(count, 1 + 10 + 100 + 1000);
    }

    #[test]
    fn closure_points_are_powers_of_omega() {
        assert!(is_pairing_closed(&o("w")));
        assert!(is_pairing_closed(&o("w^2")));
        assert!(!is_pairing_closed(&o("w*2")));
        assert!(!is_pairing_closed(&o("1")));
        assert!(!is_pairing_closed(&Ordinal::zero()));
        // sequences over ω land in ω; a sequence touching ω leaves it
        let inside = godel_encode(&[o("4"), o("0"), o("9")]).unwrap();
        assert!(inside < o("w"));
        let outside = godel_encode(&[o("4"), o("w")]).unwrap();
        assert!(outside >= o("w") && outside < o("w^2"));
    }
}
