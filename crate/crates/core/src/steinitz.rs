//! Supernatural (Steinitz) numbers and tail equivalence of rank-one chains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::chains::GroupChain;
use crate::error::{Error, Result};
use crate::groups::GroupFamily;

/// Step indices are factored by trial division up to this bound, so they
/// must not exceed its square.
pub const TRIAL_DIVISION_BOUND: u64 = 1_000_000;
pub const MAX_STEP: u64 = TRIAL_DIVISION_BOUND * TRIAL_DIVISION_BOUND;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(n) => write!(f, "{n}"),
            Exponent::Infinite => write!(f, "∞"),
        }
    }
}

/// Result of [`exponent_of`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentBound {
    Exact(Exponent),
    AtLeast(u32),
}

/// Constructor-supplied facts about an infinite step sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    /// Every prime occurs with total exponent at most `B`.
    EachPrimeBoundedBy(u32),
    /// Only primes of this set occur beyond some finite prefix.
    PrimesEventuallyIn(BTreeSet<u64>),
}

type Steps = dyn Fn(usize) -> Result<u64> + Send + Sync;

/// A lazily evaluated sequence of step indices `m_0, m_1, …`.
pub struct IndexSequence {
    steps: Box<Steps>,
    /// `None` for infinite sequences.
    len: Option<usize>,
    annotation: Option<Annotation>,
    memo: Mutex<Vec<u64>>,
}

impl fmt::Debug for IndexSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let memo = self.memo.lock().unwrap();
        f.debug_struct("IndexSequence")
            .field("prefix", &*memo)
            .field("len", &self.len)
            .field("annotation", &self.annotation)
            .finish()
    }
}

impl IndexSequence {
    pub fn step(&self, i: usize) -> Result<u64> {
        if self.len.is_some_and(|n| i >= n) {
            return Err(Error::InvalidStep(format!("step {i} beyond a sequence of length {}", self.len.unwrap())));
        }
        if let Some(&m) = self.memo.lock().unwrap().get(i) {
            return Ok(m);
        }
        let mut memo = self.memo.lock().unwrap();
        while memo.len() <= i {
            let m = (self.steps)(memo.len())?;
            check_step(m)?;
            memo.push(m);
        }
        Ok(memo[i])
    }

    pub fn len(&self) -> Option<usize> {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == Some(0)
    }

    pub fn annotation(&self) -> Option<&Annotation> {
        self.annotation.as_ref()
    }
}

fn check_step(m: u64) -> Result<()> {
    if m == 0 || m > MAX_STEP {
        return Err(Error::InvalidStep(format!("step index {m} outside 1..={MAX_STEP}")));
    }
    Ok(())
}

/// A supernatural number `∏ p^{e_p}` with `e_p ∈ ℕ ∪ {∞}`.
#[derive(Debug, Clone)]
pub enum SteinitzNumber {
    FiniteSupport(BTreeMap<u64, Exponent>),
    Sequence(Arc<IndexSequence>),
}

impl SteinitzNumber {
    /// Finite-support number; zero exponents are dropped and keys must be prime.
    pub fn finite_support(exponents: impl IntoIterator<Item = (u64, Exponent)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, e) in exponents {
            if !is_prime(p) {
                return Err(Error::InvalidStep(format!("{p} is not prime")));
            }
            if e != Exponent::Finite(0) {
                map.insert(p, e);
            }
        }
        Ok(SteinitzNumber::FiniteSupport(map))
    }

    /// `∏ p^∞` over the primes dividing some step of a periodic sequence.
    pub fn periodic(steps: &[u64]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &m in steps {
            check_step(m)?;
            for (p, _) in factor(m)? {
                map.insert(p, Exponent::Infinite);
            }
        }
        Ok(SteinitzNumber::FiniteSupport(map))
    }

    pub fn sequence(
        steps: impl Fn(usize) -> Result<u64> + Send + Sync + 'static,
        len: Option<usize>,
        annotation: Option<Annotation>,
    ) -> Self {
        SteinitzNumber::Sequence(Arc::new(IndexSequence {
            steps: Box::new(steps),
            len,
            annotation,
            memo: Mutex::new(Vec::new()),
        }))
    }

    /// The number left after removing the first steps' contribution; the
    /// Steinitz number of a truncated chain.
    pub fn without_prefix(&self, prefix: &[BigInt]) -> Result<Self> {
        match self {
            SteinitzNumber::FiniteSupport(map) => {
                let mut map = map.clone();
                for m in prefix {
                    let m = m.to_u64().ok_or_else(|| Error::InvalidStep(format!("step {m} too large")))?;
                    check_step(m)?;
                    for (p, k) in factor(m)? {
                        match map.get_mut(&p) {
                            Some(Exponent::Infinite) => {}
                            Some(Exponent::Finite(e)) if *e >= k => *e -= k,
                            _ => return Err(Error::InvalidStep(format!("prefix step {m} exceeds the number"))),
                        }
                    }
                }
                map.retain(|_, e| *e != Exponent::Finite(0));
                Ok(SteinitzNumber::FiniteSupport(map))
            }
            SteinitzNumber::Sequence(seq) => {
                let k = prefix.len();
                let inner = seq.clone();
                let annotation = seq.annotation.clone();
                Ok(SteinitzNumber::sequence(move |i| inner.step(i + k), seq.len.map(|n| n.saturating_sub(k)), annotation))
            }
        }
    }

    fn infinite_primes(&self) -> Option<BTreeSet<u64>> {
        match self {
            SteinitzNumber::FiniteSupport(map) => {
                Some(map.iter().filter(|(_, e)| **e == Exponent::Infinite).map(|(p, _)| *p).collect())
            }
            SteinitzNumber::Sequence(_) => None,
        }
    }
}

impl fmt::Display for SteinitzNumber {
    /// `2^∞ · 3^2 · 5`; the empty product is `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SteinitzNumber::FiniteSupport(map) if map.is_empty() => write!(f, "1"),
            SteinitzNumber::FiniteSupport(map) => {
                let parts: Vec<String> = map
                    .iter()
                    .map(|(p, e)| match e {
                        Exponent::Finite(1) => p.to_string(),
                        e => format!("{p}^{e}"),
                    })
                    .collect();
                write!(f, "{}", parts.join(" · "))
            }
            SteinitzNumber::Sequence(seq) => {
                let shown: Vec<String> = (0..6).map_while(|i| seq.step(i).ok()).map(|m| m.to_string()).collect();
                let more = seq.len.map_or(true, |n| n > shown.len());
                write!(f, "∏({}{})", shown.join(" · "), if more { " · …" } else { "" })?;
                match &seq.annotation {
                    Some(Annotation::EachPrimeBoundedBy(b)) => write!(f, " [each prime ≤ {b}]"),
                    Some(Annotation::PrimesEventuallyIn(ps)) => {
                        let ps: Vec<String> = ps.iter().map(u64::to_string).collect();
                        write!(f, " [primes eventually in {{{}}}]", ps.join(","))
                    }
                    None => Ok(()),
                }
            }
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Prime factorization by trial division; rejects inputs above [`MAX_STEP`].
pub fn factor(mut m: u64) -> Result<Vec<(u64, u32)>> {
    check_step(m)?;
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            let mut k = 0;
            while m % d == 0 {
                m /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    Ok(out)
}

fn valuation(mut m: u64, p: u64) -> u32 {
    let mut k = 0;
    while m % p == 0 {
        m /= p;
        k += 1;
    }
    k
}

/// Steinitz data of a rank-one lattice chain: the observed step sequence, plus
/// the closed form from metadata when the chain carries one.
#[derive(Debug, Clone)]
pub struct ChainSteinitz {
    pub sequence: SteinitzNumber,
    pub closed_form: Option<SteinitzNumber>,
}

impl ChainSteinitz {
    /// The closed form when available, else the observed sequence.
    pub fn best(&self) -> &SteinitzNumber {
        self.closed_form.as_ref().unwrap_or(&self.sequence)
    }
}

pub fn steinitz_from_chain(chain: &GroupChain) -> Result<ChainSteinitz> {
    if !matches!(**chain.family(), GroupFamily::FreeAbelian { rank: 1 }) {
        return Err(Error::WrongFamily(format!("Steinitz numbers need a rank-1 lattice chain, got {}", chain.family().name())));
    }
    let c = chain.clone();
    let len = chain.last_level();
    let sequence = SteinitzNumber::sequence(
        move |i| {
            let (lo, hi) = (c.index(i)?, c.index(i + 1)?);
            let (q, r) = num_integer::Integer::div_rem(&hi, &lo);
            if !r.is_zero() {
                return Err(Error::NotDescending(i + 1));
            }
            q.to_u64().ok_or_else(|| Error::InvalidStep(format!("step {q} too large")))
        },
        len,
        None,
    );
    Ok(ChainSteinitz { sequence, closed_form: chain.metadata().steinitz.clone() })
}

/// Exponent of `p`; sequences contribute the valuations of their first `depth` steps.
pub fn exponent_of(s: &SteinitzNumber, p: u64, depth: usize) -> Result<ExponentBound> {
    if !is_prime(p) {
        return Err(Error::InvalidStep(format!("{p} is not prime")));
    }
    match s {
        SteinitzNumber::FiniteSupport(map) => Ok(ExponentBound::Exact(*map.get(&p).unwrap_or(&Exponent::Finite(0)))),
        SteinitzNumber::Sequence(seq) => {
            let n = seq.len.map_or(depth, |len| len.min(depth));
            let mut total = 0u32;
            for i in 0..n {
                total += valuation(seq.step(i)?, p);
            }
            match seq.annotation {
                Some(Annotation::EachPrimeBoundedBy(b)) if total >= b => Ok(ExponentBound::Exact(Exponent::Finite(total))),
                _ => Ok(ExponentBound::AtLeast(total)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Equivalent,
    NotEquivalent,
    UnknownAtDepth(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub value: TailVerdict,
    pub certificate: String,
}

impl EquivalenceVerdict {
    fn new(value: TailVerdict, certificate: impl Into<String>) -> Self {
        EquivalenceVerdict { value, certificate: certificate.into() }
    }
}

fn render_set(s: &BTreeSet<u64>) -> String {
    format!("{{{}}}", s.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
}

/// Tail equivalence: same set of primes with infinite exponent, and finite
/// exponents differing at only finitely many primes.
pub fn tail_equivalent(s1: &SteinitzNumber, s2: &SteinitzNumber, depth: usize) -> EquivalenceVerdict {
    use TailVerdict::*;
    match (s1, s2) {
        (SteinitzNumber::FiniteSupport(_), SteinitzNumber::FiniteSupport(_)) => {
            let (i1, i2) = (s1.infinite_primes().unwrap(), s2.infinite_primes().unwrap());
            if i1 == i2 {
                EquivalenceVerdict::new(
                    Equivalent,
                    format!("∞-prime sets agree ({}); finite exponents differ at finitely many primes", render_set(&i1)),
                )
            } else {
                EquivalenceVerdict::new(NotEquivalent, format!("∞-prime sets {} ≠ {}", render_set(&i1), render_set(&i2)))
            }
        }
        (SteinitzNumber::Sequence(a), SteinitzNumber::Sequence(b)) if Arc::ptr_eq(a, b) => {
            EquivalenceVerdict::new(Equivalent, "identical step sequences")
        }
        (SteinitzNumber::FiniteSupport(_), SteinitzNumber::Sequence(seq)) => finite_vs_sequence(s1, s2, seq, depth),
        (SteinitzNumber::Sequence(seq), SteinitzNumber::FiniteSupport(_)) => finite_vs_sequence(s2, s1, seq, depth),
        (SteinitzNumber::Sequence(_), SteinitzNumber::Sequence(_)) => EquivalenceVerdict::new(
            UnknownAtDepth(depth),
            "two step sequences without closed forms; finitely many steps cannot decide tail equivalence",
        ),
    }
}

fn finite_vs_sequence(
    finite: &SteinitzNumber,
    seq_number: &SteinitzNumber,
    seq: &IndexSequence,
    depth: usize,
) -> EquivalenceVerdict {
    use TailVerdict::*;
    let infinite = finite.infinite_primes().unwrap();
    match &seq.annotation {
        Some(Annotation::EachPrimeBoundedBy(b)) => {
            if let Some(p) = infinite.iter().next() {
                return EquivalenceVerdict::new(
                    NotEquivalent,
                    format!("{p} has exponent ∞ in {finite} but at most {b} by annotation in {seq_number}"),
                );
            }
            EquivalenceVerdict::new(
                NotEquivalent,
                format!(
                    "{finite} has finite support while {seq_number} has every prime bounded by {b}, \
                     so infinitely many primes occur in it: they differ at infinitely many primes"
                ),
            )
        }
        Some(Annotation::PrimesEventuallyIn(ps)) => match infinite.iter().find(|p| !ps.contains(p)) {
            Some(p) => EquivalenceVerdict::new(
                NotEquivalent,
                format!("{p} has exponent ∞ in {finite} but only finitely many steps of {seq_number} are divisible by {p}"),
            ),
            None => EquivalenceVerdict::new(
                UnknownAtDepth(depth),
                format!("exponents of the primes {} in {seq_number} are not determined by its annotation", render_set(ps)),
            ),
        },
        None => EquivalenceVerdict::new(
            UnknownAtDepth(depth),
            format!("{seq_number} has no closed form; {depth} steps cannot decide tail equivalence"),
        ),
    }
}

/// Product of a list of steps, for tests and reports.
pub fn product(steps: &[u64]) -> BigInt {
    steps.iter().fold(BigInt::one(), |acc, &m| acc * m)
}
