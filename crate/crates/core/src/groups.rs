//! Exact arithmetic in the four supported finitely generated group families.
//!
//! Every element is stored in a unique normal form, so structural equality of
//! payloads is group equality:
//!
//! * free abelian `ℤ^k`: an integer vector;
//! * discrete Heisenberg group: a triple `(a, b, c)` with the law
//!   `(a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b')`;
//! * Klein bottle group `⟨a, b | b·a·b⁻¹ = a⁻¹⟩`: the pair `(m, n)` standing
//!   for `a^m b^n`, multiplied by `a^{m1} b^{n1} · a^{m2} b^{n2} = a^{m1 + (-1)^{n1} m2} b^{n1+n2}`;
//! * `ℤ^n ⋊ F` for a finite group `F` acting through integer matrices:
//!   `(v1, f1)·(v2, f2) = (v1 + f1·v2, f1·f2)`.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest finite group accepted as the point group of a semidirect family.
pub const MAX_FINITE_GROUP_ORDER: usize = 1024;

/// A word in the standard generators: `(generator index, exponent)` pairs,
/// read left to right as a product.
pub type Word = Vec<(usize, i64)>;

/// Shared handle to a group family.
pub type Family = Arc<GroupFamily>;

/// Finite group given by a multiplication table together with a faithful
/// representation into `GL(n, ℤ)`. Element `0` is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    matrices: Vec<Vec<Vec<i64>>>,
    inverses: Vec<usize>,
    generators: Vec<usize>,
}

impl FiniteGroup {
    pub fn new(n: usize, table: Vec<Vec<usize>>, matrices: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        let order = table.len();
        let bad = |msg: String| Err(Error::InvalidFamily(msg));
        if order == 0 || order > MAX_FINITE_GROUP_ORDER {
            return bad(format!("finite group order {order} outside 1..={MAX_FINITE_GROUP_ORDER}"));
        }
        if matrices.len() != order {
            return bad(format!("{} matrices for a group of order {order}", matrices.len()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != order {
                return bad(format!("table row {i} has length {}", row.len()));
            }
            let mut seen = vec![false; order];
            for &x in row {
                if x >= order || seen[x] {
                    return bad(format!("table row {i} is not a permutation"));
                }
                seen[x] = true;
            }
        }
        for col in 0..order {
            let mut seen = vec![false; order];
            for row in &table {
                if seen[row[col]] {
                    return bad(format!("table column {col} is not a permutation"));
                }
                seen[row[col]] = true;
            }
        }
        for x in 0..order {
            if table[0][x] != x || table[x][0] != x {
                return bad("element 0 is not the identity".into());
            }
        }
        let inverses: Vec<usize> = (0..order)
            .map(|x| (0..order).find(|&y| table[x][y] == 0).expect("latin square"))
            .collect();

        let generators = greedy_generators(&table);
        // Light's test: associativity only needs checking with a generator in the middle.
        for &g in &generators {
            for x in 0..order {
                for y in 0..order {
                    if table[table[x][g]][y] != table[x][table[g][y]] {
                        return bad("multiplication table is not associative".into());
                    }
                }
            }
        }

        for (i, m) in matrices.iter().enumerate() {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return bad(format!("matrix {i} is not {n}x{n}"));
            }
            let det = det_i64(m);
            if det != 1 && det != -1 {
                return bad(format!("matrix {i} has determinant {det}, expected ±1"));
            }
        }
        if matrices[0] != identity_i64(n) {
            return bad("matrix of the identity element is not the identity matrix".into());
        }
        for x in 0..order {
            for y in 0..order {
                if mat_mul_i64(&matrices[x], &matrices[y]) != matrices[table[x][y]] {
                    return bad(format!("representation fails on the product {x}*{y}"));
                }
            }
        }
        for x in 1..order {
            if matrices[x] == matrices[0] {
                return bad(format!("representation is not faithful (element {x} acts trivially)"));
            }
        }
        Ok(FiniteGroup { table, matrices, inverses, generators })
    }

    /// The trivial group acting on `ℤ^n`.
    pub fn trivial(n: usize) -> Self {
        FiniteGroup::new(n, vec![vec![0]], vec![identity_i64(n)]).expect("trivial group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x][y]
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inverses[x]
    }

    pub fn matrix(&self, x: usize) -> &[Vec<i64>] {
        &self.matrices[x]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn matrices(&self) -> &[Vec<Vec<i64>>] {
        &self.matrices
    }

    /// Greedy generating set: scan elements in order, keep those outside the
    /// closure of the ones kept so far.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn apply(&self, x: usize, v: &[BigInt]) -> Vec<BigInt> {
        self.matrices[x]
            .iter()
            .map(|row| row.iter().zip(v).map(|(&m, vi)| BigInt::from(m) * vi).sum())
            .collect()
    }

    /// Closure of a set of elements under multiplication, as a sorted list.
    pub fn closure(&self, seeds: &[usize]) -> Vec<usize> {
        closure_in(&self.table, seeds)
    }
}

fn closure_in(table: &[Vec<usize>], seeds: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; table.len()];
    inside[0] = true;
    let mut queue = vec![0usize];
    while let Some(x) = queue.pop() {
        for &s in seeds {
            let y = table[x][s];
            if !inside[y] {
                inside[y] = true;
                queue.push(y);
            }
        }
    }
    (0..table.len()).filter(|&x| inside[x]).collect()
}

fn greedy_generators(table: &[Vec<usize>]) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut span = vec![0usize];
    for x in 1..table.len() {
        if span.binary_search(&x).is_err() {
            gens.push(x);
            span = closure_in(table, &gens);
        }
    }
    gens
}

pub(crate) fn identity_i64(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

fn mat_mul_i64(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn det_i64(m: &[Vec<i64>]) -> i64 {
    let rows: Vec<Vec<BigInt>> =
        m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let d = crate::hnf::determinant(&rows);
    i64::try_from(d).unwrap_or(0)
}

/// One of the four supported group families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupFamily {
    FreeAbelian { rank: usize },
    Heisenberg,
    KleinBottle,
    Semidirect { n: usize, point_group: FiniteGroup },
}

impl GroupFamily {
    pub fn free_abelian(rank: usize) -> Result<Family> {
        if rank == 0 {
            return Err(Error::InvalidFamily("free abelian rank must be positive".into()));
        }
        Ok(Arc::new(GroupFamily::FreeAbelian { rank }))
    }

    pub fn heisenberg() -> Family {
        Arc::new(GroupFamily::Heisenberg)
    }

    pub fn klein_bottle() -> Family {
        Arc::new(GroupFamily::KleinBottle)
    }

    pub fn semidirect(point_group: FiniteGroup) -> Result<Family> {
        let n = point_group.matrices[0].len();
        if n == 0 {
            return Err(Error::InvalidFamily("semidirect lattice rank must be positive".into()));
        }
        Ok(Arc::new(GroupFamily::Semidirect { n, point_group }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroupFamily::FreeAbelian { .. } => "free_abelian",
            GroupFamily::Heisenberg => "heisenberg",
            GroupFamily::KleinBottle => "klein_bottle",
            GroupFamily::Semidirect { .. } => "semidirect",
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            GroupFamily::FreeAbelian { .. } => true,
            // F acts faithfully, so ℤ^n ⋊ F is abelian only when F is trivial.
            GroupFamily::Semidirect { point_group, .. } => point_group.order() == 1,
            _ => false,
        }
    }

    pub fn generator_count(&self) -> usize {
        match self {
            GroupFamily::FreeAbelian { rank } => *rank,
            GroupFamily::Heisenberg => 3,
            GroupFamily::KleinBottle => 2,
            GroupFamily::Semidirect { n, point_group } => n + point_group.generators().len(),
        }
    }

    /// Names used by the word grammar, in generator order.
    pub fn generator_names(&self) -> Vec<String> {
        match self {
            GroupFamily::FreeAbelian { rank: 1 } => vec!["g".into()],
            GroupFamily::FreeAbelian { rank } => (1..=*rank).map(|i| format!("e{i}")).collect(),
            GroupFamily::Heisenberg => vec!["x".into(), "y".into(), "z".into()],
            GroupFamily::KleinBottle => vec!["a".into(), "b".into()],
            GroupFamily::Semidirect { n, point_group } => (1..=*n)
                .map(|i| format!("e{i}"))
                .chain(point_group.generators().iter().map(|f| format!("f{f}")))
                .collect(),
        }
    }
}

/// Normal-form payload of a group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    FreeAbelian(#[serde(with = "crate::bigint_serde::vec")] Vec<BigInt>),
    Heisenberg(#[serde(with = "crate::bigint_serde::vec")] Vec<BigInt>),
    Klein {
        #[serde(with = "crate::bigint_serde::one")]
        m: BigInt,
        #[serde(with = "crate::bigint_serde::one")]
        n: BigInt,
    },
    Semidirect {
        #[serde(with = "crate::bigint_serde::vec")]
        v: Vec<BigInt>,
        f: usize,
    },
}

/// An element of one of the supported families, in normal form.
#[derive(Clone)]
pub struct GroupElement {
    family: Family,
    payload: Payload,
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.payload == other.payload
            && (Arc::ptr_eq(&self.family, &other.family) || self.family == other.family)
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.payload.hash(state);
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::FreeAbelian(v) if v.len() == 1 => write!(f, "{}", v[0]),
            Payload::FreeAbelian(v) | Payload::Heisenberg(v) => write!(f, "({})", join(v)),
            Payload::Klein { m, n } => write!(f, "a^{m} b^{n}"),
            Payload::Semidirect { v, f: g } => write!(f, "(({}), f{g})", join(v)),
        }
    }
}

fn join(v: &[BigInt]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl GroupElement {
    /// Builds an element after checking that the payload fits the family.
    pub fn new(family: &Family, payload: Payload) -> Result<Self> {
        let ok = match (&**family, &payload) {
            (GroupFamily::FreeAbelian { rank }, Payload::FreeAbelian(v)) => v.len() == *rank,
            (GroupFamily::Heisenberg, Payload::Heisenberg(v)) => v.len() == 3,
            (GroupFamily::KleinBottle, Payload::Klein { .. }) => true,
            (GroupFamily::Semidirect { n, point_group }, Payload::Semidirect { v, f }) => {
                v.len() == *n && *f < point_group.order()
            }
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidElement(format!(
                "payload {payload:?} does not belong to the {} family",
                family.name()
            )));
        }
        Ok(GroupElement { family: family.clone(), payload })
    }

    pub(crate) fn from_parts(family: &Family, payload: Payload) -> Self {
        GroupElement { family: family.clone(), payload }
    }

    pub fn free_abelian(family: &Family, v: &[i64]) -> Result<Self> {
        Self::new(family, Payload::FreeAbelian(v.iter().map(|&x| x.into()).collect()))
    }

    pub fn heisenberg(family: &Family, a: i64, b: i64, c: i64) -> Result<Self> {
        Self::new(family, Payload::Heisenberg(vec![a.into(), b.into(), c.into()]))
    }

    /// `a^m b^n` in the Klein bottle group.
    pub fn klein(family: &Family, m: i64, n: i64) -> Result<Self> {
        Self::new(family, Payload::Klein { m: m.into(), n: n.into() })
    }

    pub fn semidirect(family: &Family, v: &[i64], f: usize) -> Result<Self> {
        Self::new(family, Payload::Semidirect { v: v.iter().map(|&x| x.into()).collect(), f })
    }

    pub fn identity(family: &Family) -> Self {
        let payload = match &**family {
            GroupFamily::FreeAbelian { rank } => Payload::FreeAbelian(vec![BigInt::zero(); *rank]),
            GroupFamily::Heisenberg => Payload::Heisenberg(vec![BigInt::zero(); 3]),
            GroupFamily::KleinBottle => Payload::Klein { m: BigInt::zero(), n: BigInt::zero() },
            GroupFamily::Semidirect { n, .. } => {
                Payload::Semidirect { v: vec![BigInt::zero(); *n], f: 0 }
            }
        };
        GroupElement { family: family.clone(), payload }
    }

    /// The `index`-th standard generator of a family.
    pub fn generator(family: &Family, index: usize) -> Result<Self> {
        let count = family.generator_count();
        if index >= count {
            return Err(Error::BadGeneratorIndex { index, count });
        }
        let unit = |len: usize, i: usize| -> Vec<BigInt> {
            (0..len).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()
        };
        let payload = match &**family {
            GroupFamily::FreeAbelian { rank } => Payload::FreeAbelian(unit(*rank, index)),
            GroupFamily::Heisenberg => Payload::Heisenberg(unit(3, index)),
            GroupFamily::KleinBottle => {
                let (m, n) = if index == 0 { (1, 0) } else { (0, 1) };
                Payload::Klein { m: m.into(), n: n.into() }
            }
            GroupFamily::Semidirect { n, point_group } => {
                if index < *n {
                    Payload::Semidirect { v: unit(*n, index), f: 0 }
                } else {
                    Payload::Semidirect {
                        v: vec![BigInt::zero(); *n],
                        f: point_group.generators()[index - n],
                    }
                }
            }
        };
        Ok(GroupElement { family: family.clone(), payload })
    }

    pub fn generators(family: &Family) -> Vec<Self> {
        (0..family.generator_count())
            .map(|i| Self::generator(family, i).expect("index in range"))
            .collect()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn same_family(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.family, &other.family) || self.family == other.family
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(&self.family)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if !self.same_family(other) {
            return Err(Error::FamilyMismatch);
        }
        Ok(self.mul(other))
    }

    /// Product without the family check; callers guarantee a shared family.
    pub(crate) fn mul(&self, other: &Self) -> Self {
        debug_assert!(self.same_family(other));
        let payload = match (&self.payload, &other.payload) {
            (Payload::FreeAbelian(x), Payload::FreeAbelian(y)) => {
                Payload::FreeAbelian(x.iter().zip(y).map(|(a, b)| a + b).collect())
            }
            (Payload::Heisenberg(x), Payload::Heisenberg(y)) => Payload::Heisenberg(vec![
                &x[0] + &y[0],
                &x[1] + &y[1],
                &x[2] + &y[2] + &x[0] * &y[1],
            ]),
            (Payload::Klein { m: m1, n: n1 }, Payload::Klein { m: m2, n: n2 }) => {
                let m = if n1.is_odd() { m1 - m2 } else { m1 + m2 };
                Payload::Klein { m, n: n1 + n2 }
            }
            (Payload::Semidirect { v: v1, f: f1 }, Payload::Semidirect { v: v2, f: f2 }) => {
                let GroupFamily::Semidirect { point_group, .. } = &*self.family else {
                    unreachable!("semidirect payload outside semidirect family")
                };
                let moved = point_group.apply(*f1, v2);
                Payload::Semidirect {
                    v: v1.iter().zip(moved).map(|(a, b)| a + b).collect(),
                    f: point_group.mul(*f1, *f2),
                }
            }
            _ => unreachable!("payload kinds disagree within one family"),
        };
        GroupElement { family: self.family.clone(), payload }
    }

    pub fn inverse(&self) -> Self {
        let payload = match &self.payload {
            Payload::FreeAbelian(x) => Payload::FreeAbelian(x.iter().map(|a| -a).collect()),
            Payload::Heisenberg(x) => {
                Payload::Heisenberg(vec![-&x[0], -&x[1], -&x[2] + &x[0] * &x[1]])
            }
            Payload::Klein { m, n } => {
                let m = if n.is_odd() { m.clone() } else { -m };
                Payload::Klein { m, n: -n }
            }
            Payload::Semidirect { v, f } => {
                let GroupFamily::Semidirect { point_group, .. } = &*self.family else {
                    unreachable!("semidirect payload outside semidirect family")
                };
                let finv = point_group.inv(*f);
                Payload::Semidirect {
                    v: point_group.apply(finv, v).into_iter().map(|a| -a).collect(),
                    f: finv,
                }
            }
        };
        GroupElement { family: self.family.clone(), payload }
    }

    /// `self^e` by repeated squaring; negative exponents use the inverse.
    pub fn pow(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.inverse() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::identity(&self.family);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `self · x · self⁻¹`.
    pub fn conjugate(&self, x: &Self) -> Self {
        self.mul(x).mul(&self.inverse())
    }

    /// Sum of absolute coordinates; a cheap size measure for tests and reports.
    pub fn weight(&self) -> BigInt {
        match &self.payload {
            Payload::FreeAbelian(v) | Payload::Heisenberg(v) | Payload::Semidirect { v, .. } => {
                v.iter().map(|x| x.abs()).sum()
            }
            Payload::Klein { m, n } => m.abs() + n.abs(),
        }
    }
}

/// Product of generator powers, in word order.
pub fn evaluate_word(family: &Family, word: &[(usize, i64)]) -> Result<GroupElement> {
    let mut acc = GroupElement::identity(family);
    for &(index, exp) in word {
        let g = GroupElement::generator(family, index)?;
        acc = acc.mul(&g.pow(exp));
    }
    Ok(acc)
}

/// Parses the textual word grammar: comma-separated tokens `name^exp` or
/// `name` (exponent 1), where names come from [`GroupFamily::generator_names`].
/// The empty string is the empty word.
pub fn parse_word(family: &GroupFamily, text: &str) -> Result<Word> {
    let names = family.generator_names();
    let mut word = Word::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (name, exp) = match token.split_once('^') {
            Some((n, e)) => {
                let e: i64 = e
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadWord(format!("bad exponent in `{token}`")))?;
                (n.trim(), e)
            }
            None => (token, 1),
        };
        let index = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| {
                Error::BadWord(format!("unknown generator `{name}` (expected one of {names:?})"))
            })?;
        word.push((index, exp));
    }
    Ok(word)
}

pub fn render_word(family: &GroupFamily, word: &[(usize, i64)]) -> String {
    let names = family.generator_names();
    word.iter()
        .map(|&(i, e)| format!("{}^{e}", names.get(i).map(String::as_str).unwrap_or("?")))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn inverse_word(word: &[(usize, i64)]) -> Word {
    word.iter().rev().map(|&(i, e)| (i, -e)).collect()
}
