//! Finite-index subgroups described by structural patterns.
//!
//! Each pattern has decidable membership, a known index, an explicit
//! generating set and a canonical left-coset key. The action-kernel variant is
//! the kernel of the permutation action on an enumerated coset table; it has
//! decidable membership but no generating set.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cosets::CosetTable;
use crate::error::{Error, Result};
use crate::groups::{Family, FiniteGroup, GroupElement, GroupFamily, Payload};
use crate::hnf::Hnf;

/// Parity constraint on the `b`-exponent of a Klein bottle pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Any,
    Even,
}

/// Canonical identifier of a left coset `xH`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CosetKey {
    Element(Payload),
    Perm(Vec<u32>),
}

#[derive(Debug)]
pub struct SemidirectPattern {
    lattice: Hnf,
    members: Vec<usize>,
    /// For each `f ∈ F`, the least element of the coset `f·F'`.
    coset_rep: Vec<usize>,
    /// For each such representative `c`, the lattice `c·L`.
    translated: HashMap<usize, Hnf>,
}

impl SemidirectPattern {
    pub fn lattice(&self) -> &Hnf {
        &self.lattice
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

/// Kernel of the action of the ambient group on a coset table.
#[derive(Debug)]
pub struct ActionKernel {
    table: Arc<CosetTable>,
    level: Option<usize>,
    closed_form: OnceLock<Option<Subgroup>>,
}

impl ActionKernel {
    pub fn table(&self) -> &Arc<CosetTable> {
        &self.table
    }

    pub fn level(&self) -> Option<usize> {
        self.level
    }
}

#[derive(Debug)]
pub enum SubgroupKind {
    Lattice(Hnf),
    Heisenberg { da: BigInt, db: BigInt, dc: BigInt },
    Klein { d: BigInt, parity: Parity },
    Semidirect(SemidirectPattern),
    ActionKernel(ActionKernel),
    Conjugate { base: Subgroup, by: GroupElement, by_inv: GroupElement },
}

#[derive(Debug)]
struct Inner {
    family: Family,
    kind: SubgroupKind,
    index: OnceLock<BigInt>,
}

/// A finite-index subgroup of one of the supported families. Cheap to clone.
#[derive(Clone)]
pub struct Subgroup(Arc<Inner>);

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subgroup({self})")
    }
}

impl Subgroup {
    fn build(family: &Family, kind: SubgroupKind) -> Self {
        Subgroup(Arc::new(Inner { family: family.clone(), kind, index: OnceLock::new() }))
    }

    /// The whole ambient group, in the natural pattern of its family.
    pub fn full(family: &Family) -> Self {
        match &**family {
            GroupFamily::FreeAbelian { rank } => Self::build(family, SubgroupKind::Lattice(Hnf::identity(*rank))),
            GroupFamily::Heisenberg => Self::heisenberg(family, 1, 1, 1).expect("full pattern"),
            GroupFamily::KleinBottle => Self::klein(family, 1, Parity::Any).expect("full pattern"),
            GroupFamily::Semidirect { n, point_group } => {
                let all: Vec<usize> = (0..point_group.order()).collect();
                Self::semidirect(family, Hnf::identity(*n), all).expect("full pattern")
            }
        }
    }

    pub fn lattice(family: &Family, hnf: Hnf) -> Result<Self> {
        match &**family {
            GroupFamily::FreeAbelian { rank } if *rank == hnf.rank() => {
                Ok(Self::build(family, SubgroupKind::Lattice(hnf)))
            }
            _ => Err(Error::InvalidSubgroup(format!(
                "lattice of rank {} does not fit the {} family",
                hnf.rank(),
                family.name()
            ))),
        }
    }

    /// `{(da·a, db·b, dc·c)}`; closed under the Heisenberg law iff `dc | da·db`.
    pub fn heisenberg(family: &Family, da: impl Into<BigInt>, db: impl Into<BigInt>, dc: impl Into<BigInt>) -> Result<Self> {
        let (da, db, dc) = (da.into(), db.into(), dc.into());
        if !matches!(**family, GroupFamily::Heisenberg) {
            return Err(Error::InvalidSubgroup("Heisenberg pattern outside the Heisenberg family".into()));
        }
        if !da.is_positive() || !db.is_positive() || !dc.is_positive() {
            return Err(Error::InvalidSubgroup(format!("pattern divisors must be positive: ({da},{db},{dc})")));
        }
        if !(&da * &db).is_multiple_of(&dc) {
            return Err(Error::InvalidSubgroup(format!(
                "pattern ({da},{db},{dc}) is not closed: {dc} does not divide {da}·{db}"
            )));
        }
        Ok(Self::build(family, SubgroupKind::Heisenberg { da, db, dc }))
    }

    /// `{a^m b^n : d | m, n satisfies the parity constraint}`.
    pub fn klein(family: &Family, d: impl Into<BigInt>, parity: Parity) -> Result<Self> {
        let d = d.into();
        if !matches!(**family, GroupFamily::KleinBottle) {
            return Err(Error::InvalidSubgroup("Klein pattern outside the Klein bottle family".into()));
        }
        if !d.is_positive() {
            return Err(Error::InvalidSubgroup(format!("Klein pattern divisor must be positive, got {d}")));
        }
        Ok(Self::build(family, SubgroupKind::Klein { d, parity }))
    }

    /// `{(v, f) : v ∈ L, f ∈ F'}` where `F'` must be a subgroup of the point
    /// group whose matrices preserve `L`.
    pub fn semidirect(family: &Family, lattice: Hnf, members: Vec<usize>) -> Result<Self> {
        let GroupFamily::Semidirect { n, point_group } = &**family else {
            return Err(Error::InvalidSubgroup("semidirect pattern outside a semidirect family".into()));
        };
        if lattice.rank() != *n {
            return Err(Error::InvalidSubgroup(format!("lattice rank {} but family rank {n}", lattice.rank())));
        }
        let members: Vec<usize> = members.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if members.iter().any(|&f| f >= point_group.order()) || members.first() != Some(&0) {
            return Err(Error::InvalidSubgroup("point subgroup must list valid elements including 0".into()));
        }
        if point_group.closure(&members) != members {
            return Err(Error::InvalidSubgroup("point subgroup is not closed under multiplication".into()));
        }
        for &f in &members {
            if !lattice.columns().iter().all(|c| lattice.contains(&point_group.apply(f, c))) {
                return Err(Error::InvalidSubgroup(format!("element {f} does not preserve the lattice")));
            }
        }
        let pattern = semidirect_pattern(point_group, lattice, members)?;
        Ok(Self::build(family, SubgroupKind::Semidirect(pattern)))
    }

    /// `g·H·g⁻¹`.
    pub fn conjugate(base: &Subgroup, by: &GroupElement) -> Result<Self> {
        if !by.same_family(&GroupElement::identity(base.family())) {
            return Err(Error::FamilyMismatch);
        }
        if by.is_identity() {
            return Ok(base.clone());
        }
        let (base, by) = match &base.0.kind {
            SubgroupKind::Conjugate { base: inner, by: outer, .. } => (inner.clone(), by.mul(outer)),
            _ => (base.clone(), by.clone()),
        };
        let by_inv = by.inverse();
        let family = base.family().clone();
        Ok(Self::build(&family, SubgroupKind::Conjugate { base, by, by_inv }))
    }

    /// Kernel of the permutation action on `table`.
    pub fn action_kernel(table: Arc<CosetTable>, level: Option<usize>) -> Self {
        let family = table.family().clone();
        Self::build(
            &family,
            SubgroupKind::ActionKernel(ActionKernel { table, level, closed_form: OnceLock::new() }),
        )
    }

    pub fn family(&self) -> &Family {
        &self.0.family
    }

    pub fn kind(&self) -> &SubgroupKind {
        &self.0.kind
    }

    pub fn is_structural(&self) -> bool {
        match &self.0.kind {
            SubgroupKind::ActionKernel(_) => false,
            SubgroupKind::Conjugate { base, .. } => base.is_structural(),
            _ => true,
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        debug_assert!(g.same_family(&GroupElement::identity(self.family())));
        match (&self.0.kind, g.payload()) {
            (SubgroupKind::Lattice(h), Payload::FreeAbelian(v)) => h.contains(v),
            (SubgroupKind::Heisenberg { da, db, dc }, Payload::Heisenberg(v)) => {
                v[0].is_multiple_of(da) && v[1].is_multiple_of(db) && v[2].is_multiple_of(dc)
            }
            (SubgroupKind::Klein { d, parity }, Payload::Klein { m, n }) => {
                m.is_multiple_of(d) && (*parity == Parity::Any || n.is_even())
            }
            (SubgroupKind::Semidirect(p), Payload::Semidirect { v, f }) => {
                p.members.binary_search(f).is_ok() && p.lattice.contains(v)
            }
            (SubgroupKind::Conjugate { base, by, by_inv }, _) => base.contains(&by_inv.mul(g).mul(by)),
            (SubgroupKind::ActionKernel(k), _) => k.table.acts_trivially(g),
            _ => false,
        }
    }

    /// Generating set. Structural patterns only.
    pub fn generators(&self) -> Result<Vec<GroupElement>> {
        let fam = self.family();
        let gens = match &self.0.kind {
            SubgroupKind::Lattice(h) => h
                .columns()
                .iter()
                .map(|c| GroupElement::from_parts(fam, Payload::FreeAbelian(c.clone())))
                .collect(),
            SubgroupKind::Heisenberg { da, db, dc } => {
                let z = BigInt::zero;
                vec![
                    GroupElement::from_parts(fam, Payload::Heisenberg(vec![da.clone(), z(), z()])),
                    GroupElement::from_parts(fam, Payload::Heisenberg(vec![z(), db.clone(), z()])),
                    GroupElement::from_parts(fam, Payload::Heisenberg(vec![z(), z(), dc.clone()])),
                ]
            }
            SubgroupKind::Klein { d, parity } => {
                let b_exp = if *parity == Parity::Any { 1 } else { 2 };
                vec![
                    GroupElement::from_parts(fam, Payload::Klein { m: d.clone(), n: BigInt::zero() }),
                    GroupElement::from_parts(fam, Payload::Klein { m: BigInt::zero(), n: b_exp.into() }),
                ]
            }
            SubgroupKind::Semidirect(p) => {
                let mut gens: Vec<GroupElement> = p
                    .lattice
                    .columns()
                    .iter()
                    .map(|c| GroupElement::from_parts(fam, Payload::Semidirect { v: c.clone(), f: 0 }))
                    .collect();
                let zero = vec![BigInt::zero(); p.lattice.rank()];
                gens.extend(p.members.iter().skip(1).map(|&f| {
                    GroupElement::from_parts(fam, Payload::Semidirect { v: zero.clone(), f })
                }));
                gens
            }
            SubgroupKind::Conjugate { base, by, .. } => {
                base.generators()?.iter().map(|x| by.conjugate(x)).collect()
            }
            SubgroupKind::ActionKernel(_) => return Err(Error::NotStructural),
        };
        Ok(gens)
    }

    /// Canonical key of the left coset `g·H`.
    pub fn coset_key(&self, g: &GroupElement) -> CosetKey {
        let key = match (&self.0.kind, g.payload()) {
            (SubgroupKind::Lattice(h), Payload::FreeAbelian(v)) => Payload::FreeAbelian(h.reduce(v)),
            (SubgroupKind::Heisenberg { da, db, dc }, Payload::Heisenberg(v)) => {
                // g·(da·s, db·t, dc·u) = (x + da·s, y + db·t, z + dc·u + x·db·t)
                let t = -v[1].div_floor(db);
                let z = &v[2] + &v[0] * db * &t;
                Payload::Heisenberg(vec![v[0].mod_floor(da), v[1].mod_floor(db), z.mod_floor(dc)])
            }
            (SubgroupKind::Klein { d, parity }, Payload::Klein { m, n }) => {
                let n = if *parity == Parity::Any { BigInt::zero() } else { n.mod_floor(&BigInt::from(2)) };
                Payload::Klein { m: m.mod_floor(d), n }
            }
            (SubgroupKind::Semidirect(p), Payload::Semidirect { v, f }) => {
                let c = p.coset_rep[*f];
                Payload::Semidirect { v: p.translated[&c].reduce(v), f: c }
            }
            (SubgroupKind::Conjugate { base, by, .. }, _) => return base.coset_key(&g.mul(by)),
            (SubgroupKind::ActionKernel(k), _) => return CosetKey::Perm(k.table.element_permutation(g)),
            _ => unreachable!("element outside the subgroup's family"),
        };
        CosetKey::Element(key)
    }

    /// Index in the ambient group, when known without enumeration.
    pub fn index(&self) -> Option<BigInt> {
        if let Some(i) = self.0.index.get() {
            return Some(i.clone());
        }
        let idx = match &self.0.kind {
            SubgroupKind::Lattice(h) => h.index(),
            SubgroupKind::Heisenberg { da, db, dc } => da * db * dc,
            SubgroupKind::Klein { d, parity } => {
                if *parity == Parity::Any { d.clone() } else { d * 2 }
            }
            SubgroupKind::Semidirect(p) => {
                let GroupFamily::Semidirect { point_group, .. } = &**self.family() else { unreachable!() };
                p.lattice.index() * BigInt::from(point_group.order() / p.members.len())
            }
            SubgroupKind::Conjugate { base, .. } => base.index()?,
            SubgroupKind::ActionKernel(_) => return None,
        };
        let _ = self.0.index.set(idx.clone());
        Some(idx)
    }

    /// Index, enumerating the image permutation group for action kernels.
    pub fn index_within(&self, budget: usize) -> Result<BigInt> {
        if let Some(i) = self.index() {
            return Ok(i);
        }
        let SubgroupKind::ActionKernel(k) = &self.0.kind else { unreachable!() };
        let order = permutation_group_order(k.table.generator_permutations(), budget)?;
        let idx = BigInt::from(order);
        let _ = self.0.index.set(idx.clone());
        Ok(idx)
    }

    /// Recognized structural form of an action kernel, if one was found.
    pub fn closed_form(&self) -> Option<&Subgroup> {
        match &self.0.kind {
            SubgroupKind::ActionKernel(k) => k.closed_form.get().and_then(|c| c.as_ref()),
            _ => None,
        }
    }

    pub(crate) fn set_closed_form(&self, form: Option<Subgroup>) {
        if let SubgroupKind::ActionKernel(k) = &self.0.kind {
            let _ = k.closed_form.set(form);
        }
    }

    /// `H ⊆ K`, decided on the generators of `H`.
    pub fn is_subgroup_of(&self, other: &Subgroup) -> Result<bool> {
        if !Arc::ptr_eq(self.family(), other.family()) && self.family() != other.family() {
            return Err(Error::FamilyMismatch);
        }
        Ok(self.generators()?.iter().all(|g| other.contains(g)))
    }

    /// Mutual containment.
    pub fn same_as(&self, other: &Subgroup) -> Result<bool> {
        Ok(self.is_subgroup_of(other)? && other.is_subgroup_of(self)?)
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            SubgroupKind::Lattice(h) if h.rank() == 1 => write!(f, "{}ℤ", h.columns()[0][0]),
            SubgroupKind::Lattice(h) => write!(f, "L{h}"),
            SubgroupKind::Heisenberg { da, db, dc } => {
                write!(f, "({},{},{})", coeff(da, "a"), coeff(db, "b"), coeff(dc, "c"))
            }
            SubgroupKind::Klein { d, parity } => {
                let a = if d.is_one() { "a".to_string() } else { format!("a^{d}") };
                let b = if *parity == Parity::Any { "b" } else { "b^2" };
                write!(f, "⟨{a}, {b}⟩")
            }
            SubgroupKind::Semidirect(p) => {
                let members: Vec<String> = p.members.iter().map(|m| m.to_string()).collect();
                write!(f, "{{(v, f) : v ∈ L{}, f ∈ {{{}}}}}", p.lattice, members.join(","))
            }
            SubgroupKind::Conjugate { base, by, .. } => write!(f, "{by}·{base}·({by})⁻¹"),
            SubgroupKind::ActionKernel(k) => match self.closed_form() {
                Some(c) => write!(f, "{c}"),
                None => match k.level {
                    Some(l) => write!(f, "action-kernel of level {l}"),
                    None => write!(f, "action-kernel"),
                },
            },
        }
    }
}

fn coeff(d: &BigInt, sym: &str) -> String {
    if d.is_one() { sym.to_string() } else { format!("{d}{sym}") }
}

fn semidirect_pattern(point_group: &FiniteGroup, lattice: Hnf, members: Vec<usize>) -> Result<SemidirectPattern> {
    let order = point_group.order();
    let mut coset_rep = vec![usize::MAX; order];
    let mut translated = HashMap::new();
    for f in 0..order {
        if coset_rep[f] != usize::MAX {
            continue;
        }
        // f is the least element not yet covered, so it is the least of f·F'.
        for &m in &members {
            coset_rep[point_group.mul(f, m)] = f;
        }
        let matrix: Vec<Vec<BigInt>> = point_group
            .matrix(f)
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        translated.insert(f, lattice.transform(&matrix)?);
    }
    Ok(SemidirectPattern { lattice, members, coset_rep, translated })
}

/// Order of the permutation group generated by `gens`, by closing the
/// identity under left multiplication. Errors past `budget` elements.
pub fn permutation_group_order(gens: &[Vec<u32>], budget: usize) -> Result<usize> {
    let degree = gens.first().map_or(0, Vec::len);
    let identity: Vec<u32> = (0..degree as u32).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    seen.insert(identity.clone());
    let mut queue = VecDeque::from([identity]);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q: Vec<u32> = p.iter().map(|&i| g[i as usize]).collect();
            if !seen.contains(&q) {
                if seen.len() >= budget {
                    return Err(Error::EnumerationBudgetExceeded { budget });
                }
                seen.insert(q.clone());
                queue.push_back(q);
            }
        }
    }
    Ok(seen.len())
}

/// Multiplicative order of a permutation (lcm of cycle lengths).
pub(crate) fn permutation_order(p: &[u32]) -> BigInt {
    let mut seen = vec![false; p.len()];
    let mut order = BigInt::one();
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0u64;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i] as usize;
            len += 1;
        }
        order = order.lcm(&BigInt::from(len));
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupFamily;

    #[test]
    fn klein_membership_and_generators() {
        let k = GroupFamily::klein_bottle();
        let h = Subgroup::klein(&k, 2, Parity::Any).unwrap();
        assert!(h.contains(&GroupElement::klein(&k, 4, 3).unwrap()));
        assert!(!h.contains(&GroupElement::klein(&k, 1, 0).unwrap()));
        assert!(h.contains(&GroupElement::identity(&k)));
        let gens = h.generators().unwrap();
        assert_eq!(gens, vec![GroupElement::klein(&k, 2, 0).unwrap(), GroupElement::klein(&k, 0, 1).unwrap()]);
        assert_eq!(h.index(), Some(BigInt::from(2)));
    }

    #[test]
    fn containment() {
        let k = GroupFamily::klein_bottle();
        let h4 = Subgroup::klein(&k, 4, Parity::Any).unwrap();
        let h2 = Subgroup::klein(&k, 2, Parity::Any).unwrap();
        assert!(h4.is_subgroup_of(&h2).unwrap());
        assert!(!h2.is_subgroup_of(&h4).unwrap());
        assert!(h2.is_subgroup_of(&h2).unwrap());
        let z = GroupFamily::free_abelian(1).unwrap();
        let three = Subgroup::lattice(&z, Hnf::scalar(1, &3.into()).unwrap()).unwrap();
        let two = Subgroup::lattice(&z, Hnf::scalar(1, &2.into()).unwrap()).unwrap();
        assert!(!three.is_subgroup_of(&two).unwrap());
    }

    #[test]
    fn heisenberg_pattern_closure() {
        let h = GroupFamily::heisenberg();
        assert!(Subgroup::heisenberg(&h, 2, 2, 4).is_ok());
        assert!(Subgroup::heisenberg(&h, 2, 3, 2).is_ok());
        assert!(Subgroup::heisenberg(&h, 2, 2, 8).is_err());
        let p = Subgroup::heisenberg(&h, 2, 2, 4).unwrap();
        assert_eq!(p.index(), Some(BigInt::from(16)));
        assert_eq!(p.to_string(), "(2a,2b,4c)");
        assert_eq!(
            p.generators().unwrap(),
            vec![
                GroupElement::heisenberg(&h, 2, 0, 0).unwrap(),
                GroupElement::heisenberg(&h, 0, 2, 0).unwrap(),
                GroupElement::heisenberg(&h, 0, 0, 4).unwrap(),
            ]
        );
    }

    #[test]
    fn lattice_generators_of_identity() {
        let z3 = GroupFamily::free_abelian(3).unwrap();
        let full = Subgroup::full(&z3);
        assert_eq!(full.generators().unwrap(), GroupElement::generators(&z3));
    }

    #[test]
    fn heisenberg_coset_keys_are_constant_on_cosets() {
        let h = GroupFamily::heisenberg();
        let p = Subgroup::heisenberg(&h, 2, 3, 2).unwrap();
        let gens = p.generators().unwrap();
        for x in -3..4 {
            for y in -3..4 {
                let g = GroupElement::heisenberg(&h, x, y, x * y - 1).unwrap();
                let key = p.coset_key(&g);
                for s in &gens {
                    assert_eq!(p.coset_key(&g.mul(s)), key);
                    assert_eq!(p.coset_key(&g.mul(&s.inverse())), key);
                }
            }
        }
    }

    #[test]
    fn conjugate_membership() {
        let k = GroupFamily::klein_bottle();
        let h = Subgroup::klein(&k, 4, Parity::Any).unwrap();
        let a = GroupElement::klein(&k, 1, 0).unwrap();
        let c = Subgroup::conjugate(&h, &a).unwrap();
        // a·b·a⁻¹ = a²·b
        assert!(c.contains(&GroupElement::klein(&k, 2, 1).unwrap()));
        assert!(!c.contains(&GroupElement::klein(&k, 0, 1).unwrap()));
        assert_eq!(c.index(), Some(BigInt::from(4)));
        for g in c.generators().unwrap() {
            assert!(c.contains(&g));
        }
    }

    #[test]
    fn semidirect_pattern_validation() {
        let f = FiniteGroup::new(1, vec![vec![0, 1], vec![1, 0]], vec![vec![vec![1]], vec![vec![-1]]]).unwrap();
        let fam = GroupFamily::semidirect(f).unwrap();
        let l = Hnf::scalar(1, &3.into()).unwrap();
        let s = Subgroup::semidirect(&fam, l.clone(), vec![0, 1]).unwrap();
        assert_eq!(s.index(), Some(BigInt::from(3)));
        let t = Subgroup::semidirect(&fam, l, vec![0]).unwrap();
        assert_eq!(t.index(), Some(BigInt::from(6)));
        assert!(Subgroup::semidirect(&fam, Hnf::identity(1), vec![1]).is_err());
    }

    #[test]
    fn permutation_orders() {
        assert_eq!(permutation_order(&[1, 2, 0, 4, 3]), BigInt::from(6));
        let gens = vec![vec![1, 2, 0], vec![1, 0, 2]];
        assert_eq!(permutation_group_order(&gens, 100).unwrap(), 6);
        assert!(permutation_group_order(&gens, 3).is_err());
    }
}
