//! Bounded-depth checks of chain equivalence, conjugate equivalence, return
//! equivalence and normality, with witnesses that re-verify independently of
//! the searches that found them.
//!
//! Verdicts are three-valued. `Fails` is only produced with an invariant-based
//! certificate (different base groups, or a Steinitz obstruction for rank-one
//! chains); running out of depth yields `UnknownAtDepth`.

use serde::{Deserialize, Serialize};

use crate::chains::{normal_core, truncate_chain, GroupChain};
use crate::cosets::{bonding_map, relative_transversal, CosetTable};
use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupFamily};
use crate::steinitz::{steinitz_from_chain, tail_equivalent, TailVerdict};
use crate::subgroups::Subgroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// The chains start from different groups.
    BaseMismatch,
    /// Tail-inequivalent Steinitz numbers.
    Steinitz,
    /// A map collapses distinct generators or sends one to the identity.
    NotInjective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict<W> {
    Holds(W),
    Fails(Certificate),
    UnknownAtDepth { depth: usize, note: String },
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds(_))
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds(w) => Some(w),
            _ => None,
        }
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> Verdict<V> {
        match self {
            Verdict::Holds(w) => Verdict::Holds(f(w)),
            Verdict::Fails(c) => Verdict::Fails(c),
            Verdict::UnknownAtDepth { depth, note } => Verdict::UnknownAtDepth { depth, note },
        }
    }

    /// Short label: `holds`, `fails` or `unknown_at_depth`.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds(_) => "holds",
            Verdict::Fails(_) => "fails",
            Verdict::UnknownAtDepth { .. } => "unknown_at_depth",
        }
    }
}

/// Pairs `(ℓ_k, j_k)` with `A_{ℓ_k} ⊇ B_{j_k} ⊇ A_{ℓ_{k+1}}`, starting at `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterleavingWitness {
    pub pairs: Vec<(usize, usize)>,
    pub depth: usize,
}

/// Conjugators `g_0, …, g_L` with `g_ℓ·A_ℓ = g_{ℓ+1}·A_ℓ`, and an interleaving
/// of `{g_ℓ·A_ℓ·g_ℓ⁻¹}` with `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugacyWitness {
    pub elements: Vec<GroupElement>,
    pub interleaving: InterleavingWitness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivalenceWitness {
    Interleaving(InterleavingWitness),
    Conjugacy(ConjugacyWitness),
}

/// Truncation offsets `(k, m)` and the witness relating `A^{(k)}` to `B^{(m)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnWitness {
    pub k: usize,
    pub m: usize,
    pub witness: EquivalenceWitness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMode {
    Plain,
    Conjugate,
}

/// Pairs `(ℓ, m(ℓ))` with `A_{m(ℓ)}` inside the normal core of `A_ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityCertificate {
    pub pairs: Vec<(usize, usize)>,
    pub depth: usize,
}

/// Default search horizon: how far past `depth` the greedy interleaving looks.
pub fn horizon(depth: usize) -> usize {
    4 * depth + 4
}

fn contained(small: &Subgroup, big: &Subgroup) -> Result<bool> {
    small.is_subgroup_of(big)
}

fn same_family(a: &GroupChain, b: &GroupChain) -> Result<()> {
    if a.family() == b.family() {
        Ok(())
    } else {
        Err(Error::FamilyMismatch)
    }
}

fn check_depth(chain: &GroupChain, depth: usize) -> Result<()> {
    match chain.last_level() {
        Some(last) if last < depth => Err(Error::DepthExceedsVerified { depth, last }),
        _ => Ok(()),
    }
}

fn clipped_horizon(chain: &GroupChain, depth: usize) -> usize {
    chain.last_level().map_or(horizon(depth), |last| last.min(horizon(depth)))
}

enum Greedy {
    Done(Vec<(usize, usize)>),
    /// The next `A` level is not available yet (conjugacy search only).
    NeedLevel,
    /// No continuation exists within the horizon.
    Stuck { note: String },
}

/// Greedy least-index interleaving. `level_a(ℓ)` returns `None` for levels not
/// yet determined. Greedy is complete: the least admissible index at each step
/// is at most the corresponding index of any interleaving.
fn greedy(
    level_a: &dyn Fn(usize) -> Result<Option<Subgroup>>,
    b: &GroupChain,
    depth: usize,
    ha: usize,
    hb: usize,
) -> Result<Greedy> {
    let mut pairs = vec![(0usize, 0usize)];
    loop {
        let (l, j) = *pairs.last().unwrap();
        if l >= depth && j >= depth {
            return Ok(Greedy::Done(pairs));
        }
        let bj = b.level(j)?;
        let mut next_l = None;
        for cand in l + 1..=ha {
            let Some(al) = level_a(cand)? else { return Ok(Greedy::NeedLevel) };
            if contained(&al, &bj)? {
                next_l = Some((cand, al));
                break;
            }
        }
        let Some((nl, al)) = next_l else {
            return Ok(Greedy::Stuck {
                note: format!("no level A_ℓ with {l} < ℓ ≤ {ha} lies inside B_{j}"),
            });
        };
        let mut next_j = None;
        for cand in j + 1..=hb {
            if contained(&b.level(cand)?, &al)? {
                next_j = Some(cand);
                break;
            }
        }
        let Some(nj) = next_j else {
            return Ok(Greedy::Stuck { note: format!("no level B_j with {j} < j ≤ {hb} lies inside A_{nl}") });
        };
        pairs.push((nl, nj));
    }
}

fn base_check(a: &GroupChain, b: &GroupChain) -> Result<Option<Certificate>> {
    let (a0, b0) = (a.level(0)?, b.level(0)?);
    if contained(&a0, &b0)? && contained(&b0, &a0)? {
        Ok(None)
    } else {
        Ok(Some(Certificate { kind: CertificateKind::BaseMismatch, detail: format!("A_0 = {a0} differs from B_0 = {b0}") }))
    }
}

/// Steinitz obstruction for rank-one chains with closed forms; it rules out
/// return equivalence and hence every finer relation.
pub fn steinitz_certificate(a: &GroupChain, b: &GroupChain, depth: usize) -> Option<Certificate> {
    if !matches!(**a.family(), GroupFamily::FreeAbelian { rank: 1 }) {
        return None;
    }
    let (sa, sb) = (steinitz_from_chain(a).ok()?, steinitz_from_chain(b).ok()?);
    let v = tail_equivalent(sa.best(), sb.best(), depth);
    (v.value == TailVerdict::NotEquivalent).then(|| Certificate {
        kind: CertificateKind::Steinitz,
        detail: format!("Steinitz numbers {} and {} are not tail equivalent: {}", sa.best(), sb.best(), v.certificate),
    })
}

const GREEDY_COMPLETE: &str = "greedy interleaving is complete, so no interleaving exists within the horizon";

/// Interleaving search up to `depth` on both chains.
pub fn check_equivalent(a: &GroupChain, b: &GroupChain, depth: usize) -> Result<Verdict<InterleavingWitness>> {
    same_family(a, b)?;
    check_depth(a, depth)?;
    check_depth(b, depth)?;
    if let Some(c) = base_check(a, b)? {
        return Ok(Verdict::Fails(c));
    }
    let (ha, hb) = (clipped_horizon(a, depth), clipped_horizon(b, depth));
    let level_a = |l: usize| a.level(l).map(Some);
    match greedy(&level_a, b, depth, ha, hb)? {
        Greedy::Done(pairs) => Ok(Verdict::Holds(InterleavingWitness { pairs, depth })),
        Greedy::NeedLevel => unreachable!("all levels of A are available"),
        Greedy::Stuck { note } => Ok(match steinitz_certificate(a, b, depth) {
            Some(c) => Verdict::Fails(c),
            None => Verdict::UnknownAtDepth { depth, note: format!("{note}; {GREEDY_COMPLETE}") },
        }),
    }
}

/// Search for compatible conjugators `g_ℓ` drawn from relative coset
/// representatives, with the interleaving re-run incrementally and branches
/// pruned once a fixed conjugated level admits no `B` level inside it.
pub fn check_conjugate_equivalent(
    a: &GroupChain,
    b: &GroupChain,
    depth: usize,
    rep_budget: usize,
) -> Result<Verdict<ConjugacyWitness>> {
    same_family(a, b)?;
    if a.family().is_abelian() {
        return Ok(check_equivalent(a, b, depth)?.map(|w| {
            let last = w.pairs.last().map_or(0, |p| p.0);
            ConjugacyWitness { elements: vec![GroupElement::identity(a.family()); last + 1], interleaving: w }
        }));
    }
    check_depth(a, depth)?;
    check_depth(b, depth)?;
    if let Some(c) = base_check(a, b)? {
        return Ok(Verdict::Fails(c));
    }
    let (ha, hb) = (clipped_horizon(a, depth), clipped_horizon(b, depth));
    let mut stack: Vec<Vec<GroupElement>> = vec![vec![GroupElement::identity(a.family())]];
    let mut nodes = 0usize;
    while let Some(gs) = stack.pop() {
        nodes += 1;
        if nodes > rep_budget {
            return Err(Error::SearchBudgetExceeded(rep_budget));
        }
        let level_a = |l: usize| -> Result<Option<Subgroup>> {
            match gs.get(l) {
                Some(g) => Ok(Some(Subgroup::conjugate(&a.level(l)?, g)?)),
                None => Ok(None),
            }
        };
        match greedy(&level_a, b, depth, ha, hb)? {
            Greedy::Done(pairs) => {
                let last = pairs.last().unwrap().0;
                let mut elements = gs;
                elements.truncate(last + 1);
                return Ok(Verdict::Holds(ConjugacyWitness {
                    elements,
                    interleaving: InterleavingWitness { pairs, depth },
                }));
            }
            Greedy::Stuck { .. } => continue,
            Greedy::NeedLevel => {
                let l = gs.len() - 1;
                if l >= ha {
                    continue;
                }
                let last = gs.last().unwrap().clone();
                for t in relative_transversal(a, l)?.iter().rev() {
                    let mut next = gs.clone();
                    next.push(last.mul(t));
                    stack.push(next);
                }
            }
        }
    }
    Ok(Verdict::UnknownAtDepth {
        depth,
        note: format!("no compatible conjugating sequence up to level {ha} makes the chains interleave ({nodes} nodes searched)"),
    })
}

/// Looks for truncation offsets `(k, m)` with `k, m ≤ depth`, smallest `k + m`
/// first, such that `A^{(k)}` and `B^{(m)}` are equivalent (or conjugate
/// equivalent in [`ReturnMode::Conjugate`]).
pub fn check_return_equivalent(
    a: &GroupChain,
    b: &GroupChain,
    depth: usize,
    mode: ReturnMode,
    rep_budget: usize,
) -> Result<Verdict<ReturnWitness>> {
    same_family(a, b)?;
    check_depth(a, depth)?;
    check_depth(b, depth)?;
    for s in 0..=2 * depth {
        for k in s.saturating_sub(depth)..=s.min(depth) {
            let m = s - k;
            if !a.has_level(k + depth) || !b.has_level(m + depth) {
                continue;
            }
            let (ta, tb) = (truncate_chain(a, k), truncate_chain(b, m));
            let found = match mode {
                ReturnMode::Plain => check_equivalent(&ta, &tb, depth)?.map(EquivalenceWitness::Interleaving),
                ReturnMode::Conjugate => {
                    check_conjugate_equivalent(&ta, &tb, depth, rep_budget)?.map(EquivalenceWitness::Conjugacy)
                }
            };
            if let Verdict::Holds(witness) = found {
                return Ok(Verdict::Holds(ReturnWitness { k, m, witness }));
            }
        }
    }
    Ok(match steinitz_certificate(a, b, depth) {
        Some(c) => Verdict::Fails(c),
        None => Verdict::UnknownAtDepth {
            depth,
            note: format!("no truncation offsets (k, m) with k, m ≤ {depth} gave an equivalence within the horizon"),
        },
    })
}

/// For each `ℓ ≤ depth/2`, the least `m ≤ depth` with `A_m` inside the normal
/// core of `A_ℓ`. Never `Fails`: a missing certificate proves nothing.
pub fn normality_certificate(a: &GroupChain, depth: usize) -> Result<Verdict<NormalityCertificate>> {
    check_depth(a, depth)?;
    let mut pairs = Vec::new();
    for l in 0..=depth / 2 {
        let core = normal_core(a, l)?;
        let mut found = None;
        for m in l..=depth {
            if a.level(m)?.generators()?.iter().all(|g| core.contains(g)) {
                found = Some(m);
                break;
            }
        }
        match found {
            Some(m) => pairs.push((l, m)),
            None => {
                return Ok(Verdict::UnknownAtDepth {
                    depth,
                    note: format!("no level A_m with {l} ≤ m ≤ {depth} lies inside the normal core of A_{l}"),
                })
            }
        }
    }
    Ok(Verdict::Holds(NormalityCertificate { pairs, depth }))
}

// ---------------------------------------------------------------------------
// Independent verifiers. These share no code with the searches above beyond
// membership tests.

fn generators_inside(small: &Subgroup, big: &Subgroup) -> Result<bool> {
    Ok(small.generators()?.iter().all(|g| big.contains(g)))
}

fn verify_pairs(
    level_a: &dyn Fn(usize) -> Result<Subgroup>,
    b: &GroupChain,
    w: &InterleavingWitness,
) -> Result<()> {
    let bad = |msg: String| Err(Error::WitnessInvalid(msg));
    if w.pairs.first() != Some(&(0, 0)) {
        return bad("an interleaving must start at (0, 0)".into());
    }
    if !(generators_inside(&level_a(0)?, &b.level(0)?)? && generators_inside(&b.level(0)?, &level_a(0)?)?) {
        return bad("A_0 ≠ B_0".into());
    }
    for win in w.pairs.windows(2) {
        let ((l0, j0), (l1, j1)) = (win[0], win[1]);
        if l1 <= l0 || j1 <= j0 {
            return bad(format!("indices do not increase from {:?} to {:?}", win[0], win[1]));
        }
    }
    for (k, &(l, j)) in w.pairs.iter().enumerate() {
        if !generators_inside(&b.level(j)?, &level_a(l)?)? {
            return bad(format!("B_{j} ⊄ A_{l}"));
        }
        if let Some(&(nl, _)) = w.pairs.get(k + 1) {
            if !generators_inside(&level_a(nl)?, &b.level(j)?)? {
                return bad(format!("A_{nl} ⊄ B_{j}"));
            }
        }
    }
    let &(l, j) = w.pairs.last().unwrap();
    if l < w.depth || j < w.depth {
        return bad(format!("witness ends at ({l}, {j}), short of depth {}", w.depth));
    }
    Ok(())
}

pub fn verify_interleaving(a: &GroupChain, b: &GroupChain, w: &InterleavingWitness) -> Result<()> {
    same_family(a, b)?;
    verify_pairs(&|l| a.level(l), b, w)
}

pub fn verify_conjugacy(a: &GroupChain, b: &GroupChain, w: &ConjugacyWitness) -> Result<()> {
    same_family(a, b)?;
    let last = w.interleaving.pairs.iter().map(|p| p.0).max().unwrap_or(0);
    if w.elements.len() <= last {
        return Err(Error::WitnessInvalid(format!("{} conjugators for levels up to {last}", w.elements.len())));
    }
    for (l, pair) in w.elements.windows(2).enumerate() {
        if !a.level(l)?.contains(&pair[0].inverse().mul(&pair[1])) {
            return Err(Error::WitnessInvalid(format!("g_{l}·A_{l} ≠ g_{}·A_{l}", l + 1)));
        }
    }
    verify_pairs(
        &|l| {
            let g = &w.elements[l];
            Subgroup::conjugate(&a.level(l)?, g)
        },
        b,
        &w.interleaving,
    )
}

pub fn verify_return(a: &GroupChain, b: &GroupChain, w: &ReturnWitness) -> Result<()> {
    let (ta, tb) = (truncate_chain(a, w.k), truncate_chain(b, w.m));
    match &w.witness {
        EquivalenceWitness::Interleaving(i) => verify_interleaving(&ta, &tb, i),
        EquivalenceWitness::Conjugacy(c) => verify_conjugacy(&ta, &tb, c),
    }
}

/// Checks each pair by computing the permutation of every generator of
/// `A_m` on the cosets of `A_ℓ`.
pub fn verify_normality(a: &GroupChain, cert: &NormalityCertificate) -> Result<()> {
    for &(l, m) in &cert.pairs {
        let table = a.table(l)?;
        for g in a.level(m)?.generators()? {
            let perm = table.element_permutation(&g);
            if perm.iter().enumerate().any(|(i, &x)| x as usize != i) {
                return Err(Error::WitnessInvalid(format!("{g} ∈ A_{m} moves a coset of A_{l}")));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
}

/// The coset map `X_source → X_target`, `g·S ↦ g·T`, for levels `S ⊆ T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelMap {
    pub source: (Side, usize),
    pub target: (Side, usize),
    pub map: Vec<u32>,
}

fn coset_map(
    source: (Side, usize, &GroupChain),
    target: (Side, usize, &GroupChain),
) -> Result<LevelMap> {
    let (ss, sl, sc) = source;
    let (ts, tl, tc) = target;
    if !generators_inside(&sc.level(sl)?, &tc.level(tl)?)? {
        return Err(Error::WitnessInvalid(format!("{ss:?}_{sl} ⊄ {ts:?}_{tl}")));
    }
    let (st, tt) = (sc.table(sl)?, tc.table(tl)?);
    let map: Vec<u32> = st.representatives().iter().map(|r| tt.index_of(r)).collect();
    check_equivariant(&st, &tt, &map).map_err(|e| Error::WitnessInvalid(format!("{ss:?}_{sl} → {ts:?}_{tl}: {e}")))?;
    Ok(LevelMap { source: (ss, sl), target: (ts, tl), map })
}

fn check_equivariant(source: &CosetTable, target: &CosetTable, map: &[u32]) -> std::result::Result<(), String> {
    if map.first() != Some(&0) {
        return Err("basepoint not preserved".into());
    }
    for (s, (ps, pt)) in source.generator_permutations().iter().zip(target.generator_permutations()).enumerate() {
        for (i, &fi) in map.iter().enumerate() {
            if map[ps[i] as usize] != pt[fi as usize] {
                return Err(format!("generator {s} does not commute with the map at coset {i}"));
            }
        }
    }
    Ok(())
}

/// The finite-level equivariant maps induced by an interleaving: for the first
/// `depth + 1` pairs, `X(B)_{j_k} → X(A)_{ℓ_k}` and `X(A)_{ℓ_{k+1}} → X(B)_{j_k}`.
/// Every map is checked to preserve the basepoint and commute with the generators.
pub fn equivariant_maps_from_witness(
    a: &GroupChain,
    b: &GroupChain,
    w: &InterleavingWitness,
    depth: usize,
) -> Result<Vec<LevelMap>> {
    same_family(a, b)?;
    let used = &w.pairs[..w.pairs.len().min(depth + 1)];
    let mut maps = Vec::new();
    for (k, &(l, j)) in used.iter().enumerate() {
        maps.push(coset_map((Side::B, j, b), (Side::A, l, a))?);
        if let Some(&(nl, _)) = used.get(k + 1) {
            maps.push(coset_map((Side::A, nl, a), (Side::B, j, b))?);
        }
    }
    Ok(maps)
}

/// Composite of bonding maps `X_from → X_to` for `to ≤ from`.
pub fn composite_bonding(chain: &GroupChain, from: usize, to: usize) -> Result<Vec<u32>> {
    let mut map: Vec<u32> = (0..chain.table(from)?.size() as u32).collect();
    for l in (to + 1..=from).rev() {
        let bond = bonding_map(chain, l)?;
        map.iter_mut().for_each(|x| *x = bond[*x as usize]);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hnf::Hnf;
    use num_bigint::BigInt;

    fn adic(p: u32) -> GroupChain {
        let z = crate::groups::GroupFamily::free_abelian(1).unwrap();
        let fam = z.clone();
        GroupChain::from_fn(&z, move |l| Subgroup::lattice(&fam, Hnf::scalar(1, &BigInt::from(p).pow(l as u32))?))
    }

    #[test]
    fn two_adic_vs_four_adic() {
        let v = check_equivalent(&adic(2), &adic(4), 6).unwrap();
        let w = v.witness().unwrap();
        assert_eq!(w.pairs[..4], [(0, 0), (1, 1), (2, 2), (4, 3)]);
        verify_interleaving(&adic(2), &adic(4), w).unwrap();
    }

    #[test]
    fn without_closed_forms_two_vs_three_is_unknown() {
        let v = check_equivalent(&adic(2), &adic(3), 3).unwrap();
        assert!(matches!(v, Verdict::UnknownAtDepth { .. }));
    }

    #[test]
    fn self_equivalence_and_truncation() {
        let a = adic(2);
        assert!(check_equivalent(&a, &a, 4).unwrap().holds());
        let t = truncate_chain(&a, 3);
        let v = check_return_equivalent(&a, &t, 3, ReturnMode::Plain, 100).unwrap();
        let w = v.witness().unwrap();
        assert_eq!((w.k, w.m), (3, 0));
        verify_return(&a, &t, w).unwrap();
    }

    #[test]
    fn tampered_witness_is_rejected() {
        let w = InterleavingWitness { pairs: vec![(0, 0), (1, 2), (2, 3)], depth: 2 };
        assert!(verify_interleaving(&adic(2), &adic(4), &w).is_err());
    }
}
