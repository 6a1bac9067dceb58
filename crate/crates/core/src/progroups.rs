//! Pro-groups indexed by ℕ whose bonding maps are inclusions, morphisms built
//! from inclusions and ambient conjugations, and bounded-depth checks of the
//! monomorphism, epimorphism and isomorphism conditions.

use std::fmt;

use serde::Serialize;

use crate::chains::GroupChain;
use crate::equivalence::{Certificate, CertificateKind, EquivalenceWitness, Verdict};
use crate::error::{Error, Result};
use crate::groups::GroupElement;
use crate::subgroups::Subgroup;

/// Levels of a chain, optionally restricted to a subsequence.
#[derive(Debug, Clone)]
pub struct ProGroup {
    chain: GroupChain,
    selection: Option<Vec<usize>>,
}

impl ProGroup {
    pub fn from_chain(chain: &GroupChain) -> Self {
        ProGroup { chain: chain.clone(), selection: None }
    }

    /// The subsequence `chain.level(selection[0]), chain.level(selection[1]), …`.
    pub fn subsequence(chain: &GroupChain, selection: Vec<usize>) -> Result<Self> {
        if selection.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadIndices("subsequence indices must increase".into()));
        }
        Ok(ProGroup { chain: chain.clone(), selection: Some(selection) })
    }

    pub fn chain(&self) -> &GroupChain {
        &self.chain
    }

    /// Number of available levels, `None` when unbounded.
    pub fn len(&self) -> Option<usize> {
        match &self.selection {
            Some(s) => Some(s.len()),
            None => self.chain.last_level().map(|l| l + 1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn has_level(&self, i: usize) -> bool {
        self.len().map_or(true, |n| i < n)
    }

    /// Index of level `i` in the underlying chain.
    pub fn chain_level(&self, i: usize) -> Result<usize> {
        match &self.selection {
            Some(s) => s.get(i).copied().ok_or(Error::LevelUnavailable { level: i, last: s.len().saturating_sub(1) }),
            None => Ok(i),
        }
    }

    pub fn level(&self, i: usize) -> Result<Subgroup> {
        self.chain.level(self.chain_level(i)?)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum MapKind {
    Inclusion,
    Conjugation(GroupElement),
    /// Sends everything to the identity. A negative control for tests only.
    #[cfg(test)]
    Constant,
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Inclusion => write!(f, "inclusion"),
            MapKind::Conjugation(g) => write!(f, "conjugation by {g}"),
            #[cfg(test)]
            MapKind::Constant => write!(f, "constant"),
        }
    }
}

impl MapKind {
    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        match self {
            MapKind::Inclusion => x.clone(),
            MapKind::Conjugation(g) => g.conjugate(x),
            #[cfg(test)]
            MapKind::Constant => GroupElement::identity(x.family()),
        }
    }

    /// Image of a subgroup, as a subgroup of the ambient group.
    fn image(&self, h: &Subgroup) -> Result<Option<Subgroup>> {
        match self {
            MapKind::Inclusion => Ok(Some(h.clone())),
            MapKind::Conjugation(g) => Subgroup::conjugate(h, g).map(Some),
            #[cfg(test)]
            MapKind::Constant => Ok(None),
        }
    }
}

/// `f_γ : G_{φ(γ)} → H_γ` for `γ` in `0..maps.len()`.
#[derive(Debug, Clone)]
pub struct ProMorphism {
    source: ProGroup,
    target: ProGroup,
    index_map: Vec<usize>,
    maps: Vec<MapKind>,
}

impl ProMorphism {
    /// Validates that `φ` increases strictly and each `f_γ` maps the
    /// generators of source level `φ(γ)` into target level `γ`.
    pub fn new(source: ProGroup, target: ProGroup, index_map: Vec<usize>, maps: Vec<MapKind>) -> Result<Self> {
        if index_map.len() != maps.len() {
            return Err(Error::NotAMorphism("index map and level maps differ in length".into()));
        }
        if index_map.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NotAMorphism("index map must increase strictly".into()));
        }
        for (gamma, (&lambda, f)) in index_map.iter().zip(&maps).enumerate() {
            let (src, tgt) = (source.level(lambda)?, target.level(gamma)?);
            for g in src.generators()? {
                if !tgt.contains(&f.apply(&g)) {
                    return Err(Error::NotAMorphism(format!(
                        "f_{gamma} ({f:?}) sends generator {g} of source level {lambda} outside target level {gamma}"
                    )));
                }
            }
        }
        Ok(ProMorphism { source, target, index_map, maps })
    }

    /// Identity on the first `len` levels.
    pub fn identity(p: &ProGroup, len: usize) -> Result<Self> {
        Self::new(p.clone(), p.clone(), (0..len).collect(), vec![MapKind::Inclusion; len])
    }

    pub fn source(&self) -> &ProGroup {
        &self.source
    }

    pub fn target(&self) -> &ProGroup {
        &self.target
    }

    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    pub fn maps(&self) -> &[MapKind] {
        &self.maps
    }

    /// Number of target levels on which the morphism is defined.
    pub fn range(&self) -> usize {
        self.maps.len()
    }

    fn check_gamma(&self, gamma: usize) -> Result<()> {
        if gamma >= self.range() {
            return Err(Error::BadIndices(format!("γ = {gamma} outside the defined range 0..{}", self.range())));
        }
        Ok(())
    }
}

/// Whether `f_γ ∘ p^{φ(γ)}_λ` and `q^γ_{γ'} ∘ f_{γ'} ∘ p^{φ(γ')}_λ` agree on the
/// generators of source level `λ`. Two conjugations that differ by an inner
/// automorphism of target level `γ` are counted as agreeing.
pub fn verify_equalizer(m: &ProMorphism, gamma: usize, gamma2: usize, lambda: usize) -> Result<bool> {
    m.check_gamma(gamma)?;
    m.check_gamma(gamma2)?;
    if gamma >= gamma2 || lambda < m.index_map[gamma] || lambda < m.index_map[gamma2] || !m.source.has_level(lambda) {
        return Err(Error::BadIndices(format!("(γ, γ', λ) = ({gamma}, {gamma2}, {lambda}) is not admissible")));
    }
    let (f, f2) = (&m.maps[gamma], &m.maps[gamma2]);
    let gens = m.source.level(lambda)?.generators()?;
    if gens.iter().all(|x| f.apply(x) == f2.apply(x)) {
        return Ok(true);
    }
    if let (MapKind::Conjugation(c), MapKind::Conjugation(c2)) = (f, f2) {
        // c2·x·c2⁻¹ = h·(c·x·c⁻¹)·h⁻¹ with h = c2·c⁻¹.
        let h = c2.mul(&c.inverse());
        return Ok(m.target.level(gamma)?.contains(&h));
    }
    Ok(false)
}

/// Kernel condition: the supported maps are injective exactly when no two
/// generators collide and no non-trivial generator maps to the identity.
pub fn is_promonomorphism(m: &ProMorphism, depth: usize) -> Result<Verdict<()>> {
    for gamma in 0..m.range().min(depth + 1) {
        let f = &m.maps[gamma];
        let gens = m.source.level(m.index_map[gamma])?.generators()?;
        let images: Vec<GroupElement> = gens.iter().map(|g| f.apply(g)).collect();
        for (i, (g, fg)) in gens.iter().zip(&images).enumerate() {
            let collides = images[..i].iter().zip(&gens).any(|(fh, h)| fh == fg && h != g);
            if (fg.is_identity() && !g.is_identity()) || collides {
                return Ok(Verdict::Fails(Certificate {
                    kind: CertificateKind::NotInjective,
                    detail: format!("f_{gamma} ({f:?}) is not injective on generator {g}"),
                }));
            }
        }
    }
    Ok(Verdict::Holds(()))
}

/// For each admissible pair `(λ, γ)`, the least `γ' ≥ γ` with target level `γ'`
/// inside `f_γ(G_λ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpiPairing {
    pub pairs: Vec<((usize, usize), usize)>,
}

pub fn is_proepimorphism(m: &ProMorphism, depth: usize) -> Result<Verdict<EpiPairing>> {
    let mut pairs = Vec::new();
    let gamma_end = m.range().min(depth + 1);
    let lambda_end = m.source.len().map_or(depth + 1, |n| n.min(depth + 1));
    for gamma in 0..gamma_end {
        for lambda in m.index_map[gamma]..lambda_end {
            let Some(image) = m.maps[gamma].image(&m.source.level(lambda)?)? else {
                return Ok(Verdict::UnknownAtDepth { depth, note: format!("f_{gamma} has no structural image") });
            };
            let mut found = None;
            for g2 in gamma..=depth {
                if !m.target.has_level(g2) {
                    break;
                }
                if m.target.level(g2)?.is_subgroup_of(&image)? {
                    found = Some(g2);
                    break;
                }
            }
            match found {
                Some(g2) => pairs.push(((lambda, gamma), g2)),
                None => {
                    return Ok(Verdict::UnknownAtDepth {
                        depth,
                        note: format!("no target level γ' ≤ {depth} lies inside the image of source level {lambda} under f_{gamma}"),
                    })
                }
            }
        }
    }
    Ok(Verdict::Holds(EpiPairing { pairs }))
}

pub fn is_proisomorphism(m: &ProMorphism, depth: usize) -> Result<Verdict<EpiPairing>> {
    match is_promonomorphism(m, depth)? {
        Verdict::Holds(()) => is_proepimorphism(m, depth),
        Verdict::Fails(c) => Ok(Verdict::Fails(c)),
        Verdict::UnknownAtDepth { depth, note } => Ok(Verdict::UnknownAtDepth { depth, note }),
    }
}

/// From an interleaving `A_{ℓ_k} ⊇ B_{j_k} ⊇ A_{ℓ_{k+1}}`, the morphism
/// `(A_{ℓ_k})_k → (B_{j_k})_k` with `φ(k) = k + 1` and `f_k` the inclusion
/// `A_{ℓ_{k+1}} ⊆ B_{j_k}`; for a conjugacy witness, `f_k` is conjugation by
/// `g_{ℓ_{k+1}}`.
pub fn promorphism_from_equivalence(a: &GroupChain, b: &GroupChain, w: &EquivalenceWitness) -> Result<ProMorphism> {
    let (interleaving, conjugators) = match w {
        EquivalenceWitness::Interleaving(i) => (i, None),
        EquivalenceWitness::Conjugacy(c) => (&c.interleaving, Some(&c.elements)),
    };
    let pairs = &interleaving.pairs;
    if pairs.len() < 2 {
        return Err(Error::WitnessInvalid("an interleaving needs at least two pairs".into()));
    }
    let source = ProGroup::subsequence(a, pairs.iter().map(|p| p.0).collect())
        .map_err(|e| Error::WitnessInvalid(e.to_string()))?;
    let target = ProGroup::subsequence(b, pairs.iter().map(|p| p.1).collect())
        .map_err(|e| Error::WitnessInvalid(e.to_string()))?;
    let n = pairs.len() - 1;
    let maps = (0..n)
        .map(|k| match conjugators {
            None => Ok(MapKind::Inclusion),
            Some(gs) => gs
                .get(pairs[k + 1].0)
                .map(|g| MapKind::Conjugation(g.clone()))
                .ok_or_else(|| Error::WitnessInvalid(format!("missing conjugator for level {}", pairs[k + 1].0))),
        })
        .collect::<Result<Vec<_>>>()?;
    ProMorphism::new(source, target, (1..=n).collect(), maps).map_err(|e| match e {
        Error::NotAMorphism(msg) => Error::WitnessInvalid(msg),
        other => other,
    })
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
    fn constant_map_is_not_mono() {
        let p = ProGroup::from_chain(&adic(2));
        let m = ProMorphism::new(p.clone(), p, vec![0, 1, 2], vec![MapKind::Constant; 3]).unwrap();
        assert!(is_promonomorphism(&m, 3).unwrap().fails());
        assert!(!is_proisomorphism(&m, 3).unwrap().holds());
    }

    #[test]
    fn identity_is_iso() {
        let p = ProGroup::from_chain(&adic(3));
        let m = ProMorphism::identity(&p, 5).unwrap();
        assert!(is_proisomorphism(&m, 4).unwrap().holds());
        assert!(verify_equalizer(&m, 0, 2, 3).unwrap());
        assert!(verify_equalizer(&m, 2, 0, 3).is_err());
    }

    #[test]
    fn finer_inclusion_is_not_epi() {
        let src = ProGroup::from_chain(&adic(6));
        let tgt = ProGroup::from_chain(&adic(2));
        let m = ProMorphism::new(src, tgt, (0..5).collect(), vec![MapKind::Inclusion; 5]).unwrap();
        assert!(is_promonomorphism(&m, 4).unwrap().holds());
        assert!(matches!(is_proepimorphism(&m, 4).unwrap(), Verdict::UnknownAtDepth { .. }));
    }

    #[test]
    fn maps_outside_target_are_rejected() {
        let src = ProGroup::from_chain(&adic(2));
        let tgt = ProGroup::from_chain(&adic(4));
        assert!(matches!(
            ProMorphism::new(src, tgt, vec![0, 1], vec![MapKind::Inclusion; 2]),
            Err(Error::NotAMorphism(_))
        ));
    }
}
