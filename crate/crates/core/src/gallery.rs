//! Constructors for the standard example chains, each carrying closed-form
//! metadata that [`metadata_oracle_check`] validates against computation.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chains::{confirm_core, kernel_report, normal_core, ChainMetadata, GroupChain, LevelFn};
use crate::cosets::relation_acts_trivially;
use crate::error::{Error, Result};
use crate::groups::{FiniteGroup, GroupElement, GroupFamily};
use crate::hnf::{determinant, Hnf};
use crate::steinitz::{
    exponent_of, factor, is_prime, steinitz_from_chain, Annotation, Exponent, ExponentBound, SteinitzNumber,
};
use crate::subgroups::{Parity, Subgroup};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VietorisSpec {
    /// `G_ℓ = m_0 m_1 ⋯ m_{ℓ−1} ℤ` with the steps repeating periodically.
    Periodic { steps: Vec<u64> },
    /// `G_ℓ = p_1 p_2 ⋯ p_ℓ ℤ` over the increasing primes.
    DistinctPrimes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum GallerySpec {
    Vietoris(VietorisSpec),
    /// `G_ℓ = M^ℓ ℤ^k` for a nonsingular integer matrix `M` (row-major).
    LatticeChain { matrix: Vec<Vec<i64>> },
    /// `G_ℓ = ⟨a^{d^ℓ}, b⟩` in the Klein bottle group.
    Klein { d: u64 },
    /// `G_ℓ = {(2^ℓ a, 2^ℓ b, 4^ℓ c)}`, the images of `(a,b,c) ↦ (2a,2b,4c)`.
    HeisenbergPhi,
    /// `H_ℓ = {(p^ℓ a, q^ℓ b, p^ℓ c)}`.
    HeisenbergDyer { p: u64, q: u64 },
    /// `G_ℓ = p^ℓ ℤ^n ⋊ F`.
    SemidirectScale { n: usize, table: Vec<Vec<usize>>, matrices: Vec<Vec<Vec<i64>>>, p: u64 },
}

impl GallerySpec {
    /// Name of the ambient family the spec builds in.
    pub fn family_name(&self) -> &'static str {
        match self {
            GallerySpec::Vietoris(_) | GallerySpec::LatticeChain { .. } => "free_abelian",
            GallerySpec::Klein { .. } => "klein_bottle",
            GallerySpec::HeisenbergPhi | GallerySpec::HeisenbergDyer { .. } => "heisenberg",
            GallerySpec::SemidirectScale { .. } => "semidirect",
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn pow(base: u64, e: usize) -> BigInt {
    num_traits::pow(BigInt::from(base), e)
}

pub fn build(spec: &GallerySpec) -> Result<GroupChain> {
    match spec {
        GallerySpec::Vietoris(v) => vietoris(v),
        GallerySpec::LatticeChain { matrix } => lattice_chain(matrix),
        GallerySpec::Klein { d } => klein(*d),
        GallerySpec::HeisenbergPhi => heisenberg_phi(),
        GallerySpec::HeisenbergDyer { p, q } => heisenberg_dyer(*p, *q),
        GallerySpec::SemidirectScale { n, table, matrices, p } => semidirect_scale(*n, table, matrices, *p),
    }
}

fn nth_prime(i: usize) -> u64 {
    (2u64..).filter(|&p| is_prime(p)).nth(i).expect("infinitely many primes")
}

fn vietoris(spec: &VietorisSpec) -> Result<GroupChain> {
    let z = GroupFamily::free_abelian(1)?;
    let fam = z.clone();
    match spec {
        VietorisSpec::Periodic { steps } => {
            if steps.is_empty() {
                return Err(invalid("Vietoris chain needs at least one step"));
            }
            let steinitz = SteinitzNumber::periodic(steps).map_err(|e| invalid(e.to_string()))?;
            let steps = steps.clone();
            let label = format!("vietoris{steps:?}");
            let chain = GroupChain::iterate(&z, Subgroup::full(&z), move |h, l| {
                let m = BigInt::from(steps[l % steps.len()]);
                Subgroup::lattice(&fam, Hnf::scalar(1, &(&h.index().unwrap() * m))?)
            });
            Ok(with_level_cores(chain.with_metadata(abelian_metadata(label, Some(steinitz)))))
        }
        VietorisSpec::DistinctPrimes => {
            let steinitz = SteinitzNumber::sequence(|i| Ok(nth_prime(i)), None, Some(Annotation::EachPrimeBoundedBy(1)));
            let chain = GroupChain::iterate(&z, Subgroup::full(&z), move |h, l| {
                let m = BigInt::from(nth_prime(l));
                Subgroup::lattice(&fam, Hnf::scalar(1, &(&h.index().unwrap() * m))?)
            });
            Ok(with_level_cores(chain.with_metadata(abelian_metadata("vietoris distinct primes".into(), Some(steinitz)))))
        }
    }
}

/// Abelian chains are normal: each level is its own core.
fn abelian_metadata(label: String, steinitz: Option<SteinitzNumber>) -> ChainMetadata {
    ChainMetadata { label: Some(label), steinitz, ..ChainMetadata::default() }
}

fn with_level_cores(chain: GroupChain) -> GroupChain {
    let c = chain.clone();
    let mut meta = chain.metadata().clone();
    meta.core_formula = Some(Arc::new(move |l| c.level(l)));
    chain.with_metadata(meta)
}

fn lattice_chain(matrix: &[Vec<i64>]) -> Result<GroupChain> {
    let k = matrix.len();
    if k == 0 || matrix.iter().any(|r| r.len() != k) {
        return Err(invalid("lattice matrix must be square and non-empty"));
    }
    let m: Vec<Vec<BigInt>> = matrix.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let det = determinant(&m);
    if det.is_zero() {
        return Err(invalid("lattice matrix is singular"));
    }
    let fam_z = GroupFamily::free_abelian(k)?;
    let fam = fam_z.clone();
    let chain = GroupChain::iterate(&fam_z, Subgroup::full(&fam_z), move |h, _| {
        let crate::subgroups::SubgroupKind::Lattice(basis) = h.kind() else { unreachable!("lattice chain level") };
        Subgroup::lattice(&fam, basis.transform(&m)?)
    });
    let steinitz = if k == 1 {
        let d = det.abs().to_string().parse::<u64>().map_err(|_| invalid("multiplier too large"))?;
        Some(SteinitzNumber::periodic(&[d]).map_err(|e| invalid(e.to_string()))?)
    } else {
        None
    };
    let chain = chain.with_metadata(abelian_metadata(format!("lattice chain {matrix:?}"), steinitz));
    Ok(with_level_cores(chain))
}

fn klein(d: u64) -> Result<GroupChain> {
    if d < 2 {
        return Err(invalid("Klein chain needs d ≥ 2"));
    }
    let k = GroupFamily::klein_bottle();
    let fam = k.clone();
    let chain = GroupChain::from_fn(&k, move |l| Subgroup::klein(&fam, pow(d, l), Parity::Any));
    let fam = k.clone();
    // Conjugating a^m b^n by a^t gives a^{m+2t} b^n, so ⟨a^D, b⟩ is normal
    // only for D ≤ 2; otherwise its core keeps the even powers of b.
    let core: LevelFn = Arc::new(move |l| {
        let big_d = pow(d, l);
        let parity = if big_d <= BigInt::from(2) { Parity::Any } else { Parity::Even };
        Subgroup::klein(&fam, big_d, parity)
    });
    let meta = ChainMetadata {
        label: Some(format!("klein d={d}")),
        kernel_generators: vec![GroupElement::klein(&k, 0, 1)?],
        trivial_relations: vec![vec![(1, 1), (0, 1), (1, -1), (0, 1)], vec![(1, 2)]],
        core_formula: Some(core),
        steinitz: None,
    };
    Ok(chain.with_metadata(meta))
}

fn heisenberg_phi() -> Result<GroupChain> {
    let h = GroupFamily::heisenberg();
    let fam = h.clone();
    let chain = GroupChain::from_fn(&h, move |l| Subgroup::heisenberg(&fam, pow(2, l), pow(2, l), pow(4, l)));
    let fam = h.clone();
    let core: LevelFn = Arc::new(move |l| Subgroup::heisenberg(&fam, pow(4, l), pow(4, l), pow(4, l)));
    let meta = ChainMetadata { label: Some("heisenberg phi".into()), core_formula: Some(core), ..ChainMetadata::default() };
    Ok(chain.with_metadata(meta))
}

fn heisenberg_dyer(p: u64, q: u64) -> Result<GroupChain> {
    if p < 2 || q < 2 || p == q {
        return Err(invalid("Dyer chain needs distinct p, q ≥ 2"));
    }
    let h = GroupFamily::heisenberg();
    let fam = h.clone();
    // Pattern closure: the cross term x·y' is a multiple of p^ℓ q^ℓ, hence of p^ℓ.
    let chain = GroupChain::from_fn(&h, move |l| Subgroup::heisenberg(&fam, pow(p, l), pow(q, l), pow(p, l)));
    for l in 0..4 {
        chain.level(l).map_err(|e| invalid(e.to_string()))?;
    }
    let fam = h.clone();
    // Conjugation adds u·y − v·x to the third coordinate, so the core needs
    // p^ℓ | x, y on top of the level's own divisibility.
    let core: LevelFn =
        Arc::new(move |l| Subgroup::heisenberg(&fam, pow(p, l), pow(p, l).lcm(&pow(q, l)), pow(p, l)));
    let meta = ChainMetadata {
        label: Some(format!("heisenberg dyer p={p} q={q}")),
        core_formula: Some(core),
        ..ChainMetadata::default()
    };
    Ok(chain.with_metadata(meta))
}

fn semidirect_scale(n: usize, table: &[Vec<usize>], matrices: &[Vec<Vec<i64>>], p: u64) -> Result<GroupChain> {
    if p < 2 {
        return Err(invalid("scale factor p must be ≥ 2"));
    }
    let point_group = FiniteGroup::new(n, table.to_vec(), matrices.to_vec()).map_err(|e| invalid(e.to_string()))?;
    let fam_s = GroupFamily::semidirect(point_group.clone()).map_err(|e| invalid(e.to_string()))?;
    let all: Vec<usize> = (0..point_group.order()).collect();
    let fam = fam_s.clone();
    let members = all.clone();
    let chain = GroupChain::from_fn(&fam_s, move |l| Subgroup::semidirect(&fam, Hnf::scalar(n, &pow(p, l))?, members.clone()));
    let fam = fam_s.clone();
    let pg = point_group.clone();
    // (w,h)·(v,f)·(w,h)⁻¹ has translation part w + h·v − (hfh⁻¹)·w, so the
    // core keeps the f with M_f ≡ I modulo p^ℓ.
    let core: LevelFn = Arc::new(move |l| {
        let m = pow(p, l);
        let members: Vec<usize> = (0..pg.order())
            .filter(|&f| {
                pg.matrix(f).iter().enumerate().all(|(i, row)| {
                    row.iter().enumerate().all(|(j, &x)| (BigInt::from(x) - i64::from(i == j)).is_multiple_of(&m))
                })
            })
            .collect();
        Subgroup::semidirect(&fam, Hnf::scalar(n, &m)?, members)
    });
    let zero = vec![0i64; n];
    let kernel_generators = point_group
        .generators()
        .iter()
        .map(|&f| GroupElement::semidirect(&fam_s, &zero, f))
        .collect::<Result<Vec<_>>>()?;
    let meta = ChainMetadata {
        label: Some(format!("semidirect scale n={n} |F|={} p={p}", point_group.order())),
        kernel_generators,
        core_formula: Some(core),
        ..ChainMetadata::default()
    };
    Ok(chain.with_metadata(meta))
}

/// Outcome of one metadata claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimCheck {
    pub claim: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub depth: usize,
    pub confirmed: Vec<ClaimCheck>,
}

/// Checks every metadata claim against computation up to `depth`; the first
/// disagreement is returned as [`Error::OracleMismatch`].
pub fn metadata_oracle_check(chain: &GroupChain, depth: usize) -> Result<OracleReport> {
    let meta = chain.metadata().clone();
    let mut confirmed = Vec::new();
    let mismatch = |claim: &str, detail: String| Error::OracleMismatch { claim: claim.into(), detail };

    if !meta.kernel_generators.is_empty() {
        let report = kernel_report(chain, depth, &meta.kernel_generators)?;
        if report.surviving.len() != meta.kernel_generators.len() {
            let lost: Vec<String> = meta
                .kernel_generators
                .iter()
                .filter(|g| !report.surviving.contains(g))
                .map(|g| g.to_string())
                .collect();
            return Err(mismatch("kernel generators", format!("{} leave some level ≤ {depth}", lost.join(", "))));
        }
        confirmed.push(ClaimCheck {
            claim: "kernel generators".into(),
            detail: format!("{} lie in every level ≤ {depth}", meta.kernel_generators.len()),
        });
    }

    for word in &meta.trivial_relations {
        let name = crate::groups::render_word(chain.family(), word);
        for l in 0..=depth {
            if !relation_acts_trivially(chain, l, word)? {
                return Err(mismatch("trivial relations", format!("{name} moves a coset of level {l}")));
            }
        }
        confirmed.push(ClaimCheck { claim: "trivial relation".into(), detail: format!("{name} fixes every coset at levels ≤ {depth}") });
    }

    if let Some(formula) = &meta.core_formula {
        for l in 0..=depth {
            let expected = formula(l)?;
            let table = chain.table(l)?;
            if !confirm_core(&table, &expected, chain.budget()) {
                return Err(mismatch("core formula", format!("{expected} is not the normal core of level {l}")));
            }
            let core = normal_core(chain, l)?;
            if let Some(form) = core.closed_form() {
                if !form.same_as(&expected)? {
                    return Err(mismatch("core formula", format!("recognized {form}, expected {expected} at level {l}")));
                }
            }
        }
        confirmed.push(ClaimCheck { claim: "core formula".into(), detail: format!("normal cores match at levels ≤ {depth}") });
    }

    if let Some(closed) = &meta.steinitz {
        let observed = steinitz_from_chain(chain)?.sequence;
        let mut primes: Vec<u64> = Vec::new();
        for i in 0..depth {
            let SteinitzNumber::Sequence(seq) = &observed else { unreachable!() };
            for (p, _) in factor(seq.step(i)?)? {
                if !primes.contains(&p) {
                    primes.push(p);
                }
            }
        }
        if let SteinitzNumber::FiniteSupport(map) = closed {
            primes.extend(map.keys().filter(|p| !primes.contains(p)).copied().collect::<Vec<_>>());
        }
        primes.sort_unstable();
        for &p in &primes {
            let ExponentBound::AtLeast(seen) = exponent_of(&observed, p, depth)? else { unreachable!() };
            let ok = match exponent_of(closed, p, depth)? {
                ExponentBound::Exact(Exponent::Infinite) => true,
                ExponentBound::Exact(Exponent::Finite(e)) => seen <= e,
                ExponentBound::AtLeast(_) => match closed {
                    SteinitzNumber::Sequence(s) => match s.annotation() {
                        Some(Annotation::EachPrimeBoundedBy(b)) => seen <= *b,
                        _ => true,
                    },
                    SteinitzNumber::FiniteSupport(_) => unreachable!(),
                },
            };
            if !ok {
                return Err(mismatch("steinitz", format!("prime {p} occurs {seen} times in the first {depth} steps, more than {closed} allows")));
            }
        }
        confirmed.push(ClaimCheck { claim: "steinitz".into(), detail: format!("{closed} consistent with the first {depth} steps") });
    }
    Ok(OracleReport { depth, confirmed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::verify_chain;
    use num_traits::One;

    #[test]
    fn klein_level_one() {
        let c = build(&GallerySpec::Klein { d: 2 }).unwrap();
        assert_eq!(c.level(1).unwrap().to_string(), "⟨a^2, b⟩");
        assert_eq!(c.index(1).unwrap(), BigInt::from(2));
        metadata_oracle_check(&c, 4).unwrap();
    }

    #[test]
    fn heisenberg_phi_level_one() {
        let c = build(&GallerySpec::HeisenbergPhi).unwrap();
        assert_eq!(c.level(1).unwrap().to_string(), "(2a,2b,4c)");
        assert_eq!(c.index(1).unwrap(), BigInt::from(16));
        metadata_oracle_check(&c, 2).unwrap();
    }

    #[test]
    fn rank_one_lattice_is_two_adic() {
        let c = build(&GallerySpec::LatticeChain { matrix: vec![vec![2]] }).unwrap();
        let v = build(&GallerySpec::Vietoris(VietorisSpec::Periodic { steps: vec![2] })).unwrap();
        for l in 0..6 {
            assert!(c.level(l).unwrap().same_as(&v.level(l).unwrap()).unwrap());
        }
        assert_eq!(c.metadata().steinitz.as_ref().unwrap().to_string(), "2^∞");
        metadata_oracle_check(&v, 6).unwrap();
    }

    #[test]
    fn invalid_specs() {
        assert!(build(&GallerySpec::Klein { d: 1 }).is_err());
        assert!(build(&GallerySpec::HeisenbergDyer { p: 3, q: 3 }).is_err());
        assert!(build(&GallerySpec::LatticeChain { matrix: vec![vec![1, 2], vec![2, 4]] }).is_err());
    }

    #[test]
    fn dyer_indices() {
        let c = build(&GallerySpec::HeisenbergDyer { p: 2, q: 3 }).unwrap();
        let r = verify_chain(&c, 2).unwrap();
        assert_eq!(r.indices, vec![BigInt::one(), BigInt::from(12), BigInt::from(144)]);
        metadata_oracle_check(&c, 2).unwrap();
    }
}
