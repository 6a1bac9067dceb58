//! Descending group chains `G_0 ⊇ G_1 ⊇ …` with memoized levels, coset
//! tables and normal cores.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::cosets::{enumerate_cosets, CosetTable, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::groups::{Family, GroupElement, GroupFamily, Payload, Word};
use crate::hnf::Hnf;
use crate::steinitz::SteinitzNumber;
use crate::subgroups::{permutation_order, Parity, Subgroup};

pub type LevelFn = Arc<dyn Fn(usize) -> Result<Subgroup> + Send + Sync>;
pub type StepFn = Arc<dyn Fn(&Subgroup, usize) -> Result<Subgroup> + Send + Sync>;

#[derive(Clone)]
enum Source {
    /// `level(ℓ) = f(ℓ)`.
    Formula(LevelFn),
    /// `level(0) = first`, `level(ℓ+1) = step(level(ℓ), ℓ)`.
    Iterate { first: Subgroup, step: StepFn },
    /// Finitely many explicit levels.
    Explicit(Arc<Vec<Subgroup>>),
    /// `level(ℓ) = parent.level(ℓ + k)`.
    Shift { parent: GroupChain, k: usize },
    /// `level(ℓ) = g·parent.level(ℓ)·g⁻¹`.
    Conjugate { parent: GroupChain, by: GroupElement },
}

/// Known closed forms attached to gallery chains; used as test oracles and in
/// reports, never as inputs to the decision procedures.
#[derive(Clone, Default)]
pub struct ChainMetadata {
    pub label: Option<String>,
    /// Elements claimed to lie in every level.
    pub kernel_generators: Vec<GroupElement>,
    /// Words claimed to act trivially on every level.
    pub trivial_relations: Vec<Word>,
    /// Claimed normal core of each level.
    pub core_formula: Option<LevelFn>,
    /// Closed-form Steinitz number (rank-1 chains).
    pub steinitz: Option<SteinitzNumber>,
}

impl fmt::Debug for ChainMetadata {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChainMetadata")
            .field("label", &self.label)
            .field("kernel_generators", &self.kernel_generators)
            .field("trivial_relations", &self.trivial_relations)
            .field("core_formula", &self.core_formula.is_some())
            .field("steinitz", &self.steinitz)
            .finish()
    }
}

struct Inner {
    family: Family,
    source: Source,
    metadata: ChainMetadata,
    budget: usize,
    verified_depth: AtomicUsize,
    levels: Mutex<Vec<Subgroup>>,
    tables: Mutex<HashMap<usize, Arc<CosetTable>>>,
    cores: Mutex<HashMap<usize, Subgroup>>,
}

/// A descending chain of finite-index subgroups of a fixed ambient group.
/// Cheap to clone; levels, tables and cores are computed on demand and cached.
#[derive(Clone)]
pub struct GroupChain(Arc<Inner>);

impl fmt::Debug for GroupChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupChain({}, {:?})", self.family().name(), self.0.metadata.label)
    }
}

impl GroupChain {
    fn make(family: &Family, source: Source, metadata: ChainMetadata, budget: usize) -> Self {
        GroupChain(Arc::new(Inner {
            family: family.clone(),
            source,
            metadata,
            budget,
            verified_depth: AtomicUsize::new(0),
            levels: Mutex::new(Vec::new()),
            tables: Mutex::new(HashMap::new()),
            cores: Mutex::new(HashMap::new()),
        }))
    }

    pub fn from_fn(family: &Family, f: impl Fn(usize) -> Result<Subgroup> + Send + Sync + 'static) -> Self {
        Self::make(family, Source::Formula(Arc::new(f)), ChainMetadata::default(), DEFAULT_BUDGET)
    }

    pub fn iterate(
        family: &Family,
        first: Subgroup,
        step: impl Fn(&Subgroup, usize) -> Result<Subgroup> + Send + Sync + 'static,
    ) -> Self {
        Self::make(family, Source::Iterate { first, step: Arc::new(step) }, ChainMetadata::default(), DEFAULT_BUDGET)
    }

    /// A chain with finitely many explicit levels; `levels[0]` must be the whole group.
    pub fn from_levels(family: &Family, levels: Vec<Subgroup>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSpec("a chain needs at least one level".into()));
        }
        if levels.iter().any(|l| !Arc::ptr_eq(l.family(), family) && l.family() != family) {
            return Err(Error::FamilyMismatch);
        }
        if levels[0].index() != Some(BigInt::one()) {
            return Err(Error::InvalidSpec("level 0 must be the whole group".into()));
        }
        Ok(Self::make(family, Source::Explicit(Arc::new(levels)), ChainMetadata::default(), DEFAULT_BUDGET))
    }

    fn rebuild(&self, metadata: ChainMetadata, budget: usize) -> Self {
        Self::make(&self.0.family, self.0.source.clone(), metadata, budget)
    }

    pub fn with_metadata(self, metadata: ChainMetadata) -> Self {
        let budget = self.0.budget;
        self.rebuild(metadata, budget)
    }

    /// Coset-enumeration budget used for this chain's tables and cores.
    pub fn with_budget(self, budget: usize) -> Self {
        let metadata = self.0.metadata.clone();
        self.rebuild(metadata, budget)
    }

    pub fn family(&self) -> &Family {
        &self.0.family
    }

    pub fn metadata(&self) -> &ChainMetadata {
        &self.0.metadata
    }

    pub fn budget(&self) -> usize {
        self.0.budget
    }

    /// Largest depth confirmed by [`verify_chain`].
    pub fn verified_depth(&self) -> usize {
        self.0.verified_depth.load(Ordering::Relaxed)
    }

    /// Last available level, or `None` for infinite chains.
    pub fn last_level(&self) -> Option<usize> {
        match &self.0.source {
            Source::Explicit(levels) => Some(levels.len() - 1),
            Source::Shift { parent, k } => parent.last_level().map(|l| l.saturating_sub(*k)),
            Source::Conjugate { parent, .. } => parent.last_level(),
            _ => None,
        }
    }

    pub fn has_level(&self, level: usize) -> bool {
        self.last_level().map_or(true, |last| level <= last)
    }

    fn unavailable(&self, level: usize) -> Error {
        Error::LevelUnavailable { level, last: self.last_level().unwrap_or(usize::MAX) }
    }

    pub fn level(&self, level: usize) -> Result<Subgroup> {
        if !self.has_level(level) {
            return Err(self.unavailable(level));
        }
        match &self.0.source {
            Source::Explicit(levels) => Ok(levels[level].clone()),
            Source::Shift { parent, k } => parent.level(level + k),
            Source::Conjugate { parent, by } => Subgroup::conjugate(&parent.level(level)?, by),
            Source::Formula(f) => {
                if let Some(h) = self.0.levels.lock().unwrap().get(level) {
                    return Ok(h.clone());
                }
                let h = f(level)?;
                let mut memo = self.0.levels.lock().unwrap();
                if memo.len() == level {
                    memo.push(h.clone());
                }
                Ok(h)
            }
            Source::Iterate { first, step } => {
                let mut memo = self.0.levels.lock().unwrap();
                if memo.is_empty() {
                    memo.push(first.clone());
                }
                while memo.len() <= level {
                    let next = step(memo.last().unwrap(), memo.len() - 1)?;
                    memo.push(next);
                }
                Ok(memo[level].clone())
            }
        }
    }

    /// Index `[G_0 : G_ℓ]`; structural levels only.
    pub fn index(&self, level: usize) -> Result<BigInt> {
        let h = self.level(level)?;
        match h.index() {
            Some(i) => Ok(i),
            None => h.index_within(self.budget()),
        }
    }

    /// Coset table of `G_0/G_ℓ`, enumerated once and cached.
    pub fn table(&self, level: usize) -> Result<Arc<CosetTable>> {
        if let Source::Shift { parent, k } = &self.0.source {
            return parent.table(level + k);
        }
        if let Some(t) = self.0.tables.lock().unwrap().get(&level) {
            return Ok(t.clone());
        }
        let table = Arc::new(enumerate_cosets(&self.level(level)?, self.budget())?);
        Ok(self.0.tables.lock().unwrap().entry(level).or_insert(table).clone())
    }

    pub(crate) fn cached_core(&self, level: usize) -> Option<Subgroup> {
        self.0.cores.lock().unwrap().get(&level).cloned()
    }

    fn cache_core(&self, level: usize, core: Subgroup) -> Subgroup {
        self.0.cores.lock().unwrap().entry(level).or_insert(core).clone()
    }

    pub(crate) fn source_offset(&self) -> Option<(GroupChain, usize)> {
        match &self.0.source {
            Source::Shift { parent, k } => Some((parent.clone(), *k)),
            _ => None,
        }
    }
}

/// Per-level indices and containment results of [`verify_chain`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub depth: usize,
    #[serde(serialize_with = "serialize_indices")]
    pub indices: Vec<BigInt>,
    /// Levels `ℓ+1` with the same index as level `ℓ`.
    pub degenerate: Vec<usize>,
}

fn serialize_indices<S: serde::Serializer>(xs: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::bigint_serde::vec::serialize(xs, s)
}

/// Confirms `G_{ℓ+1} ⊆ G_ℓ` for `ℓ < depth` by generator membership and lists the indices.
pub fn verify_chain(chain: &GroupChain, depth: usize) -> Result<ChainReport> {
    if !chain.has_level(depth) {
        return Err(Error::DepthExceedsVerified { depth, last: chain.last_level().unwrap_or(0) });
    }
    let mut indices = vec![chain.index(0)?];
    let mut degenerate = Vec::new();
    for l in 0..depth {
        let (upper, lower) = (chain.level(l)?, chain.level(l + 1)?);
        if !lower.is_subgroup_of(&upper)? {
            return Err(Error::NotDescending(l + 1));
        }
        let idx = chain.index(l + 1)?;
        if idx == indices[l] {
            degenerate.push(l + 1);
        }
        indices.push(idx);
    }
    chain.0.verified_depth.fetch_max(depth, Ordering::Relaxed);
    Ok(ChainReport { depth, indices, degenerate })
}

/// `G^{(k)}_ℓ = G_{ℓ+k}`, still described in the ambient coordinates of `G_0`.
/// Metadata closed forms are shifted to match.
pub fn truncate_chain(chain: &GroupChain, k: usize) -> GroupChain {
    if k == 0 {
        return chain.clone();
    }
    let (parent, k) = match chain.source_offset() {
        Some((parent, j)) => (parent, j + k),
        None => (chain.clone(), k),
    };
    let old = parent.metadata();
    let core_formula = old.core_formula.clone().map(|f| -> LevelFn { Arc::new(move |l| f(l + k)) });
    let steinitz = old.steinitz.as_ref().and_then(|s| {
        let steps: Result<Vec<BigInt>> = (0..k)
            .map(|l| Ok(parent.index(l + 1)? / parent.index(l)?))
            .collect();
        s.without_prefix(&steps.ok()?).ok()
    });
    let metadata = ChainMetadata {
        label: old.label.as_ref().map(|l| format!("{l} truncated at {k}")),
        kernel_generators: old.kernel_generators.clone(),
        trivial_relations: old.trivial_relations.clone(),
        core_formula,
        steinitz,
    };
    GroupChain::make(parent.family(), Source::Shift { parent: parent.clone(), k }, metadata, parent.budget())
}

/// The chain `g·G_ℓ·g⁻¹`.
pub fn conjugate_chain(chain: &GroupChain, by: &GroupElement) -> Result<GroupChain> {
    if !by.same_family(&GroupElement::identity(chain.family())) {
        return Err(Error::FamilyMismatch);
    }
    let old = chain.metadata();
    let g = by.clone();
    let core_formula = old.core_formula.clone().map(|f| -> LevelFn {
        // Normal cores are normal, so conjugation leaves them unchanged.
        Arc::new(move |l| f(l))
    });
    let metadata = ChainMetadata {
        label: old.label.as_ref().map(|l| format!("{l} conjugated by {g}")),
        kernel_generators: old.kernel_generators.iter().map(|x| g.conjugate(x)).collect(),
        trivial_relations: old.trivial_relations.clone(),
        core_formula,
        steinitz: old.steinitz.clone(),
    };
    Ok(GroupChain::make(
        chain.family(),
        Source::Conjugate { parent: chain.clone(), by: by.clone() },
        metadata,
        chain.budget(),
    ))
}

/// Candidates that lie in every level up to a depth.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub depth: usize,
    pub surviving: Vec<GroupElement>,
    /// Generators of the kernel claimed by the chain's metadata.
    pub closed_form: Option<Vec<GroupElement>>,
}

/// Filters `candidates` by membership in levels `0..=depth`. Survival is
/// evidence of kernel membership up to `depth`, not a proof.
pub fn kernel_report(chain: &GroupChain, depth: usize, candidates: &[GroupElement]) -> Result<KernelReport> {
    let levels = (0..=depth).map(|l| chain.level(l)).collect::<Result<Vec<_>>>()?;
    let surviving = candidates.iter().filter(|g| levels.iter().all(|h| h.contains(g))).cloned().collect();
    let meta = &chain.metadata().kernel_generators;
    Ok(KernelReport { depth, surviving, closed_form: (!meta.is_empty()).then(|| meta.clone()) })
}

/// Normal core of `G_ℓ`: the kernel of the action of `G_0` on `G_0/G_ℓ`.
/// A structural form is attached when one is recognized and confirmed.
pub fn normal_core(chain: &GroupChain, level: usize) -> Result<Subgroup> {
    if let Some((parent, k)) = chain.source_offset() {
        return normal_core(&parent, level + k);
    }
    if let Some(core) = chain.cached_core(level) {
        return Ok(core);
    }
    let table = chain.table(level)?;
    let core = Subgroup::action_kernel(table.clone(), Some(level));
    let form = recognize_core(&table, chain.budget())
        .and_then(|candidate| confirm_core(&table, &candidate, chain.budget()).then_some(candidate));
    core.set_closed_form(form);
    Ok(chain.cache_core(level, core))
}

/// Whether the structural `candidate` is exactly the action kernel of `table`:
/// its generators act trivially, and no coset of it other than itself does.
pub fn confirm_core(table: &CosetTable, candidate: &Subgroup, budget: usize) -> bool {
    let Ok(gens) = candidate.generators() else { return false };
    if !gens.iter().all(|g| table.acts_trivially(g)) {
        return false;
    }
    match enumerate_cosets(candidate, budget) {
        Ok(cosets) => cosets.representatives().iter().skip(1).all(|r| !table.acts_trivially(r)),
        Err(_) => false,
    }
}

fn recognize_core(table: &CosetTable, budget: usize) -> Option<Subgroup> {
    let family = table.family();
    let perms = table.generator_permutations();
    match &**family {
        GroupFamily::Heisenberg => {
            let [da, db, dc] = [0, 1, 2].map(|s| permutation_order(&perms[s]));
            Subgroup::heisenberg(family, da, db, dc).ok()
        }
        GroupFamily::KleinBottle => {
            let d = permutation_order(&perms[0]);
            let b = GroupElement::generator(family, 1).ok()?;
            let parity = if table.acts_trivially(&b) {
                Parity::Any
            } else if table.acts_trivially(&b.pow(2)) {
                Parity::Even
            } else {
                return None;
            };
            Subgroup::klein(family, d, parity).ok()
        }
        GroupFamily::FreeAbelian { rank } => {
            Subgroup::lattice(family, translation_kernel(table, *rank, budget)?).ok()
        }
        GroupFamily::Semidirect { n, point_group } => {
            let lattice = translation_kernel(table, *n, budget)?;
            let zero = vec![BigInt::zero(); *n];
            let members: Vec<usize> = (0..point_group.order())
                .filter(|&f| {
                    table.acts_trivially(&GroupElement::from_parts(family, Payload::Semidirect { v: zero.clone(), f }))
                })
                .collect();
            Subgroup::semidirect(family, lattice, members).ok()
        }
    }
}

/// Lattice of translations `v ∈ ℤ^n` acting trivially on `table`, from Schreier
/// generators of the orbit of the identity permutation under the unit translations.
fn translation_kernel(table: &CosetTable, n: usize, budget: usize) -> Option<Hnf> {
    let family = table.family();
    let unit = |i: usize| -> Vec<BigInt> { (0..n).map(|j| BigInt::from(u8::from(i == j))).collect() };
    let as_element = |v: &[BigInt]| -> GroupElement {
        let payload = match &**family {
            GroupFamily::FreeAbelian { .. } => Payload::FreeAbelian(v.to_vec()),
            _ => Payload::Semidirect { v: v.to_vec(), f: 0 },
        };
        GroupElement::from_parts(family, payload)
    };
    let unit_perms: Vec<Vec<u32>> = (0..n).map(|i| table.element_permutation(&as_element(&unit(i)))).collect();
    let size = table.size();
    let identity: Vec<u32> = (0..size as u32).collect();
    let mut seen: HashMap<Vec<u32>, Vec<BigInt>> = HashMap::from([(identity.clone(), vec![BigInt::zero(); n])]);
    let mut queue = VecDeque::from([identity]);
    let mut schreier: HashSet<Vec<BigInt>> = HashSet::new();
    while let Some(p) = queue.pop_front() {
        let v = seen[&p].clone();
        for (i, u) in unit_perms.iter().enumerate() {
            let q: Vec<u32> = p.iter().map(|&x| u[x as usize]).collect();
            let mut w = v.clone();
            w[i] += 1;
            match seen.get(&q) {
                Some(rep) => {
                    let diff: Vec<BigInt> = w.iter().zip(rep).map(|(a, b)| a - b).collect();
                    if diff.iter().any(|x| !x.is_zero()) {
                        schreier.insert(diff);
                    }
                }
                None => {
                    if seen.len().saturating_mul(size) >= budget.saturating_mul(16) {
                        return None;
                    }
                    seen.insert(q.clone(), w);
                    queue.push_back(q);
                }
            }
        }
    }
    let mut gens: Vec<Vec<BigInt>> = schreier.into_iter().collect();
    gens.sort();
    Hnf::from_generators(n, &gens).ok()
}
