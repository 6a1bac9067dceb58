//! Finite coset spaces `G_0/H`, the left action on them, bonding maps between
//! chain levels, and truncated points of the inverse-limit fiber.
//!
//! Words act on cosets from the right end: in `act(w₁·w₂, i)` the letters of
//! `w₂` act first, so `act(w₁w₂, i) = act(w₁, act(w₂, i))`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::chains::GroupChain;
use crate::error::{Error, Result};
use crate::groups::{Family, GroupElement};
use crate::subgroups::{CosetKey, Subgroup};

/// Default cap on the number of cosets enumerated for one table.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// The coset space `G_0/H` with the permutation action of the standard generators.
#[derive(Debug)]
pub struct CosetTable {
    subgroup: Subgroup,
    representatives: Vec<GroupElement>,
    lookup: HashMap<CosetKey, u32>,
    /// `action[s][i]`: coset reached from coset `i` by generator `s`.
    action: Vec<Vec<u32>>,
    inverse_action: Vec<Vec<u32>>,
}

/// Breadth-first enumeration of the left cosets of `subgroup`, starting from
/// the identity and trying each generator and then its inverse, in generator
/// order. Representatives are the first elements reached.
pub fn enumerate_cosets(subgroup: &Subgroup, budget: usize) -> Result<CosetTable> {
    if let Some(index) = subgroup.index() {
        if index > budget.into() {
            return Err(Error::EnumerationBudgetExceeded { budget });
        }
    }
    let family = subgroup.family();
    let gens = GroupElement::generators(family);
    let moves: Vec<GroupElement> = gens.iter().cloned().chain(gens.iter().map(GroupElement::inverse)).collect();
    let identity = GroupElement::identity(family);
    let mut representatives = vec![identity.clone()];
    let mut lookup = HashMap::from([(subgroup.coset_key(&identity), 0u32)]);
    let mut edges: Vec<Vec<u32>> = vec![Vec::new(); moves.len()];
    let mut queue = VecDeque::from([0u32]);
    while let Some(i) = queue.pop_front() {
        let rep = representatives[i as usize].clone();
        for (s, mv) in moves.iter().enumerate() {
            let y = mv.mul(&rep);
            let key = subgroup.coset_key(&y);
            let j = match lookup.get(&key) {
                Some(&j) => j,
                None => {
                    if representatives.len() >= budget {
                        return Err(Error::EnumerationBudgetExceeded { budget });
                    }
                    let j = representatives.len() as u32;
                    lookup.insert(key, j);
                    representatives.push(y);
                    queue.push_back(j);
                    j
                }
            };
            let row = &mut edges[s];
            if row.len() <= i as usize {
                row.resize(i as usize + 1, u32::MAX);
            }
            row[i as usize] = j;
        }
    }
    let k = gens.len();
    let mut inverse_action = edges.split_off(k);
    let mut action = edges;
    for row in action.iter_mut().chain(inverse_action.iter_mut()) {
        row.resize(representatives.len(), u32::MAX);
    }
    Ok(CosetTable { subgroup: subgroup.clone(), representatives, lookup, action, inverse_action })
}

impl CosetTable {
    pub fn family(&self) -> &Family {
        self.subgroup.family()
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn size(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[GroupElement] {
        &self.representatives
    }

    pub fn representative(&self, i: usize) -> Result<&GroupElement> {
        self.representatives.get(i).ok_or(Error::BadIndex { index: i, size: self.size() })
    }

    /// Permutation of each standard generator.
    pub fn generator_permutations(&self) -> &[Vec<u32>] {
        &self.action
    }

    /// Coset containing `g`.
    pub fn index_of(&self, g: &GroupElement) -> u32 {
        self.lookup[&self.subgroup.coset_key(g)]
    }

    /// Image of coset `i` under left multiplication by `g`.
    pub fn act_element(&self, g: &GroupElement, i: usize) -> u32 {
        self.index_of(&g.mul(&self.representatives[i]))
    }

    /// The permutation induced by `g` on all cosets.
    pub fn element_permutation(&self, g: &GroupElement) -> Vec<u32> {
        (0..self.size()).map(|i| self.act_element(g, i)).collect()
    }

    /// Whether `g` fixes every coset, i.e. lies in the normal core of the subgroup.
    pub fn acts_trivially(&self, g: &GroupElement) -> bool {
        (0..self.size()).all(|i| self.act_element(g, i) as usize == i)
    }

    /// Applies a word; the rightmost letter acts first.
    pub fn act(&self, word: &[(usize, i64)], i: usize) -> Result<usize> {
        if i >= self.size() {
            return Err(Error::BadIndex { index: i, size: self.size() });
        }
        let count = self.action.len();
        let mut x = i as u32;
        for &(s, e) in word.iter().rev() {
            if s >= count {
                return Err(Error::BadGeneratorIndex { index: s, count });
            }
            let perm = if e >= 0 { &self.action[s] } else { &self.inverse_action[s] };
            for _ in 0..e.unsigned_abs() % self.cycle_bound(perm, x) {
                x = perm[x as usize];
            }
        }
        Ok(x as usize)
    }

    /// Length of the cycle through `x`, so large exponents reduce modulo it.
    fn cycle_bound(&self, perm: &[u32], x: u32) -> u64 {
        let mut len = 1u64;
        let mut y = perm[x as usize];
        while y != x {
            y = perm[y as usize];
            len += 1;
        }
        len
    }

    pub fn word_acts_trivially(&self, word: &[(usize, i64)]) -> Result<bool> {
        for i in 0..self.size() {
            if self.act(word, i)? != i {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Map from level-`ℓ` cosets to level-`ℓ−1` cosets sending `g·G_ℓ` to `g·G_{ℓ−1}`.
pub fn bonding_map(chain: &GroupChain, level: usize) -> Result<Vec<u32>> {
    if level == 0 {
        return Err(Error::BadIndices("bonding maps start at level 1".into()));
    }
    let upper = chain.table(level)?;
    let lower = chain.table(level - 1)?;
    Ok(upper.representatives().iter().map(|r| lower.index_of(r)).collect())
}

/// Representatives of the cosets of `G_{ℓ+1}` inside `G_ℓ`: the level-`ℓ+1`
/// representatives that lie in `G_ℓ`.
pub fn relative_transversal(chain: &GroupChain, level: usize) -> Result<Vec<GroupElement>> {
    let bond = bonding_map(chain, level + 1)?;
    let upper = chain.table(level + 1)?;
    Ok(bond
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 0)
        .map(|(i, _)| upper.representatives()[i].clone())
        .collect())
}

/// Point of `X_0 ← X_1 ← … ← X_depth`: one coset index per level, with
/// consecutive entries related by the bonding maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TruncatedFiberPoint {
    coords: Vec<u32>,
}

impl TruncatedFiberPoint {
    /// The basepoint `(eG_0, eG_1, …, eG_depth)`.
    pub fn basepoint(depth: usize) -> Self {
        TruncatedFiberPoint { coords: vec![0; depth + 1] }
    }

    /// Validates bonding-compatibility against `chain`.
    pub fn new(chain: &GroupChain, coords: Vec<u32>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::IncompatiblePoint(0));
        }
        if coords[0] != 0 {
            return Err(Error::IncompatiblePoint(0));
        }
        for l in 1..coords.len() {
            let table = chain.table(l)?;
            if coords[l] as usize >= table.size() {
                return Err(Error::IncompatiblePoint(l));
            }
            if bonding_map(chain, l)?[coords[l] as usize] != coords[l - 1] {
                return Err(Error::IncompatiblePoint(l));
            }
        }
        Ok(TruncatedFiberPoint { coords })
    }

    pub fn depth(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    /// Acts by a word coordinatewise.
    pub fn act(&self, chain: &GroupChain, word: &[(usize, i64)]) -> Result<Self> {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(l, &c)| Ok(chain.table(l)?.act(word, c as usize)? as u32))
            .collect::<Result<Vec<_>>>()?;
        Ok(TruncatedFiberPoint { coords })
    }
}

/// Closure of `start` under the given words acting on the depth-`depth` truncation.
pub fn fiber_orbit(
    chain: &GroupChain,
    depth: usize,
    words: &[Vec<(usize, i64)>],
    start: &TruncatedFiberPoint,
    max_orbit: usize,
) -> Result<BTreeSet<TruncatedFiberPoint>> {
    if start.depth() != depth {
        return Err(Error::IncompatiblePoint(start.depth().min(depth)));
    }
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(p) = queue.pop_front() {
        for w in words {
            let q = p.act(chain, w)?;
            if !seen.contains(&q) {
                if seen.len() >= max_orbit {
                    return Err(Error::OrbitBudgetExceeded(max_orbit));
                }
                seen.insert(q.clone());
                queue.push_back(q);
            }
        }
    }
    Ok(seen)
}

/// Whether `word` fixes every coset of level `level`.
pub fn relation_acts_trivially(chain: &GroupChain, level: usize, word: &[(usize, i64)]) -> Result<bool> {
    chain.table(level)?.word_acts_trivially(word)
}
