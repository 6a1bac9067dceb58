//! Chain spec files: `{family, kind, parameters, depth}`.
//!
//! `kind` is either one of the gallery kinds (`vietoris`, `lattice_chain`,
//! `klein`, `heisenberg_phi`, `heisenberg_dyer`, `semidirect_scale`) or
//! `patterns`, which lists one structural subgroup per level.

use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use solenoid_core::{
    build, Error, Family, FiniteGroup, GallerySpec, GroupChain, GroupFamily, Hnf, Parity, Result, Subgroup,
};

pub const BUDGET_ENV: &str = "SOLENOID_BUDGET";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpecFile {
    pub family: String,
    pub kind: String,
    #[serde(default)]
    pub parameters: Value,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_depth() -> usize {
    4
}

/// One level of a `patterns` spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Pattern {
    Full,
    /// Lattice spanned by the given vectors (free abelian family).
    Lattice { generators: Vec<Vec<i64>> },
    Heisenberg { da: i64, db: i64, dc: i64 },
    Klein { d: i64, #[serde(default = "any")] parity: Parity },
    Semidirect { generators: Vec<Vec<i64>>, members: Vec<usize> },
}

fn any() -> Parity {
    Parity::Any
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternParameters {
    #[serde(default)]
    rank: Option<usize>,
    #[serde(default)]
    point_group: Option<PointGroup>,
    levels: Vec<Pattern>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointGroup {
    n: usize,
    table: Vec<Vec<usize>>,
    matrices: Vec<Vec<Vec<i64>>>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

impl ChainSpecFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// The gallery spec, or `None` for `patterns`.
    pub fn gallery(&self) -> Result<Option<GallerySpec>> {
        if self.kind == "patterns" {
            return Ok(None);
        }
        let mut doc = serde_json::Map::new();
        doc.insert("kind".into(), Value::String(self.kind.clone()));
        let empty = self.parameters.is_null() || self.parameters.as_object().is_some_and(|m| m.is_empty());
        if !empty {
            doc.insert("parameters".into(), self.parameters.clone());
        }
        let spec: GallerySpec = serde_json::from_value(Value::Object(doc))
            .or_else(|e| {
                // Unit kinds accept an empty parameter object too.
                serde_json::from_value(serde_json::json!({ "kind": self.kind, "parameters": null })).map_err(|_| e)
            })
            .map_err(|e| invalid(format!("kind {:?}: {e}", self.kind)))?;
        if spec.family_name() != self.family {
            return Err(invalid(format!("kind {:?} builds in family {:?}, not {:?}", self.kind, spec.family_name(), self.family)));
        }
        Ok(Some(spec))
    }

    /// Builds the chain; the coset budget comes from `SOLENOID_BUDGET` when set.
    pub fn build(&self) -> Result<GroupChain> {
        let chain = match self.gallery()? {
            Some(spec) => build(&spec)?,
            None => self.build_patterns()?,
        };
        Ok(match budget_from_env()? {
            Some(b) => chain.with_budget(b),
            None => chain,
        })
    }

    fn build_patterns(&self) -> Result<GroupChain> {
        let params: PatternParameters =
            serde_json::from_value(self.parameters.clone()).map_err(|e| invalid(format!("patterns: {e}")))?;
        let family = match self.family.as_str() {
            "free_abelian" => GroupFamily::free_abelian(params.rank.unwrap_or(1))?,
            "heisenberg" => GroupFamily::heisenberg(),
            "klein_bottle" => GroupFamily::klein_bottle(),
            "semidirect" => {
                let pg = params.point_group.as_ref().ok_or_else(|| invalid("semidirect patterns need a point_group"))?;
                GroupFamily::semidirect(FiniteGroup::new(pg.n, pg.table.clone(), pg.matrices.clone())?)?
            }
            other => return Err(invalid(format!("unknown family {other:?}"))),
        };
        if params.levels.is_empty() {
            return Err(invalid("patterns need at least one level"));
        }
        let levels = params.levels.iter().map(|p| pattern_subgroup(&family, p)).collect::<Result<Vec<_>>>()?;
        GroupChain::from_levels(&family, levels)
    }
}

fn big_vectors(vs: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    vs.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

fn pattern_subgroup(family: &Family, p: &Pattern) -> Result<Subgroup> {
    match (p, &**family) {
        (Pattern::Full, _) => Ok(Subgroup::full(family)),
        (Pattern::Lattice { generators }, GroupFamily::FreeAbelian { rank }) => {
            Subgroup::lattice(family, Hnf::from_generators(*rank, &big_vectors(generators))?)
        }
        (Pattern::Heisenberg { da, db, dc }, GroupFamily::Heisenberg) => Subgroup::heisenberg(family, *da, *db, *dc),
        (Pattern::Klein { d, parity }, GroupFamily::KleinBottle) => Subgroup::klein(family, *d, *parity),
        (Pattern::Semidirect { generators, members }, GroupFamily::Semidirect { n, .. }) => {
            Subgroup::semidirect(family, Hnf::from_generators(*n, &big_vectors(generators))?, members.clone())
        }
        (p, _) => Err(invalid(format!("pattern {p:?} does not belong to family {}", family.name()))),
    }
}

/// Reads `SOLENOID_BUDGET`; unset means the library default.
pub fn budget_from_env() -> Result<Option<usize>> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&b| b > 0)
            .map(Some)
            .ok_or_else(|| invalid(format!("{BUDGET_ENV} must be a positive integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}
