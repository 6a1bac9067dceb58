//! Finite-level invariants of group chains in four concrete families of
//! finitely generated groups: coset actions, kernels, normal cores, Steinitz
//! numbers, bounded-depth equivalence checks and pro-group morphisms.

pub mod bigint_serde;
pub mod chains;
pub mod cosets;
pub mod equivalence;
pub mod error;
pub mod gallery;
pub mod groups;
pub mod hnf;
pub mod progroups;
pub mod steinitz;
pub mod subgroups;

pub use chains::{normal_core, truncate_chain, verify_chain, ChainMetadata, GroupChain};
pub use cosets::{enumerate_cosets, CosetTable, TruncatedFiberPoint};
pub use equivalence::{
    check_conjugate_equivalent, check_equivalent, check_return_equivalent, normality_certificate, ReturnMode, Verdict,
};
pub use error::{Error, Result};
pub use gallery::{build, GallerySpec, VietorisSpec};
pub use groups::{evaluate_word, parse_word, render_word, Family, FiniteGroup, GroupElement, GroupFamily, Payload, Word};
pub use hnf::Hnf;
pub use steinitz::SteinitzNumber;
pub use subgroups::{Parity, Subgroup};
