//! Report builders behind the three subcommands. Every report is a plain
//! serde struct, so key order is fixed and output is byte-for-byte stable.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use solenoid_core::chains::kernel_report;
use solenoid_core::equivalence::{
    verify_conjugacy, verify_interleaving, verify_normality, verify_return, Certificate, ConjugacyWitness,
    EquivalenceWitness, InterleavingWitness, ReturnWitness,
};
use solenoid_core::steinitz::steinitz_from_chain;
use solenoid_core::{
    check_conjugate_equivalent, check_equivalent, check_return_equivalent, normal_core, normality_certificate,
    parse_word, render_word, verify_chain, Error, GroupChain, GroupElement, GroupFamily, Payload, ReturnMode,
    TruncatedFiberPoint, Verdict,
};

use crate::spec::ChainSpecFile;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_FAILS: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;

/// Default cap on conjugator-search nodes.
pub const DEFAULT_REP_BUDGET: usize = 20_000;

/// A finished report and the exit code it maps to.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub json: String,
}

/// Diagnostic for stderr plus exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_budget() { EXIT_BUDGET } else { EXIT_ERROR }, message: e.to_string() }
    }
}

pub type CmdResult = std::result::Result<Outcome, Failure>;

/// Indices as JSON numbers when they fit in `u64`, else decimal strings.
fn index_value(x: &BigInt) -> Value {
    match x.to_u64() {
        Some(n) => Value::from(n),
        None => Value::String(x.to_string()),
    }
}

fn render<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictBlock {
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl VerdictBlock {
    fn from_verdict<W>(v: &Verdict<W>, witness: impl FnOnce(&W) -> Value) -> Self {
        let mut block = VerdictBlock { verdict: v.label().into(), witness: None, certificate: None, note: None };
        match v {
            Verdict::Holds(w) => block.witness = Some(witness(w)),
            Verdict::Fails(c) => block.certificate = Some(certificate_value(c)),
            Verdict::UnknownAtDepth { note, .. } => block.note = Some(note.clone()),
        }
        block
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict.as_str() {
            "holds" => EXIT_OK,
            "fails" => EXIT_FAILS,
            _ => EXIT_UNKNOWN,
        }
    }
}

fn certificate_value(c: &Certificate) -> Value {
    serde_json::to_value(c).expect("certificates serialize")
}

// ---------------------------------------------------------------------------
// invariants

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub index: Value,
    pub subgroup: String,
    pub core: String,
    pub core_recognized: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelBlock {
    pub candidates: Vec<String>,
    pub surviving: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantsReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub family: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub depth: usize,
    pub indices: Vec<Value>,
    pub degenerate: Vec<usize>,
    pub levels: Vec<LevelReport>,
    pub kernel: KernelBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steinitz: Option<String>,
    pub normality: VerdictBlock,
}

/// Generators, their squares, and products of consecutive generators, plus
/// any kernel generators named by the chain's metadata.
pub fn kernel_candidates(chain: &GroupChain) -> Vec<GroupElement> {
    let gens = GroupElement::generators(chain.family());
    let mut out: Vec<GroupElement> = Vec::new();
    let mut push = |g: GroupElement| {
        if !g.is_identity() && !out.contains(&g) {
            out.push(g);
        }
    };
    for g in &gens {
        push(g.clone());
    }
    for g in &gens {
        push(g.pow(2));
    }
    for w in gens.windows(2) {
        push(w[0].multiply(&w[1]).expect("same family"));
    }
    for g in &chain.metadata().kernel_generators {
        push(g.clone());
    }
    out
}

pub fn cmd_invariants(spec: &ChainSpecFile, depth: Option<usize>) -> CmdResult {
    let depth = depth.unwrap_or(spec.depth);
    let chain = spec.build()?;
    let summary = verify_chain(&chain, depth)?;
    let mut levels = Vec::new();
    for l in 0..=depth {
        let core = normal_core(&chain, l)?;
        levels.push(LevelReport {
            level: l,
            index: index_value(&summary.indices[l]),
            subgroup: chain.level(l)?.to_string(),
            core: core.to_string(),
            core_recognized: core.closed_form().is_some(),
        });
    }
    let candidates = kernel_candidates(&chain);
    let kr = kernel_report(&chain, depth, &candidates)?;
    let names = |gs: &[GroupElement]| gs.iter().map(|g| g.to_string()).collect::<Vec<_>>();
    let steinitz = match &**chain.family() {
        GroupFamily::FreeAbelian { rank: 1 } => Some(steinitz_from_chain(&chain)?.best().to_string()),
        _ => None,
    };
    let normality = normality_certificate(&chain, depth)?;
    if let Verdict::Holds(cert) = &normality {
        verify_normality(&chain, cert)?;
    }
    let report = InvariantsReport {
        schema_version: SCHEMA_VERSION,
        command: "invariants",
        family: spec.family.clone(),
        kind: spec.kind.clone(),
        label: chain.metadata().label.clone(),
        depth,
        indices: summary.indices.iter().map(index_value).collect(),
        degenerate: summary.degenerate,
        levels,
        kernel: KernelBlock {
            candidates: names(&candidates),
            surviving: names(&kr.surviving),
            closed_form: kr.closed_form.as_deref().map(names),
        },
        steinitz,
        normality: VerdictBlock::from_verdict(&normality, |c| serde_json::to_value(c).expect("serializes")),
    };
    Ok(Outcome { code: EXIT_OK, json: render(&report) })
}

// ---------------------------------------------------------------------------
// compare

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equiv,
    Conj,
    Return,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Equiv => "equiv",
            Relation::Conj => "conj",
            Relation::Return => "return",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSummary {
    pub family: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub command: String,
    pub relation: Relation,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<ReturnMode>,
    pub depth: usize,
    pub a: ChainSummary,
    pub b: ChainSummary,
    #[serde(flatten)]
    pub result: VerdictBlock,
}

/// Wire form of a conjugacy witness: conjugators as payloads.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConjugacyWire {
    elements: Vec<Payload>,
    interleaving: InterleavingWitness,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReturnWire {
    k: usize,
    m: usize,
    witness: Value,
}

fn conjugacy_value(w: &ConjugacyWitness) -> Value {
    serde_json::to_value(ConjugacyWire {
        elements: w.elements.iter().map(|g| g.payload().clone()).collect(),
        interleaving: w.interleaving.clone(),
    })
    .expect("serializes")
}

fn interleaving_value(w: &InterleavingWitness) -> Value {
    serde_json::to_value(w).expect("serializes")
}

fn equivalence_value(w: &EquivalenceWitness) -> Value {
    match w {
        EquivalenceWitness::Interleaving(i) => interleaving_value(i),
        EquivalenceWitness::Conjugacy(c) => conjugacy_value(c),
    }
}

fn bad_witness(e: impl std::fmt::Display) -> Error {
    Error::WitnessInvalid(format!("malformed witness: {e}"))
}

fn conjugacy_from_value(chain: &GroupChain, v: &Value) -> solenoid_core::Result<ConjugacyWitness> {
    let wire: ConjugacyWire = serde_json::from_value(v.clone()).map_err(bad_witness)?;
    let elements =
        wire.elements.into_iter().map(|p| GroupElement::new(chain.family(), p)).collect::<solenoid_core::Result<_>>()?;
    Ok(ConjugacyWitness { elements, interleaving: wire.interleaving })
}

/// Re-verifies the witness block of a compare report with the independent checkers.
pub fn verify_report_witness(
    a: &GroupChain,
    b: &GroupChain,
    relation: Relation,
    mode: Option<ReturnMode>,
    witness: &Value,
) -> solenoid_core::Result<()> {
    match relation {
        Relation::Equiv => {
            let w: InterleavingWitness = serde_json::from_value(witness.clone()).map_err(bad_witness)?;
            verify_interleaving(a, b, &w)
        }
        Relation::Conj => verify_conjugacy(a, b, &conjugacy_from_value(a, witness)?),
        Relation::Return => {
            let wire: ReturnWire = serde_json::from_value(witness.clone()).map_err(bad_witness)?;
            let inner = match mode.unwrap_or(ReturnMode::Plain) {
                ReturnMode::Plain => EquivalenceWitness::Interleaving(
                    serde_json::from_value(wire.witness).map_err(bad_witness)?,
                ),
                ReturnMode::Conjugate => EquivalenceWitness::Conjugacy(conjugacy_from_value(a, &wire.witness)?),
            };
            verify_return(a, b, &ReturnWitness { k: wire.k, m: wire.m, witness: inner })
        }
    }
}

pub struct CompareOptions {
    pub relation: Relation,
    pub depth: Option<usize>,
    pub mode: ReturnMode,
    pub rep_budget: usize,
}

pub fn cmd_compare(a_spec: &ChainSpecFile, b_spec: &ChainSpecFile, opts: &CompareOptions) -> CmdResult {
    let depth = opts.depth.unwrap_or(a_spec.depth.min(b_spec.depth));
    let (a, b) = (a_spec.build()?, b_spec.build()?);
    if a.family() != b.family() {
        return Err(Error::FamilyMismatch.into());
    }
    let result = match opts.relation {
        Relation::Equiv => {
            let v = check_equivalent(&a, &b, depth)?;
            if let Some(w) = v.witness() {
                verify_interleaving(&a, &b, w)?;
            }
            VerdictBlock::from_verdict(&v, interleaving_value)
        }
        Relation::Conj => {
            let v = check_conjugate_equivalent(&a, &b, depth, opts.rep_budget)?;
            if let Some(w) = v.witness() {
                verify_conjugacy(&a, &b, w)?;
            }
            VerdictBlock::from_verdict(&v, conjugacy_value)
        }
        Relation::Return => {
            let v = check_return_equivalent(&a, &b, depth, opts.mode, opts.rep_budget)?;
            if let Some(w) = v.witness() {
                verify_return(&a, &b, w)?;
            }
            VerdictBlock::from_verdict(&v, |w| {
                serde_json::to_value(ReturnWire { k: w.k, m: w.m, witness: equivalence_value(&w.witness) })
                    .expect("serializes")
            })
        }
    };
    let summary = |s: &ChainSpecFile, c: &GroupChain| ChainSummary {
        family: s.family.clone(),
        kind: s.kind.clone(),
        label: c.metadata().label.clone(),
    };
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        command: "compare".into(),
        relation: opts.relation,
        mode: (opts.relation == Relation::Return).then_some(opts.mode),
        depth,
        a: summary(a_spec, &a),
        b: summary(b_spec, &b),
        result,
    };
    Ok(Outcome { code: report.result.exit_code(), json: render(&report) })
}

// ---------------------------------------------------------------------------
// action

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Start {
    Basepoint,
    Coords(Vec<u32>),
}

impl std::str::FromStr for Start {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "basepoint" {
            return Ok(Start::Basepoint);
        }
        let body = s.strip_prefix("coords:").unwrap_or(s);
        body.split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad coordinate {t:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Start::Coords)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub letter: String,
    pub coords: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionLevel {
    pub level: usize,
    pub start: u32,
    pub end: u32,
    pub representative: String,
    pub fixed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub family: String,
    pub kind: String,
    pub depth: usize,
    pub word: String,
    pub start: Vec<u32>,
    pub end: Vec<u32>,
    /// Points after each letter, rightmost letter first.
    pub trace: Vec<TraceStep>,
    pub levels: Vec<ActionLevel>,
    pub fixes_start: bool,
}

pub fn cmd_action(spec: &ChainSpecFile, depth: Option<usize>, word: &str, start: &Start) -> CmdResult {
    let depth = depth.unwrap_or(spec.depth);
    let chain = spec.build()?;
    let parsed = parse_word(chain.family(), word)?;
    verify_chain(&chain, depth)?;
    let start = match start {
        Start::Basepoint => TruncatedFiberPoint::basepoint(depth),
        Start::Coords(c) => {
            if c.len() != depth + 1 {
                return Err(Error::IncompatiblePoint(c.len().min(depth + 1)).into());
            }
            TruncatedFiberPoint::new(&chain, c.clone())?
        }
    };
    let mut point = start.clone();
    let mut trace = Vec::new();
    for &letter in parsed.iter().rev() {
        point = point.act(&chain, &[letter])?;
        trace.push(TraceStep { letter: render_word(chain.family(), &[letter]), coords: point.coords().to_vec() });
    }
    let mut levels = Vec::new();
    for l in 0..=depth {
        let (s, e) = (start.coords()[l], point.coords()[l]);
        levels.push(ActionLevel {
            level: l,
            start: s,
            end: e,
            representative: chain.table(l)?.representative(e as usize)?.to_string(),
            fixed: s == e,
        });
    }
    let report = ActionReport {
        schema_version: SCHEMA_VERSION,
        command: "action",
        family: spec.family.clone(),
        kind: spec.kind.clone(),
        depth,
        word: render_word(chain.family(), &parsed),
        start: start.coords().to_vec(),
        end: point.coords().to_vec(),
        trace,
        fixes_start: start == point,
        levels,
    };
    Ok(Outcome { code: EXIT_OK, json: render(&report) })
}
