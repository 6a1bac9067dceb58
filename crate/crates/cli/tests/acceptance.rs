//! Acceptance suite: one PASS/FAIL line per criterion, with runtime limits.
//! Oracles here are independent of the library: group laws and coset counts
//! are recomputed from the defining formulas.

use std::collections::VecDeque;
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solenoid_cli::{cmd_compare, ChainSpecFile, CompareOptions, Relation};
use solenoid_core::chains::kernel_report;
use solenoid_core::cosets::{bonding_map, relation_acts_trivially};
use solenoid_core::equivalence::{
    composite_bonding, equivariant_maps_from_witness, verify_interleaving, verify_return, EquivalenceWitness,
    InterleavingWitness, LevelMap, ReturnWitness, Side,
};
use solenoid_core::progroups::{is_proisomorphism, promorphism_from_equivalence};
use solenoid_core::steinitz::{tail_equivalent, Annotation, Exponent, TailVerdict};
use solenoid_core::{
    build, check_equivalent, check_return_equivalent, enumerate_cosets, normal_core, normality_certificate,
    parse_word, truncate_chain, verify_chain, FiniteGroup, GallerySpec, GroupChain, GroupElement, GroupFamily, Hnf,
    Parity, ReturnMode, SteinitzNumber, Subgroup, Verdict, VietorisSpec,
};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn seed() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_2024)
}

// ---------------------------------------------------------------------------
// Independent oracles.

fn klein_mul(x: &[i64], y: &[i64]) -> Vec<i64> {
    let sign = if x[1].rem_euclid(2) == 0 { 1 } else { -1 };
    vec![x[0] + sign * y[0], x[1] + y[1]]
}

fn klein_inv(x: &[i64]) -> Vec<i64> {
    let sign = if x[1].rem_euclid(2) == 0 { 1 } else { -1 };
    vec![-sign * x[0], -x[1]]
}

fn heis_mul(x: &[i64], y: &[i64]) -> Vec<i64> {
    vec![x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]]
}

fn heis_inv(x: &[i64]) -> Vec<i64> {
    vec![-x[0], -x[1], -x[2] + x[0] * x[1]]
}

/// Counts cosets `gH` by breadth-first search from the identity, identifying
/// `x` and `y` when `x⁻¹y ∈ H`.
fn bfs_index(
    identity: Vec<i64>,
    gens: &[Vec<i64>],
    mul: fn(&[i64], &[i64]) -> Vec<i64>,
    inv: fn(&[i64]) -> Vec<i64>,
    member: &dyn Fn(&[i64]) -> bool,
) -> usize {
    let mut reps: Vec<Vec<i64>> = vec![identity.clone()];
    let mut queue = VecDeque::from([identity]);
    let steps: Vec<Vec<i64>> = gens.iter().cloned().chain(gens.iter().map(|g| inv(g))).collect();
    while let Some(x) = queue.pop_front() {
        for s in &steps {
            let y = mul(s, &x);
            if !reps.iter().any(|r| member(&mul(&inv(r), &y))) {
                reps.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    reps.len()
}

fn klein_chain(d: u64) -> GroupChain {
    build(&GallerySpec::Klein { d }).unwrap()
}

fn vietoris(steps: Vec<u64>) -> GroupChain {
    build(&GallerySpec::Vietoris(VietorisSpec::Periodic { steps })).unwrap()
}

fn spec_file(name: &str) -> ChainSpecFile {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(format!("{name}.json"));
    ChainSpecFile::load(&path).unwrap()
}

// ---------------------------------------------------------------------------
// 1. Klein bottle gallery.

fn klein_gallery() -> Check {
    let chain = klein_chain(2);
    let f = chain.family().clone();
    let report = ok(verify_chain(&chain, 4))?;
    let gens = [vec![1, 0], vec![0, 1]];
    let oracle: Vec<BigInt> = (0..=4u32)
        .map(|l| {
            let d = 2i64.pow(l);
            BigInt::from(bfs_index(vec![0, 0], &gens, klein_mul, klein_inv, &|x| x[0] % d == 0))
        })
        .collect();
    ensure!(oracle == (0..=4).map(|l| BigInt::from(1u64 << l)).collect::<Vec<_>>(), "oracle indices {oracle:?}");
    ensure!(report.indices == oracle, "indices {:?} vs oracle {oracle:?}", report.indices);

    let el = |m, n| GroupElement::klein(&f, m, n).unwrap();
    let candidates = [el(1, 0), el(0, 1), el(0, 2), el(1, 1)];
    let kr = ok(kernel_report(&chain, 4, &candidates))?;
    ensure!(kr.surviving == vec![el(0, 1), el(0, 2)], "survivors {:?}", kr.surviving);

    let rel1 = ok(parse_word(&f, "b,a,b^-1,a"))?;
    let rel2 = ok(parse_word(&f, "b^2"))?;
    let b = ok(parse_word(&f, "b"))?;
    let mut b_trivial_everywhere = true;
    for l in 0..=4 {
        ensure!(ok(relation_acts_trivially(&chain, l, &rel1))?, "bab⁻¹a moves a coset at level {l}");
        ensure!(ok(relation_acts_trivially(&chain, l, &rel2))?, "b² moves a coset at level {l}");
        b_trivial_everywhere &= ok(relation_acts_trivially(&chain, l, &b))?;
    }
    ensure!(!b_trivial_everywhere, "b acts trivially at every level ≤ 4");
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. Heisenberg φ-chain cores.

fn heisenberg_phi() -> Check {
    let chain = build(&GallerySpec::HeisenbergPhi).unwrap();
    let f = chain.family().clone();
    let mut rng = seed();
    for l in 1..=2u32 {
        let q = 4i64.pow(l);
        let core = ok(normal_core(&chain, l as usize))?;
        let pattern = ok(Subgroup::heisenberg(&f, q, q, q))?;
        let form = core.closed_form().ok_or(format!("core({l}) has no structural form"))?;
        ensure!(ok(form.same_as(&pattern))?, "core({l}) = {form}, expected {pattern}");
        // Membership agrees with the pattern and with the intersection of conjugates.
        let level = ok(chain.level(l as usize))?;
        let reps = ok(chain.table(l as usize))?.representatives().to_vec();
        for _ in 0..200 {
            let v: Vec<i64> = (0..3).map(|_| rng.gen_range(-3..=3) * q / if rng.gen_bool(0.5) { 1 } else { 2 }).collect();
            let g = GroupElement::heisenberg(&f, v[0], v[1], v[2]).unwrap();
            let in_pattern = v.iter().all(|x| x % q == 0);
            let by_conjugates =
                reps.iter().all(|r| level.contains(&r.inverse().multiply(&g).unwrap().multiply(r).unwrap()));
            ensure!(core.contains(&g) == in_pattern, "core({l}) membership of {v:?}");
            ensure!(by_conjugates == in_pattern, "conjugate intersection membership of {v:?}");
        }
    }
    let c1 = ok(normal_core(&chain, 1))?;
    ensure!(ok(ok(chain.level(2))?.is_subgroup_of(&c1))?, "G_2 ⊄ core(1)");
    match ok(normality_certificate(&chain, 3))? {
        Verdict::Holds(cert) => {
            for &(l, m) in &cert.pairs {
                ensure!(m <= 2 * l, "m({l}) = {m} > {}", 2 * l);
            }
        }
        other => return Err(format!("normality certificate: {}", other.label())),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. Steinitz classification.

fn steinitz() -> Check {
    let inf = |ps: &[u64]| SteinitzNumber::finite_support(ps.iter().map(|&p| (p, Exponent::Infinite))).unwrap();
    let v = tail_equivalent(&inf(&[2]), &inf(&[3]), 8);
    ensure!(v.value == TailVerdict::NotEquivalent, "2^∞ vs 3^∞: {:?}", v.value);

    let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29];
    let distinct = SteinitzNumber::sequence(
        move |i| Ok(primes[i % primes.len()]),
        None,
        Some(Annotation::EachPrimeBoundedBy(1)),
    );
    let v = tail_equivalent(&distinct, &inf(&[2, 3]), 8);
    ensure!(v.value == TailVerdict::NotEquivalent, "distinct primes vs 6^∞: {:?}", v.value);

    let mixed = SteinitzNumber::finite_support([(2, Exponent::Infinite), (3, Exponent::Finite(1))]).unwrap();
    let v = tail_equivalent(&inf(&[2]), &mixed, 8);
    ensure!(v.value == TailVerdict::Equivalent, "2^∞ vs 2^∞·3: {:?}", v.value);
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. Equivalence ⇒ pro-isomorphism.

fn pro_isomorphism() -> Check {
    let (two, four) = (vietoris(vec![2]), vietoris(vec![4]));
    let w = match ok(check_equivalent(&two, &four, 8))? {
        Verdict::Holds(w) => w,
        other => return Err(format!("2-adic vs 4-adic: {}", other.label())),
    };
    let m = ok(promorphism_from_equivalence(&two, &four, &EquivalenceWitness::Interleaving(w)))?;
    ensure!(ok(is_proisomorphism(&m, 6))?.holds(), "is_proisomorphism at depth 6");

    let opts = CompareOptions { relation: Relation::Return, depth: None, mode: ReturnMode::Plain, rep_budget: 1000 };
    let out = cmd_compare(&spec_file("vietoris2"), &spec_file("vietoris3"), &opts).map_err(|f| f.message)?;
    ensure!(out.code == 3, "compare exit code {}", out.code);
    let report: serde_json::Value = ok(serde_json::from_str(&out.json))?;
    ensure!(report["certificate"]["kind"] == "steinitz", "certificate {}", report["certificate"]);
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. Finite-level equivariant maps.

fn table_of(a: &GroupChain, b: &GroupChain, side: Side, level: usize) -> Result<std::sync::Arc<solenoid_core::CosetTable>, String> {
    ok(match side {
        Side::A => a.table(level),
        Side::B => b.table(level),
    })
}

fn check_maps(a: &GroupChain, b: &GroupChain, w: &InterleavingWitness, depth: usize) -> Check {
    let maps: Vec<LevelMap> = ok(equivariant_maps_from_witness(a, b, w, depth))?;
    ensure!(!maps.is_empty(), "no maps");
    for m in &maps {
        let st = table_of(a, b, m.source.0, m.source.1)?;
        let tt = table_of(a, b, m.target.0, m.target.1)?;
        ensure!(m.map.len() == st.size(), "map length");
        ensure!(m.map[0] == 0, "basepoint not preserved by {:?} → {:?}", m.source, m.target);
        // Generator equivariance on every coset, recomputed from representatives.
        for g in GroupElement::generators(a.family()) {
            for (i, r) in st.representatives().iter().enumerate() {
                let gi = st.index_of(&g.multiply(r).unwrap()) as usize;
                let lhs = m.map[gi];
                let rhs = tt.index_of(&g.multiply(&tt.representatives()[m.map[i] as usize]).unwrap());
                ensure!(lhs == rhs, "{g} does not commute with {:?} → {:?} at coset {i}", m.source, m.target);
            }
        }
        // The map is induced by inclusion: the representative of i lies in the image coset.
        for (i, r) in st.representatives().iter().enumerate() {
            ensure!(tt.index_of(r) == m.map[i], "map is not g·S ↦ g·T at coset {i}");
        }
    }
    // Bonding compatibility: consecutive maps compose to the chain's bonding maps.
    for pair in maps.windows(2) {
        let (first, second) = (&pair[0], &pair[1]);
        if first.target != second.source && second.target != first.source {
            continue;
        }
        let (inner, outer) = if first.target == second.source { (first, second) } else { (second, first) };
        let composite: Vec<u32> = inner.map.iter().map(|&x| outer.map[x as usize]).collect();
        ensure!(inner.source.0 == outer.target.0, "maps do not return to the same chain");
        let chain = if inner.source.0 == Side::A { a } else { b };
        let expected = ok(composite_bonding(chain, inner.source.1, outer.target.1))?;
        ensure!(composite == expected, "composite {:?} → {:?} differs from bonding", inner.source, outer.target);
    }
    Ok(())
}

fn equivariant_maps() -> Check {
    let depth = 4;
    let cases: Vec<(GroupChain, GroupChain, usize)> = vec![
        (vietoris(vec![2]), vietoris(vec![4]), depth),
        (vietoris(vec![2, 3]), vietoris(vec![6]), depth),
        (klein_chain(2), klein_chain(2), depth),
        (klein_chain(2), klein_chain(4), 3),
        (build(&GallerySpec::HeisenbergPhi).unwrap(), build(&GallerySpec::HeisenbergPhi).unwrap(), 2),
    ];
    let two = vietoris(vec![2]);
    let mut checked = 0;
    for (i, (a, b, d)) in cases.iter().enumerate() {
        match ok(check_equivalent(a, b, *d))? {
            Verdict::Holds(w) => {
                check_maps(a, b, &w, *d)?;
                checked += 1;
            }
            other => return Err(format!("case {i}: expected a witness, got {other:?}")),
        }
    }
    // A return witness: the maps live on the truncated chains.
    let t = truncate_chain(&two, 2);
    if let Verdict::Holds(rw) = ok(check_return_equivalent(&t, &two, 3, ReturnMode::Plain, 100))? {
        let EquivalenceWitness::Interleaving(w) = &rw.witness else { return Err("plain mode".into()) };
        check_maps(&truncate_chain(&t, rw.k), &truncate_chain(&two, rw.m), w, 3)?;
        checked += 1;
    }
    ensure!(checked == cases.len() + 1, "only {checked} witnesses checked");
    Ok(())
}

// ---------------------------------------------------------------------------
// 6. Randomized property suites.

const CASES: usize = 1000;

fn rot4() -> GroupFamily {
    let table = (0..4).map(|i| (0..4).map(|j| (i + j) % 4).collect()).collect();
    let ms = vec![
        vec![vec![1, 0], vec![0, 1]],
        vec![vec![0, -1], vec![1, 0]],
        vec![vec![-1, 0], vec![0, -1]],
        vec![vec![0, 1], vec![-1, 0]],
    ];
    (*GroupFamily::semidirect(FiniteGroup::new(2, table, ms).unwrap()).unwrap()).clone()
}

fn random_element(rng: &mut ChaCha8Rng, f: &solenoid_core::Family) -> GroupElement {
    let mut r = || rng.gen_range(-50i64..=50);
    match &**f {
        GroupFamily::FreeAbelian { rank } => GroupElement::free_abelian(f, &(0..*rank).map(|_| r()).collect::<Vec<_>>()).unwrap(),
        GroupFamily::Heisenberg => GroupElement::heisenberg(f, r(), r(), r()).unwrap(),
        GroupFamily::KleinBottle => GroupElement::klein(f, r(), r()).unwrap(),
        GroupFamily::Semidirect { n, point_group } => {
            let v: Vec<i64> = (0..*n).map(|_| r()).collect();
            GroupElement::semidirect(f, &v, rng.gen_range(0..point_group.order())).unwrap()
        }
    }
}

fn group_axioms() -> Check {
    let mut rng = seed();
    let families = [
        GroupFamily::free_abelian(3).unwrap(),
        GroupFamily::heisenberg(),
        GroupFamily::klein_bottle(),
        std::sync::Arc::new(rot4()),
    ];
    for f in &families {
        let e = GroupElement::identity(f);
        for _ in 0..CASES {
            let [x, y, z] = [0; 3].map(|_| random_element(&mut rng, f));
            let xy = x.multiply(&y).unwrap();
            ensure!(xy.multiply(&z).unwrap() == x.multiply(&y.multiply(&z).unwrap()).unwrap(), "associativity in {}", f.name());
            ensure!(x.multiply(&e).unwrap() == x && e.multiply(&x).unwrap() == x, "identity in {}", f.name());
            ensure!(x.multiply(&x.inverse()).unwrap().is_identity(), "inverse in {}", f.name());
            // Cross-check against the written-out laws.
            let ints = |g: &GroupElement| -> Vec<i64> {
                match g.payload() {
                    solenoid_core::Payload::Heisenberg(v) | solenoid_core::Payload::FreeAbelian(v) => {
                        v.iter().map(|c| i64::try_from(c).unwrap()).collect()
                    }
                    solenoid_core::Payload::Klein { m, n } => vec![i64::try_from(m).unwrap(), i64::try_from(n).unwrap()],
                    solenoid_core::Payload::Semidirect { .. } => vec![],
                }
            };
            match &**f {
                GroupFamily::Heisenberg => ensure!(ints(&xy) == heis_mul(&ints(&x), &ints(&y)), "Heisenberg law"),
                GroupFamily::KleinBottle => ensure!(ints(&xy) == klein_mul(&ints(&x), &ints(&y)), "Klein law"),
                _ => {}
            }
        }
    }
    Ok(())
}

fn random_subgroup(rng: &mut ChaCha8Rng) -> Subgroup {
    match rng.gen_range(0..4) {
        0 => {
            let f = GroupFamily::klein_bottle();
            let parity = if rng.gen_bool(0.5) { Parity::Any } else { Parity::Even };
            Subgroup::klein(&f, rng.gen_range(1..=8), parity).unwrap()
        }
        1 => {
            let f = GroupFamily::heisenberg();
            let (da, db) = (rng.gen_range(1..=4i64), rng.gen_range(1..=4i64));
            let divisors: Vec<i64> = (1..=da * db).filter(|d| (da * db) % d == 0).collect();
            let dc = divisors[rng.gen_range(0..divisors.len())];
            Subgroup::heisenberg(&f, da, db, dc).unwrap()
        }
        2 => {
            let f = GroupFamily::free_abelian(2).unwrap();
            let v = |rng: &mut ChaCha8Rng| vec![BigInt::from(rng.gen_range(-6..=6)), BigInt::from(rng.gen_range(-6..=6))];
            loop {
                let gens = vec![v(rng), v(rng)];
                if let Ok(h) = Hnf::from_generators(2, &gens) {
                    if h.index() > BigInt::from(0) && h.index() <= BigInt::from(100) {
                        return Subgroup::lattice(&f, h).unwrap();
                    }
                }
            }
        }
        _ => {
            let f = std::sync::Arc::new(rot4());
            let s = rng.gen_range(1..=4i64);
            let lattice = Hnf::scalar(2, &BigInt::from(s)).unwrap();
            let members = if s <= 1 || rng.gen_bool(0.5) { vec![0, 1, 2, 3] } else { vec![0] };
            let members = if s > 2 && members.len() == 4 { vec![0] } else { members };
            Subgroup::semidirect(&f, lattice, members)
                .or_else(|_| Subgroup::semidirect(&f, Hnf::scalar(2, &BigInt::from(s)).unwrap(), vec![0]))
                .unwrap()
        }
    }
}

fn coset_actions() -> Check {
    let mut rng = seed();
    for case in 0..CASES {
        let h = random_subgroup(&mut rng);
        let t = ok(enumerate_cosets(&h, 1_000_000))?;
        let n = t.size();
        ensure!(h.index().map_or(true, |i| i == BigInt::from(n)), "case {case}: index {:?} vs {n} cosets of {h}", h.index());
        for perm in t.generator_permutations() {
            let mut seen = vec![false; n];
            for &x in perm {
                ensure!((x as usize) < n && !seen[x as usize], "case {case}: generator is not a permutation on {h}");
                seen[x as usize] = true;
            }
        }
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            for perm in t.generator_permutations() {
                let j = perm[i] as usize;
                if !reached[j] {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        ensure!(reached.iter().all(|&r| r), "case {case}: action on cosets of {h} is not transitive");
        // Representatives are pairwise inequivalent (checked on a sample pair).
        if n > 1 {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let (ri, rj) = (&t.representatives()[i], &t.representatives()[j]);
            ensure!(h.contains(&rj.inverse().multiply(ri).unwrap()) == (i == j), "case {case}: reps {i}, {j}");
        }
    }
    Ok(())
}

fn random_chain(rng: &mut ChaCha8Rng) -> GroupChain {
    match rng.gen_range(0..4) {
        0 => vietoris((0..rng.gen_range(1..=3)).map(|_| rng.gen_range(2..=6)).collect()),
        1 => klein_chain(rng.gen_range(2..=3)),
        2 => build(&GallerySpec::LatticeChain { matrix: vec![vec![1, -1], vec![1, 1]] }).unwrap(),
        _ => build(&GallerySpec::HeisenbergPhi).unwrap(),
    }
}

fn bonding_equivariance() -> Check {
    let mut rng = seed();
    let chains: Vec<GroupChain> = (0..12).map(|_| random_chain(&mut rng)).collect();
    for case in 0..CASES {
        let chain = &chains[rng.gen_range(0..chains.len())];
        let max = if matches!(**chain.family(), GroupFamily::Heisenberg) { 2 } else { 4 };
        let l = rng.gen_range(1..=max);
        let bond = ok(bonding_map(chain, l))?;
        let (upper, lower) = (ok(chain.table(l - 1))?, ok(chain.table(l))?);
        let i = rng.gen_range(0..lower.size());
        let g = random_element(&mut rng, chain.family());
        let lhs = bond[lower.act_element(&g, i) as usize];
        let rhs = upper.act_element(&g, bond[i] as usize);
        ensure!(lhs == rhs, "case {case}: bonding at level {l} does not commute with {g}");
    }
    Ok(())
}

fn witness_reverification() -> Check {
    let mut rng = seed();
    let steps = [2u64, 3, 4, 6, 8, 9, 12];
    let mut chains: Vec<(Vec<u64>, GroupChain)> = Vec::new();
    for _ in 0..24 {
        let s: Vec<u64> = (0..rng.gen_range(1..=2)).map(|_| steps[rng.gen_range(0..steps.len())]).collect();
        chains.push((s.clone(), vietoris(s)));
    }
    let primes_of = |s: &[u64]| -> Vec<u64> { [2, 3].into_iter().filter(|p| s.iter().any(|m| m % p == 0)).collect() };
    let (mut holds, mut fails) = (0, 0);
    for case in 0..CASES {
        let (sa, a) = &chains[rng.gen_range(0..chains.len())];
        let (sb, b) = &chains[rng.gen_range(0..chains.len())];
        let depth = rng.gen_range(1..=4);
        match ok(check_equivalent(a, b, depth))? {
            Verdict::Holds(w) => {
                holds += 1;
                // A finite-depth witness may exist even when the tails differ.
                ok(verify_interleaving(a, b, &w))?;
                let mut bad = w.clone();
                let k = rng.gen_range(1..bad.pairs.len());
                bad.pairs[k].0 = bad.pairs[k - 1].0;
                ensure!(verify_interleaving(a, b, &bad).is_err(), "case {case}: tampered witness accepted");
            }
            Verdict::Fails(_) => {
                fails += 1;
                ensure!(primes_of(sa) != primes_of(sb), "case {case}: {sa:?} vs {sb:?} refuted with equal primes");
            }
            Verdict::UnknownAtDepth { note, .. } => return Err(format!("case {case}: unknown for rank-1 chains: {note}")),
        }
    }
    ensure!(holds > 0 && fails > 0, "degenerate sample: {holds} holds, {fails} fails");
    Ok(())
}

fn truncation_return() -> Check {
    let mut rng = seed();
    let chains: Vec<GroupChain> = (0..12).map(|_| random_chain(&mut rng)).collect();
    for case in 0..CASES {
        let chain = &chains[rng.gen_range(0..chains.len())];
        let heis = matches!(**chain.family(), GroupFamily::Heisenberg);
        let k = rng.gen_range(0..=if heis { 1 } else { 3 });
        let depth = if heis { 1 } else { rng.gen_range(1..=3) };
        let t = truncate_chain(chain, k);
        let identity = InterleavingWitness { pairs: (0..=depth).map(|i| (i, i)).collect(), depth };
        let w = ReturnWitness { k, m: 0, witness: EquivalenceWitness::Interleaving(identity) };
        ok(verify_return(chain, &t, &w)).map_err(|e| format!("case {case}: offsets ({k}, 0): {e}"))?;
        // The search explores offsets up to the depth only.
        if case % 10 == 0 && k <= depth {
            let v = ok(check_return_equivalent(chain, &t, depth, ReturnMode::Plain, 100))?;
            let found = v.witness().ok_or(format!("case {case}: {} truncated by {k} at depth {depth}: {v:?}", chain.family().name()))?;
            ensure!(found.k + found.m <= k, "case {case}: offsets ({}, {}) exceed ({k}, 0)", found.k, found.m);
            ok(verify_return(chain, &t, found))?;
        }
    }
    Ok(())
}

fn property_suites() -> Check {
    for (name, f) in [
        ("group axioms", group_axioms as fn() -> Check),
        ("coset actions", coset_actions),
        ("bonding equivariance", bonding_equivariance),
        ("witness re-verification", witness_reverification),
        ("truncation", truncation_return),
    ] {
        f().map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 7. Dyer chain regression.

fn dyer() -> Check {
    let chain = build(&GallerySpec::HeisenbergDyer { p: 2, q: 3 }).unwrap();
    let report = ok(verify_chain(&chain, 2))?;
    let gens = [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    let oracle: Vec<BigInt> = (0..=2u32)
        .map(|l| {
            let (p, q) = (2i64.pow(l), 3i64.pow(l));
            let member = move |x: &[i64]| x[0] % p == 0 && x[1] % q == 0 && x[2] % p == 0;
            BigInt::from(bfs_index(vec![0, 0, 0], &gens, heis_mul, heis_inv, &member))
        })
        .collect();
    ensure!(oracle == [1, 12, 144].map(BigInt::from).to_vec(), "oracle indices {oracle:?}");
    ensure!(report.indices == oracle, "indices {:?}", report.indices);
    let v = ok(normality_certificate(&chain, 4))?;
    ensure!(matches!(v, Verdict::UnknownAtDepth { .. }), "normality at depth 4: {}", v.label());
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 7] = [
        ("1 klein bottle gallery", klein_gallery, Duration::from_secs(1)),
        ("2 heisenberg phi cores", heisenberg_phi, Duration::from_secs(30)),
        ("3 steinitz classification", steinitz, Duration::from_secs(1)),
        ("4 equivalence to pro-isomorphism", pro_isomorphism, Duration::from_secs(1)),
        ("5 equivariant finite-level maps", equivariant_maps, Duration::from_secs(5)),
        ("6 property suites", property_suites, Duration::from_secs(60)),
        ("7 dyer regression", dyer, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|()| {
            if elapsed <= limit {
                Ok(())
            } else {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(()) => println!("criterion {name}: PASS ({elapsed:.2?})"),
            Err(e) => {
                failed += 1;
                println!("criterion {name}: FAIL ({elapsed:.2?}): {e}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
