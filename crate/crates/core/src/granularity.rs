//! Comparing semantics by the distinctions they draw on a finite family of
//! program sets.
//!
//! A semantics `A` is at least as fine as `B` when `B`'s denotation is a
//! function of `A`'s. On a finite family with finite probes this can only be
//! refuted: two sets that `A` identifies but `B` separates. An `ok` answer
//! means no counterexample was found on the family.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::concrete::{oracle_aware_on, BehaviorTable};
use crate::domain::{enumerate_states, DVState, DomainConfig, State};
use crate::error::{Error, Result};
use crate::grammar::Rtg;
use crate::triples::{EngineChoice, SetEvaluator, TripleMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticsKind {
    AgnosticYellow,
    AgnosticGreen,
    Aware,
    VectorYellow,
    VectorGreen,
}

impl std::str::FromStr for SemanticsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Json::String(s.to_string())).map_err(|_| {
            Error::input(format!("unknown semantics `{s}` (agnostic-yellow, agnostic-green, aware, vector-yellow, vector-green)"))
        })
    }
}

impl SemanticsKind {
    fn mode(self) -> Option<TripleMode> {
        match self {
            SemanticsKind::AgnosticYellow => Some(TripleMode::AgnosticYellow),
            SemanticsKind::AgnosticGreen => Some(TripleMode::AgnosticGreen),
            SemanticsKind::VectorYellow => Some(TripleMode::VectorYellow),
            SemanticsKind::VectorGreen => Some(TripleMode::VectorGreen),
            SemanticsKind::Aware => None,
        }
    }

    fn is_vector(self) -> bool {
        matches!(self, SemanticsKind::VectorYellow | SemanticsKind::VectorGreen)
    }
}

/// A semantics together with the engine that computes it. The aware
/// semantics is always tabulated by enumeration and needs an oracle depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SemanticsId {
    pub kind: SemanticsKind,
    pub engine: EngineChoice,
}

impl SemanticsId {
    pub fn new(kind: SemanticsKind, engine: EngineChoice) -> Self {
        SemanticsId { kind, engine }
    }
}

/// A denotation restricted to a probe: per-input output sets, or the set of
/// per-program behaviors. Equal values mean equal denotations on the probe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Denotation {
    Table(Vec<(DVState, BTreeSet<DVState>)>),
    Behaviors(BTreeSet<BehaviorTable>),
}

impl Denotation {
    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        match self {
            Denotation::Table(rows) => Json::Array(
                rows.iter()
                    .map(|(i, o)| json!({ "input": i.to_json(cfg), "outputs": o.iter().map(|u| u.to_json(cfg)).collect::<Vec<_>>() }))
                    .collect(),
            ),
            Denotation::Behaviors(tables) => Json::Array(
                tables
                    .iter()
                    .map(|t| Json::Array(t.0.iter().map(|(s, o)| json!([s.to_json(cfg), o.to_json(cfg)])).collect()))
                    .collect(),
            ),
        }
    }
}

/// Every full state for the per-state semantics; every vector up to length
/// `max_len` over those states for the vector semantics.
pub fn default_probe(kind: SemanticsKind, cfg: &DomainConfig, max_len: usize) -> Result<Vec<DVState>> {
    let states = enumerate_states(cfg, &cfg.tracked_vars)?;
    if !kind.is_vector() {
        return Ok(states.into_iter().map(|s| DVState::finite(vec![s])).collect());
    }
    let mut out = vec![DVState::finite(vec![])];
    let mut layer: Vec<Vec<State>> = vec![Vec::new()];
    for _ in 0..max_len {
        if layer.len().saturating_mul(states.len()).saturating_add(out.len()) > cfg.caps.max_states {
            return Err(Error::resource("probe vectors", cfg.caps.max_states));
        }
        layer = layer.iter().flat_map(|e| states.iter().map(move |s| [e.as_slice(), std::slice::from_ref(s)].concat())).collect();
        out.extend(layer.iter().cloned().map(DVState::finite));
    }
    Ok(out)
}

/// Tabulates `sem` for `L(n)` on the probe inputs.
pub fn denote(sem: SemanticsId, g: &Rtg, n: &str, probe: &[DVState], cfg: &DomainConfig) -> Result<Denotation> {
    let mut inputs = probe.to_vec();
    inputs.sort();
    inputs.dedup();
    if !sem.kind.is_vector() {
        if let Some(v) = inputs.iter().find(|v| v.entries.len() != 1 || v.diverges) {
            return Err(Error::input(format!("per-state semantics need single-state probes, got {v:?}")));
        }
    }
    let Some(mode) = sem.kind.mode() else {
        let EngineChoice::Oracle { depth } = sem.engine else {
            return Err(Error::Config("the aware semantics is tabulated by enumeration; choose the oracle engine".into()));
        };
        if inputs.is_empty() {
            return Ok(Denotation::Behaviors(BTreeSet::new()));
        }
        let states: Vec<State> = inputs.iter().map(|v| v.entries[0].clone()).collect();
        return Ok(Denotation::Behaviors(oracle_aware_on(g, n, depth, &states, cfg)?));
    };
    let mut ev = SetEvaluator::new(g, n, mode, sem.engine, cfg)?;
    let mut rows = Vec::with_capacity(inputs.len());
    for v in inputs {
        let out = ev.outputs(&v)?;
        rows.push((v, out));
    }
    Ok(Denotation::Table(rows))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refinement {
    /// No pair in the family is identified by the fine semantics but
    /// separated by the coarse one.
    NoCounterexample,
    /// Indices of the first such pair.
    Witness(usize, usize),
}

/// Looks for two members of `family` that `fine` identifies and `coarse`
/// separates.
pub fn refines_on_family(
    family: &[(Rtg, String)],
    fine: SemanticsId,
    coarse: SemanticsId,
    fine_probe: &[DVState],
    coarse_probe: &[DVState],
    cfg: &DomainConfig,
) -> Result<Refinement> {
    let fines: Vec<Denotation> = family.iter().map(|(g, n)| denote(fine, g, n, fine_probe, cfg)).collect::<Result<_>>()?;
    let coarses: Vec<Denotation> = family.iter().map(|(g, n)| denote(coarse, g, n, coarse_probe, cfg)).collect::<Result<_>>()?;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if fines[i] == fines[j] && coarses[i] != coarses[j] {
                return Ok(Refinement::Witness(i, j));
            }
        }
    }
    Ok(Refinement::NoCounterexample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_term, Sort, Term};

    fn cfg() -> DomainConfig {
        DomainConfig::new(0, 3, ["x"]).unwrap()
    }

    fn finite(progs: &[&str]) -> (Rtg, String) {
        let terms: Vec<Term> = progs.iter().map(|p| parse_term(p).unwrap()).collect();
        (Rtg::finite("C", Sort::Stmt, &terms), "C".to_string())
    }

    fn empty() -> (Rtg, String) {
        (Rtg::parse_validated("nonterm C : Stmt;").unwrap(), "C".to_string())
    }

    fn id(kind: SemanticsKind) -> SemanticsId {
        SemanticsId::new(kind, EngineChoice::Oracle { depth: 1 })
    }

    // The second member of S2 takes the branch opposite to the first, so every
    // state reaches both 1 and 2 but no single program is constant.
    fn s1_s2() -> Vec<(Rtg, String)> {
        vec![
            finite(&["x := 1", "x := 1 + 1"]),
            finite(&["if x == 0 then x := 1 else x := 1 + 1", "if !(x == 0) then x := 1 else x := 1 + 1"]),
        ]
    }

    #[test]
    fn guards_swapped_with_branches_collapse_to_one_program() {
        let c = cfg();
        let (g, n) = finite(&["if x == 0 then x := 1 else x := 1 + 1", "if !(x == 0) then x := 1 + 1 else x := 1"]);
        let probe = default_probe(SemanticsKind::Aware, &c, 1).unwrap();
        let Denotation::Behaviors(b) = denote(id(SemanticsKind::Aware), &g, &n, &probe, &c).unwrap() else { panic!() };
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn agnostic_identifies_what_aware_separates() {
        let c = cfg();
        let fam = s1_s2();
        let probe = default_probe(SemanticsKind::AgnosticYellow, &c, 1).unwrap();
        let a = |k| denote(id(k), &fam[0].0, "C", &probe, &c).unwrap();
        let b = |k| denote(id(k), &fam[1].0, "C", &probe, &c).unwrap();
        assert_eq!(a(SemanticsKind::AgnosticYellow), b(SemanticsKind::AgnosticYellow));
        assert_ne!(a(SemanticsKind::Aware), b(SemanticsKind::Aware));
        let r = refines_on_family(&fam, id(SemanticsKind::AgnosticYellow), id(SemanticsKind::Aware), &probe, &probe, &c).unwrap();
        assert_eq!(r, Refinement::Witness(0, 1));
        let r = refines_on_family(&fam, id(SemanticsKind::AgnosticGreen), id(SemanticsKind::Aware), &probe, &probe, &c).unwrap();
        assert_eq!(r, Refinement::Witness(0, 1));
        let r = refines_on_family(&fam, id(SemanticsKind::Aware), id(SemanticsKind::AgnosticYellow), &probe, &probe, &c).unwrap();
        assert_eq!(r, Refinement::NoCounterexample);
    }

    #[test]
    fn divergence_separates_empty_from_spinning() {
        let c = cfg();
        let fam = vec![empty(), finite(&["while t do x := x"])];
        let probe = default_probe(SemanticsKind::AgnosticYellow, &c, 1).unwrap();
        let r = refines_on_family(&fam, id(SemanticsKind::AgnosticYellow), id(SemanticsKind::AgnosticGreen), &probe, &probe, &c).unwrap();
        assert_eq!(r, Refinement::Witness(0, 1));
    }

    #[test]
    fn empty_probe_identifies_everything() {
        let c = cfg();
        let fam = [empty(), finite(&["x := 1"]), finite(&["while t do x := x"])];
        for k in [SemanticsKind::AgnosticYellow, SemanticsKind::AgnosticGreen, SemanticsKind::Aware, SemanticsKind::VectorGreen] {
            let ds: BTreeSet<Denotation> = fam.iter().map(|(g, n)| denote(id(k), g, n, &[], &c).unwrap()).collect();
            assert_eq!(ds.len(), 1, "{k:?}");
        }
    }

    #[test]
    fn reflexive_and_engine_independent() {
        let c = cfg();
        let fam = vec![empty(), finite(&["x := 1"]), finite(&["x := 1", "while x == 1 do x := x"]), finite(&["x := x + 1"])];
        let probe = default_probe(SemanticsKind::VectorGreen, &c, 1).unwrap();
        for k in [SemanticsKind::VectorYellow, SemanticsKind::VectorGreen] {
            let comp = SemanticsId::new(k, EngineChoice::Compositional);
            assert_eq!(refines_on_family(&fam, comp, comp, &probe, &probe, &c).unwrap(), Refinement::NoCounterexample);
            for (g, n) in &fam {
                assert_eq!(denote(comp, g, n, &probe, &c).unwrap(), denote(id(k), g, n, &probe, &c).unwrap());
            }
        }
        assert!(denote(SemanticsId::new(SemanticsKind::Aware, EngineChoice::Compositional), &fam[1].0, "C", &probe[1..2], &c).is_err());
    }

    #[test]
    fn default_probe_sizes() {
        let c = cfg();
        assert_eq!(default_probe(SemanticsKind::Aware, &c, 2).unwrap().len(), 32);
        assert_eq!(default_probe(SemanticsKind::VectorYellow, &c, 2).unwrap().len(), 1 + 32 + 32 * 32);
    }

    const POOL: [&str; 8] = [
        "x := 0",
        "x := 1",
        "x := x + 1",
        "x := x - 1",
        "while t do x := x",
        "while x < 1 + 1 do x := x + 1",
        "if x == 1 then x := 0 else x := x",
        "while x == 1 do x := x",
    ];

    fn family(masks: &[u8]) -> Vec<(Rtg, String)> {
        masks
            .iter()
            .map(|m| {
                let progs: Vec<&str> = POOL.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| *p).collect();
                if progs.is_empty() { empty() } else { finite(&progs) }
            })
            .collect()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn orderings_hold_on_random_families(masks in proptest::collection::vec(proptest::prelude::any::<u8>(), 2..5)) {
            let c = cfg();
            let fam = family(&masks);
            let sp = default_probe(SemanticsKind::Aware, &c, 1).unwrap();
            let vp = default_probe(SemanticsKind::VectorYellow, &c, 2).unwrap();
            let probe = |k: SemanticsKind| if k.is_vector() { &vp } else { &sp };
            let kinds = [SemanticsKind::AgnosticYellow, SemanticsKind::AgnosticGreen, SemanticsKind::Aware, SemanticsKind::VectorYellow, SemanticsKind::VectorGreen];
            // Class index of each family member under each semantics.
            let classes: Vec<Vec<usize>> = kinds
                .iter()
                .map(|&k| {
                    let ds: Vec<Denotation> = fam.iter().map(|(g, n)| denote(id(k), g, n, probe(k), &c).unwrap()).collect();
                    ds.iter().map(|d| ds.iter().position(|e| e == d).unwrap()).collect()
                })
                .collect();
            let ix = |k: SemanticsKind| kinds.iter().position(|&q| q == k).unwrap();
            let ok = |f: SemanticsKind, g: SemanticsKind| {
                let (f, g) = (&classes[ix(f)], &classes[ix(g)]);
                (0..fam.len()).all(|i| (0..fam.len()).all(|j| f[i] != f[j] || g[i] == g[j]))
            };
            use SemanticsKind::*;
            proptest::prop_assert!(ok(AgnosticGreen, AgnosticYellow));
            proptest::prop_assert!(ok(Aware, AgnosticGreen));
            proptest::prop_assert!(ok(VectorYellow, AgnosticYellow));
            proptest::prop_assert!(ok(VectorGreen, VectorYellow));
            proptest::prop_assert_eq!(
                refines_on_family(&fam, id(Aware), id(AgnosticGreen), &sp, &sp, &c).unwrap(),
                Refinement::NoCounterexample
            );
            for a in kinds {
                for b in kinds {
                    for k in kinds {
                        if ok(a, b) && ok(b, k) {
                            proptest::prop_assert!(ok(a, k), "{a:?} {b:?} {k:?}");
                        }
                    }
                }
            }
        }
    }
}
