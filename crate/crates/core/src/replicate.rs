//! Reproducible suites for the distinguishing examples and the engine
//! equivalences.
//!
//! Every suite fixes its own domain and draws random instances from a seeded
//! ChaCha stream, so a report depends only on the suite name, the seed and
//! the case count.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::ast::{parse_term, Sort, Term};
use crate::concrete::{bad_lift, eval_yellow, oracle_agnostic_yellow, Enumerated, Outcome};
use crate::domain::{enumerate_states, enumerate_valuations, DVState, DomainConfig, State, VState};
use crate::error::{Error, Result};
use crate::grammar::Rtg;
use crate::granularity::{default_probe, refines_on_family, Refinement, SemanticsId, SemanticsKind};
use crate::loopfree::{noncompositionality_witness, AgnosticSemantics};
use crate::triples::{
    build_gadget_wvu, check_triple_report, pbe_unrealizable, EngineChoice, PbeVerdict, Pred, Triple, TripleMode,
};
use crate::vector_agnostic::{eval_vector, VectorSemantics};
use crate::vector_aware::{eval_vector_green, reduce, truncate, GreenVectorSemantics, RawDVector};

pub const SUITES: [&str; 8] =
    ["noncompositionality", "evenness", "vector-examples", "equivalence", "reduce", "gadget", "granularity", "pbe"];

/// Enumeration depth that covers every random grammar drawn here.
pub const RANDOM_DEPTH: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Overrides the number of random instances of the randomized suites.
    pub cases: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0x5e75e4, cases: None }
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn new() -> Self {
        Builder { checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: Json) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    fn finish(self, suite: &str, seed: u64) -> SuiteReport {
        let passed = self.checks.iter().all(|c| c.passed);
        SuiteReport { suite: suite.to_string(), seed, passed, checks: self.checks }
    }
}

/// Runs one suite by name.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut b = Builder::new();
    match name {
        "noncompositionality" => noncompositionality(&mut b)?,
        "evenness" => evenness(&mut b)?,
        "vector-examples" => vector_examples(&mut b)?,
        "equivalence" => equivalence(&mut b, opts)?,
        "reduce" => reduce_suite(&mut b, opts)?,
        "gadget" => gadget(&mut b, opts)?,
        "granularity" => granularity(&mut b, opts)?,
        "pbe" => pbe(&mut b)?,
        _ => return Err(Error::input(format!("unknown suite `{name}` (one of: {})", SUITES.join(", ")))),
    }
    Ok(b.finish(name, opts.seed))
}

fn x_cfg(lo: i64, hi: i64) -> DomainConfig {
    DomainConfig::new(lo, hi, ["x"]).expect("fixed suite domain")
}

fn xs(c: &DomainConfig, vals: &[i64]) -> Vec<State> {
    vals.iter().map(|x| State::with_vars(c, &[("x", *x)]).expect("value inside the suite domain")).collect()
}

fn x_values(c: &DomainConfig, vs: &BTreeSet<VState>) -> Json {
    let x = c.var_index("x").expect("suite domains track x");
    Json::Array(vs.iter().map(|v| json!(v.0.iter().map(|s| s.var(x)).collect::<Vec<_>>())).collect())
}

fn finite_set(name: &str, progs: &[&str]) -> Rtg {
    let terms: Vec<Term> = progs.iter().map(|p| parse_term(p).expect("suite programs parse")).collect();
    Rtg::finite(name, Sort::Stmt, &terms)
}

fn noncompositionality(b: &mut Builder) -> Result<()> {
    let c = x_cfg(0, 8);
    let r = noncompositionality_witness(&c)?;
    b.check("guards agree on every state", r.guards_agree, json!({ "states": enumerate_states(&c, &c.tracked_vars)?.len() }));
    b.check("W1 from x=0 reaches exactly {0, 1}", r.w1_x_values == [0, 1].into(), json!(r.w1_x_values));
    b.check("W2 from x=0 reaches exactly {0, 2}", r.w2_x_values == [0, 2].into(), json!(r.w2_x_values));
    Ok(())
}

/// `W ::= while x < E do x := x + 1;  E ::= 0 | E + 2`, with the constant
/// spelled through helper nonterminals.
pub const EVENNESS_GRAMMAR: &str = "nonterm W : Stmt;
nonterm E : Exp;
nonterm Two : Exp;
nonterm One : Exp;
start W;
W ::= while x < <E> do { x := x + 1 };
E ::= 0 | <E> + <Two>;
Two ::= <One> + <One>;
One ::= 1;
";

pub fn evenness_grammar() -> Rtg {
    Rtg::parse_validated(EVENNESS_GRAMMAR)
    .expect("evenness grammar is well formed")
}

fn evenness(b: &mut Builder) -> Result<()> {
    let c = x_cfg(0, 8);
    let g = evenness_grammar();
    let pre = Pred::pointwise("x == 0")?;
    let post = Pred::pointwise("x % 2 == 0")?;
    for (label, engine) in [("compositional", EngineChoice::Compositional), ("oracle", EngineChoice::Oracle { depth: 8 })] {
        for mode in [TripleMode::AgnosticYellow, TripleMode::VectorYellow] {
            let t = Triple::new(pre.clone(), g.clone(), "W", post.clone(), mode).with_engine(engine).with_max_len(2);
            let r = check_triple_report(&t, &c)?;
            b.check(
                &format!("{{x = 0}} W {{x even}} holds ({}, {label})", serde_json::to_value(mode).expect("mode serializes").as_str().unwrap_or("")),
                r.verdict.holds(),
                json!({ "verdict": r.verdict.to_json(&c), "inputs": r.inputs_checked }),
            );
        }
    }
    let zero = VState(xs(&c, &[0]));
    let outs = eval_vector(&g, "W", std::slice::from_ref(&zero), &c)?;
    let want: BTreeSet<VState> = [0, 2, 4, 6, 8].iter().map(|x| VState(xs(&c, &[*x]))).collect();
    b.check("outputs from x=0 are exactly {0, 2, 4, 6, 8}", outs == want, x_values(&c, &outs));
    let oracle = Enumerated::new(&g, "W", 8, &c)?.vector(&[zero])?;
    b.check("oracle outputs agree", oracle == want, x_values(&c, &oracle));
    Ok(())
}

fn vector_examples(b: &mut Builder) -> Result<()> {
    let c = x_cfg(0, 16);
    let adds = finite_set("C", &["x := x + (1 + 1)", "x := x + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1)))))"]);
    let out = eval_vector(&adds, "C", &[VState(xs(&c, &[2, 4]))], &c)?;
    let want: BTreeSet<VState> = [VState(xs(&c, &[4, 6])), VState(xs(&c, &[12, 14]))].into();
    b.check("{x:=x+2, x:=x+10} on [2, 4]", out == want, x_values(&c, &out));

    let w = finite_set("C", &["while x < 1 + 1 do x := x - 1"]);
    let out = eval_vector(&w, "C", &[VState(xs(&c, &[2, 4]))], &c)?;
    b.check("while x<2 do x:=x-1 on [2, 4]", out == [VState(xs(&c, &[2, 4]))].into(), x_values(&c, &out));
    let out = eval_vector(&w, "C", &[VState(xs(&c, &[2, 4, 1]))], &c)?;
    b.check("while x<2 do x:=x-1 on [2, 4, 1]", out.is_empty(), x_values(&c, &out));

    let any = Rtg::parse_validated("nonterm S : Stmt; nonterm N : Exp; S ::= x := x + <N>; N ::= 0 | <N> + 1;")?;
    let v = VState(xs(&c, &[1, 2, 3]));
    let out = eval_vector(&any, "S", &[v], &c)?;
    let want: BTreeSet<VState> = (0..=16).map(|n: i64| VState(xs(&c, &[(1 + n).min(16), (2 + n).min(16), (3 + n).min(16)]))).collect();
    b.check("{x:=x+n | n} on [1, 2, 3]", out == want, json!({ "outputs": out.len() }));
    Ok(())
}

/// Statement, guard and expression fragments for random grammars over `x`.
const EXP_POOL: [&str; 7] = ["x", "0", "1", "x + 1", "x - 1", "1 + 1", "x + x"];
const BEXP_POOL: [&str; 8] = ["t", "f", "x == 0", "x < 1", "!(x == 1)", "x < <E>", "<E> == x", "!(x < 1 + 1)"];
const STMT_POOL: [&str; 6] = [
    "x := <E>",
    "x := x",
    "if <B> then x := <E> else x := x",
    "if <B> then x := x + 1 else x := 0",
    "{ x := <E>; x := x + 1 }",
    "{ x := <E>; if <B> then x := 0 else x := x }",
];
const LOOP_POOL: [&str; 4] = [
    "while <B> do x := x + 1",
    "while <B> do x := x - 1",
    "while <B> do x := <E>",
    "{ x := <E>; while <B> do x := x + 1 }",
];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], max: usize) -> Vec<&'a str> {
    let k = rng.gen_range(1..=max.min(pool.len()));
    pool.choose_multiple(rng, k).copied().collect()
}

/// A random grammar `S : Stmt`, `B : BExp`, `E : Exp` with a finite language
/// of at most 50 statements at [`RANDOM_DEPTH`].
pub fn random_grammar(rng: &mut ChaCha8Rng, loops: bool) -> Rtg {
    loop {
        let mut stmts = pick(rng, &STMT_POOL, 3);
        if loops {
            stmts.truncate(2);
            stmts.extend(pick(rng, &LOOP_POOL, 2));
        }
        let text = format!(
            "nonterm S : Stmt; nonterm B : BExp; nonterm E : Exp; S ::= {}; B ::= {}; E ::= {};",
            stmts.join(" | "),
            pick(rng, &BEXP_POOL, 3).join(" | "),
            pick(rng, &EXP_POOL, 3).join(" | ")
        );
        let g = Rtg::parse_validated(&text).expect("random grammar fragments are well sorted");
        if matches!(g.enumerate("S", RANDOM_DEPTH, 50), Ok(ts) if !ts.is_empty()) {
            return g;
        }
    }
}

/// Inputs of the equivalence suite: every state as a singleton, every pair of
/// valuations, the empty vector, and (green only) `↑`-terminated vectors.
fn equivalence_probe(c: &DomainConfig, green: bool) -> Result<Vec<DVState>> {
    let states = enumerate_states(c, &c.tracked_vars)?;
    let vals = enumerate_valuations(c, &c.tracked_vars)?;
    let mut out = vec![DVState::finite(vec![])];
    out.extend(states.iter().map(|s| DVState::finite(vec![s.clone()])));
    for a in &vals {
        for b in &vals {
            out.push(DVState::finite(vec![a.clone(), b.clone()]));
        }
    }
    if green {
        out.push(DVState::diverging(vec![]));
        out.extend(vals.iter().map(|s| DVState::diverging(vec![s.clone()])));
    }
    Ok(out)
}

fn equivalence(b: &mut Builder, opts: &SuiteOptions) -> Result<()> {
    let c = x_cfg(0, 3);
    let cases = opts.cases.unwrap_or(200);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (yellow_probe, green_probe) = (equivalence_probe(&c, false)?, equivalence_probe(&c, true)?);
    let states = enumerate_states(&c, &c.tracked_vars)?;
    let (mut loop_free, mut queries) = (0usize, 0usize);
    let mut mismatches: Vec<Json> = Vec::new();
    for i in 0..cases {
        let g = random_grammar(&mut rng, i % 2 == 1);
        let mut oracle = Enumerated::new(&g, "S", RANDOM_DEPTH, &c)?;
        let mut yellow = VectorSemantics::new(&g, &c)?;
        let mut green = GreenVectorSemantics::new(&g, &c)?;
        for v in &yellow_probe {
            let v = VState(v.entries.clone());
            queries += 1;
            if yellow.eval("S", &v)? != oracle.vector(std::slice::from_ref(&v))? {
                mismatches.push(json!({ "engine": "vector-yellow", "grammar": g.to_text(), "input": v.to_json(&c) }));
            }
        }
        for v in &green_probe {
            queries += 1;
            if green.eval("S", v)? != oracle.vector_green(std::slice::from_ref(v))? {
                mismatches.push(json!({ "engine": "vector-green", "grammar": g.to_text(), "input": v.to_json(&c) }));
            }
        }
        if g.reachable_while("S").is_none() {
            loop_free += 1;
            let mut agn = AgnosticSemantics::new(&g, &c)?;
            for n in ["S", "B", "E"] {
                for s in &states {
                    queries += 1;
                    let want = oracle_agnostic_yellow(&g, n, RANDOM_DEPTH, std::slice::from_ref(s), &c)?;
                    if agn.eval(n, std::slice::from_ref(s))? != want {
                        mismatches.push(json!({ "engine": "agnostic", "grammar": g.to_text(), "nonterminal": n, "input": s.to_json(&c) }));
                    }
                }
            }
        }
    }
    let total = mismatches.len();
    mismatches.truncate(5);
    b.check(
        "compositional engines equal their oracles",
        total == 0,
        json!({ "grammars": cases, "loop_free": loop_free, "queries": queries, "mismatches": total, "first": mismatches }),
    );
    Ok(())
}

fn random_dvset(rng: &mut ChaCha8Rng, states: &[State]) -> BTreeSet<DVState> {
    let n = rng.gen_range(0..8);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..4);
            let entries: Vec<State> = (0..len).map(|_| states[rng.gen_range(0..states.len())].clone()).collect();
            DVState { entries, diverges: rng.gen_bool(0.6) }
        })
        .collect()
}

fn reduce_suite(b: &mut Builder, opts: &SuiteOptions) -> Result<()> {
    let c = x_cfg(0, 8);
    let st = |vals: &[i64]| xs(&c, vals);
    let fin = |vals: &[i64]| DVState::finite(st(vals));
    let div = |vals: &[i64]| DVState::diverging(st(vals));
    let o = |x: i64| Outcome::State(st(&[x]).remove(0));
    let s = finite_set("C", &["while x == 1 do x := x", "while x == 1 + 1 do x := x"]);
    let show = |set: &BTreeSet<DVState>| Json::Array(set.iter().map(|v| v.to_json(&c)).collect());

    let raw = bad_lift(&s, "C", 1, &VState(st(&[1, 2])), &c)?;
    let want: BTreeSet<RawDVector> = [vec![Outcome::Diverge, o(2)], vec![o(1), Outcome::Diverge]].into();
    b.check("bad lift of {w1, w2} on [1, 2]", raw == want, json!(raw.len()));
    let raw23 = bad_lift(&s, "C", 1, &VState(st(&[2, 3])), &c)?;
    let want23: BTreeSet<RawDVector> = [vec![o(2), o(3)], vec![Outcome::Diverge, o(3)]].into();
    b.check("bad lift of {w1, w2} on [2, 3]", raw23 == want23, json!(raw23.len()));

    let t = truncate(&raw);
    b.check("truncate on [1, 2]", t == [div(&[]), div(&[1])].into(), show(&t));
    let r = reduce(&t);
    b.check("reduce on [1, 2]", r == [div(&[])].into(), show(&r));
    let t23 = truncate(&raw23);
    b.check("truncate on [2, 3]", t23 == [fin(&[2, 3]), div(&[])].into(), show(&t23));
    let r23 = reduce(&t23);
    b.check("reduce on [2, 3] keeps the finite vector", r23 == [fin(&[2, 3]), div(&[])].into(), show(&r23));
    let e = eval_vector_green(&s, "C", &[fin(&[1, 2])], &c)?;
    b.check("compositional green engine on [1, 2]", e == [div(&[])].into(), show(&e));

    let v1: BTreeSet<DVState> = [div(&[1]), div(&[1, 2]), div(&[2]), fin(&[1, 2])].into();
    let r1 = reduce(&v1);
    b.check("reduce(V1) on its finite members", r1 == [div(&[1]), div(&[2]), fin(&[1, 2])].into(), show(&r1));

    let cases = opts.cases.unwrap_or(10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pool = st(&[0, 1, 2]);
    let mut failures: Vec<Json> = Vec::new();
    for _ in 0..cases {
        let x = random_dvset(&mut rng, &pool);
        let r = reduce(&x);
        let idempotent = reduce(&r) == r;
        let subset = r.is_subset(&x);
        let antichain = r.iter().all(|a| r.iter().all(|b| a == b || !a.occludes(b)));
        let covered = x.iter().all(|v| r.iter().any(|u| u.is_prefix_of(v) && (u.diverges || u == v)));
        let finite_kept = x.iter().filter(|v| !v.diverges).all(|v| r.contains(v));
        if !(idempotent && subset && antichain && covered && finite_kept) && failures.len() < 5 {
            failures.push(show(&x));
        }
    }
    b.check(
        "reduce is idempotent and keeps exactly the shortest occluders",
        failures.is_empty(),
        json!({ "sets": cases, "failures": failures }),
    );
    Ok(())
}

const GADGET_POOL: [&str; 12] = [
    "x := x + 1",
    "x := 0",
    "x := x - 1",
    "x := 1 + 1",
    "x := x + x",
    "if x < 1 + 1 then x := x + 1 else x := 0",
    "if x == 0 then x := 1 + 1 + 1 else x := x - 1",
    "{ x := x + 1; x := x + 1 }",
    "while x < 1 + 1 + 1 do x := x + 1",
    "while !(x == 0) do x := x - 1",
    "while x == 1 do x := x",
    "while t do x := x",
];

fn gadget(b: &mut Builder, opts: &SuiteOptions) -> Result<()> {
    let c = DomainConfig::new(0, 5, ["x", "j"])?;
    let cases = opts.cases.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let at = |x: i64| State::with_vars(&c, &[("x", x)]).expect("inside the gadget domain");
    let (mut members, mut mismatches) = (0usize, Vec::new());
    for _ in 0..cases {
        let s = finite_set("S", &pick(&mut rng, &GADGET_POOL, 10));
        let n = rng.gen_range(1..=3);
        let v = VState((0..n).map(|_| at(rng.gen_range(0..=5))).collect());
        let answers: Vec<VState> = Enumerated::new(&s, "S", 1, &c)?.vector(std::slice::from_ref(&v))?.into_iter().collect();
        let u = if !answers.is_empty() && rng.gen_bool(0.5) {
            answers[rng.gen_range(0..answers.len())].clone()
        } else {
            VState((0..n).map(|_| at(rng.gen_range(0..=5))).collect())
        };
        let member = answers.contains(&u);
        members += usize::from(member);
        let g = build_gadget_wvu(&s, "S", &v, &u, "j", &c)?;
        let sigma = at(rng.gen_range(0..=5));
        let by_oracle = oracle_agnostic_yellow(&g.grammar, &g.start, 3, std::slice::from_ref(&sigma), &c)?
            .iter()
            .any(|o| o.var(1) == g.target);
        let by_engine = g.accepts(&sigma, EngineChoice::Compositional, &c)?;
        if by_oracle != member || by_engine != member {
            mismatches.push(json!({ "grammar": s.to_text(), "v": v.to_json(&c), "u": u.to_json(&c), "member": member }));
        }
    }
    let total = mismatches.len();
    mismatches.truncate(5);
    b.check(
        "u is an answer iff some loop ends with the counter at |v| + 1",
        total == 0,
        json!({ "cases": cases, "members": members, "mismatches": total, "first": mismatches }),
    );
    Ok(())
}

fn granularity(b: &mut Builder, opts: &SuiteOptions) -> Result<()> {
    let c = x_cfg(0, 3);
    let oracle = |k| SemanticsId::new(k, EngineChoice::Oracle { depth: 1 });
    let probe = default_probe(SemanticsKind::Aware, &c, 1)?;
    let s1 = finite_set("C", &["x := 1", "x := 1 + 1"]);
    let s2 = finite_set("C", &["if x == 0 then x := 1 else x := 1 + 1", "if !(x == 0) then x := 1 else x := 1 + 1"]);
    let fam = vec![(s1, "C".to_string()), (s2, "C".to_string())];
    let r = refines_on_family(&fam, oracle(SemanticsKind::AgnosticYellow), oracle(SemanticsKind::Aware), &probe, &probe, &c)?;
    b.check("agnostic-yellow identifies S1, S2; aware separates them", r == Refinement::Witness(0, 1), json!(format!("{r:?}")));

    let empty = Rtg::parse_validated("nonterm C : Stmt;")?;
    let spin = finite_set("C", &["while t do x := x"]);
    let fam = vec![(empty, "C".to_string()), (spin, "C".to_string())];
    let r = refines_on_family(&fam, oracle(SemanticsKind::AgnosticYellow), oracle(SemanticsKind::AgnosticGreen), &probe, &probe, &c)?;
    b.check("agnostic-yellow identifies ∅ and a spinning loop; agnostic-green separates them", r == Refinement::Witness(0, 1), json!(format!("{r:?}")));

    let queries = opts.cases.unwrap_or(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let states = enumerate_states(&c, &c.tracked_vars)?;
    let (mut done, mut failures) = (0usize, Vec::new());
    while done < queries {
        let loops = rng.gen_bool(0.5);
        let g = random_grammar(&mut rng, loops);
        let mut engine = VectorSemantics::new(&g, &c)?;
        for _ in 0..10.min(queries - done) {
            done += 1;
            let s = states[rng.gen_range(0..states.len())].clone();
            let single = engine.eval("S", &VState(vec![s.clone()]))?;
            let projected: BTreeSet<State> = single.iter().map(|u| u.0[0].clone()).collect();
            let agnostic = oracle_agnostic_yellow(&g, "S", RANDOM_DEPTH, std::slice::from_ref(&s), &c)?;
            let doubled = engine.eval("S", &VState(vec![s.clone(), s.clone()]))?;
            let want: BTreeSet<VState> = single.iter().map(|u| VState(vec![u.0[0].clone(), u.0[0].clone()])).collect();
            if projected != agnostic || doubled != want {
                failures.push(json!({ "grammar": g.to_text(), "input": s.to_json(&c) }));
            }
        }
    }
    let total = failures.len();
    failures.truncate(5);
    b.check("projection and duplication", total == 0, json!({ "queries": done, "failures": total, "first": failures }));
    Ok(())
}

fn pbe(b: &mut Builder) -> Result<()> {
    let c = x_cfg(0, 16);
    let g = finite_set("C", &["x := x + (1 + 1)", "x := x + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1)))))"]);
    let st = |x: i64| xs(&c, &[x]).remove(0);
    let brute = |ex: &[(State, State)]| -> Result<bool> {
        for p in g.enumerate("C", 4, 100)? {
            let mut ok = true;
            for (i, o) in ex {
                ok &= eval_yellow(&p, i, &c)?.contains(o);
            }
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let crossed = [(st(2), st(4)), (st(4), st(14))];
    let consistent = [(st(2), st(4)), (st(4), st(6))];
    for (label, ex, want) in [("crossed", &crossed, PbeVerdict::Unrealizable), ("consistent", &consistent, PbeVerdict::Realizable)] {
        let brute_realizable = brute(ex)?;
        for (engine_label, engine) in [("compositional", EngineChoice::Compositional), ("oracle", EngineChoice::Oracle { depth: 4 })] {
            let got = pbe_unrealizable(&g, "C", ex, engine, &c)?;
            b.check(
                &format!("{label} examples ({engine_label})"),
                got == want && brute_realizable == (want == PbeVerdict::Realizable),
                json!({ "verdict": got, "brute_force_realizable": brute_realizable }),
            );
        }
    }
    Ok(())
}
