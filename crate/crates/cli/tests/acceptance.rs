//! One line per acceptance criterion. Each criterion runs the library check
//! under a pinned time bound and compares it against an oracle written here,
//! directly over native integers.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setsem::ast::{parse_term, Sort};
use setsem::loopfree::noncompositionality_witness;
use setsem::replicate::{evenness_grammar, run_suite, SuiteOptions};
use setsem::triples::{pbe_unrealizable, EngineChoice, PbeVerdict};
use setsem::vector_agnostic::eval_vector;
use setsem::vector_aware::reduce;
use setsem::{DVState, DomainConfig, Rtg, State, VState};
use tempfile::TempDir;

struct Outcome {
    ok: bool,
    elapsed: Duration,
    note: String,
}

fn criterion(n: usize, title: &str, bound: Duration, body: impl FnOnce() -> (bool, String)) -> bool {
    let start = Instant::now();
    let (ok, note) = body();
    let r = Outcome { ok, elapsed: start.elapsed(), note };
    let pass = r.ok && r.elapsed <= bound;
    writeln!(
        std::io::stdout().lock(),
        "criterion {n}: {} {title} [{:.3}s, bound {}s] {}",
        if pass { "PASS" } else { "FAIL" },
        r.elapsed.as_secs_f64(),
        bound.as_secs(),
        r.note
    )
    .expect("stdout is writable");
    pass
}

fn suite(name: &str) -> (bool, String) {
    let rep = run_suite(name, &SuiteOptions::default()).expect("suite runs");
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    (rep.passed, format!("suite {name}: {} checks, failed {:?}", rep.checks.len(), failed))
}

fn cfg(lo: i64, hi: i64) -> DomainConfig {
    DomainConfig::new(lo, hi, ["x"]).unwrap()
}

fn st(c: &DomainConfig, x: i64) -> State {
    State::with_vars(c, &[("x", x)]).unwrap()
}

fn vx(c: &DomainConfig, xs: &[i64]) -> VState {
    VState(xs.iter().map(|x| st(c, *x)).collect())
}

fn x_sets(c: &DomainConfig, vs: &BTreeSet<VState>) -> BTreeSet<Vec<i64>> {
    let i = c.var_index("x").unwrap();
    vs.iter().map(|v| v.0.iter().map(|s| s.var(i)).collect()).collect()
}

/// Runs `while guard(x) do x := step(x)` over `[lo, hi]`; `None` on a repeated state.
fn run_loop(x0: i64, lo: i64, hi: i64, guard: impl Fn(i64) -> bool, step: impl Fn(i64) -> i64) -> Option<i64> {
    let mut seen = BTreeSet::new();
    let mut x = x0;
    while guard(x) {
        if !seen.insert(x) {
            return None;
        }
        x = step(x).clamp(lo, hi);
    }
    Some(x)
}

/// Entrywise run of one deterministic program on a vector; `None` if any entry diverges.
fn run_vec(xs: &[i64], f: impl Fn(i64) -> Option<i64>) -> Option<Vec<i64>> {
    xs.iter().map(|x| f(*x)).collect()
}

fn noncompositionality() -> (bool, String) {
    let (ok, note) = suite("noncompositionality");
    let c = cfg(0, 8);
    let r = noncompositionality_witness(&c).unwrap();
    let loops = |k: i64| -> BTreeSet<i64> {
        [run_loop(0, 0, 8, |x| x == k, |x| x + 1), run_loop(0, 0, 8, |x| x != k, |x| x + 1)]
            .into_iter()
            .flatten()
            .collect()
    };
    let guards = |k: i64| (0..=8).map(|x| BTreeSet::from([x == k, x != k])).collect::<Vec<_>>();
    let expected = (loops(1), loops(2));
    let agree = r.guards_agree == (guards(1) == guards(2))
        && (r.w1_x_values.clone(), r.w2_x_values.clone()) == expected
        && expected == (BTreeSet::from([0, 1]), BTreeSet::from([0, 2]));
    (ok && agree, format!("{note}; W1 {:?}, W2 {:?}", r.w1_x_values, r.w2_x_values))
}

fn evenness() -> (bool, String) {
    let (ok, note) = suite("evenness");
    let c = cfg(0, 8);
    let out = x_sets(&c, &eval_vector(&evenness_grammar(), "W", &[vx(&c, &[0])], &c).unwrap());
    let native: BTreeSet<Vec<i64>> =
        (0..=8).filter_map(|k| run_loop(0, 0, 8, |x| x < (2 * k).min(8), |x| x + 1)).map(|x| vec![x]).collect();
    let want: BTreeSet<Vec<i64>> = [0, 2, 4, 6, 8].iter().map(|x| vec![*x]).collect();
    (ok && out == native && native == want, format!("{note}; outputs {out:?}"))
}

fn fig6_examples() -> (bool, String) {
    let (ok, note) = suite("vector-examples");
    let c = cfg(0, 16);
    let adds = Rtg::finite(
        "C",
        Sort::Stmt,
        &[
            parse_term("x := x + (1 + 1)").unwrap(),
            parse_term("x := x + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1)))))").unwrap(),
        ],
    );
    let got = x_sets(&c, &eval_vector(&adds, "C", &[vx(&c, &[2, 4])], &c).unwrap());
    let native: BTreeSet<Vec<i64>> =
        [2, 10].iter().filter_map(|k| run_vec(&[2, 4], |x| Some((x + k).min(16)))).collect();
    let w = Rtg::finite("C", Sort::Stmt, &[parse_term("while x < 1 + 1 do x := x - 1").unwrap()]);
    let down = |x: i64| run_loop(x, 0, 16, |x| x < 2, |x| x - 1);
    let mut agree = got == native;
    for v in [vec![2, 4], vec![2, 4, 1]] {
        let lib = x_sets(&c, &eval_vector(&w, "C", &[vx(&c, &v)], &c).unwrap());
        let nat: BTreeSet<Vec<i64>> = run_vec(&v, down).into_iter().collect();
        agree &= lib == nat;
    }
    (ok && agree, format!("{note}; two additions give {got:?}"))
}

/// Keeps finite vectors; a diverging vector becomes its shortest diverging prefix in the set.
fn reduce_reference(xs: &BTreeSet<DVState>) -> BTreeSet<DVState> {
    xs.iter()
        .map(|v| {
            if !v.diverges {
                return v.clone();
            }
            (0..=v.entries.len())
                .map(|k| DVState::diverging(v.entries[..k].to_vec()))
                .find(|p| xs.contains(p))
                .expect("a vector is its own prefix")
        })
        .collect()
}

fn green_pipeline() -> (bool, String) {
    let (ok, note) = suite("reduce");
    let c = cfg(0, 8);
    let pool = [st(&c, 0), st(&c, 1), st(&c, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let set: BTreeSet<DVState> = (0..rng.gen_range(0..=6))
            .map(|_| {
                let entries = (0..rng.gen_range(0..=3)).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
                DVState { entries, diverges: rng.gen_bool(0.6) }
            })
            .collect();
        let r = reduce(&set);
        if r != reduce_reference(&set) || reduce(&r) != r {
            mismatches += 1;
        }
    }
    (ok && mismatches == 0, format!("{note}; {mismatches} mismatches against the reference reduce"))
}

fn pbe() -> (bool, String) {
    let (ok, note) = suite("pbe");
    let c = cfg(0, 16);
    let g = Rtg::parse_validated(&std::fs::read_to_string(grammar("add_two_or_ten.rtg")).unwrap()).unwrap();
    let start = g.nonterminals().next().unwrap().0.to_string();
    let brute = |ex: &[(i64, i64)]| [2, 10].iter().any(|k| ex.iter().all(|(i, o)| (i + k).min(16) == *o));
    let mut agree = true;
    for ex in [[(2, 4), (4, 14)], [(2, 4), (4, 6)]] {
        let pairs: Vec<(State, State)> = ex.iter().map(|(i, o)| (st(&c, *i), st(&c, *o))).collect();
        let got = pbe_unrealizable(&g, &start, &pairs, EngineChoice::Compositional, &c).unwrap();
        agree &= (got == PbeVerdict::Realizable) == brute(&ex);
    }
    (ok && agree && !brute(&[(2, 4), (4, 14)]) && brute(&[(2, 4), (4, 6)]), note)
}

fn grammar(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../grammars").join(name)
}

fn determinism() -> (bool, String) {
    let d = TempDir::new().unwrap();
    let put = |name: &str, text: &str| {
        let p = d.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let g = |name: &str| grammar(name).to_str().unwrap().to_string();
    let cfg16 = put("c16.json", r#"{"lo": 0, "hi": 16}"#);
    let cfg8 = put("c8.json", r#"{"lo": 0, "hi": 8}"#);
    let cfg_g = put("cg.json", r#"{"lo": 0, "hi": 4, "tracked_vars": ["x", "j"]}"#);
    let vec_in = put("v.json", r#"[[{"h": {"x": 2}}, {"h": {"x": 4}}]]"#);
    let st_in = put("s.json", r#"[{"h": {"x": 2}}, {"h": {"x": 0}}]"#);
    let triple = put(
        "t.json",
        &format!(r#"{{"pre": "x == 0", "grammar": "{}#W", "post": "x % 2 == 0", "mode": "vector-yellow"}}"#, g("evenness.rtg")),
    );
    let examples = put("e.json", r#"[[{"h":{"x":2}},{"h":{"x":4}}],[{"h":{"x":4}},{"h":{"x":14}}]]"#);
    let query = put("q.json", r#"{"v": [{"h":{"x":1}}], "u": [{"h":{"x":3}}], "counter": "j"}"#);
    let s1 = put("s1.rtg", "nonterm C : Stmt; C ::= x := 1 | x := 1 + 1;");
    let s2 = put("s2.rtg", "nonterm C : Stmt; C ::= if x == 0 then x := 1 else x := 1 + 1 | if !(x == 0) then x := 1 else x := 1 + 1;");
    let adds = g("add_two_or_ten.rtg");
    let even = g("evenness.rtg");
    let mut runs: Vec<Vec<&str>> = vec![
        vec!["enumerate", &even, "E"],
        vec!["--config", &cfg16, "semantics", &adds, "--input", &vec_in],
        vec!["--config", &cfg16, "--engine", "oracle", "semantics", &adds, "--input", &vec_in, "--mode", "vector-green"],
        vec!["--config", &cfg16, "semantics", &adds, "--input", &st_in, "--mode", "agnostic-green"],
        vec!["--config", &cfg16, "--engine", "oracle", "semantics", &adds, "--input", &st_in, "--mode", "aware"],
        vec!["--config", &cfg8, "check", &triple],
        vec!["--config", &cfg16, "pbe", &adds, "--examples", &examples],
        vec!["--config", &cfg_g, "gadget", &adds, "--query", &query],
        vec!["--config", &cfg8, "--engine", "oracle", "--depth", "2", "granularity", &s1, &s2, "--fine", "agnostic-yellow", "--coarse", "aware"],
    ];
    for s in ["noncompositionality", "vector-examples", "pbe", "granularity"] {
        runs.push(vec!["replicate", "--suite", s, "--cases", "20"]);
    }
    let mut differing = Vec::new();
    for args in &runs {
        let once = || {
            let o = Command::new(env!("CARGO_BIN_EXE_setsem")).arg("--json").args(args).output().unwrap();
            assert!(matches!(o.status.code(), Some(0 | 1)), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            o.stdout
        };
        let (a, b) = (once(), once());
        if a != b || a.is_empty() {
            differing.push(args[args.iter().position(|a| !a.starts_with('-') && !a.contains('/')).unwrap_or(0)]);
        }
    }
    (differing.is_empty(), format!("{} commands, differing {differing:?}", runs.len()))
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "noncompositionality counterexample", secs(1), noncompositionality),
        criterion(2, "Example 1 evenness", secs(5), evenness),
        criterion(3, "vector worked examples", secs(1), fig6_examples),
        criterion(4, "oracle vs compositional equivalence", secs(600), || suite("equivalence")),
        criterion(5, "green pipeline and reduce", secs(60), green_pipeline),
        criterion(6, "gadget iff-property", secs(120), || suite("gadget")),
        criterion(7, "granularity witnesses", secs(60), || suite("granularity")),
        criterion(8, "PBE unrealizability", secs(1), pbe),
        criterion(9, "CLI determinism", secs(120), determinism),
    ];
    assert!(results.iter().all(|p| *p), "some acceptance criteria failed");
}
