use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_setsem"))
}

fn grammar(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../grammars").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn x_of(state: &Value) -> i64 {
    state["h"]["x"].as_i64().unwrap()
}

#[test]
fn enumerate_example_one() {
    let g = grammar("evenness.rtg");
    let o = run(&["--json", "--depth", "3", "enumerate", g.to_str().unwrap(), "E"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["result"]["terms"], json!(["0", "0 + (1 + 1)"]));
}

#[test]
fn enumerate_rejects_invalid_grammars() {
    let d = TempDir::new().unwrap();
    let g = write(&d, "bad.rtg", "nonterm N : Stmt; nonterm M : Exp; N ::= <M> + <M>;");
    let o = run(&["enumerate", &g]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid grammar"));
}

#[test]
fn enumerate_cap_exits_three() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"caps": {"max_programs": 2}}"#);
    let g = grammar("evenness.rtg");
    let o = run(&["--config", &cfg, "--depth", "8", "enumerate", g.to_str().unwrap(), "E"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn vector_semantics_of_two_additions() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 16}"#);
    let input = write(&d, "in.json", r#"[[{"h": {"x": 2}}, {"h": {"x": 4}}]]"#);
    let g = grammar("add_two_or_ten.rtg");
    for engine in ["compositional", "oracle"] {
        let o = run(&["--json", "--config", &cfg, "--engine", engine, "semantics", g.to_str().unwrap(), "--input", &input]);
        assert_eq!(code(&o), 0);
        let outs = stdout_json(&o)["result"]["result"]["outputs"].clone();
        let xs: Vec<Vec<i64>> = outs.as_array().unwrap().iter().map(|v| v.as_array().unwrap().iter().map(x_of).collect()).collect();
        assert_eq!(xs, vec![vec![4, 6], vec![12, 14]]);
    }
}

#[test]
fn loop_free_engine_rejects_loops() {
    let d = TempDir::new().unwrap();
    let input = write(&d, "in.json", r#"[{"h": {"x": 0}}]"#);
    let g = grammar("evenness.rtg");
    let o = run(&["semantics", g.to_str().unwrap(), "--input", &input, "--mode", "agnostic-yellow"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("loop"));
}

#[test]
fn empty_input_gives_empty_output() {
    let d = TempDir::new().unwrap();
    let input = write(&d, "in.json", "[]");
    let g = grammar("add_two_or_ten.rtg");
    for mode in ["agnostic-yellow", "agnostic-green", "vector-yellow", "vector-green"] {
        let o = run(&["--json", "semantics", g.to_str().unwrap(), "--input", &input, "--mode", mode]);
        assert_eq!(code(&o), 0, "{mode}");
        assert_eq!(stdout_json(&o)["result"]["result"]["outputs"], json!([]), "{mode}");
    }
}

#[test]
fn agnostic_green_reports_divergence() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 4}"#);
    let input = write(&d, "in.json", r#"[{"h": {"x": 0}}]"#);
    let g = write(&d, "g.rtg", "nonterm S : Stmt; S ::= while t do x := x | x := 1;");
    for engine in ["compositional", "oracle"] {
        let o = run(&["--json", "--config", &cfg, "--engine", engine, "semantics", &g, "--input", &input, "--mode", "agnostic-green"]);
        assert_eq!(code(&o), 0);
        let outs = stdout_json(&o)["result"]["result"]["outputs"].clone();
        assert_eq!(outs.as_array().unwrap().len(), 2);
        assert!(outs.as_array().unwrap().contains(&json!("↑")), "{engine}: {outs}");
    }
}

fn triple(dir: &TempDir, grammar_file: &Path, extra: Value) -> String {
    let mut t = json!({
        "pre": "x == 0",
        "grammar": format!("{}#W", grammar_file.display()),
        "post": "x % 2 == 0",
        "mode": "vector-yellow",
    });
    for (k, v) in extra.as_object().unwrap() {
        t[k] = v.clone();
    }
    write(dir, "triple.json", &t.to_string())
}

#[test]
fn evenness_triple_holds() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 8}"#);
    let t = triple(&d, &grammar("evenness.rtg"), json!({}));
    for engine in ["compositional", "oracle"] {
        let o = run(&["--json", "--config", &cfg, "--engine", engine, "--depth", "8", "check", &t]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout_json(&o)["result"]["verdict"]["verdict"], "holds");
    }
}

#[test]
fn guard_choice_triple_is_violated_at_two() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 8}"#);
    let t = triple(&d, &grammar("guard_choice.rtg"), json!({ "post": "x == 0 || x == 1", "mode": "agnostic-yellow" }));
    let o = run(&["--json", "--config", &cfg, "check", &t]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o)["result"]["verdict"].clone();
    assert_eq!(v["verdict"], "violated");
    assert_eq!(x_of(&v["output"][0]), 2);
}

#[test]
fn malformed_triples_exit_two() {
    let d = TempDir::new().unwrap();
    let t = write(&d, "t.json", r#"{"pre": "x == 0"}"#);
    assert_eq!(code(&run(&["check", &t])), 2);
    let t = write(&d, "t.json", "not json");
    assert_eq!(code(&run(&["check", &t])), 2);
    let t = triple(&d, &grammar("evenness.rtg"), json!({ "post": "x %% 2" }));
    assert_eq!(code(&run(&["check", &t])), 2);
}

#[test]
fn pbe_verdicts() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 16}"#);
    let g = grammar("add_two_or_ten.rtg");
    let crossed = write(&d, "crossed.json", r#"[[{"h":{"x":2}},{"h":{"x":4}}],[{"h":{"x":4}},{"h":{"x":14}}]]"#);
    let consistent = write(&d, "consistent.json", r#"[[{"h":{"x":2}},{"h":{"x":4}}],[{"h":{"x":4}},{"h":{"x":6}}]]"#);
    let o = run(&["--json", "--config", &cfg, "pbe", g.to_str().unwrap(), "--examples", &crossed]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["result"]["verdict"], "unrealizable");
    let o = run(&["--json", "--config", &cfg, "pbe", g.to_str().unwrap(), "--examples", &consistent]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["result"]["verdict"], "realizable");
}

#[test]
fn gadget_accepts_exactly_the_answers() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 4, "tracked_vars": ["x", "j"]}"#);
    let g = write(&d, "s.rtg", "nonterm S : Stmt; S ::= x := x + 1 | x := 0;");
    let yes = write(&d, "yes.json", r#"{"v": [{"h":{"x":1}}, {"h":{"x":2}}], "u": [{"h":{"x":2}}, {"h":{"x":3}}], "counter": "j"}"#);
    let no = write(&d, "no.json", r#"{"v": [{"h":{"x":1}}, {"h":{"x":2}}], "u": [{"h":{"x":2}}, {"h":{"x":0}}], "counter": "j"}"#);
    assert_eq!(code(&run(&["--config", &cfg, "gadget", &g, "--query", &yes])), 0);
    assert_eq!(code(&run(&["--config", &cfg, "gadget", &g, "--query", &no])), 1);
}

#[test]
fn granularity_witness() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"lo": 0, "hi": 3}"#);
    let s1 = write(&d, "s1.rtg", "nonterm C : Stmt; C ::= x := 1 | x := 1 + 1;");
    let s2 = write(&d, "s2.rtg", "nonterm C : Stmt; C ::= if x == 0 then x := 1 else x := 1 + 1 | if !(x == 0) then x := 1 else x := 1 + 1;");
    let base = ["--json", "--config", &cfg, "--engine", "oracle", "--depth", "2", "granularity", &s1, &s2];
    let o = run(&[&base[..], &["--fine", "agnostic-yellow", "--coarse", "aware"]].concat());
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["result"]["result"]["outcome"], "witness");
    let o = run(&[&base[..], &["--fine", "aware", "--coarse", "agnostic-yellow"]].concat());
    assert_eq!(code(&o), 0);
}

#[test]
fn replicate_suites() {
    for suite in ["noncompositionality", "reduce"] {
        let o = run(&["--json", "replicate", "--suite", suite]);
        assert_eq!(code(&o), 0, "{suite}");
        assert_eq!(stdout_json(&o)["result"]["passed"], true);
    }
    assert_eq!(code(&run(&["replicate", "--suite", "nope"])), 2);
}

#[test]
fn print_config_round_trips() {
    let o = run(&["--print-config"]);
    assert_eq!(code(&o), 0);
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", &String::from_utf8(o.stdout).unwrap());
    let g = grammar("evenness.rtg");
    assert_eq!(code(&run(&["--config", &cfg, "enumerate", g.to_str().unwrap()])), 0);
}

#[test]
fn reports_embed_the_config_digest() {
    let g = grammar("evenness.rtg");
    let a = stdout_json(&run(&["--json", "enumerate", g.to_str().unwrap()]));
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", r#"{"hi": 9}"#);
    let b = stdout_json(&run(&["--json", "--config", &cfg, "enumerate", g.to_str().unwrap()]));
    assert_eq!(a["config_digest"].as_str().unwrap().len(), 64);
    assert_ne!(a["config_digest"], b["config_digest"]);
}
