//! `setsem`: command-line front end for the set-semantics engines.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use setsem::concrete::{oracle_agnostic, oracle_aware_on};
use setsem::domain::{Caps, DVState, DomainConfig, State};
use setsem::granularity::{default_probe, refines_on_family, Refinement, SemanticsId, SemanticsKind};
use setsem::loopfree::AgnosticSemantics;
use setsem::replicate::{run_suite, SuiteOptions, SUITES};
use setsem::triples::{
    build_gadget_wvu, check_triple_report, pbe_unrealizable, EngineChoice, PbeVerdict, Pred, SetEvaluator, Triple,
    TripleMode,
};
use setsem::{Error, Rtg, VState};

#[derive(Parser, Debug)]
#[command(name = "setsem", version, about = "Semantics of grammar-defined sets of imperative programs")]
struct Cli {
    /// Domain configuration (JSON). Omitted fields take their defaults;
    /// omitted `tracked_vars` are inferred from the inputs.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = EngineArg::Compositional)]
    engine: EngineArg,

    /// Enumeration depth for `enumerate` and for the oracle engine.
    #[arg(long, global = true, default_value_t = 6)]
    depth: usize,

    /// Print the machine-readable report instead of a summary.
    #[arg(long, global = true)]
    json: bool,

    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Compositional,
    Oracle,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    AgnosticYellow,
    AgnosticGreen,
    Aware,
    VectorYellow,
    VectorGreen,
}

impl ModeArg {
    fn kind(self) -> SemanticsKind {
        match self {
            ModeArg::AgnosticYellow => SemanticsKind::AgnosticYellow,
            ModeArg::AgnosticGreen => SemanticsKind::AgnosticGreen,
            ModeArg::Aware => SemanticsKind::Aware,
            ModeArg::VectorYellow => SemanticsKind::VectorYellow,
            ModeArg::VectorGreen => SemanticsKind::VectorGreen,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the terms of a nonterminal up to `--depth`.
    Enumerate {
        grammar: PathBuf,
        /// Defaults to the grammar's start symbol.
        nonterminal: Option<String>,
    },
    /// Evaluate a set of programs on the inputs in a JSON file.
    Semantics {
        grammar: PathBuf,
        nonterminal: Option<String>,
        /// A JSON array of states (agnostic and aware modes) or vectors.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::VectorYellow)]
        mode: ModeArg,
    },
    /// Check a triple given as JSON.
    Check { triple: PathBuf },
    /// Decide whether input/output examples are unrealizable.
    Pbe {
        grammar: PathBuf,
        nonterminal: Option<String>,
        /// A JSON array of `[input, output]` state pairs.
        #[arg(long)]
        examples: PathBuf,
    },
    /// Build the loop set that tests one vector answer and run it.
    Gadget {
        grammar: PathBuf,
        nonterminal: Option<String>,
        /// `{"v": [..], "u": [..], "counter": "j", "sigma": state}`.
        #[arg(long)]
        query: PathBuf,
    },
    /// Look for two sets the finer semantics identifies but the coarser one
    /// separates.
    Granularity {
        /// Family members as `PATH` or `PATH#NONTERMINAL`.
        #[arg(required = true, num_args = 2..)]
        members: Vec<String>,
        #[arg(long, value_enum)]
        fine: ModeArg,
        #[arg(long, value_enum)]
        coarse: ModeArg,
        /// Longest probe vector for the vector semantics.
        #[arg(long, default_value_t = 2)]
        max_len: usize,
    },
    /// Run a replication suite.
    Replicate {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = SuiteOptions::default().seed)]
        seed: u64,
        /// Number of random instances for the randomized suites.
        #[arg(long)]
        cases: Option<usize>,
    },
}

/// The on-disk configuration: every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    lo: Option<i64>,
    hi: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tracked_vars: Option<Vec<String>>,
    #[serde(default)]
    caps: Caps,
}

enum Failure {
    Input(String),
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_resource() {
            Failure::Resource(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input_err(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

struct Ctx {
    file: ConfigFile,
    engine: EngineChoice,
    depth: usize,
}

impl Ctx {
    /// The domain for a run, inferring tracked variables when the
    /// configuration leaves them open.
    fn domain(&self, inferred: impl IntoIterator<Item = String>) -> Outcome<DomainConfig> {
        let d = DomainConfig::default();
        let vars = match &self.file.tracked_vars {
            Some(v) => v.clone(),
            None => {
                let v: BTreeSet<String> = inferred.into_iter().collect();
                if v.is_empty() {
                    d.tracked_vars.clone()
                } else {
                    v.into_iter().collect()
                }
            }
        };
        let mut cfg = DomainConfig::new(self.file.lo.unwrap_or(d.lo), self.file.hi.unwrap_or(d.hi), vars)?;
        cfg.caps = self.file.caps.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn digest(cfg: &DomainConfig) -> String {
    let text = serde_json::to_string(cfg).expect("configs serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Outcome<Json> {
    serde_json::from_str(&read(path)?).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path, nonterminal: Option<&str>) -> Outcome<(Rtg, String)> {
    let g = Rtg::parse_validated(&read(path)?).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let n = nonterminal.map(str::to_string).unwrap_or_else(|| g.start.clone());
    g.sort_of(&n)?;
    Ok((g, n))
}

/// `PATH` or `PATH#NONTERMINAL`, relative paths resolved against `base`.
fn load_member(spec: &str, base: &Path) -> Outcome<(Rtg, String)> {
    let (path, n) = match spec.rsplit_once('#') {
        Some((p, n)) => (p, Some(n)),
        None => (spec, None),
    };
    load_grammar(&base.join(path), n)
}

fn engine_name(e: EngineChoice) -> Json {
    serde_json::to_value(e).expect("engine choices serialize")
}

struct Report {
    result: Json,
    stats: Json,
    /// Exit code for a completed run: 0 or 1.
    code: u8,
    summary: Vec<String>,
}

fn stats_json<T: Serialize>(s: Option<T>) -> Json {
    s.map(|s| serde_json::to_value(s).expect("stats serialize")).unwrap_or(Json::Null)
}

fn enumerate(ctx: &Ctx, grammar: &Path, n: Option<&str>) -> Outcome<(DomainConfig, Report)> {
    let (g, n) = load_grammar(grammar, n)?;
    let cfg = ctx.domain(g.grammar_vars(&n))?;
    let terms: Vec<String> = g.enumerate(&n, ctx.depth, cfg.caps.max_programs)?.iter().map(|t| t.to_string()).collect();
    let summary = terms.clone();
    Ok((
        cfg,
        Report {
            result: json!({ "nonterminal": n, "depth": ctx.depth, "count": terms.len(), "terms": terms }),
            stats: Json::Null,
            code: 0,
            summary,
        },
    ))
}

fn semantics(ctx: &Ctx, grammar: &Path, n: Option<&str>, input: &Path, mode: ModeArg) -> Outcome<(DomainConfig, Report)> {
    let (g, n) = load_grammar(grammar, n)?;
    let cfg = ctx.domain(g.grammar_vars(&n))?;
    let raw = read_json(input)?;
    let items = raw.as_array().ok_or_else(|| input_err("the input file must hold a JSON array"))?;
    let vector_mode = matches!(mode, ModeArg::VectorYellow | ModeArg::VectorGreen);
    let (result, stats, summary) = if vector_mode {
        let inputs: Vec<DVState> = items.iter().map(|v| DVState::from_json(&cfg, v)).collect::<setsem::Result<_>>()?;
        let tmode = if mode == ModeArg::VectorGreen { TripleMode::VectorGreen } else { TripleMode::VectorYellow };
        let mut ev = SetEvaluator::new(&g, &n, tmode, ctx.engine, &cfg)?;
        let mut out: BTreeSet<DVState> = BTreeSet::new();
        for v in &inputs {
            out.extend(ev.outputs(v)?);
        }
        let out = if tmode.is_green() { setsem::vector_aware::reduce(&out) } else { out };
        let summary = out.iter().map(|v| v.to_json(&cfg).to_string()).collect();
        (json!({ "outputs": out.iter().map(|v| v.to_json(&cfg)).collect::<Vec<_>>() }), stats_json(ev.stats()), summary)
    } else {
        let states: Vec<State> = items.iter().map(|s| State::from_json(&cfg, s)).collect::<setsem::Result<_>>()?;
        match (mode, ctx.engine) {
            (ModeArg::Aware, EngineChoice::Oracle { depth }) => {
                let tables = if states.is_empty() { BTreeSet::new() } else { oracle_aware_on(&g, &n, depth, &states, &cfg)? };
                let rows: Vec<Json> = tables
                    .iter()
                    .map(|t| Json::Array(t.0.iter().map(|(s, o)| json!({ "input": s.to_json(&cfg), "output": o.to_json(&cfg) })).collect()))
                    .collect();
                let summary = vec![format!("{} distinct behaviors", rows.len())];
                (json!({ "behaviors": rows }), Json::Null, summary)
            }
            (ModeArg::Aware, EngineChoice::Compositional) => {
                return Err(input_err("the aware semantics is tabulated by enumeration; pass --engine oracle"));
            }
            (ModeArg::AgnosticYellow, EngineChoice::Compositional) => {
                let mut sem = AgnosticSemantics::new(&g, &cfg)?;
                let out = sem.eval(&n, &states)?;
                let summary = out.iter().map(|s| s.to_json(&cfg).to_string()).collect();
                (json!({ "outputs": out.iter().map(|s| s.to_json(&cfg)).collect::<Vec<_>>() }), stats_json(Some(sem.stats())), summary)
            }
            (_, EngineChoice::Oracle { depth }) => {
                let mut out = oracle_agnostic(&g, &n, depth, &states, &cfg)?;
                if mode == ModeArg::AgnosticYellow {
                    out.retain(|o| o.state().is_some());
                }
                let summary = out.iter().map(|o| o.to_json(&cfg).to_string()).collect();
                (json!({ "outputs": out.iter().map(|o| o.to_json(&cfg)).collect::<Vec<_>>() }), Json::Null, summary)
            }
            (_, EngineChoice::Compositional) => {
                let mut ev = SetEvaluator::new(&g, &n, TripleMode::AgnosticGreen, ctx.engine, &cfg)?;
                let mut out: BTreeSet<DVState> = BTreeSet::new();
                for s in &states {
                    out.extend(ev.outputs(&DVState::finite(vec![s.clone()]))?);
                }
                let flat: Vec<Json> = out
                    .iter()
                    .map(|v| if v.diverges { json!("↑") } else { v.entries[0].to_json(&cfg) })
                    .collect();
                let summary = flat.iter().map(|j| j.to_string()).collect();
                (json!({ "outputs": flat }), stats_json(ev.stats()), summary)
            }
        }
    };
    Ok((cfg, Report { result: json!({ "nonterminal": n, "mode": mode, "result": result }), stats, code: 0, summary }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleFile {
    pre: Json,
    grammar: String,
    post: Json,
    mode: TripleMode,
    #[serde(default)]
    engine: Option<EngineChoice>,
    #[serde(default)]
    max_len: Option<usize>,
}

fn check(ctx: &Ctx, path: &Path) -> Outcome<(DomainConfig, Report)> {
    let raw = read_json(path)?;
    let tf: TripleFile = serde_json::from_value(raw).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (g, n) = load_member(&tf.grammar, base)?;
    // Tracked variables must exist before predicates can be parsed against them.
    let mut vars = g.grammar_vars(&n);
    for p in [&tf.pre, &tf.post] {
        vars.extend(Pred::from_json(&DomainConfig::default(), p).map(|p| p.vars()).unwrap_or_default());
    }
    let cfg = ctx.domain(vars)?;
    let pre = Pred::from_json(&cfg, &tf.pre)?;
    let post = Pred::from_json(&cfg, &tf.post)?;
    let engine = tf.engine.unwrap_or(ctx.engine);
    let mut t = Triple::new(pre, g, &n, post, tf.mode).with_engine(engine);
    if let Some(m) = tf.max_len {
        t = t.with_max_len(m);
    }
    let r = check_triple_report(&t, &cfg)?;
    let summary = vec![match &r.verdict {
        setsem::triples::Verdict::Holds => format!("holds ({} inputs)", r.inputs_checked),
        setsem::triples::Verdict::Violated { input, output } => {
            format!("violated: input {} yields {}", input.to_json(&cfg), output.to_json(&cfg))
        }
    }];
    Ok((
        cfg.clone(),
        Report {
            result: json!({
                "nonterminal": n,
                "mode": tf.mode,
                "engine": engine_name(engine),
                "verdict": r.verdict.to_json(&cfg),
                "inputs_checked": r.inputs_checked,
            }),
            stats: stats_json(r.stats),
            code: if r.verdict.holds() { 0 } else { 1 },
            summary,
        },
    ))
}

fn pbe(ctx: &Ctx, grammar: &Path, n: Option<&str>, examples: &Path) -> Outcome<(DomainConfig, Report)> {
    let (g, n) = load_grammar(grammar, n)?;
    let cfg = ctx.domain(g.grammar_vars(&n))?;
    let raw = read_json(examples)?;
    let items = raw.as_array().ok_or_else(|| input_err("examples must be a JSON array of [input, output] pairs"))?;
    let mut pairs = Vec::with_capacity(items.len());
    for it in items {
        match it.as_array().map(Vec::as_slice) {
            Some([i, o]) => pairs.push((State::from_json(&cfg, i)?, State::from_json(&cfg, o)?)),
            _ => return Err(input_err(format!("example {it} is not an [input, output] pair"))),
        }
    }
    let verdict = pbe_unrealizable(&g, &n, &pairs, ctx.engine, &cfg)?;
    Ok((
        cfg,
        Report {
            result: json!({ "nonterminal": n, "examples": pairs.len(), "verdict": verdict }),
            stats: Json::Null,
            code: if verdict == PbeVerdict::Unrealizable { 0 } else { 1 },
            summary: vec![serde_json::to_value(verdict).expect("verdicts serialize").as_str().unwrap_or_default().to_string()],
        },
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GadgetQuery {
    v: Json,
    u: Json,
    counter: String,
    #[serde(default)]
    sigma: Option<Json>,
}

fn gadget(ctx: &Ctx, grammar: &Path, n: Option<&str>, query: &Path) -> Outcome<(DomainConfig, Report)> {
    let (g, n) = load_grammar(grammar, n)?;
    let raw = read_json(query)?;
    let q: GadgetQuery = serde_json::from_value(raw).map_err(|e| input_err(format!("{}: {e}", query.display())))?;
    let mut vars = g.grammar_vars(&n);
    vars.insert(q.counter.clone());
    let cfg = ctx.domain(vars)?;
    let v = VState::from_json(&cfg, &q.v)?;
    let u = VState::from_json(&cfg, &q.u)?;
    let sigma = match &q.sigma {
        Some(s) => State::from_json(&cfg, s)?,
        None => cfg.default_state(),
    };
    let gd = build_gadget_wvu(&g, &n, &v, &u, &q.counter, &cfg)?;
    let accepts = gd.accepts(&sigma, ctx.engine, &cfg)?;
    let program = gd.grammar.productions_of(&gd.start).next().map(|p| p.to_string()).unwrap_or_default();
    Ok((
        cfg,
        Report {
            result: json!({ "nonterminal": n, "start": gd.start, "loop": program, "target": gd.target, "accepts": accepts }),
            stats: Json::Null,
            code: if accepts { 0 } else { 1 },
            summary: vec![if accepts { "u is an answer for v".into() } else { "u is not an answer for v".into() }],
        },
    ))
}

fn granularity(ctx: &Ctx, members: &[String], fine: ModeArg, coarse: ModeArg, max_len: usize) -> Outcome<(DomainConfig, Report)> {
    let fam: Vec<(Rtg, String)> = members.iter().map(|m| load_member(m, Path::new("."))).collect::<Outcome<_>>()?;
    let cfg = ctx.domain(fam.iter().flat_map(|(g, n)| g.grammar_vars(n)))?;
    let (f, c) = (SemanticsId::new(fine.kind(), ctx.engine), SemanticsId::new(coarse.kind(), ctx.engine));
    let fp = default_probe(fine.kind(), &cfg, max_len)?;
    let cp = default_probe(coarse.kind(), &cfg, max_len)?;
    let r = refines_on_family(&fam, f, c, &fp, &cp, &cfg)?;
    let (result, code, line) = match r {
        Refinement::NoCounterexample => (json!({ "outcome": "no-counterexample" }), 0, "no counterexample on this family".to_string()),
        Refinement::Witness(i, j) => (
            json!({ "outcome": "witness", "pair": [members[i], members[j]] }),
            1,
            format!("witness: {} and {}", members[i], members[j]),
        ),
    };
    Ok((
        cfg,
        Report {
            result: json!({ "fine": fine, "coarse": coarse, "members": members, "probe_sizes": [fp.len(), cp.len()], "result": result }),
            stats: Json::Null,
            code,
            summary: vec![line],
        },
    ))
}

fn replicate(suite: &str, seed: u64, cases: Option<usize>) -> Outcome<(DomainConfig, Report)> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(input_err(format!("unknown suite `{suite}` (one of: all, {})", SUITES.join(", "))));
    }
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let opts = SuiteOptions { seed, cases };
    let reports = names.iter().map(|s| run_suite(s, &opts)).collect::<setsem::Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let summary = reports
        .iter()
        .flat_map(|r| r.checks.iter().map(move |c| format!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, r.suite, c.name)))
        .collect();
    Ok((
        DomainConfig::default(),
        Report {
            result: json!({ "passed": passed, "suites": reports }),
            stats: Json::Null,
            code: if passed { 0 } else { 1 },
            summary,
        },
    ))
}

fn run(cli: &Cli) -> Outcome<u8> {
    let file = match &cli.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?,
        None => ConfigFile::default(),
    };
    let engine = match cli.engine {
        EngineArg::Compositional => EngineChoice::Compositional,
        EngineArg::Oracle => EngineChoice::Oracle { depth: cli.depth },
    };
    let ctx = Ctx { file, engine, depth: cli.depth };
    if cli.print_config {
        let d = DomainConfig::default();
        let shown = ConfigFile { lo: ctx.file.lo.or(Some(d.lo)), hi: ctx.file.hi.or(Some(d.hi)), ..ctx.file.clone() };
        println!("{}", serde_json::to_string_pretty(&shown).expect("configs serialize"));
        return Ok(0);
    }
    let Some(cmd) = &cli.command else {
        return Err(input_err("no command given; see --help"));
    };
    let (echo, (cfg, report)) = match cmd {
        Command::Enumerate { grammar, nonterminal } => (
            json!({ "command": "enumerate", "grammar": grammar, "nonterminal": nonterminal, "depth": cli.depth }),
            enumerate(&ctx, grammar, nonterminal.as_deref())?,
        ),
        Command::Semantics { grammar, nonterminal, input, mode } => (
            json!({ "command": "semantics", "grammar": grammar, "nonterminal": nonterminal, "input": input, "mode": mode, "engine": engine_name(engine) }),
            semantics(&ctx, grammar, nonterminal.as_deref(), input, *mode)?,
        ),
        Command::Check { triple } => (json!({ "command": "check", "triple": triple, "engine": engine_name(engine) }), check(&ctx, triple)?),
        Command::Pbe { grammar, nonterminal, examples } => (
            json!({ "command": "pbe", "grammar": grammar, "nonterminal": nonterminal, "examples": examples, "engine": engine_name(engine) }),
            pbe(&ctx, grammar, nonterminal.as_deref(), examples)?,
        ),
        Command::Gadget { grammar, nonterminal, query } => (
            json!({ "command": "gadget", "grammar": grammar, "nonterminal": nonterminal, "query": query, "engine": engine_name(engine) }),
            gadget(&ctx, grammar, nonterminal.as_deref(), query)?,
        ),
        Command::Granularity { members, fine, coarse, max_len } => (
            json!({ "command": "granularity", "members": members, "fine": fine, "coarse": coarse, "max_len": max_len, "engine": engine_name(engine) }),
            granularity(&ctx, members, *fine, *coarse, *max_len)?,
        ),
        Command::Replicate { suite, seed, cases } => {
            (json!({ "command": "replicate", "suite": suite, "seed": seed, "cases": cases }), replicate(suite, *seed, *cases)?)
        }
    };
    if cli.json {
        let out = json!({
            "command": echo,
            "config": cfg,
            "config_digest": digest(&cfg),
            "result": report.result,
            "stats": report.stats,
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("reports serialize"));
    } else {
        for line in &report.summary {
            println!("{line}");
        }
        println!("config {}", &digest(&cfg)[..16]);
    }
    Ok(report.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    ExitCode::from(code)
}
