//! Unrealizability triples `{|P|} C {|Q|}`, example-based unrealizability,
//! the grammar-disjunction rule and the loop gadget `W_{v,u}`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::ast::{Op, Pattern, Sort, Term};
use crate::concrete::Enumerated;
use crate::domain::{enumerate_states, DVState, DomainConfig, State, VState, RESERVED};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::grammar::Rtg;
use crate::vector::EngineStats;
use crate::vector_agnostic::VectorSemantics;
use crate::vector_aware::GreenVectorSemantics;

/// A set of (vector-)states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    Explicit(BTreeSet<DVState>),
    /// Vectors whose entries all satisfy `formula`, with length in
    /// `min_len..=max_len`. Diverging vectors belong only when `diverge` is set.
    Pointwise { formula: Formula, min_len: usize, max_len: Option<usize>, diverge: bool },
}

fn canonical(v: &DVState) -> (usize, &DVState) {
    (v.total_len(), v)
}

impl Pred {
    pub fn pointwise(text: &str) -> Result<Pred> {
        Ok(Pred::Pointwise { formula: Formula::parse(text)?, min_len: 0, max_len: None, diverge: false })
    }

    /// Singleton vectors of the given states.
    pub fn states(states: impl IntoIterator<Item = State>) -> Pred {
        Pred::Explicit(states.into_iter().map(|s| DVState::finite(vec![s])).collect())
    }

    pub fn vars(&self) -> BTreeSet<String> {
        match self {
            Pred::Explicit(_) => BTreeSet::new(),
            Pred::Pointwise { formula, .. } => formula.vars(),
        }
    }

    pub fn contains(&self, v: &DVState, cfg: &DomainConfig) -> Result<bool> {
        match self {
            Pred::Explicit(set) => Ok(set.contains(v)),
            Pred::Pointwise { formula, min_len, max_len, diverge } => {
                let len = v.total_len();
                if len < *min_len || max_len.is_some_and(|m| len > m) || (v.diverges && !diverge) {
                    return Ok(false);
                }
                for s in &v.entries {
                    if !formula.eval(s, cfg)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// The members of total length at most `max_len`, shortest first and
    /// then in lexicographic order.
    pub fn to_vectors(&self, cfg: &DomainConfig, max_len: usize) -> Result<Vec<DVState>> {
        let mut out: Vec<DVState> = match self {
            Pred::Explicit(set) => set.iter().filter(|v| v.total_len() <= max_len).cloned().collect(),
            Pred::Pointwise { formula, min_len, max_len: own_max, diverge } => {
                let top = own_max.map_or(max_len, |m| m.min(max_len));
                let mut base = Vec::new();
                for s in enumerate_states(cfg, &cfg.tracked_vars)? {
                    if formula.eval(&s, cfg)? {
                        base.push(s);
                    }
                }
                let mut out = Vec::new();
                let mut layer: Vec<Vec<State>> = vec![Vec::new()];
                for len in 0..=top {
                    if len >= *min_len {
                        out.extend(layer.iter().map(|e| DVState::finite(e.clone())));
                    }
                    if *diverge && len + 1 >= *min_len && len < top {
                        out.extend(layer.iter().map(|e| DVState::diverging(e.clone())));
                    }
                    if len == top {
                        break;
                    }
                    if out.len().saturating_add(layer.len().saturating_mul(base.len())) > cfg.caps.max_states {
                        return Err(Error::resource("predicate expansion", cfg.caps.max_states));
                    }
                    layer = layer
                        .iter()
                        .flat_map(|e| base.iter().map(move |s| [e.as_slice(), std::slice::from_ref(s)].concat()))
                        .collect();
                }
                out
            }
        };
        out.sort_by(|a, b| canonical(a).cmp(&canonical(b)));
        Ok(out)
    }

    /// A formula string, `{"formula": .., "min_len": .., "max_len": ..,
    /// "diverge": ..}`, `{"states": [..]}` or `{"vectors": [..]}`.
    pub fn from_json(cfg: &DomainConfig, j: &Json) -> Result<Pred> {
        match j {
            Json::String(s) => Pred::pointwise(s),
            Json::Object(o) if o.contains_key("formula") => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Raw {
                    formula: String,
                    #[serde(default)]
                    min_len: usize,
                    max_len: Option<usize>,
                    #[serde(default)]
                    diverge: bool,
                }
                let r: Raw = serde_json::from_value(j.clone()).map_err(|e| Error::input(format!("predicate: {e}")))?;
                Ok(Pred::Pointwise { formula: Formula::parse(&r.formula)?, min_len: r.min_len, max_len: r.max_len, diverge: r.diverge })
            }
            Json::Object(o) if o.len() == 1 && o.contains_key("states") => {
                let arr = o["states"].as_array().ok_or_else(|| Error::input("`states` must be an array"))?;
                Ok(Pred::states(arr.iter().map(|s| State::from_json(cfg, s)).collect::<Result<Vec<_>>>()?))
            }
            Json::Object(o) if o.len() == 1 && o.contains_key("vectors") => {
                let arr = o["vectors"].as_array().ok_or_else(|| Error::input("`vectors` must be an array"))?;
                Ok(Pred::Explicit(arr.iter().map(|v| DVState::from_json(cfg, v)).collect::<Result<_>>()?))
            }
            _ => Err(Error::input("a predicate is a formula string, {\"formula\": ..}, {\"states\": [..]} or {\"vectors\": [..]}")),
        }
    }

    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        match self {
            Pred::Explicit(set) => json!({ "vectors": set.iter().map(|v| v.to_json(cfg)).collect::<Vec<_>>() }),
            Pred::Pointwise { formula, min_len, max_len, diverge } => {
                json!({ "formula": formula.to_string(), "min_len": min_len, "max_len": max_len, "diverge": diverge })
            }
        }
    }
}

/// Which semantics a triple is judged under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripleMode {
    AgnosticYellow,
    AgnosticGreen,
    VectorYellow,
    VectorGreen,
}

impl TripleMode {
    pub fn is_green(self) -> bool {
        matches!(self, TripleMode::AgnosticGreen | TripleMode::VectorGreen)
    }

    pub fn is_vector(self) -> bool {
        matches!(self, TripleMode::VectorYellow | TripleMode::VectorGreen)
    }
}

impl std::str::FromStr for TripleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Json::String(s.to_string()))
            .map_err(|_| Error::input(format!("unknown mode `{s}` (agnostic-yellow, agnostic-green, vector-yellow, vector-green)")))
    }
}

/// How denotations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    Compositional,
    /// Enumeration of every program up to the given derivation depth.
    Oracle { depth: usize },
}

/// Per-input outputs of a set of programs under one mode and engine.
///
/// Agnostic modes are evaluated on singleton vectors, whose answers are
/// exactly the per-state outputs (with `[↑]` standing for `↑`).
pub struct SetEvaluator {
    inner: Inner,
    n: String,
}

enum Inner {
    Yellow(VectorSemantics),
    Green(GreenVectorSemantics),
    Oracle { set: Box<Enumerated>, green: bool },
}

impl SetEvaluator {
    pub fn new(g: &Rtg, n: &str, mode: TripleMode, engine: EngineChoice, cfg: &DomainConfig) -> Result<Self> {
        g.sort_of(n)?;
        let inner = match (engine, mode.is_green()) {
            (EngineChoice::Compositional, false) => Inner::Yellow(VectorSemantics::new(g, cfg)?),
            (EngineChoice::Compositional, true) => Inner::Green(GreenVectorSemantics::new(g, cfg)?),
            (EngineChoice::Oracle { depth }, green) => {
                Inner::Oracle { set: Box::new(Enumerated::new(g, n, depth, cfg)?), green }
            }
        };
        Ok(SetEvaluator { inner, n: n.to_string() })
    }

    pub fn outputs(&mut self, v: &DVState) -> Result<BTreeSet<DVState>> {
        match &mut self.inner {
            Inner::Yellow(e) => {
                if v.diverges {
                    return Ok(BTreeSet::new());
                }
                Ok(e.eval(&self.n, &VState(v.entries.clone()))?.into_iter().map(DVState::from).collect())
            }
            Inner::Green(e) => e.eval(&self.n, v),
            Inner::Oracle { set, green: true } => set.vector_green(std::slice::from_ref(v)),
            Inner::Oracle { set, green: false } => {
                if v.diverges {
                    return Ok(BTreeSet::new());
                }
                let out = set.vector(&[VState(v.entries.clone())])?;
                Ok(out.into_iter().map(DVState::from).collect())
            }
        }
    }

    pub fn stats(&self) -> Option<EngineStats> {
        match &self.inner {
            Inner::Yellow(e) => Some(e.stats()),
            Inner::Green(e) => Some(e.stats()),
            Inner::Oracle { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub pre: Pred,
    pub grammar: Rtg,
    pub nonterminal: String,
    pub post: Pred,
    pub mode: TripleMode,
    pub engine: EngineChoice,
    /// Longest input vector drawn from `pre` in vector modes.
    pub max_len: usize,
}

impl Triple {
    pub fn new(pre: Pred, grammar: Rtg, nonterminal: &str, post: Pred, mode: TripleMode) -> Triple {
        Triple { pre, grammar, nonterminal: nonterminal.to_string(), post, mode, engine: EngineChoice::Compositional, max_len: 1 }
    }

    pub fn with_engine(self, engine: EngineChoice) -> Triple {
        Triple { engine, ..self }
    }

    pub fn with_max_len(self, max_len: usize) -> Triple {
        Triple { max_len, ..self }
    }

    fn inputs(&self, cfg: &DomainConfig) -> Result<Vec<DVState>> {
        let len = if self.mode.is_vector() { self.max_len } else { 1 };
        let all = self.pre.to_vectors(cfg, len)?;
        Ok(all
            .into_iter()
            .filter(|v| {
                let agnostic_ok = self.mode.is_vector() || v.total_len() == 1;
                let green_ok = self.mode.is_green() || !v.diverges;
                agnostic_ok && green_ok
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// The least input with an output outside the postcondition, and the
    /// least such output, each ordered by length and then lexicographically.
    Violated { input: DVState, output: DVState },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        match self {
            Verdict::Holds => json!({ "verdict": "holds" }),
            Verdict::Violated { input, output } => {
                json!({ "verdict": "violated", "input": input.to_json(cfg), "output": output.to_json(cfg) })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub inputs_checked: usize,
    pub stats: Option<EngineStats>,
}

pub fn check_triple_report(t: &Triple, cfg: &DomainConfig) -> Result<CheckReport> {
    let mut ev = SetEvaluator::new(&t.grammar, &t.nonterminal, t.mode, t.engine, cfg)?;
    let inputs = t.inputs(cfg)?;
    let mut checked = 0;
    for v in &inputs {
        checked += 1;
        let mut bad: Vec<DVState> = Vec::new();
        for u in ev.outputs(v)? {
            if !t.post.contains(&u, cfg)? {
                bad.push(u);
            }
        }
        if let Some(output) = bad.into_iter().min_by(|a, b| canonical(a).cmp(&canonical(b))) {
            return Ok(CheckReport { verdict: Verdict::Violated { input: v.clone(), output }, inputs_checked: checked, stats: ev.stats() });
        }
    }
    Ok(CheckReport { verdict: Verdict::Holds, inputs_checked: checked, stats: ev.stats() })
}

/// Decides `⟦C⟧(P) ⊆ Q` under the triple's mode.
pub fn check_triple(t: &Triple, cfg: &DomainConfig) -> Result<Verdict> {
    Ok(check_triple_report(t, cfg)?.verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PbeVerdict {
    Realizable,
    Unrealizable,
}

/// Whether no single program in `L(n)` maps every example input to its
/// output.
pub fn pbe_unrealizable(g: &Rtg, n: &str, examples: &[(State, State)], engine: EngineChoice, cfg: &DomainConfig) -> Result<PbeVerdict> {
    if examples.is_empty() {
        return Err(Error::input("at least one example is required"));
    }
    if g.sort_of(n)? != Sort::Stmt {
        return Err(Error::input(format!("examples constrain statements, but `{n}` is not a statement nonterminal")));
    }
    let (ins, outs): (Vec<State>, Vec<State>) = examples.iter().cloned().unzip();
    let mut ev = SetEvaluator::new(g, n, TripleMode::VectorYellow, engine, cfg)?;
    let answers = ev.outputs(&DVState::finite(ins))?;
    Ok(if answers.contains(&DVState::finite(outs)) { PbeVerdict::Realizable } else { PbeVerdict::Unrealizable })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrmDisjReport {
    pub halves: Vec<(String, Verdict)>,
}

impl GrmDisjReport {
    pub fn holds(&self) -> bool {
        self.halves.iter().all(|(_, v)| v.holds())
    }
}

/// Checks a triple on `L(n)` by checking it on `L(n1)` and `L(n2)`, after
/// confirming that every production of `n` is a production of `n1` or `n2`.
pub fn grmdisj_check(t: &Triple, split: (&str, &str), cfg: &DomainConfig) -> Result<GrmDisjReport> {
    let g = &t.grammar;
    let sort = g.sort_of(&t.nonterminal)?;
    for half in [split.0, split.1] {
        if g.sort_of(half)? != sort {
            return Err(Error::input(format!("`{half}` does not have sort {sort}")));
        }
    }
    for rhs in g.productions_of(&t.nonterminal) {
        if !g.productions_of(split.0).chain(g.productions_of(split.1)).any(|p| p == rhs) {
            return Err(Error::input(format!(
                "production `{} ::= {rhs}` is in neither `{}` nor `{}`",
                t.nonterminal, split.0, split.1
            )));
        }
    }
    let mut halves = Vec::new();
    for half in [split.0, split.1] {
        let sub = Triple { nonterminal: half.to_string(), ..t.clone() };
        halves.push((half.to_string(), check_triple(&sub, cfg)?));
    }
    Ok(GrmDisjReport { halves })
}

/// The loop set `W_{v,u}` for a set of statements, as a grammar extension.
#[derive(Debug, Clone)]
pub struct Gadget {
    pub grammar: Rtg,
    pub start: String,
    pub counter: String,
    /// `|v| + 1`: the counter value reached exactly when every entry matches.
    pub target: i64,
}

fn cascade(counter: &str, branches: Vec<Term>) -> Term {
    let mut branches = branches;
    let mut acc = branches.pop().expect("at least one branch");
    for (k, b) in branches.into_iter().enumerate().rev() {
        let guard = Term::eq(Term::var(counter), Term::numeral(k as i64 + 1));
        acc = Term::ite(guard, b, acc);
    }
    acc
}

fn fresh_name(g: &Rtg, base: &str) -> String {
    let mut name = base.to_string();
    let mut k = 1;
    while g.sorts().contains_key(&name) {
        k += 1;
        name = format!("{base}{k}");
    }
    name
}

/// Builds, for every `s ∈ L(ns)`, the loop
///
/// ```text
/// j := 1;
/// while 0 < j && !(n < j) do {
///   vars(S) := v_j;  s;  if vars(S) == u_j then j := j + 1 else j := 0
/// }
/// ```
///
/// with constants written as sums of ones.
pub fn build_gadget_wvu(gs: &Rtg, ns: &str, v: &VState, u: &VState, counter: &str, cfg: &DomainConfig) -> Result<Gadget> {
    if gs.sort_of(ns)? != Sort::Stmt {
        return Err(Error::input(format!("`{ns}` is not a statement nonterminal")));
    }
    if v.is_empty() || v.len() != u.len() {
        return Err(Error::input(format!("v and u must be non-empty and of equal length (got {} and {})", v.len(), u.len())));
    }
    cfg.require_var(counter)?;
    let vars_s = gs.grammar_vars(ns);
    if vars_s.contains(counter) || RESERVED.contains(&counter) {
        return Err(Error::input(format!("counter `{counter}` must not occur in the statements")));
    }
    let n = v.len() as i64;
    if cfg.lo > 0 || cfg.hi < n + 1 {
        return Err(Error::Config(format!("the domain [{}, {}] cannot represent 0 and the counter bound {}", cfg.lo, cfg.hi, n + 1)));
    }
    let slots: Vec<(String, usize)> = vars_s.iter().map(|x| Ok((x.clone(), cfg.require_var(x)?))).collect::<Result<_>>()?;
    for (a, b) in v.0.iter().zip(&u.0) {
        a.validate(cfg)?;
        b.validate(cfg)?;
        let off = |s: &State| {
            let vals: Vec<i64> = (0..cfg.tracked_vars.len()).filter(|i| !slots.iter().any(|(_, k)| k == i)).map(|i| s.var(i)).collect();
            (vals, s.e_t(), s.b_t())
        };
        if off(a) != off(b) {
            return Err(Error::input(format!("u entry {b:?} does not agree with v entry {a:?} outside vars(S)")));
        }
    }

    let set = |s: &State| -> Term {
        if slots.is_empty() {
            return Term::assign(counter, Term::var(counter));
        }
        Term::seq_all(slots.iter().map(|(x, i)| Term::assign(x, Term::numeral(s.var(*i)))).collect())
    };
    let matches = |s: &State| -> Term {
        slots
            .iter()
            .map(|(x, i)| Term::eq(Term::var(x), Term::numeral(s.var(*i))))
            .reduce(Term::and)
            .unwrap_or_else(Term::tt)
    };
    let step = Term::assign(counter, Term::add(Term::var(counter), Term::one()));
    let reset = Term::assign(counter, Term::zero());
    let setup = cascade(counter, v.0.iter().map(set).collect());
    let check = cascade(counter, u.0.iter().map(|s| Term::ite(matches(s), step.clone(), reset.clone())).collect());
    let guard = Term::and(
        Term::lt(Term::zero(), Term::var(counter)),
        Term::not(Term::lt(Term::numeral(n), Term::var(counter))),
    );
    let op = |o: Op<Pattern>| Pattern::Op(Box::new(o));
    let body = op(Op::Seq(setup.as_pattern(), op(Op::Seq(Pattern::hole(ns), check.as_pattern()))));
    let looped = op(Op::Seq(Term::assign(counter, Term::one()).as_pattern(), op(Op::While(guard.as_pattern(), body))));

    let mut grammar = gs.clone();
    let start = fresh_name(gs, "Gadget");
    grammar.declare(&start, Sort::Stmt).add(&start, looped);
    grammar.start = start.clone();
    let violations = grammar.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidGrammar(violations));
    }
    Ok(Gadget { grammar, start, counter: counter.to_string(), target: n + 1 })
}

impl Gadget {
    /// Whether some loop in the gadget, run from `sigma`, ends with the
    /// counter at `n + 1`.
    pub fn accepts(&self, sigma: &State, engine: EngineChoice, cfg: &DomainConfig) -> Result<bool> {
        let j = cfg.require_var(&self.counter)?;
        let mut ev = SetEvaluator::new(&self.grammar, &self.start, TripleMode::AgnosticYellow, engine, cfg)?;
        let outs = ev.outputs(&DVState::finite(vec![sigma.clone()]))?;
        Ok(outs.iter().any(|o| o.entries[0].var(j) == self.target))
    }
}
