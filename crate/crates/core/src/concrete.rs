//! Single-program evaluation and the enumeration-based oracles for sets of
//! programs.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde_json::{json, Value as Json};

use crate::ast::{Sort, Term};
use crate::compile::{compile_term, Node};
use crate::domain::{enumerate_states, DVState, DomainConfig, State, VState, Value};
use crate::error::{Error, Result};
use crate::grammar::Rtg;
use crate::vector_aware::{reduce, truncate, RawDVector};

/// Result of running one program on one state: a state or `↑`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    State(State),
    Diverge,
}

impl Outcome {
    pub fn state(&self) -> Option<&State> {
        match self {
            Outcome::State(s) => Some(s),
            Outcome::Diverge => None,
        }
    }

    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        match self {
            Outcome::State(s) => s.to_json(cfg),
            Outcome::Diverge => json!("↑"),
        }
    }
}

pub(crate) fn exp(n: &Node, s: &State, cfg: &DomainConfig) -> Value {
    match n {
        Node::Var(i) => s.var(*i),
        Node::Zero => cfg.clamp(0),
        Node::One => cfg.clamp(1),
        Node::Add(a, b) => cfg.clamp(exp(a, s, cfg) as i128 + exp(b, s, cfg) as i128),
        Node::Sub(a, b) => cfg.clamp(exp(a, s, cfg) as i128 - exp(b, s, cfg) as i128),
        _ => unreachable!("not an integer expression: {n:?}"),
    }
}

pub(crate) fn bexp(n: &Node, s: &State, cfg: &DomainConfig) -> bool {
    match n {
        Node::True => true,
        Node::False => false,
        Node::Not(b) => !bexp(b, s, cfg),
        Node::And(a, b) => {
            // Both operands are evaluated on σ; neither has side effects.
            let (x, y) = (bexp(a, s, cfg), bexp(b, s, cfg));
            x && y
        }
        Node::Lt(a, b) => exp(a, s, cfg) < exp(b, s, cfg),
        Node::Eq(a, b) => exp(a, s, cfg) == exp(b, s, cfg),
        _ => unreachable!("not a Boolean expression: {n:?}"),
    }
}

/// Loop-iteration budget shared across one top-level evaluation.
pub(crate) struct Budget {
    left: u64,
    limit: u64,
}

impl Budget {
    pub(crate) fn new(limit: u64) -> Budget {
        Budget { left: limit, limit }
    }

    fn tick(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::resource("loop iterations in one concrete evaluation", self.limit));
        }
        self.left -= 1;
        Ok(())
    }
}

/// Statement evaluation; `None` is divergence.
pub(crate) fn stmt(n: &Node, s: &State, cfg: &DomainConfig, budget: &mut Budget) -> Result<Option<State>> {
    match n {
        Node::Assign(x, e) => Ok(Some(s.set_var(*x, exp(e, s, cfg)))),
        Node::Seq(a, b) => match stmt(a, s, cfg, budget)? {
            Some(mid) => stmt(b, &mid, cfg, budget),
            None => Ok(None),
        },
        Node::If(g, s1, s2) => {
            if bexp(g, s, cfg) {
                stmt(s1, s, cfg, budget)
            } else {
                stmt(s2, s, cfg, budget)
            }
        }
        Node::While(g, body) => {
            // A deterministic loop that revisits a loop-head state never exits.
            let mut seen: HashSet<State> = HashSet::new();
            let mut cur = s.clone();
            loop {
                if !bexp(g, &cur, cfg) {
                    return Ok(Some(cur));
                }
                if !seen.insert(cur.clone()) {
                    return Ok(None);
                }
                budget.tick()?;
                match stmt(body, &cur, cfg, budget)? {
                    Some(next) => cur = next,
                    None => return Ok(None),
                }
            }
        }
        _ => unreachable!("not a statement: {n:?}"),
    }
}

/// Runs a compiled hole-free node of any sort.
pub(crate) fn run(n: &Node, sort: Sort, s: &State, cfg: &DomainConfig, budget: &mut Budget) -> Result<Outcome> {
    Ok(match sort {
        Sort::Exp => Outcome::State(s.set_e_t(exp(n, s, cfg))),
        Sort::BExp => Outcome::State(s.set_b_t(bexp(n, s, cfg))),
        Sort::Stmt => match stmt(n, s, cfg, budget)? {
            Some(t) => Outcome::State(t),
            None => Outcome::Diverge,
        },
    })
}

/// Divergence-aware single-program semantics.
pub fn eval_green(c: &Term, s: &State, cfg: &DomainConfig) -> Result<Outcome> {
    s.validate(cfg)?;
    let n = compile_term(c, cfg)?;
    run(&n, c.sort(), s, cfg, &mut Budget::new(cfg.caps.max_steps))
}

/// Divergence-agnostic single-program semantics: empty on divergence.
pub fn eval_yellow(c: &Term, s: &State, cfg: &DomainConfig) -> Result<BTreeSet<State>> {
    Ok(eval_green(c, s, cfg)?.state().cloned().into_iter().collect())
}

/// Reference interpreter that gives up after `fuel` loop iterations in
/// total, returning `None`. Used to cross-check revisit detection.
pub fn eval_with_fuel(c: &Term, s: &State, cfg: &DomainConfig, fuel: u64) -> Result<Option<State>> {
    fn go(n: &Node, s: &State, cfg: &DomainConfig, fuel: &mut u64) -> Option<State> {
        match n {
            Node::Assign(x, e) => Some(s.set_var(*x, exp(e, s, cfg))),
            Node::Seq(a, b) => go(a, s, cfg, fuel).and_then(|m| go(b, &m, cfg, fuel)),
            Node::If(g, s1, s2) => go(if bexp(g, s, cfg) { s1 } else { s2 }, s, cfg, fuel),
            Node::While(g, body) => {
                let mut cur = s.clone();
                while bexp(g, &cur, cfg) {
                    if *fuel == 0 {
                        return None;
                    }
                    *fuel -= 1;
                    cur = go(body, &cur, cfg, fuel)?;
                }
                Some(cur)
            }
            _ => unreachable!(),
        }
    }
    if c.sort() != Sort::Stmt {
        return eval_green(c, s, cfg).map(|o| o.state().cloned());
    }
    let n = compile_term(c, cfg)?;
    let mut fuel = fuel;
    Ok(go(&n, s, cfg, &mut fuel))
}

fn programs(g: &Rtg, n: &str, depth: usize, cfg: &DomainConfig) -> Result<Vec<(Node, Sort)>> {
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidGrammar(violations));
    }
    let sort = g.sort_of(n)?;
    g.enumerate(n, depth, cfg.caps.max_programs)?
        .iter()
        .map(|t| Ok((compile_term(t, cfg)?, sort)))
        .collect()
}

/// `⋃_{c ∈ L(n), depth ≤ d} ⋃_{σ ∈ X} ⟦c⟧(σ)`, with `↑` for divergence.
pub fn oracle_agnostic(g: &Rtg, n: &str, depth: usize, xs: &[State], cfg: &DomainConfig) -> Result<BTreeSet<Outcome>> {
    for s in xs {
        s.validate(cfg)?;
    }
    let progs = programs(g, n, depth, cfg)?;
    let mut out = BTreeSet::new();
    for (p, sort) in &progs {
        for s in xs {
            out.insert(run(p, *sort, s, cfg, &mut Budget::new(cfg.caps.max_steps))?);
        }
    }
    Ok(out)
}

/// Yellow projection of [`oracle_agnostic`].
pub fn oracle_agnostic_yellow(g: &Rtg, n: &str, depth: usize, xs: &[State], cfg: &DomainConfig) -> Result<BTreeSet<State>> {
    Ok(oracle_agnostic(g, n, depth, xs, cfg)?.into_iter().filter_map(|o| o.state().cloned()).collect())
}

/// The extensional behavior of one program over a fixed state enumeration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BehaviorTable(pub Vec<(State, Outcome)>);

impl BehaviorTable {
    pub fn get(&self, s: &State) -> Option<&Outcome> {
        self.0.binary_search_by(|(k, _)| k.cmp(s)).ok().map(|i| &self.0[i].1)
    }
}

/// Behavior tables of a single term over `enumerate_states(vars)`.
pub fn behavior_table(c: &Term, vars: &[String], cfg: &DomainConfig) -> Result<BehaviorTable> {
    let n = compile_term(c, cfg)?;
    let states = enumerate_states(cfg, vars)?;
    let mut rows = Vec::with_capacity(states.len());
    for s in states {
        let o = run(&n, c.sort(), &s, cfg, &mut Budget::new(cfg.caps.max_steps))?;
        rows.push((s, o));
    }
    Ok(BehaviorTable(rows))
}

/// The distinct behavior tables of the enumerated programs, over the states
/// that vary `grammar_vars(g, n)`.
pub fn oracle_aware(g: &Rtg, n: &str, depth: usize, cfg: &DomainConfig) -> Result<BTreeSet<BehaviorTable>> {
    let vars: Vec<String> = g.grammar_vars(n).into_iter().collect();
    oracle_aware_over(g, n, depth, &vars, cfg)
}

/// As [`oracle_aware`], tabulated over the states varying `vars`.
pub fn oracle_aware_over(g: &Rtg, n: &str, depth: usize, vars: &[String], cfg: &DomainConfig) -> Result<BTreeSet<BehaviorTable>> {
    oracle_aware_on(g, n, depth, &enumerate_states(cfg, vars)?, cfg)
}

/// The distinct behaviors of the enumerated programs on the given states.
pub fn oracle_aware_on(g: &Rtg, n: &str, depth: usize, states: &[State], cfg: &DomainConfig) -> Result<BTreeSet<BehaviorTable>> {
    let mut states = states.to_vec();
    states.sort();
    states.dedup();
    for s in &states {
        s.validate(cfg)?;
    }
    let progs = programs(g, n, depth, cfg)?;
    let total = states.len().saturating_mul(progs.len());
    if total > cfg.caps.max_table_entries {
        return Err(Error::resource("behavior-table rows", cfg.caps.max_table_entries));
    }
    let mut out = BTreeSet::new();
    for (p, sort) in &progs {
        let mut rows = Vec::with_capacity(states.len());
        for s in &states {
            rows.push((s.clone(), run(p, *sort, s, cfg, &mut Budget::new(cfg.caps.max_steps))?));
        }
        out.insert(BehaviorTable(rows));
    }
    Ok(out)
}

fn check_vectors<'a>(vs: impl IntoIterator<Item = &'a [State]>, cfg: &DomainConfig) -> Result<()> {
    for v in vs {
        if v.len() > cfg.caps.max_vector_len {
            return Err(Error::resource(format!("vector of length {}", v.len()), cfg.caps.max_vector_len));
        }
        for s in v {
            s.validate(cfg)?;
        }
    }
    Ok(())
}

/// Entrywise results of every enumerated program, `↑` kept in place.
pub fn bad_lift(g: &Rtg, n: &str, depth: usize, v: &VState, cfg: &DomainConfig) -> Result<BTreeSet<RawDVector>> {
    check_vectors([v.0.as_slice()], cfg)?;
    let progs = programs(g, n, depth, cfg)?;
    let mut out = BTreeSet::new();
    for (p, sort) in &progs {
        let mut row = Vec::with_capacity(v.len());
        for s in &v.0 {
            row.push(run(p, *sort, s, cfg, &mut Budget::new(cfg.caps.max_steps))?);
        }
        out.insert(row);
    }
    Ok(out)
}

/// The enumerated programs of a nonterminal with their per-state outcomes
/// memoized, for answering many vector queries against one language.
pub struct Enumerated {
    progs: Vec<(Node, Sort)>,
    memo: Vec<HashMap<State, Outcome>>,
    cfg: DomainConfig,
}

impl Enumerated {
    pub fn new(g: &Rtg, n: &str, depth: usize, cfg: &DomainConfig) -> Result<Self> {
        let progs = programs(g, n, depth, cfg)?;
        let memo = vec![HashMap::new(); progs.len()];
        Ok(Enumerated { progs, memo, cfg: cfg.clone() })
    }

    pub fn len(&self) -> usize {
        self.progs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.progs.is_empty()
    }

    fn outcome(&mut self, i: usize, s: &State) -> Result<Outcome> {
        if let Some(o) = self.memo[i].get(s) {
            return Ok(o.clone());
        }
        let (p, sort) = &self.progs[i];
        let o = run(p, *sort, s, &self.cfg, &mut Budget::new(self.cfg.caps.max_steps))?;
        self.memo[i].insert(s.clone(), o.clone());
        Ok(o)
    }

    /// Divergence-agnostic vector outputs: a program contributes only if it
    /// converges on every entry.
    pub fn vector(&mut self, vs: &[VState]) -> Result<BTreeSet<VState>> {
        check_vectors(vs.iter().map(|v| v.0.as_slice()), &self.cfg)?;
        let mut out = BTreeSet::new();
        for i in 0..self.progs.len() {
            'vec: for v in vs {
                let mut row = Vec::with_capacity(v.len());
                for s in &v.0 {
                    match self.outcome(i, s)? {
                        Outcome::State(t) => row.push(t),
                        Outcome::Diverge => continue 'vec,
                    }
                }
                out.insert(VState(row));
            }
        }
        Ok(out)
    }

    /// Divergence-aware vector outputs before the final reduction.
    pub fn vector_truncated(&mut self, vs: &[DVState]) -> Result<BTreeSet<DVState>> {
        check_vectors(vs.iter().map(|v| v.entries.as_slice()), &self.cfg)?;
        let mut raw: BTreeSet<RawDVector> = BTreeSet::new();
        for i in 0..self.progs.len() {
            for v in vs {
                let mut row = Vec::with_capacity(v.total_len());
                for s in &v.entries {
                    let o = self.outcome(i, s)?;
                    let stop = o == Outcome::Diverge;
                    row.push(o);
                    if stop {
                        break;
                    }
                }
                if v.diverges {
                    row.push(Outcome::Diverge);
                }
                raw.insert(row);
            }
        }
        Ok(truncate(&raw))
    }

    /// Divergence-aware vector outputs.
    pub fn vector_green(&mut self, vs: &[DVState]) -> Result<BTreeSet<DVState>> {
        Ok(reduce(&self.vector_truncated(vs)?))
    }
}

/// Divergence-agnostic vector oracle: a program contributes its entrywise
/// outputs only if it converges on every entry.
pub fn oracle_vector(g: &Rtg, n: &str, depth: usize, vs: &[VState], cfg: &DomainConfig) -> Result<BTreeSet<VState>> {
    check_vectors(vs.iter().map(|v| v.0.as_slice()), cfg)?;
    Enumerated::new(g, n, depth, cfg)?.vector(vs)
}

/// Divergence-aware vector oracle: entrywise outputs cut at the first `↑`,
/// unioned over programs and inputs, then reduced. A diverging input runs
/// its prefix and then diverges.
pub fn oracle_vector_green(g: &Rtg, n: &str, depth: usize, vs: &[DVState], cfg: &DomainConfig) -> Result<BTreeSet<DVState>> {
    Ok(reduce(&oracle_vector_truncated(g, n, depth, vs, cfg)?))
}

/// [`oracle_vector_green`] before the final reduction.
pub fn oracle_vector_truncated(g: &Rtg, n: &str, depth: usize, vs: &[DVState], cfg: &DomainConfig) -> Result<BTreeSet<DVState>> {
    check_vectors(vs.iter().map(|v| v.entries.as_slice()), cfg)?;
    Enumerated::new(g, n, depth, cfg)?.vector_truncated(vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_term;
    use crate::domain::enumerate_valuations;

    fn cfg(lo: Value, hi: Value) -> DomainConfig {
        DomainConfig::new(lo, hi, ["x"]).unwrap()
    }

    fn st(c: &DomainConfig, x: Value) -> State {
        State::with_vars(c, &[("x", x)]).unwrap()
    }

    fn finite(sort: Sort, progs: &[&str]) -> Rtg {
        let terms: Vec<Term> = progs.iter().map(|p| parse_term(p).unwrap()).collect();
        Rtg::finite("C", sort, &terms)
    }

    #[test]
    fn constant_assignment() {
        let c = cfg(0, 8);
        for s in enumerate_states(&c, &["x".into()]).unwrap() {
            let out = eval_green(&parse_term("x := 1 + 1").unwrap(), &s, &c).unwrap();
            assert_eq!(out, Outcome::State(s.set_var(0, 2)));
        }
    }

    #[test]
    fn self_loop_diverges() {
        let c = cfg(0, 8);
        let w = parse_term("while x == 1 do x := x").unwrap();
        assert_eq!(eval_green(&w, &st(&c, 1), &c).unwrap(), Outcome::Diverge);
        assert!(eval_yellow(&w, &st(&c, 1), &c).unwrap().is_empty());
        assert_eq!(eval_green(&w, &st(&c, 0), &c).unwrap(), Outcome::State(st(&c, 0)));
    }

    #[test]
    fn expressions_write_e_t() {
        let c = cfg(0, 8);
        let s = st(&c, 3).set_e_t(5).set_b_t(true);
        assert_eq!(eval_green(&Term::zero(), &s, &c).unwrap(), Outcome::State(s.set_e_t(0)));
        assert_eq!(eval_green(&parse_term("x + 1").unwrap(), &s, &c).unwrap(), Outcome::State(s.set_e_t(4)));
        assert_eq!(eval_green(&parse_term("x < 1").unwrap(), &s, &c).unwrap(), Outcome::State(s.set_b_t(false)));
        // Statements leave e_t and b_t alone.
        assert_eq!(eval_green(&parse_term("x := x + 1").unwrap(), &s, &c).unwrap(), Outcome::State(s.set_var(0, 4)));
    }

    #[test]
    fn assign_ten() {
        let c = cfg(0, 12);
        let ten = Term::assign("x", Term::numeral(10));
        assert_eq!(eval_yellow(&ten, &st(&c, 3), &c).unwrap(), [st(&c, 10)].into());
    }

    #[test]
    fn saturation_keeps_divergence() {
        let c = cfg(0, 8);
        let w = parse_term("while x > 1 + 1 + 1 do x := x + 1").unwrap();
        assert_eq!(eval_green(&w, &st(&c, 4), &c).unwrap(), Outcome::Diverge);
        assert_eq!(eval_green(&w, &st(&c, 3), &c).unwrap(), Outcome::State(st(&c, 3)));
    }

    #[test]
    fn step_budget_is_an_error() {
        let mut c = cfg(0, 8);
        c.caps.max_steps = 3;
        let w = parse_term("while x < 1 + 1 + 1 + 1 + 1 + 1 do x := x + 1").unwrap();
        assert!(eval_green(&w, &st(&c, 0), &c).unwrap_err().is_resource());
    }

    #[test]
    fn agnostic_oracle_examples() {
        let c = cfg(0, 8);
        let s1 = finite(Sort::Stmt, &["x := 1", "x := 1 + 1"]);
        let out = oracle_agnostic_yellow(&s1, "C", 1, &[st(&c, 5)], &c).unwrap();
        assert_eq!(out, [st(&c, 1), st(&c, 2)].into());

        let empty = Rtg::parse_validated("nonterm C : Stmt;").unwrap();
        assert!(oracle_agnostic(&empty, "C", 3, &[st(&c, 0)], &c).unwrap().is_empty());

        let spin = finite(Sort::Stmt, &["while t do x := x"]);
        assert_eq!(oracle_agnostic(&spin, "C", 1, &[st(&c, 0)], &c).unwrap(), [Outcome::Diverge].into());
        assert!(oracle_agnostic_yellow(&spin, "C", 1, &[st(&c, 0)], &c).unwrap().is_empty());
    }

    #[test]
    fn aware_oracle_examples() {
        let c = cfg(0, 8);
        let s1 = finite(Sort::Stmt, &["x := 1", "x := 1 + 1"]);
        let s2 = finite(Sort::Stmt, &["if x == 0 then x := 1 else x := 1 + 1", "if !(x == 0) then x := 1 + 1 else x := 1"]);
        let a1 = oracle_aware(&s1, "C", 1, &c).unwrap();
        let a2 = oracle_aware(&s2, "C", 1, &c).unwrap();
        let assign1 = behavior_table(&parse_term("x := 1").unwrap(), &["x".into()], &c).unwrap();
        assert!(a1.contains(&assign1));
        assert!(!a2.contains(&assign1));
        assert_eq!(oracle_aware(&finite(Sort::Stmt, &["x := 1"]), "C", 1, &c).unwrap().len(), 1);
        assert_eq!(oracle_aware(&finite(Sort::Stmt, &["x := x", "x := 0 + x"]), "C", 1, &c).unwrap().len(), 1);
    }

    #[test]
    fn vector_oracle_examples() {
        let c = cfg(0, 16);
        let s = finite(Sort::Stmt, &["x := x + (1 + 1)", "x := x + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1 + (1 + 1)))))"]);
        let v = VState(vec![st(&c, 2), st(&c, 4)]);
        let out = oracle_vector(&s, "C", 1, &[v], &c).unwrap();
        let want: BTreeSet<VState> =
            [VState(vec![st(&c, 4), st(&c, 6)]), VState(vec![st(&c, 12), st(&c, 14)])].into();
        assert_eq!(out, want);

        let w = finite(Sort::Stmt, &["while x < 1 + 1 do x := x - 1"]);
        let v = VState(vec![st(&c, 2), st(&c, 4), st(&c, 1)]);
        assert!(oracle_vector(&w, "C", 1, &[v], &c).unwrap().is_empty());
        assert_eq!(oracle_vector(&w, "C", 1, &[VState(vec![])], &c).unwrap(), [VState(vec![])].into());
    }

    #[test]
    fn green_vector_oracle_examples() {
        let c = cfg(0, 8);
        let w = finite(Sort::Stmt, &["while x == 1 do x := x", "while x == 1 + 1 do x := x"]);
        let v = DVState::finite(vec![st(&c, 1), st(&c, 2)]);
        assert_eq!(oracle_vector_green(&w, "C", 1, &[v], &c).unwrap(), [DVState::diverging(vec![])].into());

        let w = finite(Sort::Stmt, &["while x > 1 + 1 + 1 do x := x + 1"]);
        let v = DVState::finite((1..=4).map(|x| st(&c, x)).collect());
        let want = DVState::diverging((1..=3).map(|x| st(&c, x)).collect());
        assert_eq!(oracle_vector_green(&w, "C", 1, &[v], &c).unwrap(), [want].into());
    }

    #[test]
    fn bad_lift_keeps_divergence_in_place() {
        let c = cfg(0, 8);
        let w = finite(Sort::Stmt, &["while x == 1 do x := x", "while x == 1 + 1 do x := x"]);
        let out = bad_lift(&w, "C", 1, &VState(vec![st(&c, 1), st(&c, 2)]), &c).unwrap();
        let want: BTreeSet<RawDVector> = [
            vec![Outcome::Diverge, Outcome::State(st(&c, 2))],
            vec![Outcome::State(st(&c, 1)), Outcome::Diverge],
        ]
        .into();
        assert_eq!(out, want);
    }

    #[test]
    fn revisit_detection_matches_fuel() {
        let c = cfg(0, 3);
        let progs = [
            "while x < 1 + 1 do x := x + 1",
            "while !(x == 0) do x := x - 1",
            "while x < 1 + 1 do { if x == 1 then x := 0 else x := x + 1 }",
            "while t do { while x < 1 + 1 + 1 do x := x + 1; x := 0 }",
            "while x == 1 + 1 do x := x",
            "while !(x == 0) do { x := x - 1; while x == 1 do x := x + 1 }",
        ];
        let fuel = 2 * 4 * 4 + 1;
        for p in progs {
            let t = parse_term(p).unwrap();
            for s in enumerate_valuations(&c, &["x".into()]).unwrap() {
                let green = eval_green(&t, &s, &c).unwrap();
                let fuelled = eval_with_fuel(&t, &s, &c, fuel * fuel).unwrap();
                assert_eq!(green.state().cloned(), fuelled, "{p} on {s:?}");
            }
        }
    }
}
