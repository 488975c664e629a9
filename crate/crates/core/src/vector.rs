//! Compositional vector-state engine shared by the divergence-agnostic and
//! divergence-aware semantics.
//!
//! Table keys are `(nonterminal, finite input vector)`. In green mode the
//! table holds every program's entrywise outputs cut at the first `↑`; the
//! occluder reduction is applied when answers leave the engine.

use std::cell::Cell;
use std::collections::{BTreeSet, HashSet};
use std::rc::Rc;

use crate::compile::{Compiled, Node};
use crate::concrete::{bexp, exp};
use crate::domain::{DVState, DomainConfig, State, VState};
use crate::error::{Error, Result};
use crate::fixpoint::{Reads, Solver, SolverStats};
use crate::grammar::Rtg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Yellow,
    Green,
}

pub(crate) type Answers = BTreeSet<DVState>;
type Key = (usize, VState);

/// Guard and body answer sources for the loop operator.
///
/// Answers are sets of output vectors for the given input vector. Guard
/// answers carry the guard outcome in `b_t`.
pub trait LoopParts {
    fn guard(&mut self, v: &[State]) -> Result<Rc<Answers>>;
    fn body(&mut self, v: &[State]) -> Result<Rc<Answers>>;
}

/// Counters reported alongside results.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct EngineStats {
    pub table_entries: usize,
    pub evaluations: u64,
    pub traces_explored: u64,
}

/// Entries of `v` where `vb` has `b_t = t` (or `f` when `keep` is false).
pub(crate) fn select(v: &[State], vb: &[State], keep: bool) -> Vec<State> {
    v.iter().zip(vb).filter(|(_, b)| b.b_t() == keep).map(|(s, _)| s.clone()).collect()
}

/// Merges `u1` (true positions) and `u2` (false positions) along `vb`.
/// A source that ends in `↑` before supplying its next entry makes the
/// result end in `↑` there.
pub(crate) fn merge(u1: &DVState, u2: &DVState, vb: &[State]) -> DVState {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(vb.len());
    for b in vb {
        let (src, k) = if b.b_t() { (u1, &mut i) } else { (u2, &mut j) };
        match src.entries.get(*k) {
            Some(s) => {
                out.push(s.clone());
                *k += 1;
            }
            None => return DVState::diverging(out),
        }
    }
    DVState::finite(out)
}

struct Search<'a, P: LoopParts> {
    parts: &'a mut P,
    v: &'a [State],
    mode: Mode,
    trace_limit: usize,
    node_limit: u64,
    nodes: u64,
    out: Answers,
}

/// One partial concatenation of per-entry loop traces.
#[derive(Clone)]
struct Partial {
    seg: usize,
    cur: State,
    guard_in: Vec<State>,
    guard_pat: Vec<bool>,
    body_in: Vec<State>,
    body_out: Vec<State>,
    finals: Vec<State>,
    seen: HashSet<State>,
}

impl<P: LoopParts> Search<'_, P> {
    fn run(mut self) -> Result<(Answers, u64)> {
        if self.v.is_empty() {
            if self.parts.guard(&[])?.contains(&DVState::finite(vec![])) && self.body_nonempty()? {
                self.out.insert(DVState::finite(vec![]));
            }
            return Ok((self.out, self.nodes));
        }
        let start = Partial {
            seg: 0,
            cur: self.v[0].clone(),
            guard_in: Vec::new(),
            guard_pat: Vec::new(),
            body_in: Vec::new(),
            body_out: Vec::new(),
            finals: Vec::new(),
            seen: HashSet::new(),
        };
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            self.nodes += 1;
            if self.nodes > self.node_limit {
                return Err(Error::resource(format!("loop trace search on a vector of length {}", self.v.len()), self.node_limit));
            }
            self.expand(p, &mut stack)?;
        }
        Ok((self.out, self.nodes))
    }

    fn body_nonempty(&mut self) -> Result<bool> {
        Ok(self.parts.body(&[])?.contains(&DVState::finite(vec![])))
    }

    fn expand(&mut self, p: Partial, stack: &mut Vec<Partial>) -> Result<()> {
        let mut q = p.guard_in.clone();
        q.push(p.cur.clone());
        let answers = self.parts.guard(&q)?;
        let k = p.guard_pat.len();
        let (mut can_exit, mut can_enter) = (false, false);
        for a in answers.iter() {
            if a.entries.len() == q.len() && a.entries[..k].iter().map(State::b_t).eq(p.guard_pat.iter().copied()) {
                if a.entries[k].b_t() {
                    can_enter = true;
                } else {
                    can_exit = true;
                }
            }
        }
        if can_exit {
            let mut finals = p.finals.clone();
            finals.push(p.cur.clone());
            if p.seg + 1 == self.v.len() {
                if !p.body_in.is_empty() || self.body_nonempty()? {
                    self.out.insert(DVState::finite(finals));
                }
            } else {
                let next = self.v[p.seg + 1].clone();
                let mut guard_pat = p.guard_pat.clone();
                guard_pat.push(false);
                stack.push(Partial {
                    seg: p.seg + 1,
                    cur: next,
                    guard_in: q.clone(),
                    guard_pat,
                    body_in: p.body_in.clone(),
                    body_out: p.body_out.clone(),
                    finals,
                    seen: HashSet::new(),
                });
            }
        }
        if !can_enter {
            return Ok(());
        }
        if p.seen.len() + 1 > self.trace_limit {
            return Err(Error::resource("loop trace length", self.trace_limit));
        }
        let mut bq = p.body_in.clone();
        bq.push(p.cur.clone());
        let answers = self.parts.body(&bq)?;
        let m = p.body_out.len();
        let mut nexts: BTreeSet<State> = BTreeSet::new();
        for o in answers.iter() {
            if o.entries.len() < m || o.entries[..m] != p.body_out[..] {
                continue;
            }
            if o.entries.len() == m {
                // The body diverges on the current state.
                if o.diverges && self.mode == Mode::Green {
                    self.out.insert(DVState::diverging(p.finals.clone()));
                }
                continue;
            }
            nexts.insert(o.entries[m].clone());
        }
        for next in nexts {
            if next == p.cur || p.seen.contains(&next) {
                // A lasso with the guard true on every state: the loop spins.
                if self.mode == Mode::Green {
                    self.out.insert(DVState::diverging(p.finals.clone()));
                }
                continue;
            }
            let mut guard_pat = p.guard_pat.clone();
            guard_pat.push(true);
            let mut body_out = p.body_out.clone();
            body_out.push(next.clone());
            let mut seen = p.seen.clone();
            seen.insert(p.cur.clone());
            stack.push(Partial {
                seg: p.seg,
                cur: next,
                guard_in: q.clone(),
                guard_pat,
                body_in: bq.clone(),
                body_out,
                finals: p.finals.clone(),
                seen,
            });
        }
        Ok(())
    }
}

/// Loop outputs on a finite vector from guard and body answer sources.
/// Returns the unreduced answers and the number of search nodes expanded.
pub(crate) fn loop_search<P: LoopParts>(parts: &mut P, v: &[State], mode: Mode, cfg: &DomainConfig) -> Result<(Answers, u64)> {
    Search {
        parts,
        v,
        mode,
        trace_limit: cfg.trace_limit(cfg.tracked_vars.len()),
        node_limit: cfg.caps.max_traces,
        nodes: 0,
        out: BTreeSet::new(),
    }
    .run()
}

pub(crate) struct Engine {
    comp: Compiled,
    cfg: DomainConfig,
    mode: Mode,
    solver: Solver<Key, Answers>,
    traces: Cell<u64>,
}

struct Ctx<'e, 'r, 's> {
    comp: &'e Compiled,
    cfg: &'e DomainConfig,
    mode: Mode,
    reads: &'r mut Reads<'s, Key, Answers>,
    traces: &'e Cell<u64>,
}

struct InlineLoop<'c, 'e, 'r, 's> {
    ctx: &'c mut Ctx<'e, 'r, 's>,
    guard: &'c Node,
    body: &'c Node,
}

impl LoopParts for InlineLoop<'_, '_, '_, '_> {
    fn guard(&mut self, v: &[State]) -> Result<Rc<Answers>> {
        self.ctx.eval(self.guard, v)
    }

    fn body(&mut self, v: &[State]) -> Result<Rc<Answers>> {
        self.ctx.eval(self.body, v)
    }
}

fn single(v: Vec<State>) -> Rc<Answers> {
    Rc::new([DVState::finite(v)].into())
}

impl Ctx<'_, '_, '_> {
    fn eval(&mut self, n: &Node, v: &[State]) -> Result<Rc<Answers>> {
        let cfg = self.cfg;
        Ok(match n {
            Node::Hole(i) => self.reads.get(&(*i, VState(v.to_vec())))?,
            Node::Var(_) | Node::Zero | Node::One => single(v.iter().map(|s| s.set_e_t(exp(n, s, cfg))).collect()),
            Node::True | Node::False => single(v.iter().map(|s| s.set_b_t(bexp(n, s, cfg))).collect()),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Lt(a, b) | Node::Eq(a, b) | Node::And(a, b) => {
                let (xs, ys) = (self.eval(a, v)?, self.eval(b, v)?);
                let mut out = BTreeSet::new();
                for x in xs.iter() {
                    for y in ys.iter() {
                        let row = v.iter().zip(&x.entries).zip(&y.entries).map(|((s, l), r)| match n {
                            Node::Add(..) => s.set_e_t(cfg.clamp(l.e_t() as i128 + r.e_t() as i128)),
                            Node::Sub(..) => s.set_e_t(cfg.clamp(l.e_t() as i128 - r.e_t() as i128)),
                            Node::Lt(..) => s.set_b_t(l.e_t() < r.e_t()),
                            Node::Eq(..) => s.set_b_t(l.e_t() == r.e_t()),
                            _ => s.set_b_t(l.b_t() && r.b_t()),
                        });
                        out.insert(DVState::finite(row.collect()));
                    }
                }
                Rc::new(out)
            }
            Node::Not(b) => {
                let bs = self.eval(b, v)?;
                Rc::new(
                    bs.iter()
                        .map(|u| DVState::finite(v.iter().zip(&u.entries).map(|(s, r)| s.set_b_t(!r.b_t())).collect()))
                        .collect(),
                )
            }
            Node::Assign(x, e) => {
                let es = self.eval(e, v)?;
                Rc::new(
                    es.iter()
                        .map(|u| DVState::finite(v.iter().zip(&u.entries).map(|(s, r)| s.set_var(*x, r.e_t())).collect()))
                        .collect(),
                )
            }
            Node::Seq(a, b) => {
                let firsts = self.eval(a, v)?;
                let mut out = BTreeSet::new();
                for u in firsts.iter() {
                    let seconds = self.eval(b, &u.entries)?;
                    if u.diverges {
                        for w in seconds.iter() {
                            out.insert(DVState::diverging(w.entries.clone()));
                        }
                    } else {
                        out.extend(seconds.iter().cloned());
                    }
                }
                Rc::new(out)
            }
            Node::If(g, s1, s2) => {
                let guards = self.eval(g, v)?;
                let mut out = BTreeSet::new();
                for vb in guards.iter() {
                    let then_in = select(v, &vb.entries, true);
                    let else_in = select(v, &vb.entries, false);
                    let thens = self.eval(s1, &then_in)?;
                    if thens.is_empty() {
                        continue;
                    }
                    let elses = self.eval(s2, &else_in)?;
                    for u1 in thens.iter() {
                        for u2 in elses.iter() {
                            out.insert(merge(u1, u2, &vb.entries));
                        }
                    }
                }
                Rc::new(out)
            }
            Node::While(g, s) => {
                let mode = self.mode;
                let cfg = self.cfg;
                let mut parts = InlineLoop { ctx: self, guard: g, body: s };
                let (out, nodes) = loop_search(&mut parts, v, mode, cfg)?;
                self.traces.set(self.traces.get() + nodes);
                Rc::new(out)
            }
        })
    }
}

impl Engine {
    pub(crate) fn new(g: &Rtg, cfg: &DomainConfig, mode: Mode) -> Result<Engine> {
        let comp = Compiled::new(g, cfg)?;
        Ok(Engine { comp, cfg: cfg.clone(), mode, solver: Solver::new(cfg.caps.max_table_entries), traces: Cell::new(0) })
    }

    pub(crate) fn stats(&self) -> EngineStats {
        let SolverStats { entries, evaluations } = self.solver.stats();
        EngineStats { table_entries: entries, evaluations, traces_explored: self.traces.get() }
    }

    /// Unreduced answers of `n` on a finite vector.
    pub(crate) fn query(&mut self, n: &str, v: &[State]) -> Result<Rc<Answers>> {
        if v.len() > self.cfg.caps.max_vector_len {
            return Err(Error::resource(format!("input vector of length {}", v.len()), self.cfg.caps.max_vector_len));
        }
        for s in v {
            s.validate(&self.cfg)?;
        }
        let nt = self.comp.nt(n)?;
        let comp = &self.comp;
        let cfg = &self.cfg;
        let mode = self.mode;
        let traces = &self.traces;
        self.solver.solve(&(nt, VState(v.to_vec())), &|(i, key), reads| {
            let mut ctx = Ctx { comp, cfg, mode, reads, traces };
            let mut acc = BTreeSet::new();
            for p in &ctx.comp.prods[*i] {
                acc.extend(ctx.eval(p, &key.0)?.iter().cloned());
            }
            Ok(acc)
        })
    }

    /// Unreduced answers on a possibly diverging input: the prefix runs and
    /// every output that has not already diverged gains a trailing `↑`.
    pub(crate) fn query_dv(&mut self, n: &str, v: &DVState) -> Result<Answers> {
        let ans = self.query(n, &v.entries)?;
        if !v.diverges {
            return Ok(ans.as_ref().clone());
        }
        Ok(ans.iter().map(|u| DVState::diverging(u.entries.clone())).collect())
    }
}
