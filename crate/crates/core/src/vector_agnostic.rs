//! Divergence-agnostic vector-state semantics, computed compositionally.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use crate::domain::{DVState, DomainConfig, State, VState};
use crate::error::{Error, Result};
use crate::grammar::Rtg;
use crate::vector::{loop_search, merge, select, Answers, Engine, EngineStats, LoopParts, Mode};

fn check_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::input(format!("{what}: length {a} does not match guard vector length {b}")));
    }
    Ok(())
}

/// Entries of `v` at the positions where `vb` has `b_t = t`.
pub fn filter(v: &VState, vb: &VState) -> Result<VState> {
    check_len("filter", v.len(), vb.len())?;
    Ok(VState(select(&v.0, &vb.0, true)))
}

/// Entries of `v` at the positions where `vb` has `b_t = f`.
pub fn filter_not(v: &VState, vb: &VState) -> Result<VState> {
    check_len("filter", v.len(), vb.len())?;
    Ok(VState(select(&v.0, &vb.0, false)))
}

/// Takes the next entry of `u1` where `vb` is true and of `u2` where false.
pub fn interleave(u1: &VState, u2: &VState, vb: &VState) -> Result<VState> {
    let trues = vb.0.iter().filter(|s| s.b_t()).count();
    check_len("interleave (true side)", u1.len(), trues)?;
    check_len("interleave (false side)", u2.len(), vb.len() - trues)?;
    Ok(merge(&DVState::finite(u1.0.clone()), &DVState::finite(u2.0.clone()), &vb.0).into_vstate())
}

/// Guard and body denotations given as explicit finite tables. Queries
/// absent from a table answer `∅`.
#[derive(Debug, Clone, Default)]
pub struct LoopTables {
    pub guard: BTreeMap<Vec<State>, BTreeSet<DVState>>,
    pub body: BTreeMap<Vec<State>, BTreeSet<DVState>>,
}

impl LoopParts for LoopTables {
    fn guard(&mut self, v: &[State]) -> Result<Rc<Answers>> {
        Ok(Rc::new(self.guard.get(v).cloned().unwrap_or_default()))
    }

    fn body(&mut self, v: &[State]) -> Result<Rc<Answers>> {
        Ok(Rc::new(self.body.get(v).cloned().unwrap_or_default()))
    }
}

/// The loop operator: every output vector obtained by concatenating one
/// terminating trace per entry of `v` that some guard and some body in the
/// given denotations both permit.
pub fn f_while(parts: &mut impl LoopParts, v: &VState, cfg: &DomainConfig) -> Result<BTreeSet<VState>> {
    let (out, _) = loop_search(parts, &v.0, Mode::Yellow, cfg)?;
    Ok(out.into_iter().filter(|u| !u.diverges).map(DVState::into_vstate).collect())
}

/// A memoizing evaluator for one grammar. Queries share the table.
pub struct VectorSemantics {
    engine: Engine,
}

impl VectorSemantics {
    pub fn new(g: &Rtg, cfg: &DomainConfig) -> Result<Self> {
        Ok(VectorSemantics { engine: Engine::new(g, cfg, Mode::Yellow)? })
    }

    pub fn eval(&mut self, n: &str, v: &VState) -> Result<BTreeSet<VState>> {
        Ok(self.engine.query(n, &v.0)?.iter().map(|u| u.clone().into_vstate()).collect())
    }

    pub fn eval_set(&mut self, n: &str, vs: &[VState]) -> Result<BTreeSet<VState>> {
        let mut out = BTreeSet::new();
        for v in vs {
            out.extend(self.eval(n, v)?);
        }
        Ok(out)
    }

    pub fn stats(&self) -> EngineStats {
        self.engine.stats()
    }
}

/// `⟦n⟧ᵛ(V)`: the union over `V` of the per-vector answers.
pub fn eval_vector(g: &Rtg, n: &str, vs: &[VState], cfg: &DomainConfig) -> Result<BTreeSet<VState>> {
    VectorSemantics::new(g, cfg)?.eval_set(n, vs)
}
