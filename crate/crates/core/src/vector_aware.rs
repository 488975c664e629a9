//! Divergence-aware vector-state semantics: truncation, occluder reduction
//! and the compositional evaluator.

use std::collections::BTreeSet;

use crate::concrete::Outcome;
use crate::domain::{DVState, DomainConfig};
use crate::error::Result;
use crate::grammar::Rtg;
use crate::vector::{loop_search, Engine, EngineStats, LoopParts, Mode};

pub use crate::concrete::bad_lift;

/// Entrywise results with `↑` allowed anywhere.
pub type RawDVector = Vec<Outcome>;

/// Cuts every vector at its first `↑`.
pub fn truncate(xs: &BTreeSet<RawDVector>) -> BTreeSet<DVState> {
    xs.iter()
        .map(|row| {
            let mut entries = Vec::with_capacity(row.len());
            for o in row {
                match o {
                    Outcome::State(s) => entries.push(s.clone()),
                    Outcome::Diverge => return DVState::diverging(entries),
                }
            }
            DVState::finite(entries)
        })
        .collect()
}

/// Replaces every diverging vector by its shortest occluder in the set.
pub fn reduce(xs: &BTreeSet<DVState>) -> BTreeSet<DVState> {
    xs.iter()
        .map(|d| {
            if !d.diverges {
                return d.clone();
            }
            (0..=d.entries.len())
                .map(|k| DVState::diverging(d.entries[..k].to_vec()))
                .find(|o| xs.contains(o))
                .expect("a diverging vector occludes itself")
        })
        .collect()
}

/// The loop operator with divergence: converging traces as in the agnostic
/// operator, plus `↑`-terminated outputs for body divergence and for lassos
/// along which the guard stays true. The result is reduced.
pub fn f_while_green(parts: &mut impl LoopParts, v: &DVState, cfg: &DomainConfig) -> Result<BTreeSet<DVState>> {
    let (out, _) = loop_search(parts, &v.entries, Mode::Green, cfg)?;
    let out = if v.diverges { out.into_iter().map(|u| DVState::diverging(u.entries)).collect() } else { out };
    Ok(reduce(&out))
}

/// A memoizing divergence-aware evaluator for one grammar.
pub struct GreenVectorSemantics {
    engine: Engine,
}

impl GreenVectorSemantics {
    pub fn new(g: &Rtg, cfg: &DomainConfig) -> Result<Self> {
        Ok(GreenVectorSemantics { engine: Engine::new(g, cfg, Mode::Green)? })
    }

    /// Answers cut at the first `↑` but not yet reduced.
    pub fn eval_truncated(&mut self, n: &str, v: &DVState) -> Result<BTreeSet<DVState>> {
        self.engine.query_dv(n, v)
    }

    pub fn eval(&mut self, n: &str, v: &DVState) -> Result<BTreeSet<DVState>> {
        Ok(reduce(&self.eval_truncated(n, v)?))
    }

    /// `⟦n⟧ᵛ⇑(V)`, reducing the union over `V`.
    pub fn eval_set(&mut self, n: &str, vs: &[DVState]) -> Result<BTreeSet<DVState>> {
        let mut all = BTreeSet::new();
        for v in vs {
            all.extend(self.eval_truncated(n, v)?);
        }
        Ok(reduce(&all))
    }

    pub fn stats(&self) -> EngineStats {
        self.engine.stats()
    }
}

pub fn eval_vector_green(g: &Rtg, n: &str, vs: &[DVState], cfg: &DomainConfig) -> Result<BTreeSet<DVState>> {
    GreenVectorSemantics::new(g, cfg)?.eval_set(n, vs)
}
