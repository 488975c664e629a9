//! Demand-driven solver for monotone equation systems.
//!
//! A top-down solver: reading a key solves it on the spot, so most keys are
//! evaluated once with final inputs. Keys read while they are being solved
//! yield their current value and are iterated until stable; when a value
//! grows, everything that transitively read it is destabilized. Chains of
//! nested reads deeper than a fixed bound are deferred to a worklist
//! instead of recursing further.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;
use std::rc::Rc;

use crate::error::{Error, Result};

const MAX_NESTING: usize = 48;

/// Values that can only grow: `join` returns whether anything was added.
pub(crate) trait Join: Default {
    fn join(&mut self, other: Self) -> bool;
}

impl<T: Ord> Join for BTreeSet<T> {
    fn join(&mut self, other: Self) -> bool {
        let before = self.len();
        self.extend(other);
        self.len() != before
    }
}

/// Right-hand sides of the equation system.
pub(crate) type Rhs<'f, K, V> = dyn Fn(&K, &mut Reads<'_, K, V>) -> Result<V> + 'f;

/// The read handle passed to a right-hand side.
pub(crate) struct Reads<'s, K, V> {
    solver: &'s mut Solver<K, V>,
    rhs: &'s Rhs<'s, K, V>,
    reader: K,
    depth: usize,
}

impl<K: Clone + Eq + Hash, V: Join + Clone> Reads<'_, K, V> {
    pub(crate) fn get(&mut self, k: &K) -> Result<Rc<V>> {
        self.solver.solve_at(k, self.rhs, self.depth + 1)?;
        self.solver.infl.entry(k.clone()).or_default().insert(self.reader.clone());
        Ok(self.solver.values[k].clone())
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SolverStats {
    pub entries: usize,
    pub evaluations: u64,
}

pub(crate) struct Solver<K, V> {
    values: HashMap<K, Rc<V>>,
    infl: HashMap<K, HashSet<K>>,
    stable: HashSet<K>,
    called: HashSet<K>,
    deferred: Vec<K>,
    max_entries: usize,
    evaluations: u64,
}

impl<K: Clone + Eq + Hash, V: Join + Clone> Solver<K, V> {
    pub(crate) fn new(max_entries: usize) -> Self {
        Solver {
            values: HashMap::new(),
            infl: HashMap::new(),
            stable: HashSet::new(),
            called: HashSet::new(),
            deferred: Vec::new(),
            max_entries,
            evaluations: 0,
        }
    }

    pub(crate) fn stats(&self) -> SolverStats {
        SolverStats { entries: self.values.len(), evaluations: self.evaluations }
    }

    fn destabilize(&mut self, k: &K) {
        if let Some(readers) = self.infl.remove(k) {
            for r in readers {
                if self.stable.remove(&r) && !self.called.contains(&r) {
                    self.destabilize(&r);
                }
            }
        }
    }

    fn solve_at(&mut self, x: &K, rhs: &Rhs<'_, K, V>, depth: usize) -> Result<()> {
        if self.stable.contains(x) || self.called.contains(x) {
            return Ok(());
        }
        if !self.values.contains_key(x) {
            if self.values.len() >= self.max_entries {
                return Err(Error::resource("fixpoint table entries", self.max_entries));
            }
            self.values.insert(x.clone(), Rc::new(V::default()));
        }
        if depth > MAX_NESTING {
            self.deferred.push(x.clone());
            return Ok(());
        }
        self.called.insert(x.clone());
        loop {
            self.stable.insert(x.clone());
            self.evaluations += 1;
            let new = rhs(x, &mut Reads { solver: self, rhs, reader: x.clone(), depth })?;
            let slot = self.values.get_mut(x).expect("entry created above");
            let mut grown = (**slot).clone();
            if grown.join(new) {
                *slot = Rc::new(grown);
                self.destabilize(x);
            }
            if self.stable.contains(x) {
                break;
            }
        }
        self.called.remove(x);
        Ok(())
    }

    /// Solves for `root` and everything it transitively reads.
    pub(crate) fn solve(&mut self, root: &K, rhs: &Rhs<'_, K, V>) -> Result<Rc<V>> {
        let outcome = (|| {
            loop {
                self.solve_at(root, rhs, 0)?;
                match self.deferred.pop() {
                    Some(k) => self.solve_at(&k, rhs, 0)?,
                    None if self.stable.contains(root) => return Ok(()),
                    None => {}
                }
            }
        })();
        if let Err(e) = outcome {
            // Leave the table consistent for a later retry.
            *self = Solver::new(self.max_entries);
            return Err(e);
        }
        Ok(self.values[root].clone())
    }
}
