//! Finite state domain: saturating integers, states, vector-states, and
//! vector-states that may end in the divergence marker.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Integer value of a program variable or of `e_t`.
pub type Value = i64;

/// Resource limits shared by all engines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub max_vector_len: usize,
    /// Longest single-entry loop trace explored by the trace search. `None`
    /// means the number of distinct tracked states plus one.
    pub max_trace_len: Option<usize>,
    pub max_table_entries: usize,
    /// Largest number of terms a grammar enumeration may produce.
    pub max_programs: usize,
    /// Largest number of states `enumerate_states` may produce.
    pub max_states: usize,
    /// Loop iterations a single concrete evaluation may perform. Exhausting it
    /// is an error, never a divergence verdict.
    pub max_steps: u64,
    /// Search nodes a single loop query may expand.
    pub max_traces: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_vector_len: 8,
            max_trace_len: None,
            max_table_entries: 2_000_000,
            max_programs: 100_000,
            max_states: 1_000_000,
            max_steps: 10_000_000,
            max_traces: 5_000_000,
        }
    }
}

/// The value range, the tracked variables and the caps of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: Value,
    pub hi: Value,
    pub tracked_vars: Vec<String>,
    #[serde(default)]
    pub caps: Caps,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            lo: -8,
            hi: 8,
            tracked_vars: vec!["x".to_string()],
            caps: Caps::default(),
        }
    }
}

pub const RESERVED: [&str; 2] = ["e_t", "b_t"];

impl DomainConfig {
    pub fn new<S: Into<String>>(lo: Value, hi: Value, vars: impl IntoIterator<Item = S>) -> Result<Self> {
        let cfg = DomainConfig {
            lo,
            hi,
            tracked_vars: vars.into_iter().map(Into::into).collect(),
            caps: Caps::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo > self.hi {
            return Err(Error::Config(format!("lo ({}) > hi ({})", self.lo, self.hi)));
        }
        if self.tracked_vars.is_empty() {
            return Err(Error::Config("tracked_vars is empty".into()));
        }
        for (i, v) in self.tracked_vars.iter().enumerate() {
            if RESERVED.contains(&v.as_str()) {
                return Err(Error::Config(format!("`{v}` is reserved and cannot be tracked")));
            }
            if self.tracked_vars[..i].contains(v) {
                return Err(Error::Config(format!("duplicate tracked variable `{v}`")));
            }
        }
        Ok(())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.tracked_vars.iter().position(|v| v == name)
    }

    pub fn require_var(&self, name: &str) -> Result<usize> {
        self.var_index(name)
            .ok_or_else(|| Error::Config(format!("variable `{name}` is not tracked")))
    }

    pub fn clamp(&self, v: i128) -> Value {
        v.clamp(self.lo as i128, self.hi as i128) as Value
    }

    pub fn in_range(&self, v: Value) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Number of distinct integer values.
    pub fn width(&self) -> u128 {
        (self.hi as i128 - self.lo as i128 + 1) as u128
    }

    /// The state with every integer slot at `lo` and `b_t = f`.
    pub fn default_state(&self) -> State {
        State {
            vals: SmallVec::from_elem(self.lo, self.tracked_vars.len()),
            e_t: self.lo,
            b_t: false,
        }
    }

    /// Bound on trace length used when `max_trace_len` is unset.
    pub fn trace_limit(&self, vars: usize) -> usize {
        match self.caps.max_trace_len {
            Some(n) => n,
            None => {
                let count = self.width().saturating_pow(vars as u32).saturating_add(1);
                count.min(usize::MAX as u128) as usize
            }
        }
    }
}

/// A program state over the tracked variables: `(h, e_t, b_t)`.
///
/// Field order fixes the canonical ordering: variables in tracked order, then
/// `e_t`, then `b_t`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    vals: SmallVec<[Value; 3]>,
    e_t: Value,
    b_t: bool,
}

/// A slot that `subst` may overwrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Var(usize),
    Et,
    Bt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotValue {
    Int(Value),
    Bool(bool),
}

impl State {
    pub fn from_parts(vals: impl IntoIterator<Item = Value>, e_t: Value, b_t: bool) -> Self {
        State {
            vals: vals.into_iter().collect(),
            e_t,
            b_t,
        }
    }

    /// Builds a state from `name -> value` pairs; missing variables and
    /// `e_t` default to `lo`, `b_t` to false. Values are checked, not clamped.
    pub fn with_vars(cfg: &DomainConfig, vars: &[(&str, Value)]) -> Result<Self> {
        let mut s = cfg.default_state();
        for (name, v) in vars {
            let i = cfg.require_var(name)?;
            s = s.subst(cfg, Slot::Var(i), SlotValue::Int(*v))?;
        }
        Ok(s)
    }

    #[inline]
    pub fn var(&self, i: usize) -> Value {
        self.vals[i]
    }

    #[inline]
    pub fn vars(&self) -> &[Value] {
        &self.vals
    }

    #[inline]
    pub fn e_t(&self) -> Value {
        self.e_t
    }

    #[inline]
    pub fn b_t(&self) -> bool {
        self.b_t
    }

    #[inline]
    pub fn set_var(&self, i: usize, v: Value) -> State {
        let mut s = self.clone();
        s.vals[i] = v;
        s
    }

    #[inline]
    pub fn set_e_t(&self, v: Value) -> State {
        State { e_t: v, ..self.clone() }
    }

    #[inline]
    pub fn set_b_t(&self, b: bool) -> State {
        State { b_t: b, ..self.clone() }
    }

    /// `σ[value/slot]`. Integer values must already lie in `[lo, hi]`.
    pub fn subst(&self, cfg: &DomainConfig, slot: Slot, value: SlotValue) -> Result<State> {
        match (slot, value) {
            (Slot::Var(i), SlotValue::Int(v)) => {
                if i >= self.vals.len() {
                    return Err(Error::input(format!("variable slot {i} out of bounds")));
                }
                check_range(cfg, v)?;
                Ok(self.set_var(i, v))
            }
            (Slot::Et, SlotValue::Int(v)) => {
                check_range(cfg, v)?;
                Ok(self.set_e_t(v))
            }
            (Slot::Bt, SlotValue::Bool(b)) => Ok(self.set_b_t(b)),
            (slot, value) => Err(Error::input(format!("{value:?} does not fit slot {slot:?}"))),
        }
    }

    /// Checks the state against the domain invariants.
    pub fn validate(&self, cfg: &DomainConfig) -> Result<()> {
        if self.vals.len() != cfg.tracked_vars.len() {
            return Err(Error::input(format!(
                "state has {} variables, config tracks {}",
                self.vals.len(),
                cfg.tracked_vars.len()
            )));
        }
        for v in self.vals.iter().chain(std::iter::once(&self.e_t)) {
            check_range(cfg, *v)?;
        }
        Ok(())
    }

    /// Projection of `h` onto the named variables.
    pub fn restrict(&self, cfg: &DomainConfig, vs: &[String]) -> Result<PartialState> {
        vs.iter()
            .map(|name| Ok((name.clone(), self.vals[cfg.require_var(name)?])))
            .collect()
    }

    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        let h: Map<String, Json> = cfg
            .tracked_vars
            .iter()
            .zip(self.vals.iter())
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        json!({ "h": h, "e_t": self.e_t, "b_t": self.b_t })
    }

    /// Parses `{"h":{..},"e_t":..,"b_t":..}`. Omitted variables and `e_t`
    /// default to `lo`, an omitted `b_t` to false.
    pub fn from_json(cfg: &DomainConfig, j: &Json) -> Result<State> {
        let obj = j
            .as_object()
            .ok_or_else(|| Error::input(format!("state must be an object, got {j}")))?;
        let mut s = cfg.default_state();
        for key in obj.keys() {
            if !["h", "e_t", "b_t"].contains(&key.as_str()) {
                return Err(Error::input(format!("unknown state field `{key}`")));
            }
        }
        if let Some(h) = obj.get("h") {
            let h = h
                .as_object()
                .ok_or_else(|| Error::input("state field `h` must be an object"))?;
            for (name, v) in h {
                let i = cfg.require_var(name)?;
                let v = v
                    .as_i64()
                    .ok_or_else(|| Error::input(format!("value of `{name}` is not an integer")))?;
                check_range(cfg, v)?;
                s.vals[i] = v;
            }
        }
        if let Some(e) = obj.get("e_t") {
            let e = e.as_i64().ok_or_else(|| Error::input("`e_t` is not an integer"))?;
            check_range(cfg, e)?;
            s.e_t = e;
        }
        if let Some(b) = obj.get("b_t") {
            s.b_t = b.as_bool().ok_or_else(|| Error::input("`b_t` is not a boolean"))?;
        }
        Ok(s)
    }
}

fn check_range(cfg: &DomainConfig, v: Value) -> Result<()> {
    if cfg.in_range(v) {
        Ok(())
    } else {
        Err(Error::input(format!(
            "value {v} outside [{}, {}]; clamp before substituting",
            cfg.lo, cfg.hi
        )))
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, v) in self.vals.iter().enumerate() {
            write!(f, "{v},")?;
            let _ = i;
        }
        write!(f, "e={},b={}>", self.e_t, if self.b_t { 't' } else { 'f' })
    }
}

/// Partial state produced by `restrict`.
pub type PartialState = BTreeMap<String, Value>;

/// Finite vector of states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VState(pub Vec<State>);

impl VState {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        Json::Array(self.0.iter().map(|s| s.to_json(cfg)).collect())
    }

    pub fn from_json(cfg: &DomainConfig, j: &Json) -> Result<VState> {
        let arr = j
            .as_array()
            .ok_or_else(|| Error::input("vector-state must be an array of states"))?;
        arr.iter()
            .map(|s| State::from_json(cfg, s))
            .collect::<Result<Vec<_>>>()
            .map(VState)
    }
}

impl From<Vec<State>> for VState {
    fn from(v: Vec<State>) -> Self {
        VState(v)
    }
}

/// A finite vector of states, optionally terminated by `↑`.
///
/// This is exactly the finite part of the extended vector-states: at most one
/// `↑`, and only at the end.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DVState {
    pub entries: Vec<State>,
    pub diverges: bool,
}

impl DVState {
    pub fn finite(entries: Vec<State>) -> Self {
        DVState {
            entries,
            diverges: false,
        }
    }

    pub fn diverging(entries: Vec<State>) -> Self {
        DVState {
            entries,
            diverges: true,
        }
    }

    /// `self` occludes `other`: `self = [a1..ak, ↑]` and `other` is a
    /// diverging vector starting with `a1..ak`.
    pub fn occludes(&self, other: &DVState) -> bool {
        self.diverges && other.diverges && other.entries.starts_with(&self.entries)
    }

    /// Prefix order on diverging vectors; every vector is below itself.
    pub fn is_prefix_of(&self, other: &DVState) -> bool {
        if self.diverges {
            other.entries.starts_with(&self.entries)
        } else {
            self == other
        }
    }

    /// Length counting the trailing `↑`.
    pub fn total_len(&self) -> usize {
        self.entries.len() + usize::from(self.diverges)
    }

    /// Drops the divergence flag. Only meaningful for finite vectors.
    pub fn into_vstate(self) -> VState {
        VState(self.entries)
    }

    /// Non-diverging vectors serialize as a plain array, diverging ones as
    /// `{"entries": [...], "diverges": true}`.
    pub fn to_json(&self, cfg: &DomainConfig) -> Json {
        let entries = Json::Array(self.entries.iter().map(|s| s.to_json(cfg)).collect());
        if self.diverges {
            json!({ "entries": entries, "diverges": true })
        } else {
            entries
        }
    }

    pub fn from_json(cfg: &DomainConfig, j: &Json) -> Result<DVState> {
        match j {
            Json::Array(_) => Ok(DVState::finite(VState::from_json(cfg, j)?.0)),
            Json::Object(obj) => {
                for key in obj.keys() {
                    if key != "entries" && key != "diverges" {
                        return Err(Error::input(format!("unknown vector field `{key}`")));
                    }
                }
                let entries = match obj.get("entries") {
                    Some(e) => VState::from_json(cfg, e)?.0,
                    None => Vec::new(),
                };
                let diverges = match obj.get("diverges") {
                    Some(d) => d.as_bool().ok_or_else(|| Error::input("`diverges` is not a boolean"))?,
                    None => false,
                };
                Ok(DVState { entries, diverges })
            }
            _ => Err(Error::input("vector-state must be an array or an object")),
        }
    }
}

impl From<VState> for DVState {
    fn from(v: VState) -> Self {
        DVState::finite(v.0)
    }
}

/// Every state that differs on `over ∪ {e_t, b_t}`, other variables fixed at
/// `lo`, in lexicographic order.
pub fn enumerate_states(cfg: &DomainConfig, over: &[String]) -> Result<Vec<State>> {
    let mut idx: Vec<usize> = over.iter().map(|v| cfg.require_var(v)).collect::<Result<_>>()?;
    idx.sort_unstable();
    idx.dedup();
    let width = cfg.width();
    let count = width
        .checked_pow(idx.len() as u32 + 1)
        .and_then(|c| c.checked_mul(2))
        .unwrap_or(u128::MAX);
    if count > cfg.caps.max_states as u128 {
        return Err(Error::resource(
            format!("state enumeration over {} variables ({count} states)", idx.len()),
            cfg.caps.max_states,
        ));
    }
    // Slots in canonical order: the chosen variables, then e_t. b_t varies fastest.
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![cfg.lo; idx.len() + 1];
    loop {
        let mut s = cfg.default_state();
        for (k, &i) in idx.iter().enumerate() {
            s.vals[i] = digits[k];
        }
        s.e_t = digits[idx.len()];
        out.push(s.set_b_t(false));
        out.push(s.set_b_t(true));
        // Odometer increment, last slot fastest.
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if digits[pos] < cfg.hi {
                digits[pos] += 1;
                for d in digits.iter_mut().skip(pos + 1) {
                    *d = cfg.lo;
                }
                break;
            }
        }
    }
}

/// All states over the listed variables with `e_t = lo` and `b_t = f`: the
/// distinct statement-visible valuations.
pub fn enumerate_valuations(cfg: &DomainConfig, over: &[String]) -> Result<Vec<State>> {
    Ok(enumerate_states(cfg, over)?
        .into_iter()
        .filter(|s| s.e_t == cfg.lo && !s.b_t)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lo: Value, hi: Value) -> DomainConfig {
        DomainConfig::new(lo, hi, ["x", "y"]).unwrap()
    }

    #[test]
    fn clamp_saturates() {
        let c = cfg(0, 8);
        assert_eq!(c.clamp(10), 8);
        assert_eq!(c.clamp(-1), 0);
        assert_eq!(c.clamp(5), 5);
    }

    #[test]
    fn config_rejects_bad_inputs() {
        assert!(DomainConfig::new(1, 0, ["x"]).is_err());
        assert!(DomainConfig::new(0, 1, Vec::<String>::new()).is_err());
        assert!(DomainConfig::new(0, 1, ["x", "x"]).is_err());
        assert!(DomainConfig::new(0, 1, ["e_t"]).is_err());
    }

    #[test]
    fn subst_overwrites_one_slot() {
        let c = cfg(0, 8);
        let s = State::with_vars(&c, &[("x", 0)]).unwrap();
        let t = s.subst(&c, Slot::Var(0), SlotValue::Int(5)).unwrap();
        assert_eq!(t.var(0), 5);
        assert_eq!(t.var(1), s.var(1));

        let b = s.subst(&c, Slot::Bt, SlotValue::Bool(true)).unwrap();
        assert!(b.b_t());
        assert_eq!(b.vars(), s.vars());
        assert_eq!(b.e_t(), s.e_t());

        let twice = s
            .subst(&c, Slot::Var(0), SlotValue::Int(1))
            .unwrap()
            .subst(&c, Slot::Var(0), SlotValue::Int(2))
            .unwrap();
        assert_eq!(twice, s.subst(&c, Slot::Var(0), SlotValue::Int(2)).unwrap());

        assert!(s.subst(&c, Slot::Var(0), SlotValue::Int(9)).is_err());
        assert!(s.subst(&c, Slot::Bt, SlotValue::Int(1)).is_err());
    }

    #[test]
    fn enumerate_counts() {
        let c = DomainConfig::new(0, 1, ["x"]).unwrap();
        let all = enumerate_states(&c, &["x".to_string()]).unwrap();
        assert_eq!(all.len(), 8);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_states(&c, &[]).unwrap().len(), 4);

        let flat = DomainConfig::new(3, 3, ["x"]).unwrap();
        assert_eq!(enumerate_states(&flat, &["x".to_string()]).unwrap().len(), 2);

        let two = cfg(-1, 1);
        let n = enumerate_states(&two, &two.tracked_vars.clone()).unwrap().len();
        assert_eq!(n, 3usize.pow(3) * 2);
    }

    #[test]
    fn enumerate_respects_cap() {
        let mut c = cfg(-8, 8);
        c.caps.max_states = 100;
        let err = enumerate_states(&c, &c.tracked_vars.clone()).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn restrict_projects() {
        let c = cfg(0, 8);
        let s = State::with_vars(&c, &[("x", 1), ("y", 2)]).unwrap();
        let r = s.restrict(&c, &["x".to_string()]).unwrap();
        assert_eq!(r, BTreeMap::from([("x".to_string(), 1)]));
        assert!(s.restrict(&c, &[]).unwrap().is_empty());
    }

    #[test]
    fn json_shapes() {
        let c = DomainConfig::new(0, 8, ["x"]).unwrap();
        let s = State::with_vars(&c, &[("x", 3)]).unwrap();
        let j = s.to_json(&c);
        assert_eq!(j, json!({"h": {"x": 3}, "e_t": 0, "b_t": false}));
        assert_eq!(State::from_json(&c, &j).unwrap(), s);

        let d = DVState::diverging(vec![s.clone()]);
        let dj = d.to_json(&c);
        assert_eq!(dj["diverges"], json!(true));
        assert_eq!(DVState::from_json(&c, &dj).unwrap(), d);
        let f = DVState::finite(vec![s]);
        assert!(f.to_json(&c).is_array());
        assert!(State::from_json(&c, &json!({"h": {"x": 9}})).is_err());
    }

    #[test]
    fn occlusion_is_prefix_based() {
        let c = DomainConfig::new(0, 8, ["x"]).unwrap();
        let s = |v| State::with_vars(&c, &[("x", v)]).unwrap();
        let short = DVState::diverging(vec![s(1)]);
        let long = DVState::diverging(vec![s(1), s(2)]);
        let other = DVState::diverging(vec![s(1), s(4)]);
        let fin = DVState::finite(vec![s(1), s(2)]);
        assert!(short.occludes(&long));
        assert!(short.occludes(&other));
        assert!(short.occludes(&short));
        assert!(!long.occludes(&short));
        assert!(!short.occludes(&fin));
    }
}
