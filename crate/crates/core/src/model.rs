//! Models (assignments) and evaluation of terms and formulas under them.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value as JsonValue};

use crate::error::{Error, Result};
use crate::formula::{Formula, Rel, Sort, Term};
use crate::interval::{int_from_json, int_json};

/// Finite representation of an `Int -> Int` function: a default value plus
/// a table of exceptions.
///
/// Exceptions equal to the default are never stored, so two values are
/// structurally equal iff they denote the same function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncValue {
    default: BigInt,
    exceptions: BTreeMap<BigInt, BigInt>,
}

impl FuncValue {
    pub fn constant(default: impl Into<BigInt>) -> Self {
        FuncValue {
            default: default.into(),
            exceptions: BTreeMap::new(),
        }
    }

    pub fn new(default: BigInt, exceptions: impl IntoIterator<Item = (BigInt, BigInt)>) -> Self {
        let mut f = FuncValue::constant(default);
        for (k, v) in exceptions {
            f.set(k, v);
        }
        f
    }

    pub fn default_value(&self) -> &BigInt {
        &self.default
    }

    pub fn exceptions(&self) -> &BTreeMap<BigInt, BigInt> {
        &self.exceptions
    }

    pub fn get(&self, index: &BigInt) -> &BigInt {
        self.exceptions.get(index).unwrap_or(&self.default)
    }

    pub fn set(&mut self, index: BigInt, value: BigInt) {
        if value == self.default {
            self.exceptions.remove(&index);
        } else {
            self.exceptions.insert(index, value);
        }
    }

    /// An index on which `self` and `other` differ, if any.
    ///
    /// Scans every exception key of both functions plus one key beyond all
    /// of them (where both take their defaults).
    pub fn witness(&self, other: &FuncValue) -> Option<BigInt> {
        let keys = self.exceptions.keys().chain(other.exceptions.keys());
        for k in keys.clone() {
            if self.get(k) != other.get(k) {
                return Some(k.clone());
            }
        }
        let fresh = keys.max().map(|m| m + 1).unwrap_or_else(BigInt::zero);
        (self.default != other.default).then_some(fresh)
    }
}

/// An assignment to int variables, boolean variables, and arrays /
/// uninterpreted functions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Model {
    pub ints: BTreeMap<String, BigInt>,
    pub bools: BTreeMap<String, bool>,
    pub funcs: BTreeMap<String, FuncValue>,
}

/// Samples are models restricted to the problem's declared symbols.
pub type Sample = Model;

/// Value of a term: an integer or a function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Func(FuncValue),
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_int(mut self, name: &str, v: impl Into<BigInt>) -> Self {
        self.ints.insert(name.to_string(), v.into());
        self
    }

    pub fn with_bool(mut self, name: &str, v: bool) -> Self {
        self.bools.insert(name.to_string(), v);
        self
    }

    pub fn with_func(mut self, name: &str, v: FuncValue) -> Self {
        self.funcs.insert(name.to_string(), v);
        self
    }

    pub fn int(&self, name: &str) -> Result<&BigInt> {
        self.ints
            .get(name)
            .ok_or_else(|| Error::UnassignedSymbol(name.to_string()))
    }

    pub fn func(&self, name: &str) -> Result<&FuncValue> {
        self.funcs
            .get(name)
            .ok_or_else(|| Error::UnassignedSymbol(name.to_string()))
    }

    pub fn eval_term(&self, t: &Term) -> Result<Value> {
        eval_term(t, self)
    }

    pub fn eval_int(&self, t: &Term) -> Result<BigInt> {
        eval_int(t, self)
    }

    pub fn satisfies(&self, f: &Formula) -> Result<bool> {
        eval_formula(f, self)
    }

    /// Keeps only the symbols for which `keep` returns true.
    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.ints.retain(|k, _| keep(k));
        self.bools.retain(|k, _| keep(k));
        self.funcs.retain(|k, _| keep(k));
    }
}

impl Model {
    /// One JSON object keyed by symbol: ints as numbers, bools as booleans,
    /// functions as `{"default": d, "exceptions": {"<index>": v}}`.
    pub fn to_json(&self) -> JsonValue {
        let mut obj = Map::new();
        for (k, v) in &self.ints {
            obj.insert(k.clone(), int_json(v));
        }
        for (k, v) in &self.bools {
            obj.insert(k.clone(), JsonValue::Bool(*v));
        }
        for (k, f) in &self.funcs {
            let ex: Map<String, JsonValue> = f.exceptions.iter().map(|(i, v)| (i.to_string(), int_json(v))).collect();
            obj.insert(
                k.clone(),
                json!({"default": int_json(&f.default), "exceptions": JsonValue::Object(ex)}),
            );
        }
        JsonValue::Object(obj)
    }

    pub fn from_json(v: &JsonValue) -> Result<Model> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Format("a sample must be a JSON object".into()))?;
        let mut m = Model::new();
        for (k, v) in obj {
            match v {
                JsonValue::Bool(b) => {
                    m.bools.insert(k.clone(), *b);
                }
                JsonValue::Object(f) => {
                    let bad = || Error::Format(format!("bad function value for `{k}`"));
                    let default = f.get("default").and_then(int_from_json).ok_or_else(bad)?;
                    let mut fv = FuncValue::constant(default);
                    if let Some(ex) = f.get("exceptions") {
                        for (i, x) in ex.as_object().ok_or_else(bad)? {
                            let i: BigInt = i.parse().map_err(|_| bad())?;
                            fv.set(i, int_from_json(x).ok_or_else(bad)?);
                        }
                    }
                    m.funcs.insert(k.clone(), fv);
                }
                other => {
                    let n = int_from_json(other)
                        .filter(|_| other.is_number())
                        .ok_or_else(|| Error::Format(format!("bad value for `{k}`: {other}")))?;
                    m.ints.insert(k.clone(), n);
                }
            }
        }
        Ok(m)
    }
}

pub fn eval_term(t: &Term, m: &Model) -> Result<Value> {
    match t.sort() {
        Sort::Array => eval_array(t, m).map(Value::Func),
        _ => eval_int(t, m).map(Value::Int),
    }
}

/// Evaluates an int-sorted term.
pub fn eval_int(t: &Term, m: &Model) -> Result<BigInt> {
    match t {
        Term::IntConst(c) => Ok(c.clone()),
        Term::IntVar(v) => m.int(v).cloned(),
        Term::Add(xs) => xs.iter().try_fold(BigInt::zero(), |acc, x| Ok(acc + eval_int(x, m)?)),
        Term::Sub(a, b) => Ok(eval_int(a, m)? - eval_int(b, m)?),
        Term::Mul(xs) => xs.iter().try_fold(BigInt::one(), |acc, x| Ok(acc * eval_int(x, m)?)),
        Term::Select(a, i) => {
            let idx = eval_int(i, m)?;
            select_value(a, &idx, m)
        }
        Term::FunApp(f, a) => {
            let arg = eval_int(a, m)?;
            Ok(m.func(f)?.get(&arg).clone())
        }
        Term::Ite(c, a, b) => {
            if eval_formula(c, m)? {
                eval_int(a, m)
            } else {
                eval_int(b, m)
            }
        }
        Term::ArrayVar(_) | Term::Store(..) => Err(Error::Sort(format!("expected an int term, got `{t}`"))),
    }
}

/// Reads `array[index]` without materialising the store chain.
fn select_value(array: &Term, index: &BigInt, m: &Model) -> Result<BigInt> {
    match array {
        Term::ArrayVar(a) => Ok(m.func(a)?.get(index).clone()),
        Term::Store(s, i, e) => {
            if &eval_int(i, m)? == index {
                eval_int(e, m)
            } else {
                select_value(s, index, m)
            }
        }
        Term::Ite(c, a, b) => {
            if eval_formula(c, m)? {
                select_value(a, index, m)
            } else {
                select_value(b, index, m)
            }
        }
        other => Err(Error::Sort(format!("expected an array term, got `{other}`"))),
    }
}

pub fn eval_array(t: &Term, m: &Model) -> Result<FuncValue> {
    match t {
        Term::ArrayVar(a) => m.func(a).cloned(),
        Term::Store(s, i, e) => {
            let mut f = eval_array(s, m)?;
            f.set(eval_int(i, m)?, eval_int(e, m)?);
            Ok(f)
        }
        Term::Ite(c, a, b) => {
            if eval_formula(c, m)? {
                eval_array(a, m)
            } else {
                eval_array(b, m)
            }
        }
        other => Err(Error::Sort(format!("expected an array term, got `{other}`"))),
    }
}

pub fn eval_formula(f: &Formula, m: &Model) -> Result<bool> {
    match f {
        Formula::Const(b) => Ok(*b),
        Formula::BoolVar(v) => m
            .bools
            .get(v)
            .copied()
            .ok_or_else(|| Error::UnassignedSymbol(v.clone())),
        Formula::Atom(rel, l, r) => eval_atom(*rel, l, r, m),
        Formula::Not(x) => Ok(!eval_formula(x, m)?),
        Formula::And(xs) => {
            for x in xs {
                if !eval_formula(x, m)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(xs) => {
            for x in xs {
                if eval_formula(x, m)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Implies(a, b) => Ok(!eval_formula(a, m)? || eval_formula(b, m)?),
        Formula::Iff(a, b) => Ok(eval_formula(a, m)? == eval_formula(b, m)?),
        Formula::Xor(a, b) => Ok(eval_formula(a, m)? != eval_formula(b, m)?),
        Formula::Ite(c, a, b) => {
            if eval_formula(c, m)? {
                eval_formula(a, m)
            } else {
                eval_formula(b, m)
            }
        }
        Formula::Distinct(ts) => {
            let vals = ts.iter().map(|t| eval_term(t, m)).collect::<Result<Vec<_>>>()?;
            for (i, a) in vals.iter().enumerate() {
                if vals[i + 1..].contains(a) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn eval_atom(rel: Rel, l: &Term, r: &Term, m: &Model) -> Result<bool> {
    if l.sort() == Sort::Array || r.sort() == Sort::Array {
        let (a, b) = (eval_array(l, m)?, eval_array(r, m)?);
        return match rel {
            Rel::Eq => Ok(a == b),
            Rel::Ne => Ok(a != b),
            _ => Err(Error::Sort(format!(
                "ordering on arrays: `{l}` {} `{r}`",
                rel.smt_name()
            ))),
        };
    }
    Ok(rel.holds(&eval_int(l, m)?, &eval_int(r, m)?))
}
