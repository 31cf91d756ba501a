//! Drawing assignments from interval constraints.

use std::collections::BTreeMap;

use num_bigint::{BigInt, RandBigInt};
use num_traits::One;
use rand::Rng;

use crate::arrays::{access, AicApproximation};
use crate::error::{Error, Result};
use crate::formula::Term;
use crate::interval::Interval;
use crate::interval::IntervalMap;
use crate::model::{eval_array, FuncValue, Model};

/// Uniform draw from `iv`, with infinite endpoints clamped to
/// `center +- width`. A center outside `iv` is first moved to the nearest
/// endpoint, so the result always lies in `iv`.
pub fn draw_in<R: Rng + ?Sized>(iv: &Interval, center: &BigInt, width: &BigInt, rng: &mut R) -> BigInt {
    let mut c = center.clone();
    if let Some(lo) = iv.lo() {
        c = c.max(lo.clone());
    }
    if let Some(hi) = iv.hi() {
        c = c.min(hi.clone());
    }
    let lo = iv.lo().cloned().unwrap_or_else(|| &c - width);
    let hi = iv.hi().cloned().unwrap_or_else(|| &c + width);
    if lo >= hi {
        return lo;
    }
    rng.gen_bigint_range(&lo, &(hi + BigInt::one()))
}

/// Draws every int variable keyed in `iv`; all other symbols keep their
/// seed values.
pub fn sample_intervals<R: Rng + ?Sized>(iv: &IntervalMap, seed: &Model, width: &BigInt, rng: &mut R) -> Result<Model> {
    let mut out = seed.clone();
    for (k, interval) in iv.iter() {
        let Term::IntVar(v) = k else {
            return Err(Error::UnsupportedFeature(format!("interval on non-variable `{k}`")));
        };
        let center = seed.ints.get(v).cloned().unwrap_or_default();
        out.ints.insert(v.clone(), draw_in(interval, &center, width, rng));
    }
    Ok(out)
}

/// Outcome of one array-aware draw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Draw {
    Sample(Model),
    /// An array slot was already fixed to a value outside the interval of a
    /// later access.
    Clash,
}

struct Completion<'a, R: ?Sized> {
    base: &'a Model,
    ints: BTreeMap<String, BigInt>,
    slots: BTreeMap<String, BTreeMap<BigInt, BigInt>>,
    width: &'a BigInt,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Completion<'_, R> {
    fn slot_default(&self, sym: &str, idx: &BigInt) -> BigInt {
        self.base.funcs.get(sym).map(|f| f.get(idx).clone()).unwrap_or_default()
    }

    /// Evaluates an index term; slots read for the first time get a fresh
    /// value around the seed's.
    fn eval(&mut self, t: &Term) -> Result<BigInt> {
        match t {
            Term::IntConst(c) => Ok(c.clone()),
            Term::IntVar(v) => self
                .ints
                .get(v)
                .cloned()
                .ok_or_else(|| Error::UnassignedSymbol(v.clone())),
            Term::Add(xs) => {
                let mut acc = BigInt::default();
                for x in xs {
                    acc += self.eval(x)?;
                }
                Ok(acc)
            }
            Term::Mul(xs) => {
                let mut acc = BigInt::one();
                for x in xs {
                    acc *= self.eval(x)?;
                }
                Ok(acc)
            }
            Term::Sub(a, b) => Ok(self.eval(a)? - self.eval(b)?),
            _ => {
                let (sym, i) = access(t).ok_or_else(|| Error::UnsupportedFeature(format!("cannot sample `{t}`")))?;
                let idx = self.eval(i)?;
                if let Some(v) = self.slots.get(sym).and_then(|s| s.get(&idx)) {
                    return Ok(v.clone());
                }
                let center = self.slot_default(sym, &idx);
                let v = draw_in(&Interval::full(), &center, self.width, self.rng);
                self.slots.entry(sym.to_string()).or_default().insert(idx, v.clone());
                Ok(v)
            }
        }
    }
}

/// Draws a model of an array-aware approximation: int variables first,
/// then accesses by increasing select nesting of their index. Arrays and
/// functions take the seed's default plus the slots fixed here; arrays with
/// a definition are rebuilt from it.
pub fn sample_intervals_arrays<R: Rng + ?Sized>(
    approx: &AicApproximation,
    width: &BigInt,
    rng: &mut R,
) -> Result<Draw> {
    let base = &approx.model;
    let mut ints = base.ints.clone();
    let mut accesses: Vec<(&Term, &Interval)> = Vec::new();
    for (k, iv) in approx.intervals.iter() {
        match k {
            Term::IntVar(v) => {
                let center = base.ints.get(v).cloned().unwrap_or_default();
                ints.insert(v.clone(), draw_in(iv, &center, width, rng));
            }
            _ => accesses.push((k, iv)),
        }
    }
    accesses.sort_by_key(|(t, _)| t.select_depth());
    let mut c = Completion {
        base,
        ints,
        slots: BTreeMap::new(),
        width,
        rng,
    };
    for (t, iv) in accesses {
        let (sym, i) = access(t).ok_or_else(|| Error::UnsupportedFeature(format!("cannot sample `{t}`")))?;
        let idx = c.eval(i)?;
        match c.slots.get(sym).and_then(|s| s.get(&idx)) {
            Some(v) if !iv.contains(v) => return Ok(Draw::Clash),
            Some(_) => {}
            None => {
                let center = c.slot_default(sym, &idx);
                let v = draw_in(iv, &center, width, c.rng);
                c.slots.entry(sym.to_string()).or_default().insert(idx, v);
            }
        }
    }
    let mut out = Model {
        ints: c.ints,
        bools: base.bools.clone(),
        funcs: BTreeMap::new(),
    };
    for (sym, f) in &base.funcs {
        let slots = c.slots.remove(sym).unwrap_or_default();
        out.funcs
            .insert(sym.clone(), FuncValue::new(f.default_value().clone(), slots));
    }
    for d in &approx.definitions {
        let v = eval_array(&d.value, &out)?;
        out.funcs.insert(d.array.clone(), v);
    }
    Ok(Draw::Sample(out))
}
