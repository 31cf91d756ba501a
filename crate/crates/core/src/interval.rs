//! Integer intervals with infinite endpoints and maps from leaf terms to
//! intervals (conjunctions of bounds on variables, selects and function
//! applications).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::formula::{Formula, Term};
use crate::model::Model;
use crate::smtlib::{parse_formula, print_term, Declaration};

/// Closed interval; `None` endpoints are infinite.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Option<BigInt>,
    hi: Option<BigInt>,
}

impl Interval {
    /// `None` when `lo > hi`.
    pub fn new(lo: Option<BigInt>, hi: Option<BigInt>) -> Option<Self> {
        match (&lo, &hi) {
            (Some(l), Some(h)) if l > h => None,
            _ => Some(Interval { lo, hi }),
        }
    }

    pub fn full() -> Self {
        Interval::default()
    }

    pub fn point(v: BigInt) -> Self {
        Interval {
            lo: Some(v.clone()),
            hi: Some(v),
        }
    }

    pub fn closed(lo: impl Into<BigInt>, hi: impl Into<BigInt>) -> Option<Self> {
        Interval::new(Some(lo.into()), Some(hi.into()))
    }

    pub fn at_least(lo: impl Into<BigInt>) -> Self {
        Interval {
            lo: Some(lo.into()),
            hi: None,
        }
    }

    pub fn at_most(hi: impl Into<BigInt>) -> Self {
        Interval {
            lo: None,
            hi: Some(hi.into()),
        }
    }

    pub fn lo(&self) -> Option<&BigInt> {
        self.lo.as_ref()
    }

    pub fn hi(&self) -> Option<&BigInt> {
        self.hi.as_ref()
    }

    pub fn is_point(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l == h)
    }

    pub fn is_full(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    pub fn contains(&self, v: &BigInt) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= v) && self.hi.as_ref().is_none_or(|h| v <= h)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        Interval::new(lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lo {
            Some(l) => write!(f, "[{l}, ")?,
            None => f.write_str("(-inf, ")?,
        }
        match &self.hi {
            Some(h) => write!(f, "{h}]"),
            None => f.write_str("+inf)"),
        }
    }
}

/// Map from leaf terms to intervals; absent keys are unbounded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalMap {
    entries: BTreeMap<Term, Interval>,
}

impl IntervalMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &Term) -> Option<&Interval> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Interval)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &Term> {
        self.entries.keys()
    }

    /// Replaces the interval of `key`.
    pub fn insert(&mut self, key: Term, iv: Interval) {
        self.entries.insert(key, iv);
    }

    /// Intersects the interval of `key` with `iv`.
    pub fn refine(&mut self, key: Term, iv: &Interval) -> Result<()> {
        let current = self.entries.get(&key).cloned().unwrap_or_default();
        match current.intersect(iv) {
            Some(n) => {
                self.entries.insert(key, n);
                Ok(())
            }
            None => Err(Error::EmptyIntersection(print_term(&key))),
        }
    }

    /// Pointwise intersection. Keys present in only one map are kept as is.
    pub fn intersect(&self, other: &IntervalMap) -> Result<IntervalMap> {
        let mut out = self.clone();
        for (k, iv) in &other.entries {
            out.refine(k.clone(), iv)?;
        }
        Ok(out)
    }

    /// Whether every keyed leaf evaluates, under `m`, inside its interval.
    pub fn contains(&self, m: &Model) -> Result<bool> {
        for (k, iv) in &self.entries {
            if !iv.contains(&m.eval_int(k)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The conjunction of bounds this map denotes.
    pub fn to_formula(&self) -> Formula {
        let mut atoms = Vec::new();
        for (k, iv) in &self.entries {
            if let Some(l) = iv.lo() {
                atoms.push(Formula::ge(k.clone(), Term::IntConst(l.clone())));
            }
            if let Some(h) = iv.hi() {
                atoms.push(Formula::le(k.clone(), Term::IntConst(h.clone())));
            }
        }
        Formula::And(atoms)
    }

    /// Disjunction of violated bounds; equivalent to the negation of
    /// [`IntervalMap::to_formula`].
    pub fn neg_to_formula(&self) -> Formula {
        let mut atoms = Vec::new();
        for (k, iv) in &self.entries {
            if let Some(l) = iv.lo() {
                atoms.push(Formula::lt(k.clone(), Term::IntConst(l.clone())));
            }
            if let Some(h) = iv.hi() {
                atoms.push(Formula::gt(k.clone(), Term::IntConst(h.clone())));
            }
        }
        Formula::Or(atoms)
    }

    /// JSON object `{"<term>": [lo | "-inf", hi | "+inf"]}`.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        for (k, iv) in &self.entries {
            let lo = iv.lo().map_or(Value::from("-inf"), int_json);
            let hi = iv.hi().map_or(Value::from("+inf"), int_json);
            obj.insert(print_term(k), Value::Array(vec![lo, hi]));
        }
        Value::Object(obj)
    }

    /// Inverse of [`IntervalMap::to_json`]; keys are parsed as SMT-LIB terms
    /// over `decls`.
    pub fn from_json(v: &Value, decls: &[Declaration]) -> Result<IntervalMap> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Format("interval map must be a JSON object".into()))?;
        let mut out = IntervalMap::new();
        for (k, bounds) in obj {
            // parse the key through a dummy atom so the term parser can be reused
            let key = match parse_formula(&format!("(= {k} 0)"), decls)? {
                Formula::Atom(_, t, _) if t.is_leaf() => t,
                _ => return Err(Error::Format(format!("`{k}` is not a leaf term"))),
            };
            let pair = bounds
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Format(format!("bounds of `{k}` must be a pair")))?;
            let lo = bound_from_json(&pair[0], "-inf")?;
            let hi = bound_from_json(&pair[1], "+inf")?;
            let iv = Interval::new(lo, hi).ok_or_else(|| Error::EmptyIntersection(k.clone()))?;
            out.insert(key, iv);
        }
        Ok(out)
    }
}

impl FromIterator<(Term, Interval)> for IntervalMap {
    fn from_iter<I: IntoIterator<Item = (Term, Interval)>>(iter: I) -> Self {
        IntervalMap {
            entries: iter.into_iter().collect(),
        }
    }
}

pub(crate) fn int_json(v: &BigInt) -> Value {
    Value::Number(v.to_string().parse::<Number>().expect("integer literal"))
}

pub(crate) fn int_from_json(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.to_string().parse().ok(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn bound_from_json(v: &Value, infinite: &str) -> Result<Option<BigInt>> {
    if v.as_str() == Some(infinite) {
        return Ok(None);
    }
    int_from_json(v)
        .map(Some)
        .ok_or_else(|| Error::Format(format!("bad interval bound {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smtlib::SymbolKind;

    fn x() -> Term {
        Term::var("x")
    }

    fn y() -> Term {
        Term::var("y")
    }

    fn map(entries: &[(Term, Interval)]) -> IntervalMap {
        entries.iter().cloned().collect()
    }

    #[test]
    fn intersect_overlapping() {
        let a = map(&[(x(), Interval::closed(0, 10).unwrap())]);
        let b = map(&[(x(), Interval::closed(5, 20).unwrap())]);
        assert_eq!(
            a.intersect(&b).unwrap(),
            map(&[(x(), Interval::closed(5, 10).unwrap())])
        );
    }

    #[test]
    fn intersect_disjoint_keys() {
        let a = map(&[(x(), Interval::closed(0, 1).unwrap())]);
        let b = map(&[(y(), Interval::closed(2, 3).unwrap())]);
        let c = a.intersect(&b).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(&x()), a.get(&x()));
        assert_eq!(c.get(&y()), b.get(&y()));
    }

    #[test]
    fn intersect_empty_is_error() {
        let a = map(&[(x(), Interval::closed(0, 1).unwrap())]);
        let b = map(&[(x(), Interval::closed(2, 3).unwrap())]);
        assert!(matches!(a.intersect(&b), Err(Error::EmptyIntersection(k)) if k == "x"));
    }

    #[test]
    fn membership() {
        let iv = map(&[(x(), Interval::closed(0, 15).unwrap()), (y(), Interval::at_least(2))]);
        assert!(iv.contains(&Model::new().with_int("x", 12).with_int("y", 2)).unwrap());
        let iv = map(&[(x(), Interval::closed(0, 15).unwrap())]);
        assert!(!iv.contains(&Model::new().with_int("x", 16)).unwrap());
    }

    #[test]
    fn formulas() {
        let iv = map(&[(x(), Interval::closed(0, 15).unwrap())]);
        assert_eq!(
            iv.to_formula(),
            Formula::And(vec![Formula::ge(x(), Term::int(0)), Formula::le(x(), Term::int(15))])
        );
        assert_eq!(
            iv.neg_to_formula(),
            Formula::Or(vec![Formula::lt(x(), Term::int(0)), Formula::gt(x(), Term::int(15))])
        );
        let half = map(&[(y(), Interval::at_least(2))]);
        assert_eq!(half.to_formula(), Formula::And(vec![Formula::ge(y(), Term::int(2))]));
        assert_eq!(IntervalMap::new().to_formula(), Formula::And(vec![]));
        let unbounded = map(&[(y(), Interval::full())]);
        assert_eq!(unbounded.neg_to_formula(), Formula::Or(vec![]));
    }

    #[test]
    fn json_round_trip() {
        let a = Term::select(Term::array("a"), Term::var("i"));
        let iv = map(&[
            (x(), Interval::closed(0, 15).unwrap()),
            (y(), Interval::at_least(2)),
            (a.clone(), Interval::at_most(-3)),
        ]);
        let j = iv.to_json();
        assert_eq!(j["y"], serde_json::json!([2, "+inf"]));
        let decls = [
            Declaration::new("x", SymbolKind::Int),
            Declaration::new("y", SymbolKind::Int),
            Declaration::new("i", SymbolKind::Int),
            Declaration::new("a", SymbolKind::Array),
        ];
        assert_eq!(IntervalMap::from_json(&j, &decls).unwrap(), iv);
    }
}
