//! Strengthening of integer literals into interval constraints around a
//! model.
//!
//! Every literal is first normalised to `t_1 + ... + t_k <= c`, where each
//! `t_i` is a monomial `a * f_1 * ... * f_n`. The rules then run top-down:
//!
//! * sums share the slack `c - sum m[t_i]` among the summands with
//!   [`portion`];
//! * a constant coefficient is divided out with [`signed_floor_div`];
//! * a product of factors keeps the sign of every factor. When the signed
//!   product is non-negative each factor may only move toward zero, when it
//!   is negative only away from zero;
//! * bounds on compound factors (sums under a product) are normalised and
//!   strengthened recursively, bounds on leaves are recorded.
//!
//! The resulting box contains the model and every point of it satisfies the
//! literal.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::formula::{Formula, Rel, Sort, Term};
use crate::implicant::ProductTerm;
use crate::interval::{Interval, IntervalMap};
use crate::model::Model;

/// `coeff * factors[0] * ... * factors[n-1]`.
///
/// Factors are leaves or compound (non-linear) sub-terms, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub coeff: BigInt,
    pub factors: Vec<Term>,
}

impl Monomial {
    pub fn eval(&self, m: &Model) -> Result<BigInt> {
        let mut v = self.coeff.clone();
        for f in &self.factors {
            v *= m.eval_int(f)?;
        }
        Ok(v)
    }

    pub fn to_term(&self) -> Term {
        let mut args = Vec::with_capacity(self.factors.len() + 1);
        if !self.coeff.is_one() || self.factors.is_empty() {
            args.push(Term::IntConst(self.coeff.clone()));
        }
        args.extend(self.factors.iter().cloned());
        if args.len() == 1 {
            args.pop().unwrap()
        } else {
            Term::Mul(args)
        }
    }
}

/// `monomials[0] + ... + monomials[k-1] <= bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalLiteral {
    pub monomials: Vec<Monomial>,
    pub bound: BigInt,
}

impl CanonicalLiteral {
    pub fn to_formula(&self) -> Formula {
        let lhs = Term::Add(self.monomials.iter().map(Monomial::to_term).collect());
        Formula::le(lhs, Term::IntConst(self.bound.clone()))
    }

    /// `bound - sum m[t_i]`; non-negative iff `m` satisfies the literal.
    pub fn slack(&self, m: &Model) -> Result<BigInt> {
        let mut s = self.bound.clone();
        for mono in &self.monomials {
            s -= mono.eval(m)?;
        }
        Ok(s)
    }
}

/// Linear combination of monomials plus a constant.
#[derive(Clone, Debug, Default)]
struct Poly {
    monomials: Vec<Monomial>,
    constant: BigInt,
}

impl Poly {
    fn constant(c: BigInt) -> Poly {
        Poly {
            monomials: Vec::new(),
            constant: c,
        }
    }

    fn add_monomial(&mut self, mono: Monomial) {
        if let Some(existing) = self.monomials.iter_mut().find(|x| x.factors == mono.factors) {
            existing.coeff += mono.coeff;
        } else {
            self.monomials.push(mono);
        }
    }

    fn add_scaled(&mut self, other: Poly, scale: &BigInt) {
        self.constant += other.constant * scale;
        for mut mono in other.monomials {
            mono.coeff *= scale;
            self.add_monomial(mono);
        }
    }

    fn normalized(mut self) -> Poly {
        self.monomials.retain(|m| !m.coeff.is_zero());
        self
    }
}

fn linearize(t: &Term) -> Result<Poly> {
    let one = BigInt::one();
    let poly = match t {
        Term::IntConst(c) => Poly::constant(c.clone()),
        leaf if leaf.is_leaf() => Poly {
            monomials: vec![Monomial {
                coeff: one,
                factors: vec![leaf.clone()],
            }],
            constant: BigInt::zero(),
        },
        Term::Add(xs) => {
            let mut p = Poly::default();
            for x in xs {
                p.add_scaled(linearize(x)?, &one);
            }
            p
        }
        Term::Sub(a, b) => {
            let mut p = linearize(a)?;
            p.add_scaled(linearize(b)?, &-one);
            p
        }
        Term::Mul(xs) => {
            let mut coeff = BigInt::one();
            let mut factors = Vec::new();
            for x in xs {
                let p = linearize(x)?.normalized();
                if p.monomials.is_empty() {
                    coeff *= p.constant;
                } else if p.constant.is_zero() && p.monomials.len() == 1 {
                    let mono = p.monomials.into_iter().next().unwrap();
                    coeff *= mono.coeff;
                    factors.extend(mono.factors);
                } else {
                    // sums under a product stay as compound factors
                    factors.push(x.clone());
                }
            }
            if factors.is_empty() || coeff.is_zero() {
                Poly::constant(if factors.is_empty() { coeff } else { BigInt::zero() })
            } else {
                factors.sort();
                Poly {
                    monomials: vec![Monomial { coeff, factors }],
                    constant: BigInt::zero(),
                }
            }
        }
        other => {
            return Err(Error::UnsupportedFeature(format!(
                "non-arithmetic term in an integer literal: `{other}`"
            )))
        }
    };
    Ok(poly.normalized())
}

/// `lhs - rhs` as monomials plus a constant.
fn difference(lhs: &Term, rhs: &Term) -> Result<Poly> {
    let mut p = linearize(lhs)?;
    p.add_scaled(linearize(rhs)?, &-BigInt::one());
    Ok(p.normalized())
}

fn negated(monos: &[Monomial]) -> Vec<Monomial> {
    monos
        .iter()
        .map(|m| Monomial {
            coeff: -&m.coeff,
            factors: m.factors.clone(),
        })
        .collect()
}

/// Splits an integer literal into `rel`, `lhs`, `rhs` with the negation
/// folded into the relation.
pub(crate) fn literal_parts(lit: &Formula) -> Option<(Rel, &Term, &Term)> {
    match lit {
        Formula::Atom(r, l, rr) => Some((*r, l, rr)),
        Formula::Not(inner) => match &**inner {
            Formula::Atom(r, l, rr) => Some((r.negate(), l, rr)),
            _ => None,
        },
        _ => None,
    }
}

/// Normalises an integer literal satisfied by `m` into canonical `<=` form.
///
/// `=` yields both directions; `!=` yields the strict direction `m`
/// satisfies. Literals whose variable part cancels out produce nothing.
pub fn canonicalize(lit: &Formula, m: &Model) -> Result<Vec<CanonicalLiteral>> {
    let (rel, lhs, rhs) =
        literal_parts(lit).ok_or_else(|| Error::UnsupportedFeature(format!("not an integer literal: `{lit}`")))?;
    if lhs.sort() != Sort::Int || rhs.sort() != Sort::Int {
        return Err(Error::UnsupportedFeature(format!("not an integer literal: `{lit}`")));
    }
    let Poly { monomials, constant } = difference(lhs, rhs)?;
    let one = BigInt::one();
    // lhs - rhs = monomials + constant
    let le = |monomials: Vec<Monomial>, bound: BigInt| CanonicalLiteral { monomials, bound };
    let below = || le(monomials.clone(), -&constant);
    let strictly_below = || le(monomials.clone(), -&constant - &one);
    let above = || le(negated(&monomials), constant.clone());
    let strictly_above = || le(negated(&monomials), &constant - &one);
    let out = match rel {
        Rel::Le => vec![below()],
        Rel::Lt => vec![strictly_below()],
        Rel::Ge => vec![above()],
        Rel::Gt => vec![strictly_above()],
        Rel::Eq => vec![below(), above()],
        Rel::Ne => {
            if m.eval_int(lhs)? < m.eval_int(rhs)? {
                vec![strictly_below()]
            } else {
                vec![strictly_above()]
            }
        }
    };
    let mut kept = Vec::with_capacity(out.len());
    for cl in out {
        if cl.monomials.is_empty() {
            if cl.bound.is_negative() {
                return Err(Error::NegativeSlack(lit.to_string()));
            }
        } else {
            kept.push(cl);
        }
    }
    Ok(kept)
}

/// Share `i` (1-based) of `n` split into `k` nearly equal parts; the first
/// `n mod k` parts get one extra unit.
pub fn portion(n: &BigInt, k: usize, i: usize) -> Result<BigInt> {
    if n.is_negative() {
        return Err(Error::NegativeSlack(format!("portion of {n}")));
    }
    assert!(k >= 1 && (1..=k).contains(&i), "portion index out of range");
    let (q, r) = n.div_mod_floor(&BigInt::from(k));
    Ok(if BigInt::from(i) <= r { q + 1 } else { q })
}

/// `floor(x / y)` for positive `y`, `ceil(x / y)` for negative `y`.
pub fn signed_floor_div(x: &BigInt, y: &BigInt) -> Result<BigInt> {
    match y.sign() {
        Sign::NoSign => Err(Error::DivisorZero),
        Sign::Plus => Ok(x.div_floor(y)),
        Sign::Minus => Ok(-((-x).div_floor(y))),
    }
}

/// Leaf bounds under which the canonical literal holds; `m` lies inside all
/// of them.
pub fn strengthen_literal(cl: &CanonicalLiteral, m: &Model) -> Result<IntervalMap> {
    let mut out = IntervalMap::new();
    strengthen_sum(&cl.monomials, &cl.bound, m, &mut out)?;
    Ok(out)
}

fn strengthen_sum(monos: &[Monomial], bound: &BigInt, m: &Model, out: &mut IntervalMap) -> Result<()> {
    let values = monos.iter().map(|x| x.eval(m)).collect::<Result<Vec<_>>>()?;
    let slack = bound - values.iter().sum::<BigInt>();
    if slack.is_negative() {
        let cl = CanonicalLiteral {
            monomials: monos.to_vec(),
            bound: bound.clone(),
        };
        return Err(Error::NegativeSlack(cl.to_formula().to_string()));
    }
    for (i, (mono, value)) in monos.iter().zip(values).enumerate() {
        let share = value + portion(&slack, monos.len(), i + 1)?;
        strengthen_monomial(mono, &share, m, out)?;
    }
    Ok(())
}

/// `coeff * f_1 * ... * f_n <= bound`.
fn strengthen_monomial(mono: &Monomial, bound: &BigInt, m: &Model, out: &mut IntervalMap) -> Result<()> {
    let sign = if mono.coeff.is_negative() {
        -BigInt::one()
    } else {
        BigInt::one()
    };
    // sign * product <= sign * (bound // coeff)
    let reduced = &sign * signed_floor_div(bound, &mono.coeff)?;
    if let [single] = mono.factors.as_slice() {
        return bound_factor(single, &sign, &reduced, m, out);
    }
    let values = mono.factors.iter().map(|f| m.eval_int(f)).collect::<Result<Vec<_>>>()?;
    let signed_product: BigInt = &sign * values.iter().product::<BigInt>();
    let zero = BigInt::zero();
    for (f, v) in mono.factors.iter().zip(&values) {
        // sign(0) = +1 pins zero-valued factors to 0
        let s = if v.is_negative() { -BigInt::one() } else { BigInt::one() };
        let magnitude = v.abs();
        if signed_product.is_negative() {
            // s * f >= |v|
            bound_factor(f, &-&s, &-magnitude, m, out)?;
        } else {
            // 0 <= s * f <= |v|
            bound_factor(f, &s, &magnitude, m, out)?;
            bound_factor(f, &-&s, &zero, m, out)?;
        }
    }
    Ok(())
}

/// `sign * t <= bound` with `sign` in {-1, +1}.
fn bound_factor(t: &Term, sign: &BigInt, bound: &BigInt, m: &Model, out: &mut IntervalMap) -> Result<()> {
    if t.is_leaf() {
        let iv = if sign.is_positive() {
            Interval::at_most(bound.clone())
        } else {
            Interval::at_least(-bound)
        };
        return out.refine(t.clone(), &iv);
    }
    let p = linearize(t)?;
    let monomials = if sign.is_positive() {
        p.monomials
    } else {
        negated(&p.monomials)
    };
    let rest = bound - sign * p.constant;
    if monomials.is_empty() {
        return if rest.is_negative() {
            Err(Error::NegativeSlack(t.to_string()))
        } else {
            Ok(())
        };
    }
    strengthen_sum(&monomials, &rest, m, out)
}

/// Interval under-approximation of a product of integer literals around `m`.
pub fn pmga_mia(p: &ProductTerm, m: &Model) -> Result<IntervalMap> {
    let mut out = IntervalMap::new();
    for lit in &p.literals {
        for cl in canonicalize(lit, m)? {
            out = out.intersect(&strengthen_literal(&cl, m)?)?;
        }
    }
    Ok(out)
}
