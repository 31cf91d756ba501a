//! Negation normal form and the rewrites that bring parsed SMT-LIB input
//! into the core grammar.

use crate::error::{Error, Result};
use crate::formula::{Formula, Rel, Sort, Term};

/// Pushes negations down to atoms and boolean variables.
///
/// On formulas built from atoms with `not`/`and`/`or` only the literal
/// count is preserved. Surface connectives (`=>`, `xor`, boolean `ite`, ...)
/// are expanded on the fly; run [`preprocess`] first to keep the expansion
/// explicit.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, true)
}

fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::Const(b) => Formula::Const(*b == positive),
        Formula::BoolVar(_) | Formula::Atom(..) => {
            if positive {
                f.clone()
            } else {
                Formula::not(f.clone())
            }
        }
        Formula::Not(x) => nnf(x, !positive),
        Formula::And(xs) => {
            let kids = xs.iter().map(|x| nnf(x, positive));
            if positive {
                Formula::and(kids)
            } else {
                Formula::or(kids)
            }
        }
        Formula::Or(xs) => {
            let kids = xs.iter().map(|x| nnf(x, positive));
            if positive {
                Formula::or(kids)
            } else {
                Formula::and(kids)
            }
        }
        other => nnf(&expand_connective(other), positive),
    }
}

/// One-step expansion of a surface connective into `not`/`and`/`or`.
fn expand_connective(f: &Formula) -> Formula {
    let not = |x: &Formula| Formula::not(x.clone());
    match f {
        Formula::Implies(a, b) => Formula::or([not(a), (**b).clone()]),
        Formula::Iff(a, b) => Formula::or([
            Formula::and([(**a).clone(), (**b).clone()]),
            Formula::and([not(a), not(b)]),
        ]),
        Formula::Xor(a, b) => Formula::or([
            Formula::and([(**a).clone(), not(b)]),
            Formula::and([not(a), (**b).clone()]),
        ]),
        Formula::Ite(c, a, b) => Formula::or([
            Formula::and([(**c).clone(), (**a).clone()]),
            Formula::and([not(c), (**b).clone()]),
        ]),
        Formula::Distinct(ts) => {
            let mut lits = Vec::new();
            for (i, a) in ts.iter().enumerate() {
                for b in &ts[i + 1..] {
                    lits.push(Formula::ne(a.clone(), b.clone()));
                }
            }
            Formula::And(lits)
        }
        other => other.clone(),
    }
}

/// Rewrites a parsed formula into the core grammar: expands `=>`, `<=>`,
/// `xor`, boolean `ite` and `distinct`, and lifts term-level `ite` out of
/// atoms by case splitting. The result is sort-checked.
pub fn preprocess(f: &Formula) -> Result<Formula> {
    let out = rewrite(f)?;
    check_formula(&out)?;
    Ok(out)
}

fn rewrite(f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::Const(_) | Formula::BoolVar(_) => f.clone(),
        Formula::Atom(..) => lift_ite(f)?,
        Formula::Not(x) => Formula::not(rewrite(x)?),
        Formula::And(xs) => Formula::and(xs.iter().map(rewrite).collect::<Result<Vec<_>>>()?),
        Formula::Or(xs) => Formula::or(xs.iter().map(rewrite).collect::<Result<Vec<_>>>()?),
        other => rewrite(&expand_connective(other))?,
    })
}

/// `A[ite(b,t1,t2)]` becomes `(b /\ A[t1]) \/ (!b /\ A[t2])`.
fn lift_ite(atom: &Formula) -> Result<Formula> {
    let mut found: Option<Term> = None;
    atom.visit_terms(&mut |t| {
        if found.is_none() && matches!(t, Term::Ite(..)) {
            found = Some(t.clone());
        }
    });
    let Some(ite) = found else {
        return Ok(atom.clone());
    };
    let Term::Ite(cond, then_t, else_t) = &ite else {
        unreachable!()
    };
    let cond = rewrite(cond)?;
    Ok(Formula::or([
        Formula::and([cond.clone(), lift_ite(&atom.replace_term(&ite, then_t))?]),
        Formula::and([Formula::not(cond), lift_ite(&atom.replace_term(&ite, else_t))?]),
    ]))
}

/// Verifies that `f` lies within the core grammar and is well sorted.
pub fn check_formula(f: &Formula) -> Result<()> {
    match f {
        Formula::Const(_) | Formula::BoolVar(_) => Ok(()),
        Formula::Atom(rel, l, r) => {
            let (ls, rs) = (check_term(l)?, check_term(r)?);
            if ls != rs {
                return Err(Error::Sort(format!("operands of `{f}` differ in sort")));
            }
            if ls == Sort::Array && !matches!(rel, Rel::Eq | Rel::Ne) {
                return Err(Error::Sort(format!("ordering on arrays in `{f}`")));
            }
            Ok(())
        }
        Formula::Not(x) => check_formula(x),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().try_for_each(check_formula),
        other => Err(Error::UnsupportedFeature(format!(
            "connective outside the core grammar: `{other}`"
        ))),
    }
}

fn check_term(t: &Term) -> Result<Sort> {
    let expect_int = |x: &Term| -> Result<()> {
        match check_term(x)? {
            Sort::Int => Ok(()),
            s => Err(Error::Sort(format!("`{x}` has sort {s:?}, expected Int"))),
        }
    };
    match t {
        Term::IntConst(_) | Term::IntVar(_) => Ok(Sort::Int),
        Term::ArrayVar(_) => Ok(Sort::Array),
        Term::Add(xs) | Term::Mul(xs) => {
            xs.iter().try_for_each(expect_int)?;
            Ok(Sort::Int)
        }
        Term::Sub(a, b) => {
            expect_int(a)?;
            expect_int(b)?;
            Ok(Sort::Int)
        }
        Term::FunApp(_, a) => {
            expect_int(a)?;
            Ok(Sort::Int)
        }
        Term::Select(a, i) => {
            if check_term(a)? != Sort::Array {
                return Err(Error::Sort(format!("select on non-array `{a}`")));
            }
            expect_int(i)?;
            Ok(Sort::Int)
        }
        Term::Store(a, i, v) => {
            if check_term(a)? != Sort::Array {
                return Err(Error::Sort(format!("store on non-array `{a}`")));
            }
            expect_int(i)?;
            expect_int(v)?;
            Ok(Sort::Array)
        }
        Term::Ite(..) => Err(Error::UnsupportedFeature(format!("term-level ite in `{t}`"))),
    }
}
