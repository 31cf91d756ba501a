//! Model implicants: a conjunction of literals that implies an NNF formula
//! and is satisfied by a given model.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::model::Model;

/// A conjunction of literals (atoms, boolean variables, or their negations).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProductTerm {
    pub literals: Vec<Formula>,
}

impl ProductTerm {
    pub fn new(literals: Vec<Formula>) -> Self {
        ProductTerm { literals }
    }

    pub fn to_formula(&self) -> Formula {
        Formula::And(self.literals.clone())
    }

    pub fn push(&mut self, lit: Formula) {
        if !self.literals.contains(&lit) {
            self.literals.push(lit);
        }
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

/// Walks the NNF formula top-down, keeping every conjunct and one uniformly
/// chosen satisfied disjunct of each disjunction.
pub fn compute_implicant<R: Rng + ?Sized>(f: &Formula, m: &Model, rng: &mut R) -> Result<ProductTerm> {
    if !m.satisfies(f)? {
        return Err(Error::NotAModel);
    }
    let mut out = ProductTerm::default();
    collect(f, m, rng, &mut out)?;
    Ok(out)
}

fn collect<R: Rng + ?Sized>(f: &Formula, m: &Model, rng: &mut R, out: &mut ProductTerm) -> Result<()> {
    match f {
        Formula::Const(true) => Ok(()),
        Formula::Const(false) => Err(Error::NotAModel),
        lit if lit.is_literal() => {
            out.push(lit.clone());
            Ok(())
        }
        Formula::And(xs) => xs.iter().try_for_each(|x| collect(x, m, rng, out)),
        Formula::Or(xs) => {
            let mut sat = Vec::new();
            for x in xs {
                if m.satisfies(x)? {
                    sat.push(x);
                }
            }
            let chosen = sat.choose(rng).ok_or(Error::NotAModel)?;
            collect(chosen, m, rng, out)
        }
        other => Err(Error::UnsupportedFeature(format!("formula not in NNF: `{other}`"))),
    }
}
