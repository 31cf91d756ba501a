//! Brute-force solver over a bounded integer box, for tests and for use
//! without an external solver. Ints and bools only.

use num_bigint::BigInt;

use super::{complete_and_check, Solver, SolverRequest, SolverVerdict};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::smtlib::SymbolKind;

/// Enumerates every assignment with ints in `[lo, hi]` in lexicographic
/// order of the declarations. "Unsat" means unsat within the box.
#[derive(Clone, Debug)]
pub struct EnumerationSolver {
    lo: i64,
    hi: i64,
    max_assignments: u64,
}

impl EnumerationSolver {
    pub fn new(lo: i64, hi: i64) -> Self {
        EnumerationSolver {
            lo,
            hi,
            max_assignments: 50_000_000,
        }
    }

    fn search(&self, req: &SolverRequest, soft: bool) -> Result<SolverVerdict> {
        let mut domains = Vec::new();
        for d in &req.declarations {
            let size = match d.kind {
                SymbolKind::Int => (self.hi - self.lo + 1).max(0) as u64,
                SymbolKind::Bool => 2,
                SymbolKind::Array | SymbolKind::Function => {
                    return Err(Error::UnsupportedFeature(format!(
                        "enumeration solver cannot handle array or function `{}`",
                        d.name
                    )));
                }
            };
            domains.push(size);
        }
        let total = domains.iter().try_fold(1u64, |acc, &s| acc.checked_mul(s));
        match total {
            Some(0) => return Ok(SolverVerdict::Unsat),
            Some(t) if t <= self.max_assignments => {}
            _ => return Err(Error::Solver("enumeration domain too large".into())),
        }
        let mut digits = vec![0u64; domains.len()];
        let mut best: Option<(u64, Model)> = None;
        loop {
            let m = self.assignment(req, &digits);
            if req
                .hard
                .iter()
                .try_fold(true, |ok, h| Ok::<_, Error>(ok && m.satisfies(h)?))?
            {
                if !soft {
                    return Ok(SolverVerdict::Sat(complete_and_check(req, m)?));
                }
                let mut score = 0;
                for (f, w) in &req.soft {
                    if m.satisfies(f)? {
                        score += w;
                    }
                }
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, m));
                }
            }
            if !increment(&mut digits, &domains) {
                break;
            }
        }
        match best {
            Some((_, m)) => Ok(SolverVerdict::Sat(complete_and_check(req, m)?)),
            None => Ok(SolverVerdict::Unsat),
        }
    }

    fn assignment(&self, req: &SolverRequest, digits: &[u64]) -> Model {
        let mut m = Model::new();
        for (d, &k) in req.declarations.iter().zip(digits) {
            match d.kind {
                SymbolKind::Int => {
                    m.ints.insert(d.name.clone(), BigInt::from(self.lo) + k);
                }
                _ => {
                    m.bools.insert(d.name.clone(), k == 1);
                }
            }
        }
        m
    }
}

fn increment(digits: &mut [u64], domains: &[u64]) -> bool {
    for (d, &size) in digits.iter_mut().zip(domains).rev() {
        *d += 1;
        if *d < size {
            return true;
        }
        *d = 0;
    }
    false
}

impl Solver for EnumerationSolver {
    fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.search(req, false)
    }

    fn max_solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.search(req, true)
    }
}
