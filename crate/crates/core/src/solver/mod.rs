//! Solver clients: `solve` and `max_solve` over the supported theories.
//!
//! Every SAT answer is completed to a total model over the request's
//! declarations and re-checked against the hard constraints before it is
//! returned, whatever the backend.

mod enumerate;
mod model_parse;
mod process;
mod scripted;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::model::{FuncValue, Model};
use crate::smtlib::{Declaration, SymbolKind};

pub use enumerate::EnumerationSolver;
pub use model_parse::parse_model;
pub use process::{ProcessSolver, DEFAULT_SOLVER_CMD};
pub use scripted::{read_transcript, RecordingSolver, ScriptedSolver};

/// A satisfiability query. `soft` is ignored by [`Solver::solve`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverRequest {
    pub declarations: Vec<Declaration>,
    pub hard: Vec<Formula>,
    pub soft: Vec<(Formula, u64)>,
}

impl SolverRequest {
    pub fn new(declarations: Vec<Declaration>, hard: Vec<Formula>) -> Self {
        SolverRequest {
            declarations,
            hard,
            soft: Vec::new(),
        }
    }

    pub fn with_soft(mut self, soft: Vec<(Formula, u64)>) -> Self {
        self.soft = soft;
        self
    }
}

/// Outcome of a query. Process failures are reported as `Err` instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverVerdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

pub trait Solver {
    fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict>;

    /// Hard constraints must hold; soft ones are maximised on a best-effort
    /// basis. Backends without soft constraint support return
    /// [`Error::UnsupportedSoft`].
    fn max_solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict>;
}

impl<S: Solver + ?Sized> Solver for Box<S> {
    fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        (**self).solve(req)
    }

    fn max_solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        (**self).max_solve(req)
    }
}

/// Restricts `m` to the declared symbols, fills missing ones with
/// defaults (0, false, constant-0 function) and re-checks the hard
/// constraints.
pub fn complete_and_check(req: &SolverRequest, m: Model) -> Result<Model> {
    let mut out = Model::new();
    for d in &req.declarations {
        match d.kind {
            SymbolKind::Int => {
                let v = m.ints.get(&d.name).cloned().unwrap_or_default();
                out.ints.insert(d.name.clone(), v);
            }
            SymbolKind::Bool => {
                let v = m.bools.get(&d.name).copied().unwrap_or(false);
                out.bools.insert(d.name.clone(), v);
            }
            SymbolKind::Array | SymbolKind::Function => {
                let v = m
                    .funcs
                    .get(&d.name)
                    .cloned()
                    .unwrap_or_else(|| FuncValue::constant(BigInt::default()));
                out.funcs.insert(d.name.clone(), v);
            }
        }
    }
    for h in &req.hard {
        if !out.satisfies(h)? {
            return Err(Error::Solver(format!("solver model violates hard constraint `{h}`")));
        }
    }
    Ok(out)
}
