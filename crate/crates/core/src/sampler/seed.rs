//! Obtaining seed models from the solver.

use num_bigint::{BigInt, RandBigInt};
use num_traits::One;
use rand::Rng;

use super::Problem;
use crate::error::{Error, Result};
use crate::formula::{Formula, Term};
use crate::model::Model;
use crate::smtlib::SymbolKind;
use crate::solver::{Solver, SolverRequest, SolverVerdict};

/// Counters updated by the seed functions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedStats {
    pub solver_calls: u64,
    /// Times a soft-constraint query fell back to a plain one.
    pub maxsmt_degradations: u64,
    pub blocking_resets: u64,
    /// Set after the first degradation; later seeds go straight to `solve`.
    pub soft_unsupported: bool,
}

fn seed_from(v: SolverVerdict) -> Result<Option<Model>> {
    match v {
        SolverVerdict::Sat(m) => Ok(Some(m)),
        SolverVerdict::Unsat => Err(Error::Unsat),
        SolverVerdict::Unknown(reason) => {
            log::warn!("solver gave up: {reason}");
            Ok(None)
        }
    }
}

/// A model of the problem closest to a random assignment: every int
/// variable gets a unit-weight soft equality to a value uniform in
/// `[-bound, bound]`. `None` when the solver answers unknown.
pub fn get_seed_random<S, R>(
    problem: &Problem,
    solver: &mut S,
    bound: &BigInt,
    rng: &mut R,
    stats: &mut SeedStats,
) -> Result<Option<Model>>
where
    S: Solver + ?Sized,
    R: Rng + ?Sized,
{
    let req = SolverRequest::new(problem.declarations.clone(), vec![problem.formula.clone()]);
    if stats.soft_unsupported {
        stats.solver_calls += 1;
        return seed_from(solver.solve(&req)?);
    }
    let hi = bound + BigInt::one();
    let soft = problem
        .declarations
        .iter()
        .filter(|d| d.kind == SymbolKind::Int)
        .map(|d| {
            let r = rng.gen_bigint_range(&-bound, &hi);
            (Formula::eq(Term::var(&d.name), Term::IntConst(r)), 1)
        })
        .collect();
    let req = req.with_soft(soft);
    stats.solver_calls += 1;
    match solver.max_solve(&req) {
        Err(Error::UnsupportedSoft(diag)) => {
            log::warn!("solver rejected soft constraints, falling back to plain solving: {diag}");
            stats.maxsmt_degradations += 1;
            stats.soft_unsupported = true;
            stats.solver_calls += 1;
            seed_from(solver.solve(&req)?)
        }
        other => seed_from(other?),
    }
}

/// A model of the problem outside every blocked region. When the blocked
/// query is unsat the blocking list is cleared and the query retried once.
pub fn get_seed_blocking<S>(
    problem: &Problem,
    solver: &mut S,
    blocking: &mut Vec<Formula>,
    stats: &mut SeedStats,
) -> Result<Option<Model>>
where
    S: Solver + ?Sized,
{
    let mut hard = vec![problem.formula.clone()];
    hard.extend(blocking.iter().cloned());
    stats.solver_calls += 1;
    let v = solver.solve(&SolverRequest::new(problem.declarations.clone(), hard))?;
    if v != SolverVerdict::Unsat || blocking.is_empty() {
        return seed_from(v);
    }
    blocking.clear();
    stats.blocking_resets += 1;
    stats.solver_calls += 1;
    let req = SolverRequest::new(problem.declarations.clone(), vec![problem.formula.clone()]);
    seed_from(solver.solve(&req)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{Interval, IntervalMap};
    use crate::smtlib::Declaration;
    use crate::solver::{EnumerationSolver, ScriptedSolver};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x() -> Term {
        Term::var("x")
    }

    fn problem(f: Formula) -> Problem {
        Problem::new(vec![Declaration::new("x", SymbolKind::Int)], f).unwrap()
    }

    fn range(lo: i64, hi: i64) -> Formula {
        Formula::and([Formula::ge(x(), Term::int(lo)), Formula::le(x(), Term::int(hi))])
    }

    #[test]
    fn random_seed_unique_model() {
        let p = problem(Formula::eq(x(), Term::int(5)));
        let mut s = EnumerationSolver::new(-10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut stats = SeedStats::default();
        for _ in 0..5 {
            let m = get_seed_random(&p, &mut s, &BigInt::from(100), &mut rng, &mut stats)
                .unwrap()
                .unwrap();
            assert_eq!(m.ints["x"], 5.into());
        }
        assert_eq!(stats.solver_calls, 5);
    }

    #[test]
    fn random_seed_hits_soft_target() {
        let p = problem(range(0, 10));
        let mut s = EnumerationSolver::new(-10, 10);
        let mut stats = SeedStats::default();
        // bound 0 forces the soft target x = 0
        let m = get_seed_random(
            &p,
            &mut s,
            &BigInt::from(0),
            &mut ChaCha8Rng::seed_from_u64(1),
            &mut stats,
        );
        assert_eq!(m.unwrap().unwrap().ints["x"], 0.into());
    }

    #[test]
    fn unsat_propagates() {
        let p = problem(Formula::and([
            Formula::ge(x(), Term::int(1)),
            Formula::le(x(), Term::int(0)),
        ]));
        let mut s = EnumerationSolver::new(-10, 10);
        let r = get_seed_random(
            &p,
            &mut s,
            &BigInt::from(3),
            &mut ChaCha8Rng::seed_from_u64(1),
            &mut SeedStats::default(),
        );
        assert!(matches!(r, Err(Error::Unsat)));
    }

    #[test]
    fn blocking_moves_seed() {
        let p = problem(range(0, 3));
        let mut s = EnumerationSolver::new(-10, 10);
        let blocked: IntervalMap = [(x(), Interval::closed(0, 1).unwrap())].into_iter().collect();
        let mut blocking = vec![blocked.neg_to_formula()];
        let mut stats = SeedStats::default();
        let m = get_seed_blocking(&p, &mut s, &mut blocking, &mut stats)
            .unwrap()
            .unwrap();
        assert!(m.ints["x"] == 2.into() || m.ints["x"] == 3.into());
        assert_eq!(stats.blocking_resets, 0);
        assert_eq!(blocking.len(), 1);
    }

    #[test]
    fn blocking_reset() {
        let p = problem(Formula::eq(x(), Term::int(0)));
        let mut s = EnumerationSolver::new(-10, 10);
        let blocked: IntervalMap = [(x(), Interval::point(0.into()))].into_iter().collect();
        let mut blocking = vec![blocked.neg_to_formula()];
        let mut stats = SeedStats::default();
        let m = get_seed_blocking(&p, &mut s, &mut blocking, &mut stats)
            .unwrap()
            .unwrap();
        assert_eq!(m.ints["x"], 0.into());
        assert!(blocking.is_empty());
        assert_eq!((stats.blocking_resets, stats.solver_calls), (1, 2));
    }

    struct NoSoft(EnumerationSolver);

    impl Solver for NoSoft {
        fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
            self.0.solve(req)
        }

        fn max_solve(&mut self, _: &SolverRequest) -> Result<SolverVerdict> {
            Err(Error::UnsupportedSoft("(error \"unknown command assert-soft\")".into()))
        }
    }

    #[test]
    fn soft_degradation_counted_once() {
        let p = problem(range(0, 3));
        let mut s = NoSoft(EnumerationSolver::new(-10, 10));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut stats = SeedStats::default();
        for _ in 0..3 {
            get_seed_random(&p, &mut s, &BigInt::from(3), &mut rng, &mut stats)
                .unwrap()
                .unwrap();
        }
        assert_eq!(stats.maxsmt_degradations, 1);
        assert_eq!(stats.solver_calls, 4);
    }

    #[test]
    fn unknown_is_not_an_error() {
        let p = problem(range(0, 3));
        let mut s = ScriptedSolver::new([SolverVerdict::Unknown("timeout".into())]);
        let mut stats = SeedStats::default();
        assert_eq!(
            get_seed_blocking(&p, &mut s, &mut Vec::new(), &mut stats).unwrap(),
            None
        );
    }
}
