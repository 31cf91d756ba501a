use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use megasample::sampler::{mega_sample, Problem, SamplerConfig};
use megasample::smtlib::{parse_problem, print_problem};
use megasample::solver::{parse_model, ProcessSolver, Solver, SolverRequest, SolverVerdict};
use megasample::{Error, Sample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data(dir: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(dir)
}

fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(data("data"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "smt2"))
        .map(|p| {
            (
                p.file_stem().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn z3_available() -> bool {
    std::process::Command::new("z3").arg("-version").output().is_ok()
}

#[test]
fn corpus_has_twenty_files() {
    assert_eq!(corpus().len(), 20);
}

#[test]
fn print_parse_round_trip() {
    for (name, text) in corpus() {
        let p = parse_problem(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_problem(&print_problem(&p)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(p, again, "{name}");
    }
}

#[test]
fn recorded_models_verify() {
    let models = data("models");
    let mut checked = 0;
    for (name, text) in corpus() {
        let p = parse_problem(&text).unwrap();
        let files: Vec<PathBuf> = fs::read_dir(&models)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|f| {
                let stem = f.file_stem().unwrap().to_string_lossy();
                stem == name.as_str() || stem.strip_prefix(name.as_str()).is_some_and(|r| r.starts_with("-soft"))
            })
            .collect();
        for f in files {
            let m = parse_model(&fs::read_to_string(&f).unwrap(), &p.declarations)
                .unwrap_or_else(|e| panic!("{}: {e}", f.display()));
            let req = SolverRequest::new(p.declarations.clone(), vec![p.assertion.clone()]);
            megasample::solver::complete_and_check(&req, m).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn z3_solve_examples() {
    if !z3_available() {
        eprintln!("z3 not found; skipping");
        return;
    }
    let mut s = ProcessSolver::new("z3 -in", Duration::from_secs(60)).unwrap();
    let p = parse_problem("(declare-const x Int)(assert (and (>= x 0) (<= x 0)))").unwrap();
    let req = SolverRequest::new(p.declarations.clone(), vec![p.assertion.clone()]);
    match s.solve(&req).unwrap() {
        SolverVerdict::Sat(m) => assert_eq!(m.ints["x"], 0.into()),
        other => panic!("{other:?}"),
    }
    let p = parse_problem("(declare-const x Int)(assert (and (>= x 1) (<= x 0)))").unwrap();
    let req = SolverRequest::new(p.declarations.clone(), vec![p.assertion.clone()]);
    assert_eq!(s.solve(&req).unwrap(), SolverVerdict::Unsat);

    let p = parse_problem("(declare-const x Int)(assert (and (>= x 0) (<= x 10)))").unwrap();
    let x = megasample::Term::var("x");
    let soft = |v: i64| (megasample::Formula::eq(x.clone(), megasample::Term::int(v)), 1);
    let req = SolverRequest::new(p.declarations.clone(), vec![p.assertion.clone()]).with_soft(vec![soft(7)]);
    match s.max_solve(&req).unwrap() {
        SolverVerdict::Sat(m) => assert_eq!(m.ints["x"], 7.into()),
        other => panic!("{other:?}"),
    }
    let req = req.with_soft(vec![soft(1), soft(2)]);
    match s.max_solve(&req).unwrap() {
        SolverVerdict::Sat(m) => assert!(m.ints["x"] == 1.into() || m.ints["x"] == 2.into()),
        other => panic!("{other:?}"),
    }
    // the same process keeps answering after many scoped queries
    for (_, text) in corpus() {
        let p = parse_problem(&text).unwrap();
        let req = SolverRequest::new(p.declarations.clone(), vec![p.assertion.clone()]);
        match s.solve(&req) {
            Ok(SolverVerdict::Sat(_)) | Ok(SolverVerdict::Unsat) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn broken_solver_command_is_an_error() {
    if !z3_available() {
        return;
    }
    // a broken command line surfaces as a solver error, not a hang
    let mut s = ProcessSolver::new("z3 -smt2 /nonexistent.smt2", Duration::from_secs(5)).unwrap();
    assert!(matches!(s.solve(&SolverRequest::default()), Err(Error::Solver(_))));
}

#[test]
fn z3_corpus_yields_samples() {
    if !z3_available() {
        eprintln!("z3 not found; skipping");
        return;
    }
    for (name, text) in corpus() {
        let parsed = parse_problem(&text).unwrap();
        let problem = Problem::from_parsed(&parsed).unwrap();
        let cfg = SamplerConfig {
            max_samples: Some(150),
            total_time_limit: Duration::from_secs(60),
            rounds: 5,
            samples_per_round: 100,
            ..SamplerConfig::default()
        };
        let mut solver = ProcessSolver::new("z3 -in", Duration::from_secs(60)).unwrap();
        let mut out: Vec<Sample> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        match mega_sample(&problem, &cfg, &mut solver, &mut rng, &mut out) {
            Err(Error::Unsat) => assert_eq!(name, "unsat"),
            Ok(stats) => {
                assert!(out.len() >= 100, "{name}: {} samples, {stats:?}", out.len());
                for s in &out {
                    assert!(s.satisfies(&parsed.assertion).unwrap(), "{name}");
                }
            }
            Err(e) => panic!("{name}: {e}"),
        }
    }
}
