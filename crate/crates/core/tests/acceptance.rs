//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Checks use a small evaluator written here (i128 arithmetic, arrays as
//! default plus exception map) rather than the library's own `satisfies`,
//! so a bug shared by the sampler and its evaluator cannot hide.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use megasample::arrays::{ground, ground_formula_with};
use megasample::coverage::{normalized_coverage, CoverageBitmap};
use megasample::sampler::{
    approximate, get_seed_blocking, mega_sample, sample_intervals, sample_intervals_arrays, Approximation, Draw,
    Problem, SampleSink, SamplerConfig, SeedStats, Strategy,
};
use megasample::smtlib::{parse_problem, Declaration, SymbolKind};
use megasample::solver::{EnumerationSolver, ProcessSolver, ScriptedSolver, SolverVerdict};
use megasample::strengthen::portion;
use megasample::{
    compute_implicant, pmga_mia, Formula, FuncValue, Interval, IntervalMap, Model, ProductTerm, Rel, Sample, Term,
};
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Oracle language

#[derive(Clone, Copy, Debug, PartialEq)]
enum R {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

const RELS: [R; 6] = [R::Lt, R::Le, R::Gt, R::Ge, R::Eq, R::Ne];

impl R {
    fn holds(self, a: i128, b: i128) -> bool {
        match self {
            R::Lt => a < b,
            R::Le => a <= b,
            R::Gt => a > b,
            R::Ge => a >= b,
            R::Eq => a == b,
            R::Ne => a != b,
        }
    }

    fn negate(self) -> R {
        match self {
            R::Lt => R::Ge,
            R::Le => R::Gt,
            R::Gt => R::Le,
            R::Ge => R::Lt,
            R::Eq => R::Ne,
            R::Ne => R::Eq,
        }
    }

    fn lib(self) -> Rel {
        match self {
            R::Lt => Rel::Lt,
            R::Le => Rel::Le,
            R::Gt => Rel::Gt,
            R::Ge => Rel::Ge,
            R::Eq => Rel::Eq,
            R::Ne => Rel::Ne,
        }
    }
}

#[derive(Clone, Debug)]
enum E {
    K(i64),
    V(String),
    Add(Vec<E>),
    Mul(Vec<E>),
    Sel(Box<A>, Box<E>),
    App(Box<E>),
}

#[derive(Clone, Debug)]
enum A {
    Var(&'static str),
    Store(Box<A>, Box<E>, Box<E>),
}

#[derive(Clone, Debug)]
enum F {
    Cmp(R, E, E),
    ArrEq(bool, A, A),
    And(Vec<F>),
    Or(Vec<F>),
    Not(Box<F>),
}

#[derive(Clone, Debug, PartialEq)]
struct ArrV {
    default: i128,
    map: BTreeMap<i128, i128>,
}

impl ArrV {
    fn get(&self, k: i128) -> i128 {
        *self.map.get(&k).unwrap_or(&self.default)
    }

    fn ext_eq(&self, o: &ArrV) -> bool {
        self.default == o.default && self.map.keys().chain(o.map.keys()).all(|&k| self.get(k) == o.get(k))
    }
}

struct Env {
    ints: BTreeMap<String, i128>,
    arrs: BTreeMap<String, ArrV>,
}

fn big(v: &BigInt) -> i128 {
    i128::try_from(v).expect("value fits i128")
}

impl Env {
    fn of(m: &Model) -> Env {
        let arr = |f: &FuncValue| ArrV {
            default: big(f.default_value()),
            map: f.exceptions().iter().map(|(k, v)| (big(k), big(v))).collect(),
        };
        Env {
            ints: m.ints.iter().map(|(k, v)| (k.clone(), big(v))).collect(),
            arrs: m.funcs.iter().map(|(k, v)| (k.clone(), arr(v))).collect(),
        }
    }

    fn int(&self, e: &E) -> i128 {
        match e {
            E::K(k) => *k as i128,
            E::V(v) => *self.ints.get(v).unwrap_or_else(|| panic!("sample lacks `{v}`")),
            E::Add(xs) => xs.iter().map(|x| self.int(x)).sum(),
            E::Mul(xs) => xs.iter().map(|x| self.int(x)).product(),
            E::Sel(a, i) => self.arr(a).get(self.int(i)),
            E::App(i) => self.arrs["f"].get(self.int(i)),
        }
    }

    fn arr(&self, a: &A) -> ArrV {
        match a {
            A::Var(n) => self
                .arrs
                .get(*n)
                .unwrap_or_else(|| panic!("sample lacks `{n}`"))
                .clone(),
            A::Store(b, i, v) => {
                let mut out = self.arr(b);
                out.map.insert(self.int(i), self.int(v));
                out
            }
        }
    }

    fn holds(&self, f: &F) -> bool {
        match f {
            F::Cmp(r, a, b) => r.holds(self.int(a), self.int(b)),
            F::ArrEq(eq, a, b) => self.arr(a).ext_eq(&self.arr(b)) == *eq,
            F::And(xs) => xs.iter().all(|x| self.holds(x)),
            F::Or(xs) => xs.iter().any(|x| self.holds(x)),
            F::Not(x) => !self.holds(x),
        }
    }
}

fn term(e: &E) -> Term {
    match e {
        E::K(k) => Term::int(*k),
        E::V(v) => Term::var(v.as_str()),
        E::Add(xs) => Term::Add(xs.iter().map(term).collect()),
        E::Mul(xs) => Term::Mul(xs.iter().map(term).collect()),
        E::Sel(a, i) => Term::select(arr_term(a), term(i)),
        E::App(i) => Term::app("f", term(i)),
    }
}

fn arr_term(a: &A) -> Term {
    match a {
        A::Var(n) => Term::array(*n),
        A::Store(b, i, v) => Term::store(arr_term(b), term(i), term(v)),
    }
}

fn formula(f: &F) -> Formula {
    match f {
        F::Cmp(r, a, b) => Formula::atom(r.lib(), term(a), term(b)),
        F::ArrEq(true, a, b) => Formula::eq(arr_term(a), arr_term(b)),
        F::ArrEq(false, a, b) => Formula::ne(arr_term(a), arr_term(b)),
        F::And(xs) => Formula::And(xs.iter().map(formula).collect()),
        F::Or(xs) => Formula::Or(xs.iter().map(formula).collect()),
        F::Not(x) => Formula::not(formula(x)),
    }
}

fn atoms(f: &F, out: &mut Vec<F>) {
    match f {
        F::Cmp(..) | F::ArrEq(..) => out.push(f.clone()),
        F::And(xs) | F::Or(xs) => xs.iter().for_each(|x| atoms(x, out)),
        F::Not(x) => atoms(x, out),
    }
}

// ---------------------------------------------------------------------------
// Arithmetic corpora

const VARS: [&str; 4] = ["x0", "x1", "x2", "x3"];

/// `sum coeff * prod vars  rel  rhs`, evaluated on plain integer vectors.
#[derive(Clone, Debug)]
struct Lin {
    monos: Vec<(i64, Vec<usize>)>,
    rel: R,
    rhs: i64,
}

impl Lin {
    fn eval(&self, x: &[i64]) -> bool {
        let lhs: i128 = self
            .monos
            .iter()
            .map(|(c, vs)| vs.iter().fold(*c as i128, |acc, &v| acc * x[v] as i128))
            .sum();
        self.rel.holds(lhs, self.rhs as i128)
    }

    fn to_f(&self) -> F {
        let monos = self
            .monos
            .iter()
            .map(|(c, vs)| {
                E::Mul(
                    std::iter::once(E::K(*c))
                        .chain(vs.iter().map(|&v| E::V(VARS[v].into())))
                        .collect(),
                )
            })
            .collect();
        F::Cmp(self.rel, E::Add(monos), E::K(self.rhs))
    }
}

fn random_lin(rng: &mut ChaCha8Rng, nvars: usize, rhs_range: i64) -> Lin {
    let k = rng.gen_range(1..=3);
    let monos = (0..k)
        .map(|_| {
            let mut c = rng.gen_range(-4..=4);
            if c == 0 {
                c = 1;
            }
            let degree = rng.gen_range(1..=2);
            (c, (0..degree).map(|_| rng.gen_range(0..nvars)).collect())
        })
        .collect();
    Lin {
        monos,
        rel: *RELS.choose(rng).unwrap(),
        rhs: rng.gen_range(-rhs_range..=rhs_range),
    }
}

fn int_model(x: &[i64]) -> Model {
    x.iter()
        .enumerate()
        .fold(Model::new(), |m, (i, v)| m.with_int(VARS[i], *v))
}

fn int_decls(nvars: usize) -> Vec<Declaration> {
    VARS[..nvars]
        .iter()
        .map(|v| Declaration::new(*v, SymbolKind::Int))
        .collect()
}

/// Closed box of `iv` on the variables, clipped to `[-r, r]`.
fn clipped_box(iv: &IntervalMap, nvars: usize, r: i64) -> Result<Vec<(i64, i64)>, String> {
    for k in iv.keys() {
        match k {
            Term::IntVar(v) if VARS[..nvars].contains(&v.as_str()) => {}
            other => return Err(format!("unexpected interval key `{other}`")),
        }
    }
    Ok(VARS[..nvars]
        .iter()
        .map(|v| {
            let full = Interval::full();
            let i = iv.get(&Term::var(*v)).unwrap_or(&full);
            let lo = i.lo().map_or(-r, |b| big(b).clamp(-r as i128, r as i128) as i64);
            let hi = i.hi().map_or(r, |b| big(b).clamp(-r as i128, r as i128) as i64);
            (lo, hi)
        })
        .collect())
}

/// Calls `f` on every point of the box; stops early when it returns false.
fn for_each_point(bx: &[(i64, i64)], mut f: impl FnMut(&[i64]) -> bool) {
    if bx.iter().any(|(lo, hi)| lo > hi) {
        return;
    }
    let mut x: Vec<i64> = bx.iter().map(|b| b.0).collect();
    loop {
        if !f(&x) {
            return;
        }
        let mut d = 0;
        loop {
            if d == x.len() {
                return;
            }
            if x[d] < bx[d].1 {
                x[d] += 1;
                break;
            }
            x[d] = bx[d].0;
            d += 1;
        }
    }
}

struct ProductCase {
    nvars: usize,
    lits: Vec<Lin>,
    seed: Vec<i64>,
}

fn product_corpus() -> Vec<ProductCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..200)
        .map(|_| {
            let nvars = rng.gen_range(1..=4);
            let seed: Vec<i64> = (0..nvars).map(|_| rng.gen_range(-6..=6)).collect();
            let lits = (0..rng.gen_range(1..=4))
                .map(|_| {
                    let mut l = random_lin(&mut rng, nvars, 20);
                    if !l.eval(&seed) {
                        l.rel = l.rel.negate();
                    }
                    l
                })
                .collect();
            ProductCase { nvars, lits, seed }
        })
        .collect()
}

fn random_formula(rng: &mut ChaCha8Rng, nvars: usize, depth: usize) -> F {
    if depth == 0 || rng.gen_bool(0.3) {
        return random_lin(rng, nvars, 10).to_f();
    }
    let n = rng.gen_range(2..=3);
    let kids = (0..n).map(|_| random_formula(rng, nvars, depth - 1)).collect();
    match rng.gen_range(0..5) {
        0 | 1 => F::And(kids),
        2 | 3 => F::Or(kids),
        _ => F::Not(Box::new(F::And(kids))),
    }
}

struct FormulaCase {
    nvars: usize,
    f: F,
    seed: Vec<i64>,
}

/// Random formulas together with a model found by random search in
/// `[-r, r]^n`.
fn formula_corpus(count: usize, seed: u64, nvars_max: usize, r: i64) -> Vec<FormulaCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let nvars = rng.gen_range(1..=nvars_max);
        let f = random_formula(&mut rng, nvars, 3);
        let hit = (0..3000).find_map(|_| {
            let x: Vec<i64> = (0..nvars).map(|_| rng.gen_range(-r..=r)).collect();
            Env::of(&int_model(&x)).holds(&f).then_some(x)
        });
        if let Some(seed) = hit {
            out.push(FormulaCase { nvars, f, seed });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Array corpora

const INDEX_VARS: [&str; 2] = ["i", "j"];

fn random_index(rng: &mut ChaCha8Rng) -> E {
    if rng.gen_bool(0.7) {
        E::V(INDEX_VARS.choose(rng).unwrap().to_string())
    } else {
        E::K(rng.gen_range(-3..=3))
    }
}

fn random_value(rng: &mut ChaCha8Rng) -> E {
    match rng.gen_range(0..3) {
        0 => E::V("x".into()),
        1 => E::K(rng.gen_range(-3..=3)),
        _ => E::Sel(Box::new(A::Var("b")), Box::new(random_index(rng))),
    }
}

fn random_array(rng: &mut ChaCha8Rng, stores: bool) -> A {
    let mut a = A::Var(if rng.gen_bool(0.5) { "a" } else { "b" });
    if stores {
        for _ in 0..rng.gen_range(0..=2) {
            a = A::Store(Box::new(a), Box::new(random_index(rng)), Box::new(random_value(rng)));
        }
    }
    a
}

fn random_access(rng: &mut ChaCha8Rng, stores: bool, nested: bool) -> E {
    let idx = if nested && rng.gen_bool(0.3) {
        random_access(rng, false, false)
    } else {
        random_index(rng)
    };
    if rng.gen_bool(0.25) {
        E::App(Box::new(idx))
    } else {
        E::Sel(Box::new(random_array(rng, stores)), Box::new(idx))
    }
}

fn random_array_literal(rng: &mut ChaCha8Rng, stores: bool, nested: bool) -> F {
    if stores && rng.gen_bool(0.15) {
        return F::ArrEq(rng.gen_bool(0.5), random_array(rng, true), A::Var("b"));
    }
    let lhs = match rng.gen_range(0..3) {
        0 => E::Add(vec![
            random_access(rng, stores, nested),
            random_access(rng, stores, nested),
        ]),
        1 => E::Add(vec![random_access(rng, stores, nested), E::V("x".into())]),
        _ => random_access(rng, stores, nested),
    };
    F::Cmp(*RELS.choose(rng).unwrap(), lhs, E::K(rng.gen_range(-3..=3)))
}

fn random_func(rng: &mut ChaCha8Rng) -> FuncValue {
    let ex: Vec<(BigInt, BigInt)> = (0..rng.gen_range(0..=3))
        .map(|_| (rng.gen_range(-3..=3).into(), rng.gen_range(-3..=3).into()))
        .collect();
    FuncValue::new(rng.gen_range(-3..=3).into(), ex)
}

fn random_array_model(rng: &mut ChaCha8Rng) -> Model {
    Model::new()
        .with_int("i", rng.gen_range(-3..=3))
        .with_int("j", rng.gen_range(-3..=3))
        .with_int("x", rng.gen_range(-3..=3))
        .with_func("a", random_func(rng))
        .with_func("b", random_func(rng))
        .with_func("f", random_func(rng))
}

fn array_decls() -> Vec<Declaration> {
    vec![
        Declaration::new("i", SymbolKind::Int),
        Declaration::new("j", SymbolKind::Int),
        Declaration::new("x", SymbolKind::Int),
        Declaration::new("a", SymbolKind::Array),
        Declaration::new("b", SymbolKind::Array),
        Declaration::new("f", SymbolKind::Function),
    ]
}

/// Which reads hit which cells. Each select walks its store chain; every
/// store index met yields a hit/miss decision, a hit reads the stored value
/// and a miss continues below. Reads that reach a base array contribute
/// their index to that array's equality pattern. Values of missed stores
/// are dead and not visited.
fn aliasing_configuration(f: &F, env: &Env) -> (Vec<bool>, Vec<Vec<bool>>) {
    struct Walk<'a> {
        env: &'a Env,
        decisions: Vec<bool>,
        base: BTreeMap<&'static str, Vec<i128>>,
    }
    impl Walk<'_> {
        fn term(&mut self, e: &E) {
            match e {
                E::K(_) | E::V(_) => {}
                E::Add(xs) | E::Mul(xs) => xs.iter().for_each(|x| self.term(x)),
                E::App(i) => {
                    self.term(i);
                    let k = self.env.int(i);
                    self.base.entry("f").or_default().push(k);
                }
                E::Sel(a, i) => {
                    self.term(i);
                    let k = self.env.int(i);
                    self.resolve(a, k);
                }
            }
        }

        fn resolve(&mut self, a: &A, k: i128) {
            match a {
                A::Var(n) => self.base.entry(n).or_default().push(k),
                A::Store(b, i, v) => {
                    self.term(i);
                    let hit = self.env.int(i) == k;
                    self.decisions.push(hit);
                    if hit {
                        self.term(v);
                    } else {
                        self.resolve(b, k);
                    }
                }
            }
        }
    }
    let mut w = Walk {
        env,
        decisions: Vec::new(),
        base: BTreeMap::new(),
    };
    let mut lits = Vec::new();
    atoms(f, &mut lits);
    for l in &lits {
        if let F::Cmp(_, a, b) = l {
            w.term(a);
            w.term(b);
        }
    }
    let patterns = w
        .base
        .values()
        .map(|ks| ks.iter().flat_map(|x| ks.iter().map(move |y| x == y)).collect())
        .collect();
    (w.decisions, patterns)
}

// ---------------------------------------------------------------------------
// Criteria

type Outcome = Result<String, String>;

/// Id, name, time budget, check.
type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[derive(Default)]
struct EpochLog(Vec<Approximation>, Vec<Sample>);

impl SampleSink for EpochLog {
    fn sample(&mut self, s: &Sample) -> megasample::Result<()> {
        self.1.push(s.clone());
        Ok(())
    }

    fn epoch(&mut self, _index: u64, approx: &Approximation) -> megasample::Result<()> {
        self.0.push(approx.clone());
        Ok(())
    }
}

fn c1_intro() -> Outcome {
    let p = parse_problem("(declare-const x Int)(declare-const y Int)(assert (and (<= (- x (* 5 y)) 7) (>= x 0)))")
        .map_err(|e| e.to_string())?;
    let problem = Problem::from_parsed(&p).map_err(|e| e.to_string())?;
    let cfg = SamplerConfig {
        inject_seed: Some(Model::new().with_int("x", 12).with_int("y", 2)),
        max_epochs: Some(1),
        ..SamplerConfig::default()
    };
    let mut log = EpochLog::default();
    let mut solver = ScriptedSolver::new([]);
    mega_sample(&problem, &cfg, &mut solver, &mut ChaCha8Rng::seed_from_u64(0), &mut log).map_err(|e| e.to_string())?;
    let got = log.0.first().ok_or("no epoch ran")?.intervals.to_json();
    let want = serde_json::json!({"x": [0, 15], "y": [2, "+inf"]});
    ensure(got == want, || format!("epoch-1 intervals {got}"))?;
    Ok(format!("epoch-1 intervals {got}"))
}

fn c2_rules() -> Outcome {
    let shares = (portion(&5.into(), 2, 1).unwrap(), portion(&5.into(), 2, 2).unwrap());
    ensure(shares == (3.into(), 2.into()), || format!("portion split {shares:?}"))?;
    let (x1, x2) = (Term::var("x1"), Term::var("x2"));
    let lit = Formula::le(Term::Mul(vec![x1.clone(), x2.clone()]), Term::int(-42));
    let m = Model::new().with_int("x1", 5).with_int("x2", -9);
    let got = pmga_mia(&ProductTerm::new(vec![lit]), &m).map_err(|e| e.to_string())?;
    let mut want = IntervalMap::new();
    want.insert(x1, Interval::at_least(5));
    want.insert(x2, Interval::at_most(-9));
    ensure(got == want, || format!("product rule gave {}", got.to_json()))?;
    Ok(format!("portion (3,2); product rule {}", got.to_json()))
}

fn c3_soundness() -> Outcome {
    let mut points = 0u64;
    for (n, case) in product_corpus().iter().enumerate() {
        let p = ProductTerm::new(case.lits.iter().map(|l| formula(&l.to_f())).collect());
        let iv = pmga_mia(&p, &int_model(&case.seed)).map_err(|e| format!("term {n}: {e}"))?;
        let bx = clipped_box(&iv, case.nvars, 20).map_err(|e| format!("term {n}: {e}"))?;
        let mut bad = None;
        for_each_point(&bx, |x| {
            points += 1;
            if case.lits.iter().all(|l| l.eval(x)) {
                true
            } else {
                bad = Some(x.to_vec());
                false
            }
        });
        if let Some(x) = bad {
            return Err(format!("term {n} {:?}: box point {x:?} violates it", case.lits));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let width = BigInt::from(1_000_000);
    let mut draws = 0u64;
    for (n, case) in formula_corpus(100, 5, 4, 10).iter().enumerate() {
        let problem = Problem::new(int_decls(case.nvars), formula(&case.f)).map_err(|e| e.to_string())?;
        let approx =
            approximate(&problem, &int_model(&case.seed), &mut rng).map_err(|e| format!("formula {n}: {e}"))?;
        for _ in 0..1000 {
            let s = sample_intervals(&approx.intervals, &approx.seed, &width, &mut rng).map_err(|e| e.to_string())?;
            draws += 1;
            if !Env::of(&s).holds(&case.f) {
                return Err(format!("formula {n}: sample {} violates it", s.to_json()));
            }
        }
    }
    Ok(format!(
        "{points} box points over 200 terms, {draws} samples over 100 formulas, 0 violations"
    ))
}

fn c4_implicants() -> Outcome {
    for (n, case) in product_corpus().iter().enumerate() {
        let p = ProductTerm::new(case.lits.iter().map(|l| formula(&l.to_f())).collect());
        let m = int_model(&case.seed);
        let iv = pmga_mia(&p, &m).map_err(|e| e.to_string())?;
        ensure(iv.contains(&m).unwrap(), || format!("term {n}: seed outside its box"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut epochs = 0;
    for (n, case) in formula_corpus(100, 5, 4, 10).iter().enumerate() {
        let problem = Problem::new(int_decls(case.nvars), formula(&case.f)).map_err(|e| e.to_string())?;
        let seed = int_model(&case.seed);
        let approx = approximate(&problem, &seed, &mut rng).map_err(|e| e.to_string())?;
        ensure(approx.intervals.contains(&seed).unwrap(), || {
            format!("formula {n}: seed outside its box")
        })?;
        let imp = compute_implicant(&problem.nnf, &seed, &mut rng).map_err(|e| e.to_string())?;
        for l in &imp.literals {
            ensure(seed.satisfies(l).unwrap(), || {
                format!("formula {n}: seed falsifies implicant literal {l}")
            })?;
        }
        epochs += 1;
    }
    let mut checked = 0;
    for (n, case) in formula_corpus(100, 7, 3, 5).iter().enumerate() {
        let problem = Problem::new(int_decls(case.nvars), formula(&case.f)).map_err(|e| e.to_string())?;
        let seed = int_model(&case.seed);
        let imp = compute_implicant(&problem.nnf, &seed, &mut rng)
            .map_err(|e| e.to_string())?
            .to_formula();
        let mut bad = None;
        for_each_point(&vec![(-5, 5); case.nvars], |x| {
            let m = int_model(x);
            if m.satisfies(&imp).unwrap() && !Env::of(&m).holds(&case.f) {
                bad = Some(x.to_vec());
                return false;
            }
            true
        });
        if let Some(x) = bad {
            return Err(format!(
                "formula {n}: implicant {imp} holds at {x:?} but the formula does not"
            ));
        }
        checked += 1;
    }
    Ok(format!(
        "{epochs} epochs contain their seed; {checked} implicants imply their formula on [-5,5]^3"
    ))
}

fn c5_grounding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut sat, mut unsat) = (0, 0);
    for n in 0..200 {
        let lits: Vec<F> = (0..rng.gen_range(1..=4))
            .map(|_| random_array_literal(&mut rng, false, true))
            .collect();
        let f = if rng.gen_bool(0.5) { F::And(lits) } else { F::Or(lits) };
        let m = random_array_model(&mut rng);
        let mut at = Vec::new();
        atoms(&f, &mut at);
        let g = ground(&ProductTerm::new(at.iter().map(formula).collect()), &m).map_err(|e| e.to_string())?;
        let grounded = ground_formula_with(&formula(&f), &g.table).map_err(|e| e.to_string())?;
        ensure(
            grounded.symbols().funcs.is_empty() && grounded.symbols().arrays.is_empty(),
            || format!("case {n}: {grounded} still has accesses"),
        )?;
        let before = Env::of(&m).holds(&f);
        let after = Env::of(&g.model).holds_lib(&grounded)?;
        ensure(before == after, || {
            format!("case {n}: {before} before grounding, {after} after")
        })?;
        if before {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    Ok(format!("200 cases agree ({sat} satisfied, {unsat} falsified)"))
}

impl Env {
    /// Evaluates a grounded (access-free) library formula.
    fn holds_lib(&self, f: &Formula) -> Result<bool, String> {
        fn int(env: &Env, t: &Term) -> Result<i128, String> {
            Ok(match t {
                Term::IntConst(k) => big(k),
                Term::IntVar(v) => *env.ints.get(v).ok_or(format!("unbound `{v}`"))?,
                Term::Add(xs) => xs.iter().map(|x| int(env, x)).sum::<Result<_, _>>()?,
                Term::Mul(xs) => xs.iter().map(|x| int(env, x)).product::<Result<_, _>>()?,
                Term::Sub(a, b) => int(env, a)? - int(env, b)?,
                other => return Err(format!("unexpected term `{other}`")),
            })
        }
        Ok(match f {
            Formula::Const(b) => *b,
            Formula::Atom(r, a, b) => {
                let (a, b) = (int(self, a)?, int(self, b)?);
                match r {
                    Rel::Lt => a < b,
                    Rel::Le => a <= b,
                    Rel::Gt => a > b,
                    Rel::Ge => a >= b,
                    Rel::Eq => a == b,
                    Rel::Ne => a != b,
                }
            }
            Formula::Not(x) => !self.holds_lib(x)?,
            Formula::And(xs) => xs
                .iter()
                .map(|x| self.holds_lib(x))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .all(|b| b),
            Formula::Or(xs) => xs
                .iter()
                .map(|x| self.holds_lib(x))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .any(|b| b),
            other => return Err(format!("unexpected formula `{other}`")),
        })
    }
}

fn c6_arrays() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let width = BigInt::from(3);
    let (mut problems, mut samples, mut clashes) = (0, 0u64, 0u64);
    while problems < 150 {
        let f = F::And(
            (0..rng.gen_range(2..=4))
                .map(|_| random_array_literal(&mut rng, true, false))
                .collect(),
        );
        let Some(seed) = (0..3000)
            .map(|_| random_array_model(&mut rng))
            .find(|m| Env::of(m).holds(&f))
        else {
            continue;
        };
        problems += 1;
        let problem = Problem::new(array_decls(), formula(&f)).map_err(|e| e.to_string())?;
        let approx = approximate(&problem, &seed, &mut rng).map_err(|e| format!("{f:?}: {e}"))?;
        let arrays = approx
            .arrays
            .as_ref()
            .ok_or("array problem without array approximation")?;
        let config = aliasing_configuration(&f, &Env::of(&seed));
        for _ in 0..300 {
            let s = match sample_intervals_arrays(arrays, &width, &mut rng).map_err(|e| e.to_string())? {
                Draw::Sample(s) => s,
                Draw::Clash => {
                    clashes += 1;
                    continue;
                }
            };
            let mut s = s;
            s.retain(|n| array_decls().iter().any(|d| d.name == n));
            samples += 1;
            let env = Env::of(&s);
            ensure(env.holds(&f), || {
                format!("{f:?}\nseed {}\nsample {} violates it", seed.to_json(), s.to_json())
            })?;
            ensure(aliasing_configuration(&f, &env) == config, || {
                format!(
                    "{f:?}\nseed {}\nsample {} changes aliasing",
                    seed.to_json(),
                    s.to_json()
                )
            })?;
        }
    }
    Ok(format!(
        "{problems} problems, {samples} samples ({clashes} clashes skipped), all satisfy with seed aliasing"
    ))
}

fn c7_blocking() -> Outcome {
    let x = Term::var("x");
    let decls = vec![Declaration::new("x", SymbolKind::Int)];
    let range = |lo: i64, hi: i64| {
        Formula::and([
            Formula::ge(x.clone(), Term::int(lo)),
            Formula::le(x.clone(), Term::int(hi)),
        ])
    };
    let mut solver = EnumerationSolver::new(-10, 10);
    let mut stats = SeedStats::default();

    let p = Problem::new(decls.clone(), range(0, 3)).map_err(|e| e.to_string())?;
    let mut prior = IntervalMap::new();
    prior.insert(x.clone(), Interval::closed(0, 1).unwrap());
    let mut blocking = vec![prior.neg_to_formula()];
    let s = get_seed_blocking(&p, &mut solver, &mut blocking, &mut stats)
        .map_err(|e| e.to_string())?
        .ok_or("unknown")?;
    let v = big(&s.ints["x"]);
    ensure(v == 2 || v == 3, || format!("blocked seed x = {v}"))?;

    let p = Problem::new(decls, Formula::eq(x.clone(), Term::int(0))).map_err(|e| e.to_string())?;
    let mut all = IntervalMap::new();
    all.insert(x.clone(), Interval::point(0.into()));
    let mut blocking = vec![all.neg_to_formula()];
    let s = get_seed_blocking(&p, &mut solver, &mut blocking, &mut stats)
        .map_err(|e| e.to_string())?
        .ok_or("unknown")?;
    ensure(big(&s.ints["x"]) == 0, || format!("after reset x = {}", s.ints["x"]))?;
    ensure(blocking.is_empty() && stats.blocking_resets == 1, || {
        "blocking list not reset".into()
    })?;
    Ok(format!("next seed x = {v}; fully blocked x = 0 re-yielded after reset"))
}

fn jsonl(samples: &[Sample]) -> String {
    samples.iter().map(|s| s.to_json().to_string() + "\n").collect()
}

fn c8_determinism() -> Outcome {
    let p = parse_problem(
        "(declare-const x Int)(declare-const y Int)(assert (and (<= (- x (* 5 y)) 7) (>= x 0) (>= y 0)))",
    )
    .map_err(|e| e.to_string())?;
    let problem = Problem::from_parsed(&p).map_err(|e| e.to_string())?;
    let script = || {
        [(12, 2), (0, 0), (30, 5), (7, 0)]
            .map(|(x, y)| SolverVerdict::Sat(Model::new().with_int("x", x).with_int("y", y)))
    };
    let cfg = SamplerConfig {
        samples_per_round: 500,
        ..SamplerConfig::default()
    };
    let run = |seed: u64| -> Result<Vec<Sample>, String> {
        let mut out = Vec::new();
        let mut solver = ScriptedSolver::new(script());
        mega_sample(
            &problem,
            &cfg,
            &mut solver,
            &mut ChaCha8Rng::seed_from_u64(seed),
            &mut out,
        )
        .map_err(|e| e.to_string())?;
        Ok(out)
    };
    let (a, b) = (jsonl(&run(11)?), jsonl(&run(11)?));
    ensure(!a.is_empty() && a == b, || {
        "identical seeds gave different streams".into()
    })?;
    let mut streams = vec![run(11)?];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in formula_corpus(30, 13, 4, 10) {
        let problem = Problem::new(int_decls(case.nvars), formula(&case.f)).map_err(|e| e.to_string())?;
        let cfg = SamplerConfig {
            inject_seed: Some(int_model(&case.seed)),
            samples_per_round: 300,
            ..SamplerConfig::default()
        };
        let mut out = Vec::new();
        mega_sample(&problem, &cfg, &mut ScriptedSolver::new([]), &mut rng, &mut out).map_err(|e| e.to_string())?;
        streams.push(out);
    }
    let mut total = 0;
    for s in &streams {
        let set: HashSet<String> = s.iter().map(|m| m.to_json().to_string()).collect();
        ensure(set.len() == s.len(), || {
            format!("stream with {} duplicates", s.len() - set.len())
        })?;
        total += s.len();
    }
    Ok(format!(
        "byte-identical replay ({} bytes); {total} samples over {} streams, no duplicates",
        a.len(),
        streams.len()
    ))
}

fn c9_coverage() -> Outcome {
    let f = Formula::ge(Term::var("x"), Term::int(0));
    let bitmap = |xs: &[i64]| {
        let mut b = CoverageBitmap::for_formula(&f);
        for &x in xs {
            b.record_sample(&f, &Model::new().with_int("x", x)).unwrap();
        }
        b
    };
    let hand = bitmap(&[0, 1]).covered_bits();
    ensure(hand == 1, || format!("samples 0 and 1 cover {hand} bits"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let g = Formula::and([
        Formula::le(Term::Add(vec![Term::var("x"), Term::var("y")]), Term::int(50)),
        Formula::or([Formula::bool_var("p"), Formula::gt(Term::var("x"), Term::var("y"))]),
    ]);
    for _ in 0..50 {
        let ms: Vec<Model> = (0..rng.gen_range(1..40))
            .map(|_| {
                Model::new()
                    .with_int("x", rng.gen_range(-1000..1000))
                    .with_int("y", rng.gen_range(-1000..1000))
                    .with_bool("p", rng.gen_bool(0.5))
            })
            .collect();
        let mut b = CoverageBitmap::for_formula(&g);
        let mut last = 0;
        for m in &ms {
            b.record_sample(&g, m).unwrap();
            ensure(b.covered_bits() >= last, || "coverage decreased".into())?;
            last = b.covered_bits();
        }
        let mut shuffled = ms.clone();
        shuffled.shuffle(&mut rng);
        let mut c = CoverageBitmap::for_formula(&g);
        for m in &shuffled {
            c.record_sample(&g, m).unwrap();
        }
        ensure(b == c, || "coverage depends on sample order".into())?;
    }

    // p or q with the root true throughout: each side flips one leaf only
    let h = Formula::or([Formula::bool_var("p"), Formula::bool_var("q")]);
    let side = |p: [bool; 2], q: [bool; 2]| {
        let mut b = CoverageBitmap::for_formula(&h);
        for k in 0..2 {
            b.record_sample(&h, &Model::new().with_bool("p", p[k]).with_bool("q", q[k]))
                .unwrap();
        }
        b
    };
    let (a, b) = (side([true, false], [true, true]), side([true, true], [true, false]));
    let na = normalized_coverage(&a, std::slice::from_ref(&b)).map_err(|e| e.to_string())?;
    let nb = normalized_coverage(&b, std::slice::from_ref(&a)).map_err(|e| e.to_string())?;
    ensure(a.covered_bits() == b.covered_bits() && na == 0.5 && nb == 0.5, || {
        format!("normalized {na}, {nb}")
    })?;
    Ok("hand case 1 bit; monotone and order-independent over 50 sets; disjoint halves 0.5".into())
}

fn throughput(
    bound: i64,
    solver: &mut dyn megasample::solver::Solver,
    inject: Option<Model>,
) -> Result<(usize, Duration), String> {
    let text =
        format!("(declare-const x Int)(declare-const y Int)(assert (and (<= (+ x y) {bound}) (>= x 0) (>= y 0)))");
    let p = parse_problem(&text).map_err(|e| e.to_string())?;
    let problem = Problem::from_parsed(&p).map_err(|e| e.to_string())?;
    let cfg = SamplerConfig {
        total_time_limit: Duration::from_secs(10),
        max_samples: Some(10_000),
        inject_seed: inject,
        rounds: 20,
        ..SamplerConfig::default()
    };
    let start = Instant::now();
    let mut out = Vec::new();
    mega_sample(&problem, &cfg, solver, &mut ChaCha8Rng::seed_from_u64(15), &mut out).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let unique: BTreeSet<String> = out.iter().map(|m| m.to_json().to_string()).collect();
    for m in &out {
        let (x, y) = (big(&m.ints["x"]), big(&m.ints["y"]));
        ensure(x >= 0 && y >= 0 && x + y <= bound as i128, || {
            format!("bad sample {}", m.to_json())
        })?;
    }
    Ok((unique.len(), took))
}

fn c10_throughput() -> Outcome {
    let (n, took) = throughput(100, &mut EnumerationSolver::new(0, 100), None)?;
    ensure(n >= 10_000 && took <= Duration::from_secs(10), || {
        format!(
            "{n} unique samples in {:.2} s; the formula has only 5151 integer models, so 10000 cannot be reached",
            took.as_secs_f64()
        )
    })?;
    Ok(format!("{n} unique samples in {:.2} s", took.as_secs_f64()))
}

/// Same shape with a bound large enough to hold 10000 models.
fn c10_wide() -> Outcome {
    let seed = Model::new().with_int("x", 0).with_int("y", 0);
    let (n, took) = throughput(1_000_000, &mut ScriptedSolver::new([]), Some(seed))?;
    ensure(n >= 10_000 && took <= Duration::from_secs(10), || {
        format!("{n} unique samples in {:.2} s", took.as_secs_f64())
    })?;
    Ok(format!("x+y<=10^6: {n} unique samples in {:.2} s", took.as_secs_f64()))
}

fn c11_z3() -> Outcome {
    if std::process::Command::new("z3").arg("-version").output().is_err() {
        return Ok("SKIP: z3 not on PATH".into());
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let mut report = Vec::new();
    for name in ["intro-example", "disjunction", "array-store"] {
        let text = std::fs::read_to_string(dir.join(format!("{name}.smt2"))).map_err(|e| e.to_string())?;
        let p = parse_problem(&text).map_err(|e| e.to_string())?;
        let problem = Problem::from_parsed(&p).map_err(|e| e.to_string())?;
        let cfg = SamplerConfig {
            strategy: Strategy::Random,
            total_time_limit: Duration::from_secs(60),
            max_samples: Some(100),
            ..SamplerConfig::default()
        };
        let mut solver = ProcessSolver::new("z3 -in", Duration::from_secs(60)).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        let start = Instant::now();
        mega_sample(
            &problem,
            &cfg,
            &mut solver,
            &mut ChaCha8Rng::seed_from_u64(16),
            &mut out,
        )
        .map_err(|e| e.to_string())?;
        let unique: BTreeSet<String> = out.iter().map(|m| m.to_json().to_string()).collect();
        ensure(
            unique.len() >= 100 && start.elapsed() <= Duration::from_secs(60),
            || format!("{name}: {} unique samples", unique.len()),
        )?;
        for m in &out {
            ensure(m.satisfies(&p.assertion).unwrap(), || format!("{name}: invalid sample"))?;
        }
        report.push(format!(
            "{name} {} in {:.2} s",
            unique.len(),
            start.elapsed().as_secs_f64()
        ));
    }
    Ok(report.join(", "))
}

/// Criteria that cannot hold as stated; they still run and print FAIL but do
/// not fail the target.
const KNOWN_UNATTAINABLE: &[&str] = &["10"];

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1", "intro-example exactness", Duration::from_secs(1), c1_intro),
        ("2", "rule worked examples", Duration::from_secs(1), c2_rules),
        ("3", "soundness suite", Duration::from_secs(300), c3_soundness),
        (
            "4",
            "seed containment and implicants",
            Duration::from_secs(300),
            c4_implicants,
        ),
        ("5", "grounding fidelity", Duration::from_secs(60), c5_grounding),
        ("6", "array pipeline", Duration::from_secs(120), c6_arrays),
        ("7", "blocking semantics", Duration::from_secs(10), c7_blocking),
        (
            "8",
            "uniqueness and determinism",
            Duration::from_secs(120),
            c8_determinism,
        ),
        ("9", "coverage metric", Duration::from_secs(30), c9_coverage),
        ("10", "throughput floor", Duration::from_secs(12), c10_throughput),
        ("10w", "throughput, wide variant", Duration::from_secs(12), c10_wide),
        ("11", "z3 integration smoke", Duration::from_secs(200), c11_z3),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut unexpected = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(format!(
                "panic: {}",
                p.downcast_ref::<String>()
                    .cloned()
                    .unwrap_or_else(|| format!("{:?}", p.downcast_ref::<&str>()))
            ))
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > budget => Err(format!(
                "{msg}; took {:.2} s, budget {:.0} s",
                took.as_secs_f64(),
                budget.as_secs_f64()
            )),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {id:>3} {name} ({:.2} s): {msg}", took.as_secs_f64()),
            Err(msg) => {
                let known = KNOWN_UNATTAINABLE.contains(&id);
                if !known {
                    unexpected += 1;
                }
                let tag = if known { " [known unattainable]" } else { "" };
                println!("FAIL {id:>3} {name}{tag} ({:.2} s): {msg}", took.as_secs_f64());
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
