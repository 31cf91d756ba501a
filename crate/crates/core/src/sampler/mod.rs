//! The epoch loop: seed, implicant, interval approximation, and repeated
//! draws from the intervals.

mod dedup;
mod draw;
mod seed;

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::Rng;
use serde_json::{json, Value};

use crate::arrays::{pmga_amia, AicApproximation, AliasingLiterals};
use crate::error::{Error, Result};
use crate::formula::{Formula, Term};
use crate::implicant::{compute_implicant, ProductTerm};
use crate::interval::IntervalMap;
use crate::model::{Model, Sample};
use crate::smtlib::{Declaration, ParsedProblem};
use crate::solver::Solver;
use crate::strengthen::pmga_mia;
use crate::transform::{preprocess, to_nnf};

pub use dedup::{sample_hash, SeenSet};
pub use draw::{draw_in, sample_intervals, sample_intervals_arrays, Draw};
pub use seed::{get_seed_blocking, get_seed_random, SeedStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Random,
    Blocking,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub total_time_limit: Duration,
    pub epoch_time_limit: Duration,
    pub max_samples: Option<u64>,
    /// Stop after this many epochs.
    pub max_epochs: Option<u64>,
    /// Rounds per epoch (`n`).
    pub rounds: usize,
    /// Draws per round (`k`).
    pub samples_per_round: usize,
    pub unique_rate_threshold: f64,
    /// Random soft targets are drawn from `[-B, B]`.
    pub random_bound: BigInt,
    /// Infinite interval ends are clamped to the seed value `+- W`.
    pub unbounded_width: BigInt,
    pub rng_seed: u64,
    /// Exact dedup entries kept before switching to a Bloom filter.
    pub dedup_cap: usize,
    /// First seed, used instead of asking the solver.
    pub inject_seed: Option<Model>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            strategy: Strategy::Random,
            total_time_limit: Duration::from_secs(900),
            epoch_time_limit: Duration::from_secs(600),
            max_samples: None,
            max_epochs: None,
            rounds: 10,
            samples_per_round: 1000,
            unique_rate_threshold: 0.05,
            random_bound: BigInt::from(100),
            unbounded_width: BigInt::from(1_000_000),
            rng_seed: 0,
            dedup_cap: 50_000_000,
            inject_seed: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Format(format!("invalid sampler configuration: {m}")));
        if self.total_time_limit.is_zero() || self.epoch_time_limit.is_zero() {
            return bad("time limits must be positive");
        }
        if self.rounds == 0 || self.samples_per_round == 0 {
            return bad("rounds and samples per round must be positive");
        }
        if self.max_samples == Some(0) || self.max_epochs == Some(0) {
            return bad("sample and epoch limits must be positive");
        }
        if !(0.0..=1.0).contains(&self.unique_rate_threshold) {
            return bad("unique rate threshold must lie in [0, 1]");
        }
        if self.random_bound < BigInt::default() || self.unbounded_width < BigInt::default() {
            return bad("bounds must be non-negative");
        }
        Ok(())
    }
}

/// Which strengthening pipeline a problem needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theory {
    /// Integer arithmetic only.
    Mia,
    /// Arrays or uninterpreted functions present.
    Amia,
}

/// A formula prepared for sampling.
#[derive(Clone, Debug)]
pub struct Problem {
    pub declarations: Vec<Declaration>,
    /// The input formula; every sample is checked against it.
    pub formula: Formula,
    /// Core-grammar NNF used for implicants.
    pub nnf: Formula,
    pub theory: Theory,
}

impl Problem {
    pub fn new(declarations: Vec<Declaration>, formula: Formula) -> Result<Self> {
        let nnf = to_nnf(&preprocess(&formula)?);
        let theory = if formula.symbols().has_arrays_or_functions() {
            Theory::Amia
        } else {
            Theory::Mia
        };
        Ok(Problem {
            declarations,
            formula,
            nnf,
            theory,
        })
    }

    pub fn from_parsed(p: &ParsedProblem) -> Result<Self> {
        Problem::new(p.declarations.clone(), p.assertion.clone())
    }

    fn declares(&self, name: &str) -> bool {
        self.declarations.iter().any(|d| d.name == name)
    }

    /// The seed or sample restricted to the declared symbols.
    fn restrict(&self, mut m: Model) -> Sample {
        m.retain(|s| self.declares(s));
        m
    }
}

/// The under-approximation of one epoch.
#[derive(Clone, Debug)]
pub struct Approximation {
    pub seed: Model,
    pub intervals: IntervalMap,
    /// Boolean literals of the implicant; they hold in every sample.
    pub pins: Vec<Formula>,
    /// Present for array problems.
    pub arrays: Option<AicApproximation>,
}

impl Approximation {
    pub fn aliasing(&self) -> Option<&AliasingLiterals> {
        self.arrays.as_ref().map(|a| &a.aliasing)
    }

    /// Negation of the approximation, restricted to bounds over declared
    /// symbols. Dropping a bound only enlarges the blocked region.
    pub fn blocking_formula(&self, problem: &Problem) -> Formula {
        let over_declared = |t: &Term| {
            let f = Formula::eq(t.clone(), Term::int(0));
            let s = f.symbols();
            s.ints
                .iter()
                .chain(&s.arrays)
                .chain(&s.funcs)
                .all(|n| problem.declares(n))
        };
        let kept: IntervalMap = self
            .intervals
            .iter()
            .filter(|(k, _)| over_declared(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let Formula::Or(mut out) = kept.neg_to_formula() else {
            unreachable!()
        };
        for p in &self.pins {
            out.push(match p {
                Formula::Not(x) => (**x).clone(),
                other => Formula::not(other.clone()),
            });
        }
        Formula::Or(out)
    }
}

/// Implicant of the NNF under `seed`, then interval strengthening.
pub fn approximate<R: Rng + ?Sized>(problem: &Problem, seed: &Model, rng: &mut R) -> Result<Approximation> {
    let implicant = compute_implicant(&problem.nnf, seed, rng)?;
    let (pins, arith): (Vec<Formula>, Vec<Formula>) = implicant.literals.into_iter().partition(|l| {
        matches!(l, Formula::BoolVar(_)) || matches!(l, Formula::Not(x) if matches!(**x, Formula::BoolVar(_)))
    });
    let arith = ProductTerm::new(arith);
    let (intervals, arrays) = match problem.theory {
        Theory::Mia => (pmga_mia(&arith, seed)?, None),
        Theory::Amia => {
            let a = pmga_amia(&arith, seed)?;
            (a.intervals.clone(), Some(a))
        }
    };
    let approx = Approximation {
        seed: seed.clone(),
        intervals,
        pins,
        arrays,
    };
    let base = approx.arrays.as_ref().map_or(seed, |a| &a.model);
    if !approx.intervals.contains(base)? {
        return Err(Error::SoundnessViolation(format!(
            "seed {} lies outside its own approximation",
            seed.to_json()
        )));
    }
    Ok(approx)
}

/// Outcome of exploiting one approximation.
#[derive(Clone, Debug)]
pub struct EpochResult {
    pub seed: Model,
    pub intervals: IntervalMap,
    pub aliasing: Option<AliasingLiterals>,
    /// New unique samples, in emission order.
    pub samples: Vec<Sample>,
    pub rounds: usize,
    pub draws: u64,
    pub duplicates: u64,
    pub clashes: u64,
    /// Unique rate of the last round run.
    pub unique_rate: f64,
}

/// Up to `cfg.rounds` rounds of `cfg.samples_per_round` draws; stops after
/// a round whose unique rate falls below the threshold, at `deadline`, or
/// after `max_new` new samples. Every sample is checked against the input
/// formula.
pub fn exploit_epoch<R: Rng + ?Sized>(
    problem: &Problem,
    approx: &Approximation,
    cfg: &SamplerConfig,
    rng: &mut R,
    seen: &mut SeenSet,
    deadline: Instant,
    max_new: Option<u64>,
) -> Result<EpochResult> {
    let mut res = EpochResult {
        seed: approx.seed.clone(),
        intervals: approx.intervals.clone(),
        aliasing: approx.aliasing().cloned(),
        samples: Vec::new(),
        rounds: 0,
        draws: 0,
        duplicates: 0,
        clashes: 0,
        unique_rate: 0.0,
    };
    let full = |r: &EpochResult| max_new.is_some_and(|n| r.samples.len() as u64 >= n);
    'rounds: for _ in 0..cfg.rounds {
        if full(&res) || Instant::now() >= deadline {
            break;
        }
        res.rounds += 1;
        let mut fresh = 0usize;
        for _ in 0..cfg.samples_per_round {
            if full(&res) || Instant::now() >= deadline {
                res.unique_rate = fresh as f64 / cfg.samples_per_round as f64;
                break 'rounds;
            }
            res.draws += 1;
            let drawn = match &approx.arrays {
                None => sample_intervals(&approx.intervals, &approx.seed, &cfg.unbounded_width, rng)?,
                Some(a) => match sample_intervals_arrays(a, &cfg.unbounded_width, rng)? {
                    Draw::Sample(m) => m,
                    Draw::Clash => {
                        res.clashes += 1;
                        continue;
                    }
                },
            };
            let sample = problem.restrict(drawn);
            if !sample.satisfies(&problem.formula)? {
                return Err(Error::SoundnessViolation(sample.to_json().to_string()));
            }
            if seen.insert(&sample) {
                fresh += 1;
                res.samples.push(sample);
            } else {
                res.duplicates += 1;
            }
        }
        res.unique_rate = fresh as f64 / cfg.samples_per_round as f64;
        if res.unique_rate < cfg.unique_rate_threshold {
            break;
        }
    }
    Ok(res)
}

/// Receives the output of a run.
pub trait SampleSink {
    fn sample(&mut self, s: &Sample) -> Result<()>;

    /// Called once per epoch, before its samples.
    fn epoch(&mut self, _index: u64, _approx: &Approximation) -> Result<()> {
        Ok(())
    }
}

impl SampleSink for Vec<Sample> {
    fn sample(&mut self, s: &Sample) -> Result<()> {
        self.push(s.clone());
        Ok(())
    }
}

/// Counters and timings of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub epochs: u64,
    pub solver_calls: u64,
    pub maxsmt_degradations: u64,
    pub blocking_resets: u64,
    pub unique_samples: u64,
    pub draws: u64,
    pub duplicates: u64,
    pub clashes: u64,
    pub probabilistic_dedup: bool,
    pub raw_coverage: Option<f64>,
    pub stop_reason: String,
    pub seed_secs: f64,
    pub approx_secs: f64,
    pub sample_secs: f64,
    pub total_secs: f64,
}

impl RunStats {
    pub fn to_json(&self) -> Value {
        json!({
            "epochs": self.epochs,
            "solver_calls": self.solver_calls,
            "maxsmt_degradations": self.maxsmt_degradations,
            "blocking_resets": self.blocking_resets,
            "unique_samples": self.unique_samples,
            "draws": self.draws,
            "duplicates": self.duplicates,
            "clashes": self.clashes,
            "probabilistic_dedup": self.probabilistic_dedup,
            "raw_coverage": self.raw_coverage,
            "stop_reason": self.stop_reason,
            "wall_time": {
                "seed": self.seed_secs,
                "approximate": self.approx_secs,
                "sample": self.sample_secs,
                "total": self.total_secs,
            },
        })
    }
}

/// Runs epochs until the time limit, the sample limit, the epoch limit, or
/// a solver `unknown`, streaming unique samples to `sink`.
pub fn mega_sample<S, R>(
    problem: &Problem,
    cfg: &SamplerConfig,
    solver: &mut S,
    rng: &mut R,
    sink: &mut dyn SampleSink,
) -> Result<RunStats>
where
    S: Solver + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let start = Instant::now();
    let run_deadline = start + cfg.total_time_limit;
    let mut stats = RunStats::default();
    let mut seed_stats = SeedStats::default();
    let mut seen = SeenSet::new(cfg.dedup_cap);
    let mut blocking: Vec<Formula> = Vec::new();
    let mut injected = cfg.inject_seed.clone();
    stats.stop_reason = loop {
        if Instant::now() >= run_deadline {
            break "time limit".to_string();
        }
        if cfg.max_samples.is_some_and(|n| stats.unique_samples >= n) {
            break "sample limit".to_string();
        }
        if cfg.max_epochs.is_some_and(|n| stats.epochs >= n) {
            break "epoch limit".to_string();
        }
        let t = Instant::now();
        let seed = match injected.take() {
            Some(s) => Some(s),
            None => match cfg.strategy {
                Strategy::Random => get_seed_random(problem, solver, &cfg.random_bound, rng, &mut seed_stats)?,
                Strategy::Blocking => get_seed_blocking(problem, solver, &mut blocking, &mut seed_stats)?,
            },
        };
        stats.seed_secs += t.elapsed().as_secs_f64();
        let Some(seed) = seed else {
            break "solver unknown".to_string();
        };
        let t = Instant::now();
        let approx = approximate(problem, &seed, rng)?;
        stats.approx_secs += t.elapsed().as_secs_f64();
        stats.epochs += 1;
        sink.epoch(stats.epochs, &approx)?;
        let t = Instant::now();
        let deadline = run_deadline.min(t + cfg.epoch_time_limit);
        let max_new = cfg.max_samples.map(|n| n - stats.unique_samples);
        let res = exploit_epoch(problem, &approx, cfg, rng, &mut seen, deadline, max_new)?;
        for s in &res.samples {
            sink.sample(s)?;
        }
        stats.sample_secs += t.elapsed().as_secs_f64();
        stats.unique_samples += res.samples.len() as u64;
        stats.draws += res.draws;
        stats.duplicates += res.duplicates;
        stats.clashes += res.clashes;
        log::info!(
            "epoch {}: {} new samples in {} rounds, unique rate {:.3}",
            stats.epochs,
            res.samples.len(),
            res.rounds,
            res.unique_rate
        );
        if cfg.strategy == Strategy::Blocking {
            blocking.push(approx.blocking_formula(problem));
        }
    };
    stats.solver_calls = seed_stats.solver_calls;
    stats.maxsmt_degradations = seed_stats.maxsmt_degradations;
    stats.blocking_resets = seed_stats.blocking_resets;
    stats.probabilistic_dedup = seen.is_probabilistic();
    stats.total_secs = start.elapsed().as_secs_f64();
    Ok(stats)
}
