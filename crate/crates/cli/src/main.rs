use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use megasample::coverage::{normalized_coverage, CoverageBitmap};
use megasample::sampler::{mega_sample, sample_hash, Approximation, Problem, SampleSink, SamplerConfig, Strategy};
use megasample::smtlib::parse_problem;
use megasample::solver::{read_transcript, ProcessSolver, RecordingSolver, ScriptedSolver, Solver, DEFAULT_SOLVER_CMD};
use megasample::{preprocess, Error, Formula, Model, Sample};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const EXIT_FAILURE: u8 = 1;
const EXIT_UNSAT: u8 = 3;
const EXIT_UNSUPPORTED: u8 = 4;
const EXIT_SOLVER: u8 = 5;
const EXIT_VERIFY_FAILED: u8 = 6;

#[derive(Parser)]
#[command(
    name = "megasample",
    version,
    about = "Sample many distinct models of an SMT-LIB formula"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample models of a formula.
    Run(Box<RunArgs>),
    /// Re-check a samples file against a problem.
    Verify { samples: PathBuf, problem: PathBuf },
    /// Union coverage bitmaps and report each input's normalized coverage.
    MergeCoverage {
        #[arg(required = true)]
        bitmaps: Vec<PathBuf>,
        /// Where to write the union bitmap.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Blocking,
}

#[derive(Args)]
struct RunArgs {
    /// SMT-LIB v2 input file.
    input: PathBuf,
    #[arg(long, default_value = DEFAULT_SOLVER_CMD)]
    solver_cmd: String,
    #[arg(long, value_enum, default_value = "random")]
    strategy: StrategyArg,
    /// Total time limit in seconds.
    #[arg(long, default_value_t = 900.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 600.0)]
    epoch_time_limit: f64,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    solver_timeout: f64,
    #[arg(long)]
    max_samples: Option<u64>,
    #[arg(long)]
    max_epochs: Option<u64>,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long, default_value_t = 1000)]
    samples_per_round: usize,
    #[arg(long, default_value_t = 0.05)]
    unique_rate_threshold: f64,
    #[arg(long, default_value = "100", allow_hyphen_values = true)]
    random_bound: BigInt,
    #[arg(long, default_value = "1000000", allow_hyphen_values = true)]
    unbounded_width: BigInt,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// JSON lines of samples; standard output when absent.
    #[arg(long)]
    samples_out: Option<PathBuf>,
    /// JSON lines, one per epoch: seed and intervals.
    #[arg(long, alias = "emit-intervals")]
    intervals_out: Option<PathBuf>,
    #[arg(long)]
    coverage_out: Option<PathBuf>,
    #[arg(long)]
    stats_out: Option<PathBuf>,
    /// First seed as a JSON object, or `@file`.
    #[arg(long)]
    inject_seed: Option<String>,
    /// Answer solver queries from a recorded transcript instead of a solver.
    #[arg(long)]
    replay_transcript: Option<PathBuf>,
    /// Record every solver verdict to this file.
    #[arg(long)]
    record_transcript: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::Verify { samples, problem } => verify(&samples, &problem),
        Command::MergeCoverage { bitmaps, out } => merge_coverage(&bitmaps, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("megasample: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Unsat) => EXIT_UNSAT,
        Some(Error::UnsupportedFeature(_)) | Some(Error::UnsupportedSoft(_)) => EXIT_UNSUPPORTED,
        Some(Error::Solver(_)) | Some(Error::ModelParse(_)) => EXIT_SOLVER,
        _ => EXIT_FAILURE,
    }
}

fn seconds(s: f64, what: &str) -> anyhow::Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid {what}: {s}"))
}

fn read_problem(path: &Path) -> anyhow::Result<megasample::smtlib::ParsedProblem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_problem(&text)?)
}

/// Samples go to a file created on the first epoch, so an unsat input
/// leaves no samples file behind.
struct Outputs {
    samples_path: Option<PathBuf>,
    samples: Option<Box<dyn Write>>,
    intervals: Option<BufWriter<File>>,
    coverage: Option<(Formula, CoverageBitmap)>,
}

impl Outputs {
    fn samples(&mut self) -> megasample::Result<&mut Box<dyn Write>> {
        if self.samples.is_none() {
            let w: Box<dyn Write> = match &self.samples_path {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(BufWriter::new(io::stdout())),
            };
            self.samples = Some(w);
        }
        Ok(self.samples.as_mut().unwrap())
    }
}

impl SampleSink for Outputs {
    fn sample(&mut self, s: &Sample) -> megasample::Result<()> {
        writeln!(self.samples()?, "{}", s.to_json())?;
        if let Some((f, bm)) = &mut self.coverage {
            bm.record_sample(f, s)?;
        }
        Ok(())
    }

    fn epoch(&mut self, index: u64, a: &Approximation) -> megasample::Result<()> {
        self.samples()?;
        if let Some(w) = &mut self.intervals {
            let pins: Vec<String> = a.pins.iter().map(|p| p.to_string()).collect();
            let line = json!({
                "epoch": index,
                "seed": a.seed.to_json(),
                "intervals": a.intervals.to_json(),
                "pins": pins,
            });
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn run(args: RunArgs) -> anyhow::Result<u8> {
    let parsed = read_problem(&args.input)?;
    let problem = Problem::from_parsed(&parsed)?;
    let inject_seed = match &args.inject_seed {
        None => None,
        Some(s) => {
            let text = match s.strip_prefix('@') {
                Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
                None => s.clone(),
            };
            let v: Value = serde_json::from_str(&text).context("parsing --inject-seed")?;
            Some(Model::from_json(&v)?)
        }
    };
    let cfg = SamplerConfig {
        strategy: match args.strategy {
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Blocking => Strategy::Blocking,
        },
        total_time_limit: seconds(args.time_limit, "--time-limit")?,
        epoch_time_limit: seconds(args.epoch_time_limit, "--epoch-time-limit")?,
        max_samples: args.max_samples,
        max_epochs: args.max_epochs,
        rounds: args.rounds,
        samples_per_round: args.samples_per_round,
        unique_rate_threshold: args.unique_rate_threshold,
        random_bound: args.random_bound.clone(),
        unbounded_width: args.unbounded_width.clone(),
        rng_seed: args.rng_seed,
        inject_seed,
        ..SamplerConfig::default()
    };
    cfg.validate()?;

    let mut solver: Box<dyn Solver> = match &args.replay_transcript {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Box::new(ScriptedSolver::new(read_transcript(BufReader::new(f))?))
        }
        None => Box::new(ProcessSolver::new(
            &args.solver_cmd,
            seconds(args.solver_timeout, "--solver-timeout")?,
        )?),
    };
    if let Some(path) = &args.record_transcript {
        let sink = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        solver = Box::new(RecordingSolver::new(solver, sink));
    }

    let want_coverage = args.coverage_out.is_some() || args.stats_out.is_some();
    let coverage = if want_coverage {
        let f = preprocess(&problem.formula)?;
        let bm = CoverageBitmap::for_formula(&f);
        Some((f, bm))
    } else {
        None
    };
    let intervals = match &args.intervals_out {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let mut out = Outputs {
        samples_path: args.samples_out.clone(),
        samples: None,
        intervals,
        coverage,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let result = mega_sample(&problem, &cfg, &mut solver, &mut rng, &mut out);
    // flush whatever was produced, even when the run failed midway
    if let Some(w) = &mut out.samples {
        w.flush()?;
    }
    if let Some(w) = &mut out.intervals {
        w.flush()?;
    }
    drop(solver);
    let mut stats = result?;
    if let Some((_, bm)) = &out.coverage {
        stats.raw_coverage = Some(bm.raw_coverage());
        if let Some(p) = &args.coverage_out {
            bm.save(p)?;
        }
    }
    if let Some(p) = &args.stats_out {
        fs::write(p, format!("{:#}\n", stats.to_json()))?;
    }
    log::info!("{}", stats.to_json());
    Ok(0)
}

fn verify(samples: &Path, problem: &Path) -> anyhow::Result<u8> {
    let parsed = read_problem(problem)?;
    let f = File::open(samples).with_context(|| format!("opening {}", samples.display()))?;
    let mut seen = HashSet::new();
    let (mut count, mut duplicates) = (0u64, 0u64);
    let mut violations = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        count += 1;
        let lineno = i + 1;
        let ok = serde_json::from_str::<Value>(&line)
            .map_err(|e| Error::Format(e.to_string()))
            .and_then(|v| Model::from_json(&v))
            .and_then(|m| {
                if !seen.insert(sample_hash(&m)) {
                    duplicates += 1;
                }
                m.satisfies(&parsed.assertion)
            });
        match ok {
            Ok(true) => {}
            Ok(false) => violations.push(json!({"line": lineno, "reason": "formula is false"})),
            Err(e) => violations.push(json!({"line": lineno, "reason": e.to_string()})),
        }
    }
    let report = json!({
        "samples": count,
        "violations": violations.len(),
        "duplicates": duplicates,
        "violating_lines": violations,
    });
    println!("{report:#}");
    Ok(if violations.is_empty() && duplicates == 0 {
        0
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn merge_coverage(paths: &[PathBuf], out: Option<&Path>) -> anyhow::Result<u8> {
    let mut maps = Vec::new();
    for p in paths {
        maps.push(CoverageBitmap::load(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let mut union = maps[0].clone();
    for m in &maps[1..] {
        union.merge(m)?;
    }
    let refs: Vec<&CoverageBitmap> = maps.iter().collect();
    let union_covered = CoverageBitmap::covered_union(&refs)?;
    let mut inputs = Vec::new();
    for (p, m) in paths.iter().zip(&maps) {
        let others: Vec<CoverageBitmap> = maps.iter().filter(|o| !std::ptr::eq(*o, m)).cloned().collect();
        inputs.push(json!({
            "file": p.display().to_string(),
            "covered_bits": m.covered_bits(),
            "raw": m.raw_coverage(),
            "normalized": normalized_coverage(m, &others)?,
        }));
    }
    if let Some(o) = out {
        union.save(o)?;
    }
    let report = json!({
        "total_bits": union.total_bits(),
        "union_covered_bits": union_covered,
        "inputs": inputs,
    });
    println!("{report:#}");
    Ok(0)
}
