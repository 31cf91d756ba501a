//! Replaying and recording solver verdicts.
//!
//! A transcript is JSON lines, one verdict per query:
//! `{"verdict":"sat","model":{...}}`, `{"verdict":"unsat"}` or
//! `{"verdict":"unknown","reason":"..."}`.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use serde_json::{json, Value};

use super::{complete_and_check, Solver, SolverRequest, SolverVerdict};
use crate::error::{Error, Result};
use crate::model::Model;

fn verdict_to_json(v: &SolverVerdict) -> Value {
    match v {
        SolverVerdict::Sat(m) => json!({"verdict": "sat", "model": m.to_json()}),
        SolverVerdict::Unsat => json!({"verdict": "unsat"}),
        SolverVerdict::Unknown(r) => json!({"verdict": "unknown", "reason": r}),
    }
}

fn verdict_from_json(v: &Value) -> Result<SolverVerdict> {
    match v["verdict"].as_str() {
        Some("sat") => Ok(SolverVerdict::Sat(Model::from_json(&v["model"])?)),
        Some("unsat") => Ok(SolverVerdict::Unsat),
        Some("unknown") => Ok(SolverVerdict::Unknown(v["reason"].as_str().unwrap_or("").to_string())),
        _ => Err(Error::Format(format!("bad transcript entry {v}"))),
    }
}

pub fn read_transcript(r: impl BufRead) -> Result<Vec<SolverVerdict>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| Error::Format(format!("transcript: {e}")))?;
        out.push(verdict_from_json(&v)?);
    }
    Ok(out)
}

/// Answers queries from a fixed list of verdicts, in order. SAT models are
/// completed and re-checked against each query's hard constraints like any
/// other backend. An exhausted script answers `Unknown`.
#[derive(Clone, Debug, Default)]
pub struct ScriptedSolver {
    script: VecDeque<SolverVerdict>,
    /// Every request received, in order.
    pub requests: Vec<SolverRequest>,
}

impl ScriptedSolver {
    pub fn new(script: impl IntoIterator<Item = SolverVerdict>) -> Self {
        ScriptedSolver {
            script: script.into_iter().collect(),
            requests: Vec::new(),
        }
    }

    fn answer(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.requests.push(req.clone());
        match self.script.pop_front() {
            Some(SolverVerdict::Sat(m)) => Ok(SolverVerdict::Sat(complete_and_check(req, m)?)),
            Some(v) => Ok(v),
            None => Ok(SolverVerdict::Unknown("transcript exhausted".into())),
        }
    }
}

impl Solver for ScriptedSolver {
    fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.answer(req)
    }

    fn max_solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.answer(req)
    }
}

/// Forwards to an inner solver and appends each verdict to a transcript.
pub struct RecordingSolver<S, W> {
    inner: S,
    sink: W,
}

impl<S: Solver, W: Write> RecordingSolver<S, W> {
    pub fn new(inner: S, sink: W) -> Self {
        RecordingSolver { inner, sink }
    }

    pub fn into_inner(self) -> (S, W) {
        (self.inner, self.sink)
    }

    fn record(&mut self, v: Result<SolverVerdict>) -> Result<SolverVerdict> {
        let v = v?;
        writeln!(self.sink, "{}", verdict_to_json(&v))?;
        Ok(v)
    }
}

impl<S: Solver, W: Write> Solver for RecordingSolver<S, W> {
    fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        let v = self.inner.solve(req);
        self.record(v)
    }

    fn max_solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        let v = self.inner.max_solve(req);
        self.record(v)
    }
}
