//! SMT-LIB adapter over a solver subprocess.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{complete_and_check, parse_model, Solver, SolverRequest, SolverVerdict};
use crate::error::{Error, Result};
use crate::smtlib::{print_declaration, print_formula};

pub const DEFAULT_SOLVER_CMD: &str = "z3 -in";

const SYNC: &str = "ms!sync";
/// Extra time granted on top of the solver-side timeout before the process
/// is considered hung.
const GRACE: Duration = Duration::from_secs(5);

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One persistent solver process; every query runs inside `push`/`pop`.
/// Any protocol desync kills the process, and the next query restarts it.
pub struct ProcessSolver {
    command: Vec<String>,
    timeout: Duration,
    proc: Option<Running>,
}

impl ProcessSolver {
    /// `command` is split on whitespace, e.g. `"z3 -in"`.
    pub fn new(command: &str, timeout: Duration) -> Result<Self> {
        let command: Vec<String> = command.split_whitespace().map(str::to_string).collect();
        if command.is_empty() {
            return Err(Error::Solver("empty solver command".into()));
        }
        Ok(ProcessSolver {
            command,
            timeout,
            proc: None,
        })
    }

    fn spawn(&self) -> Result<Running> {
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Solver(format!("cannot start `{}`: {e}", self.command.join(" "))))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut running = Running {
            child,
            stdin,
            lines: rx,
        };
        let ms = self.timeout.as_millis();
        let init = format!(
            "(set-option :print-success false)\n(set-option :produce-models true)\n(set-option :timeout {ms})\n(echo \"{SYNC}\")\n"
        );
        running.send(&init)?;
        // options a solver does not know are reported and ignored
        running.until_sync(Instant::now() + self.timeout + GRACE)?;
        Ok(running)
    }

    fn query(&mut self, req: &SolverRequest, soft: bool) -> Result<SolverVerdict> {
        if self.proc.is_none() {
            self.proc = Some(self.spawn()?);
        }
        let deadline = Instant::now() + self.timeout + GRACE;
        let result = run_query(self.proc.as_mut().unwrap(), req, soft, deadline);
        match &result {
            Ok(_) | Err(Error::UnsupportedSoft(_)) => {}
            Err(_) => self.proc = None,
        }
        result
    }
}

impl Running {
    fn send(&mut self, text: &str) -> Result<()> {
        self.stdin
            .write_all(text.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Solver(format!("solver pipe closed: {e}")))
    }

    fn line(&mut self, deadline: Instant) -> Result<String> {
        let left = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(left) {
            Ok(l) => Ok(l),
            Err(RecvTimeoutError::Timeout) => Err(Error::Solver("solver timed out".into())),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Solver("solver exited".into())),
        }
    }

    /// Reads lines up to the sync marker and returns the diagnostics seen.
    fn until_sync(&mut self, deadline: Instant) -> Result<Vec<String>> {
        let mut chatter = Vec::new();
        loop {
            let l = self.line(deadline)?;
            let t = l.trim().trim_matches('"');
            if t == SYNC {
                return Ok(chatter);
            }
            if !t.is_empty() {
                chatter.push(l);
            }
        }
    }

    /// Reads one complete (paren-balanced) response.
    fn response(&mut self, deadline: Instant) -> Result<String> {
        let mut text = String::new();
        let mut depth = 0i64;
        loop {
            let l = self.line(deadline)?;
            depth += paren_balance(&l);
            text.push_str(&l);
            text.push('\n');
            if depth <= 0 && !text.trim().is_empty() {
                return Ok(text);
            }
        }
    }
}

/// Net parenthesis depth of a line, skipping string literals, quoted
/// symbols and comments.
fn paren_balance(line: &str) -> i64 {
    let mut depth = 0;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '"' => {
                for d in chars.by_ref() {
                    if d == '"' {
                        break;
                    }
                }
            }
            '|' => {
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                }
            }
            ';' => break,
            _ => {}
        }
    }
    depth
}

fn run_query(p: &mut Running, req: &SolverRequest, soft: bool, deadline: Instant) -> Result<SolverVerdict> {
    let mut script = String::from("(push 1)\n");
    for d in &req.declarations {
        script.push_str(&print_declaration(&d.name, d.kind));
        script.push('\n');
    }
    for h in &req.hard {
        script.push_str(&format!("(assert {})\n", print_formula(h)));
    }
    if soft {
        for (f, w) in &req.soft {
            script.push_str(&format!("(assert-soft {} :weight {w})\n", print_formula(f)));
        }
    }
    script.push_str(&format!("(echo \"{SYNC}\")\n"));
    p.send(&script)?;
    let chatter = p.until_sync(deadline)?;
    if !chatter.is_empty() {
        p.send("(pop 1)\n")?;
        let all = chatter.join(" ");
        return Err(if soft && !req.soft.is_empty() {
            Error::UnsupportedSoft(all)
        } else {
            Error::Solver(all)
        });
    }
    p.send("(check-sat)\n")?;
    let answer = p.line(deadline)?;
    let verdict = match answer.trim() {
        "sat" => {
            p.send("(get-model)\n")?;
            let text = p.response(deadline)?;
            if text.trim_start().starts_with("(error") {
                return Err(Error::Solver(text.trim().to_string()));
            }
            let m = parse_model(&text, &req.declarations)?;
            SolverVerdict::Sat(complete_and_check(req, m)?)
        }
        "unsat" => SolverVerdict::Unsat,
        "unknown" => SolverVerdict::Unknown("solver returned unknown".into()),
        other => return Err(Error::Solver(format!("unexpected solver answer `{other}`"))),
    };
    p.send("(pop 1)\n")?;
    Ok(verdict)
}

impl Solver for ProcessSolver {
    fn solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.query(req, false)
    }

    fn max_solve(&mut self, req: &SolverRequest) -> Result<SolverVerdict> {
        self.query(req, true)
    }
}
