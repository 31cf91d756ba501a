use std::fmt::Write;

use num_bigint::{BigInt, Sign};

use super::parse::{ParsedProblem, SymbolKind};
use crate::formula::{Formula, Rel, Term};

fn is_simple_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        None => false,
        Some(c) if c.is_ascii_digit() => false,
        Some(c) => std::iter::once(c)
            .chain(chars)
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)),
    }
}

/// Quotes a symbol with bars unless it is a simple symbol.
pub fn quote_symbol(s: &str) -> String {
    let reserved = matches!(s, "true" | "false" | "let" | "ite" | "and" | "or" | "not" | "!" | "_");
    let numeric = s
        .strip_prefix('-')
        .is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()));
    if is_simple_symbol(s) && !reserved && !numeric {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

/// Integers print as numerals, negatives as `(- n)`.
pub fn print_int(n: &BigInt) -> String {
    if n.sign() == Sign::Minus {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t);
    out
}

pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

fn write_app<'a, T: 'a>(out: &mut String, op: &str, args: impl IntoIterator<Item = &'a T>, w: fn(&mut String, &T)) {
    out.push('(');
    out.push_str(op);
    for a in args {
        out.push(' ');
        w(out, a);
    }
    out.push(')');
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::IntConst(n) => out.push_str(&print_int(n)),
        Term::IntVar(v) | Term::ArrayVar(v) => out.push_str(&quote_symbol(v)),
        Term::Add(xs) => write_app(out, "+", xs, write_term),
        Term::Mul(xs) => write_app(out, "*", xs, write_term),
        Term::Sub(a, b) => write_app(out, "-", [&**a, &**b], write_term),
        Term::Select(a, i) => write_app(out, "select", [&**a, &**i], write_term),
        Term::Store(a, i, v) => write_app(out, "store", [&**a, &**i, &**v], write_term),
        Term::FunApp(f, a) => write_app(out, &quote_symbol(f), [&**a], write_term),
        Term::Ite(c, a, b) => {
            out.push_str("(ite ");
            write_formula(out, c);
            out.push(' ');
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::Const(b) => out.push_str(if *b { "true" } else { "false" }),
        Formula::BoolVar(v) => out.push_str(&quote_symbol(v)),
        Formula::Atom(rel, l, r) => write_app(out, rel.smt_name(), [l, r], write_term),
        Formula::Not(x) => write_app(out, "not", [&**x], write_formula),
        Formula::And(xs) | Formula::Or(xs) => {
            let is_and = matches!(f, Formula::And(_));
            match xs.as_slice() {
                [] => out.push_str(if is_and { "true" } else { "false" }),
                [single] => write_formula(out, single),
                _ => write_app(out, if is_and { "and" } else { "or" }, xs, write_formula),
            }
        }
        Formula::Implies(a, b) => write_app(out, "=>", [&**a, &**b], write_formula),
        Formula::Iff(a, b) => write_app(out, "=", [&**a, &**b], write_formula),
        Formula::Xor(a, b) => write_app(out, "xor", [&**a, &**b], write_formula),
        Formula::Ite(c, a, b) => write_app(out, "ite", [&**c, &**a, &**b], write_formula),
        Formula::Distinct(ts) => write_app(out, Rel::Ne.smt_name(), ts, write_term),
    }
}

/// SMT-LIB declaration command for a symbol.
pub fn print_declaration(name: &str, kind: SymbolKind) -> String {
    let name = quote_symbol(name);
    match kind {
        SymbolKind::Int => format!("(declare-fun {name} () Int)"),
        SymbolKind::Bool => format!("(declare-fun {name} () Bool)"),
        SymbolKind::Array => format!("(declare-fun {name} () (Array Int Int))"),
        SymbolKind::Function => format!("(declare-fun {name} (Int) Int)"),
    }
}

/// A complete script: logic, declarations, one assertion, `check-sat`.
pub fn print_problem(p: &ParsedProblem) -> String {
    let mut out = String::new();
    if let Some(l) = &p.logic {
        writeln!(out, "(set-logic {l})").unwrap();
    }
    for d in &p.declarations {
        writeln!(out, "{}", print_declaration(&d.name, d.kind)).unwrap();
    }
    writeln!(out, "(assert {})", print_formula(&p.assertion)).unwrap();
    out.push_str("(check-sat)\n");
    out
}
