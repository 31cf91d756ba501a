use std::collections::{BTreeMap, HashMap};

use super::sexp::{read_all, Atom, SExpr};
use crate::error::{Error, Result};
use crate::formula::{Formula, Rel, Sort, Term};

/// Logics whose benchmarks fall within the supported grammar.
pub const SUPPORTED_LOGICS: &[&str] = &["QF_LIA", "QF_NIA", "QF_ALIA", "QF_AUFLIA", "QF_UFLIA"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Int,
    Bool,
    Array,
    /// Unary `Int -> Int` uninterpreted function.
    Function,
}

impl SymbolKind {
    pub fn sort(self) -> Sort {
        match self {
            SymbolKind::Int => Sort::Int,
            SymbolKind::Bool => Sort::Bool,
            SymbolKind::Array | SymbolKind::Function => Sort::Array,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Declaration {
    pub name: String,
    pub kind: SymbolKind,
}

impl Declaration {
    pub fn new(name: impl Into<String>, kind: SymbolKind) -> Self {
        Declaration {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedProblem {
    pub logic: Option<String>,
    pub declarations: Vec<Declaration>,
    /// Conjunction of all assertions.
    pub assertion: Formula,
}

impl ParsedProblem {
    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.name == name)
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Term(Term),
    Formula(Formula),
}

struct Parser {
    decls: Vec<Declaration>,
    kinds: HashMap<String, SymbolKind>,
    macros: HashMap<String, Expr>,
    scopes: Vec<HashMap<String, Expr>>,
}

/// Parses the supported SMT-LIB v2 subset.
pub fn parse_problem(text: &str) -> Result<ParsedProblem> {
    let commands = read_all(text)?;
    let mut p = Parser {
        decls: Vec::new(),
        kinds: HashMap::new(),
        macros: HashMap::new(),
        scopes: Vec::new(),
    };
    let mut logic = None;
    let mut asserts = Vec::new();
    for cmd in &commands {
        let items = cmd
            .list()
            .filter(|xs| !xs.is_empty())
            .ok_or_else(|| cmd.syntax_error("expected a command"))?;
        let name = items[0]
            .symbol()
            .ok_or_else(|| items[0].syntax_error("expected a command name"))?;
        match name {
            "set-logic" => {
                let l = items
                    .get(1)
                    .and_then(SExpr::symbol)
                    .ok_or_else(|| cmd.syntax_error("set-logic expects a symbol"))?;
                if !SUPPORTED_LOGICS.contains(&l) {
                    return Err(Error::UnsupportedFeature(format!("logic {l}")));
                }
                logic = Some(l.to_string());
            }
            "set-info" | "set-option" | "check-sat" | "exit" | "get-model" | "get-info" | "get-value"
            | "get-assertions" | "echo" => {}
            "declare-const" => {
                let [_, n, s] = items else {
                    return Err(cmd.syntax_error("declare-const expects a name and a sort"));
                };
                p.declare(n, &[], s)?;
            }
            "declare-fun" => {
                let [_, n, args, s] = items else {
                    return Err(cmd.syntax_error("declare-fun expects a name, arguments and a sort"));
                };
                let args = args
                    .list()
                    .ok_or_else(|| args.syntax_error("expected an argument sort list"))?;
                p.declare(n, args, s)?;
            }
            "define-fun" => {
                let [_, n, args, _sort, body] = items else {
                    return Err(cmd.syntax_error("malformed define-fun"));
                };
                if !args.list().is_some_and(<[SExpr]>::is_empty) {
                    return Err(Error::UnsupportedFeature("define-fun with parameters".into()));
                }
                let name = n.symbol().ok_or_else(|| n.syntax_error("expected a symbol"))?;
                let value = p.expr(body)?;
                p.macros.insert(name.to_string(), value);
            }
            "assert" => {
                let [_, body] = items else {
                    return Err(cmd.syntax_error("assert expects one term"));
                };
                let e = p.expr(body)?;
                asserts.push(p.formula_of(e, body)?);
            }
            other => {
                return Err(Error::UnsupportedFeature(format!("command `{other}`")));
            }
        }
    }
    Ok(ParsedProblem {
        logic,
        declarations: p.decls,
        assertion: if asserts.is_empty() {
            Formula::tt()
        } else {
            Formula::and(asserts)
        },
    })
}

/// Parses a single formula over the given declarations.
pub fn parse_formula(text: &str, decls: &[Declaration]) -> Result<Formula> {
    let mut xs = read_all(text)?;
    if xs.len() != 1 {
        return Err(Error::Syntax {
            line: 1,
            col: 1,
            msg: "expected exactly one formula".into(),
        });
    }
    let e = xs.pop().unwrap();
    let mut p = Parser {
        decls: decls.to_vec(),
        kinds: decls.iter().map(|d| (d.name.clone(), d.kind)).collect(),
        macros: HashMap::new(),
        scopes: Vec::new(),
    };
    let v = p.expr(&e)?;
    p.formula_of(v, &e)
}

fn parse_sort(s: &SExpr) -> Result<Sort> {
    if s.is_symbol("Int") {
        return Ok(Sort::Int);
    }
    if s.is_symbol("Bool") {
        return Ok(Sort::Bool);
    }
    if let Some([head, a, b]) = s.list() {
        if head.is_symbol("Array") && a.is_symbol("Int") && b.is_symbol("Int") {
            return Ok(Sort::Array);
        }
        if head.is_symbol("Array") {
            return Err(Error::UnsupportedFeature(format!("array sort {s} (only Int -> Int)")));
        }
    }
    Err(Error::UnsupportedFeature(format!("sort {s}")))
}

impl Parser {
    fn declare(&mut self, n: &SExpr, args: &[SExpr], sort: &SExpr) -> Result<()> {
        let name = n.symbol().ok_or_else(|| n.syntax_error("expected a symbol"))?;
        let result = parse_sort(sort)?;
        let kind = match (args, result) {
            ([], Sort::Int) => SymbolKind::Int,
            ([], Sort::Bool) => SymbolKind::Bool,
            ([], Sort::Array) => SymbolKind::Array,
            ([a], Sort::Int) if parse_sort(a)? == Sort::Int => SymbolKind::Function,
            ([_], _) => {
                return Err(Error::UnsupportedFeature(format!(
                    "function `{name}` must have signature Int -> Int"
                )))
            }
            _ => {
                return Err(Error::UnsupportedFeature(format!(
                    "function `{name}` of arity {}",
                    args.len()
                )))
            }
        };
        if self.kinds.insert(name.to_string(), kind).is_some() {
            return Err(n.syntax_error(format!("`{name}` declared twice")));
        }
        self.decls.push(Declaration::new(name, kind));
        Ok(())
    }

    fn term_of(&self, e: Expr, at: &SExpr) -> Result<Term> {
        match e {
            Expr::Term(t) => Ok(t),
            Expr::Formula(_) => Err(at.syntax_error(format!("expected a term, got a formula: {at}"))),
        }
    }

    fn formula_of(&self, e: Expr, at: &SExpr) -> Result<Formula> {
        match e {
            Expr::Formula(f) => Ok(f),
            Expr::Term(_) => Err(at.syntax_error(format!("expected a formula, got a term: {at}"))),
        }
    }

    fn int_term(&mut self, at: &SExpr) -> Result<Term> {
        let e = self.expr(at)?;
        let t = self.term_of(e, at)?;
        if t.sort() != Sort::Int {
            return Err(at.syntax_error(format!("expected an Int term: {at}")));
        }
        Ok(t)
    }

    fn array_term(&mut self, at: &SExpr) -> Result<Term> {
        let e = self.expr(at)?;
        let t = self.term_of(e, at)?;
        if t.sort() != Sort::Array {
            return Err(at.syntax_error(format!("expected an array term: {at}")));
        }
        Ok(t)
    }

    fn formula(&mut self, at: &SExpr) -> Result<Formula> {
        let e = self.expr(at)?;
        self.formula_of(e, at)
    }

    fn lookup(&self, name: &str, at: &SExpr) -> Result<Expr> {
        for scope in self.scopes.iter().rev() {
            if let Some(e) = scope.get(name) {
                return Ok(e.clone());
            }
        }
        if let Some(e) = self.macros.get(name) {
            return Ok(e.clone());
        }
        match name {
            "true" => return Ok(Expr::Formula(Formula::tt())),
            "false" => return Ok(Expr::Formula(Formula::ff())),
            _ => {}
        }
        match self.kinds.get(name) {
            Some(SymbolKind::Int) => Ok(Expr::Term(Term::var(name))),
            Some(SymbolKind::Bool) => Ok(Expr::Formula(Formula::bool_var(name))),
            Some(SymbolKind::Array) => Ok(Expr::Term(Term::array(name))),
            Some(SymbolKind::Function) => Err(at.syntax_error(format!("function `{name}` used without argument"))),
            None => Err(at.syntax_error(format!("undeclared symbol `{name}`"))),
        }
    }

    fn expr(&mut self, e: &SExpr) -> Result<Expr> {
        match e {
            SExpr::Atom(Atom::Numeral(n), _) => Ok(Expr::Term(Term::IntConst(n.clone()))),
            SExpr::Atom(Atom::Symbol(s), _) => self.lookup(s, e),
            SExpr::Atom(Atom::Other(s), _) => Err(Error::UnsupportedFeature(format!("literal `{s}`"))),
            SExpr::Atom(_, _) => Err(e.syntax_error(format!("unexpected `{e}`"))),
            SExpr::List(items, _) => {
                let Some((head, args)) = items.split_first() else {
                    return Err(e.syntax_error("empty application"));
                };
                let Some(op) = head.symbol() else {
                    return Err(head.syntax_error(format!("unsupported application head `{head}`")));
                };
                self.apply(op, args, e)
            }
        }
    }

    fn apply(&mut self, op: &str, args: &[SExpr], at: &SExpr) -> Result<Expr> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(at.syntax_error(format!("`{op}` expects {n} arguments")))
            }
        };
        let at_least = |n: usize| -> Result<()> {
            if args.len() >= n {
                Ok(())
            } else {
                Err(at.syntax_error(format!("`{op}` expects at least {n} arguments")))
            }
        };
        let t = match op {
            "let" => return self.let_binding(args, at),
            "!" => {
                at_least(1)?;
                return self.expr(&args[0]);
            }
            "+" => {
                at_least(1)?;
                Expr::Term(Term::Add(self.int_terms(args)?))
            }
            "*" => {
                at_least(1)?;
                Expr::Term(Term::Mul(self.int_terms(args)?))
            }
            "-" => {
                at_least(1)?;
                if let [SExpr::Atom(Atom::Numeral(n), _)] = args {
                    return Ok(Expr::Term(Term::IntConst(-n)));
                }
                let mut ts = self.int_terms(args)?.into_iter();
                let first = ts.next().unwrap();
                if args.len() == 1 {
                    Expr::Term(Term::Mul(vec![Term::int(-1), first]))
                } else {
                    Expr::Term(ts.fold(first, Term::sub))
                }
            }
            "select" => {
                arity(2)?;
                let a = self.array_term(&args[0])?;
                let i = self.int_term(&args[1])?;
                Expr::Term(Term::select(a, i))
            }
            "store" => {
                arity(3)?;
                let a = self.array_term(&args[0])?;
                let i = self.int_term(&args[1])?;
                let v = self.int_term(&args[2])?;
                Expr::Term(Term::store(a, i, v))
            }
            "ite" => {
                arity(3)?;
                let c = self.formula(&args[0])?;
                let a = self.expr(&args[1])?;
                let b = self.expr(&args[2])?;
                match (a, b) {
                    (Expr::Formula(a), Expr::Formula(b)) => {
                        Expr::Formula(Formula::Ite(Box::new(c), Box::new(a), Box::new(b)))
                    }
                    (Expr::Term(a), Expr::Term(b)) if a.sort() == b.sort() => {
                        Expr::Term(Term::Ite(Box::new(c), Box::new(a), Box::new(b)))
                    }
                    _ => return Err(at.syntax_error("ite branches differ in sort")),
                }
            }
            "not" => {
                arity(1)?;
                Expr::Formula(Formula::not(self.formula(&args[0])?))
            }
            "and" | "or" => {
                let fs = args.iter().map(|a| self.formula(a)).collect::<Result<Vec<_>>>()?;
                Expr::Formula(match (op, fs.is_empty()) {
                    ("and", true) => Formula::tt(),
                    ("or", true) => Formula::ff(),
                    ("and", false) => Formula::and(fs),
                    _ => Formula::or(fs),
                })
            }
            "=>" => {
                at_least(2)?;
                let mut fs = args.iter().map(|a| self.formula(a)).collect::<Result<Vec<_>>>()?;
                let last = fs.pop().unwrap();
                Expr::Formula(
                    fs.into_iter()
                        .rev()
                        .fold(last, |acc, f| Formula::Implies(Box::new(f), Box::new(acc))),
                )
            }
            "xor" => {
                at_least(2)?;
                let mut fs = args
                    .iter()
                    .map(|a| self.formula(a))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter();
                let first = fs.next().unwrap();
                Expr::Formula(fs.fold(first, |acc, f| Formula::Xor(Box::new(acc), Box::new(f))))
            }
            "=" | "distinct" => {
                at_least(2)?;
                let es = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>>>()?;
                return self.equality(op == "=", es, args, at);
            }
            "<=" | "<" | ">=" | ">" => {
                at_least(2)?;
                let rel = match op {
                    "<=" => Rel::Le,
                    "<" => Rel::Lt,
                    ">=" => Rel::Ge,
                    _ => Rel::Gt,
                };
                let ts = self.int_terms(args)?;
                Expr::Formula(Formula::and(
                    ts.windows(2).map(|w| Formula::atom(rel, w[0].clone(), w[1].clone())),
                ))
            }
            "div" | "mod" | "abs" | "/" | "to_real" | "to_int" | "is_int" | "divisible" => {
                return Err(Error::UnsupportedFeature(format!("operator `{op}`")));
            }
            "forall" | "exists" => {
                return Err(Error::UnsupportedFeature("quantifiers".into()));
            }
            f => match self.kinds.get(f) {
                Some(SymbolKind::Function) => {
                    if args.len() != 1 {
                        return Err(Error::UnsupportedFeature(format!(
                            "application of `{f}` to {} arguments",
                            args.len()
                        )));
                    }
                    Expr::Term(Term::app(f, self.int_term(&args[0])?))
                }
                Some(_) => return Err(at.syntax_error(format!("`{f}` is not a function"))),
                None => return Err(Error::UnsupportedFeature(format!("operator `{f}`"))),
            },
        };
        Ok(t)
    }

    fn int_terms(&mut self, args: &[SExpr]) -> Result<Vec<Term>> {
        args.iter().map(|a| self.int_term(a)).collect()
    }

    fn equality(&mut self, eq: bool, es: Vec<Expr>, args: &[SExpr], at: &SExpr) -> Result<Expr> {
        if es.iter().all(|e| matches!(e, Expr::Formula(_))) {
            let fs: Vec<Formula> = es
                .into_iter()
                .map(|e| match e {
                    Expr::Formula(f) => f,
                    Expr::Term(_) => unreachable!(),
                })
                .collect();
            let mut pairs = Vec::new();
            if eq {
                for w in fs.windows(2) {
                    pairs.push(Formula::Iff(Box::new(w[0].clone()), Box::new(w[1].clone())));
                }
            } else {
                for (i, a) in fs.iter().enumerate() {
                    for b in &fs[i + 1..] {
                        pairs.push(Formula::Xor(Box::new(a.clone()), Box::new(b.clone())));
                    }
                }
            }
            return Ok(Expr::Formula(Formula::and(pairs)));
        }
        let mut ts = Vec::with_capacity(es.len());
        for (e, a) in es.into_iter().zip(args) {
            ts.push(self.term_of(e, a)?);
        }
        let sort = ts[0].sort();
        if ts.iter().any(|t| t.sort() != sort) {
            return Err(at.syntax_error("operands differ in sort"));
        }
        Ok(Expr::Formula(if eq {
            Formula::and(ts.windows(2).map(|w| Formula::eq(w[0].clone(), w[1].clone())))
        } else if ts.len() == 2 {
            Formula::ne(ts[0].clone(), ts[1].clone())
        } else {
            Formula::Distinct(ts)
        }))
    }

    fn let_binding(&mut self, args: &[SExpr], at: &SExpr) -> Result<Expr> {
        let [bindings, body] = args else {
            return Err(at.syntax_error("let expects bindings and a body"));
        };
        let bindings = bindings
            .list()
            .ok_or_else(|| bindings.syntax_error("expected a binding list"))?;
        // parallel let: evaluate all right-hand sides in the outer scope
        let mut scope = HashMap::new();
        for b in bindings {
            let Some([n, v]) = b.list() else {
                return Err(b.syntax_error("malformed binding"));
            };
            let name = n.symbol().ok_or_else(|| n.syntax_error("expected a symbol"))?;
            scope.insert(name.to_string(), self.expr(v)?);
        }
        self.scopes.push(scope);
        let out = self.expr(body);
        self.scopes.pop();
        out
    }
}

/// Declarations indexed by name.
pub fn declaration_map(decls: &[Declaration]) -> BTreeMap<String, SymbolKind> {
    decls.iter().map(|d| (d.name.clone(), d.kind)).collect()
}
