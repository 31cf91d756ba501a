//! Sorted AST for quantifier-free integer formulas with multiplication,
//! arrays (`Int -> Int`) and unary uninterpreted functions.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    /// `Int -> Int`; used for array variables and store chains.
    Array,
}

/// Comparison relation of an atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Rel {
    /// The relation `r'` with `!(a r b) <=> a r' b`.
    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
        }
    }

    pub fn holds<T: Ord>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Gt => lhs > rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ne => lhs != rhs,
        }
    }

    pub fn smt_name(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "=",
            Rel::Ne => "distinct",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    IntConst(BigInt),
    IntVar(String),
    Add(Vec<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Vec<Term>),
    /// `select(array, index)`.
    Select(Box<Term>, Box<Term>),
    /// Application of a unary uninterpreted function.
    FunApp(String, Box<Term>),
    ArrayVar(String),
    /// `store(array, index, value)`.
    Store(Box<Term>, Box<Term>, Box<Term>),
    /// Term-level if-then-else; removed by [`crate::transform::preprocess`].
    Ite(Box<Formula>, Box<Term>, Box<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Const(bool),
    /// Propositional variable (0-ary boolean symbol).
    BoolVar(String),
    Atom(Rel, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    // The variants below are surface syntax removed by preprocessing.
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Xor(Box<Formula>, Box<Formula>),
    Ite(Box<Formula>, Box<Formula>, Box<Formula>),
    Distinct(Vec<Term>),
}

impl Term {
    pub fn int(v: impl Into<BigInt>) -> Term {
        Term::IntConst(v.into())
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::IntVar(name.into())
    }

    pub fn array(name: impl Into<String>) -> Term {
        Term::ArrayVar(name.into())
    }

    pub fn select(array: Term, index: Term) -> Term {
        Term::Select(Box::new(array), Box::new(index))
    }

    pub fn store(array: Term, index: Term, value: Term) -> Term {
        Term::Store(Box::new(array), Box::new(index), Box::new(value))
    }

    pub fn app(name: impl Into<String>, arg: Term) -> Term {
        Term::FunApp(name.into(), Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(lhs: Term, rhs: Term) -> Term {
        Term::Sub(Box::new(lhs), Box::new(rhs))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::ArrayVar(_) | Term::Store(..) => Sort::Array,
            Term::Ite(_, t, _) => t.sort(),
            _ => Sort::Int,
        }
    }

    /// Leaves admissible as interval keys: int variables, selects and
    /// function applications.
    pub fn is_leaf(&self) -> bool {
        matches!(self, Term::IntVar(_) | Term::Select(..) | Term::FunApp(..))
    }

    /// Direct sub-terms (formula children of `Ite` are not included).
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::IntConst(_) | Term::IntVar(_) | Term::ArrayVar(_) => vec![],
            Term::Add(xs) | Term::Mul(xs) => xs.iter().collect(),
            Term::Sub(a, b) | Term::Select(a, b) => vec![a, b],
            Term::FunApp(_, a) => vec![a],
            Term::Store(a, i, v) => vec![a, i, v],
            Term::Ite(_, a, b) => vec![a, b],
        }
    }

    /// Calls `f` on every sub-term in pre-order, including `self`.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        if let Term::Ite(c, _, _) = self {
            c.visit_terms(f);
        }
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Bottom-up rewrite: children first, then `f` on the rebuilt node.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let rebuilt = match self {
            Term::IntConst(_) | Term::IntVar(_) | Term::ArrayVar(_) => self.clone(),
            Term::Add(xs) => Term::Add(xs.iter().map(|x| x.map_bottom_up(f)).collect()),
            Term::Mul(xs) => Term::Mul(xs.iter().map(|x| x.map_bottom_up(f)).collect()),
            Term::Sub(a, b) => Term::sub(a.map_bottom_up(f), b.map_bottom_up(f)),
            Term::Select(a, i) => Term::select(a.map_bottom_up(f), i.map_bottom_up(f)),
            Term::FunApp(n, a) => Term::app(n.clone(), a.map_bottom_up(f)),
            Term::Store(a, i, v) => Term::store(a.map_bottom_up(f), i.map_bottom_up(f), v.map_bottom_up(f)),
            Term::Ite(c, a, b) => Term::Ite(
                Box::new(c.map_terms(f)),
                Box::new(a.map_bottom_up(f)),
                Box::new(b.map_bottom_up(f)),
            ),
        };
        f(rebuilt)
    }

    /// Replaces every occurrence of `from` with `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::IntConst(_) | Term::IntVar(_) | Term::ArrayVar(_) => self.clone(),
            Term::Add(xs) => Term::Add(xs.iter().map(|x| x.replace(from, to)).collect()),
            Term::Mul(xs) => Term::Mul(xs.iter().map(|x| x.replace(from, to)).collect()),
            Term::Sub(a, b) => Term::sub(a.replace(from, to), b.replace(from, to)),
            Term::Select(a, i) => Term::select(a.replace(from, to), i.replace(from, to)),
            Term::FunApp(n, a) => Term::app(n.clone(), a.replace(from, to)),
            Term::Store(a, i, v) => Term::store(a.replace(from, to), i.replace(from, to), v.replace(from, to)),
            Term::Ite(c, a, b) => Term::Ite(
                Box::new(c.replace_term(from, to)),
                Box::new(a.replace(from, to)),
                Box::new(b.replace(from, to)),
            ),
        }
    }

    pub fn contains(&self, needle: &Term) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= t == needle);
        found
    }

    /// Number of selects / function applications nested inside this term,
    /// counting the term itself.
    pub fn select_depth(&self) -> usize {
        let own = usize::from(matches!(self, Term::Select(..) | Term::FunApp(..)));
        own + self.children().iter().map(|c| c.select_depth()).max().unwrap_or(0)
    }
}

impl Formula {
    pub fn tt() -> Formula {
        Formula::Const(true)
    }

    pub fn ff() -> Formula {
        Formula::Const(false)
    }

    pub fn atom(rel: Rel, lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(rel, lhs, rhs)
    }

    pub fn le(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Rel::Le, lhs, rhs)
    }

    pub fn lt(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Rel::Lt, lhs, rhs)
    }

    pub fn ge(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Rel::Ge, lhs, rhs)
    }

    pub fn gt(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Rel::Gt, lhs, rhs)
    }

    pub fn eq(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Rel::Eq, lhs, rhs)
    }

    pub fn ne(lhs: Term, rhs: Term) -> Formula {
        Formula::Atom(Rel::Ne, lhs, rhs)
    }

    pub fn bool_var(name: impl Into<String>) -> Formula {
        Formula::BoolVar(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// Conjunction with nested conjunctions flattened; a single conjunct is
    /// returned as is.
    pub fn and(args: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for a in args {
            match a {
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::And(out)
        }
    }

    /// Disjunction, flattened like [`Formula::and`].
    pub fn or(args: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for a in args {
            match a {
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::Or(out)
        }
    }

    /// Atoms, boolean variables and their negations.
    pub fn is_literal(&self) -> bool {
        match self {
            Formula::Atom(..) | Formula::BoolVar(_) => true,
            Formula::Not(inner) => matches!(**inner, Formula::Atom(..) | Formula::BoolVar(_)),
            _ => false,
        }
    }

    /// Number of atom / boolean-variable occurrences.
    pub fn literal_count(&self) -> usize {
        match self {
            Formula::Const(_) => 0,
            Formula::BoolVar(_) | Formula::Atom(..) => 1,
            Formula::Distinct(ts) => ts.len() * ts.len().saturating_sub(1) / 2,
            Formula::Not(f) => f.literal_count(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::literal_count).sum(),
            Formula::Implies(a, b) | Formula::Iff(a, b) | Formula::Xor(a, b) => a.literal_count() + b.literal_count(),
            Formula::Ite(c, a, b) => c.literal_count() + a.literal_count() + b.literal_count(),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Const(_) | Formula::BoolVar(_) | Formula::Atom(..) | Formula::Distinct(_) => {
                vec![]
            }
            Formula::Not(f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) | Formula::Iff(a, b) | Formula::Xor(a, b) => vec![a, b],
            Formula::Ite(c, a, b) => vec![c, a, b],
        }
    }

    /// Calls `f` on every term occurring in the formula (all sub-terms,
    /// pre-order).
    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Formula::Atom(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Formula::Distinct(ts) => ts.iter().for_each(|t| t.visit(f)),
            _ => {
                for c in self.children() {
                    c.visit_terms(f);
                }
            }
        }
    }

    /// Applies [`Term::map_bottom_up`] to every top-level term.
    pub fn map_terms(&self, f: &mut impl FnMut(Term) -> Term) -> Formula {
        self.map(&mut |t: &Term| t.map_bottom_up(f))
    }

    pub fn replace_term(&self, from: &Term, to: &Term) -> Formula {
        self.map(&mut |t: &Term| t.replace(from, to))
    }

    fn map(&self, g: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::Const(_) | Formula::BoolVar(_) => self.clone(),
            Formula::Atom(r, l, rr) => Formula::Atom(*r, g(l), g(rr)),
            Formula::Distinct(ts) => Formula::Distinct(ts.iter().map(&mut *g).collect()),
            Formula::Not(x) => Formula::not(x.map(g)),
            Formula::And(fs) => Formula::And(fs.iter().map(|x| x.map(g)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|x| x.map(g)).collect()),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.map(g)), Box::new(b.map(g))),
            Formula::Iff(a, b) => Formula::Iff(Box::new(a.map(g)), Box::new(b.map(g))),
            Formula::Xor(a, b) => Formula::Xor(Box::new(a.map(g)), Box::new(b.map(g))),
            Formula::Ite(c, a, b) => Formula::Ite(Box::new(c.map(g)), Box::new(a.map(g)), Box::new(b.map(g))),
        }
    }

    /// Free symbols of the formula, split by kind.
    pub fn symbols(&self) -> Symbols {
        let mut s = Symbols::default();
        self.collect_symbols(&mut s);
        s
    }

    fn collect_symbols(&self, s: &mut Symbols) {
        if let Formula::BoolVar(b) = self {
            s.bools.insert(b.clone());
        }
        for c in self.children() {
            c.collect_symbols(s);
        }
        let mut on_term = |t: &Term| match t {
            Term::IntVar(v) => {
                s.ints.insert(v.clone());
            }
            Term::ArrayVar(a) => {
                s.arrays.insert(a.clone());
            }
            Term::FunApp(f, _) => {
                s.funcs.insert(f.clone());
            }
            Term::Ite(c, _, _) => {
                // bool variables in term-level conditions
                c.collect_bool_vars(&mut s.bools);
            }
            _ => {}
        };
        match self {
            Formula::Atom(_, l, r) => {
                l.visit(&mut on_term);
                r.visit(&mut on_term);
            }
            Formula::Distinct(ts) => ts.iter().for_each(|t| t.visit(&mut on_term)),
            _ => {}
        }
    }

    fn collect_bool_vars(&self, out: &mut BTreeSet<String>) {
        if let Formula::BoolVar(b) = self {
            out.insert(b.clone());
        }
        for c in self.children() {
            c.collect_bool_vars(out);
        }
    }
}

/// Free symbols of a formula grouped by kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub ints: BTreeSet<String>,
    pub bools: BTreeSet<String>,
    pub arrays: BTreeSet<String>,
    pub funcs: BTreeSet<String>,
}

impl Symbols {
    pub fn has_arrays_or_functions(&self) -> bool {
        !self.arrays.is_empty() || !self.funcs.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ints.contains(name) || self.bools.contains(name) || self.arrays.contains(name) || self.funcs.contains(name)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::smtlib::print_term(self))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::smtlib::print_formula(self))
    }
}
