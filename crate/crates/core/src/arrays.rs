//! Interval under-approximation of product terms over arrays and unary
//! uninterpreted functions.
//!
//! The pipeline rewrites array (dis)equalities, removes `select` over
//! `store`, freezes the aliasing configuration of the seed model, replaces
//! every select / function application by a fresh integer variable, runs
//! the integer strengthening, and maps the fresh variables back.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::formula::{Formula, Rel, Sort, Term};
use crate::implicant::ProductTerm;
use crate::interval::IntervalMap;
use crate::model::{eval_array, Model};
use crate::strengthen::{literal_parts, pmga_mia};

/// Prefix of every symbol introduced by this module.
pub const FRESH_PREFIX: &str = "ms!";
const GROUND_PREFIX: &str = "ms!g";

/// Generator of symbol names that avoid a set of used names.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    used: BTreeSet<String>,
    counter: usize,
}

impl FreshNames {
    pub fn avoiding(used: impl IntoIterator<Item = String>) -> Self {
        FreshNames {
            used: used.into_iter().collect(),
            counter: 0,
        }
    }

    pub fn fresh(&mut self, stem: &str) -> String {
        loop {
            let name = format!("{FRESH_PREFIX}{stem}{}", self.counter);
            self.counter += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn fresh_for(p: &[Formula], m: &Model) -> FreshNames {
    let mut used: Vec<String> = m
        .ints
        .keys()
        .chain(m.bools.keys())
        .chain(m.funcs.keys())
        .cloned()
        .collect();
    for lit in p {
        let s = lit.symbols();
        used.extend(s.ints.into_iter().chain(s.bools).chain(s.arrays).chain(s.funcs));
    }
    FreshNames::avoiding(used)
}

/// Definition of an original array in terms of a fresh one,
/// `array = store(...store(base, i1, u1)..., in, un)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayDefinition {
    pub array: String,
    pub value: Term,
}

/// Result of [`rewrite_array_equality`].
#[derive(Clone, Debug)]
pub struct ArrayRewrite {
    pub product: ProductTerm,
    /// The input model extended with the fresh symbols.
    pub model: Model,
    pub definitions: Vec<ArrayDefinition>,
}

fn array_literal(lit: &Formula) -> Option<(Rel, &Term, &Term)> {
    literal_parts(lit).filter(|(_, l, _)| l.sort() == Sort::Array)
}

/// Splits a store chain into its base variable and `(index, value)` pairs,
/// innermost store first.
fn store_chain(t: &Term) -> Result<(String, Vec<(Term, Term)>)> {
    let mut stores = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::ArrayVar(a) => {
                stores.reverse();
                return Ok((a.clone(), stores));
            }
            Term::Store(s, i, v) => {
                stores.push(((**i).clone(), (**v).clone()));
                cur = s;
            }
            other => {
                return Err(Error::UnsupportedFeature(format!("array term `{other}`")));
            }
        }
    }
}

fn build_chain(base: Term, stores: impl IntoIterator<Item = (Term, Term)>) -> Term {
    stores.into_iter().fold(base, |acc, (i, v)| Term::store(acc, i, v))
}

/// Literals fixing the seed's aliasing among the store indices of one chain,
/// plus `select(c, i) = v` for the last store at each distinct index value.
fn chain_constraints(c: &Term, stores: &[(Term, Term)], m: &Model, out: &mut Vec<Formula>) -> Result<()> {
    let values = stores.iter().map(|(i, _)| m.eval_int(i)).collect::<Result<Vec<_>>>()?;
    for a in 0..stores.len() {
        for b in a + 1..stores.len() {
            let (ia, ib) = (&stores[a].0, &stores[b].0);
            if ia == ib {
                continue;
            }
            out.push(if values[a] == values[b] {
                Formula::eq(ia.clone(), ib.clone())
            } else {
                Formula::ne(ia.clone(), ib.clone())
            });
        }
    }
    for (k, (i, v)) in stores.iter().enumerate() {
        let overwritten = values[k + 1..].contains(&values[k]);
        if !overwritten {
            out.push(Formula::eq(Term::select(c.clone(), i.clone()), v.clone()));
        }
    }
    Ok(())
}

/// Removes array equalities and disequalities.
///
/// `s1 = s2` over distinct base arrays `a1`, `a2` introduces a fresh array
/// `c` with `a1 = store(c, i_k, u_k)...` and `a2 = store(c, j_k, v_k)...`
/// (fresh scalars `u_k`, `v_k`), substitutes these definitions everywhere
/// and constrains `c` at the store indices. Over the same base it compares
/// both sides at every store index. `s1 != s2` becomes
/// `select(s1, w) != select(s2, w)` for a constant witness index `w` read
/// off the model.
pub fn rewrite_array_equality(p: &ProductTerm, m: &Model) -> Result<ArrayRewrite> {
    let mut fresh = fresh_for(&p.literals, m);
    rewrite_array_equality_with(p, m, &mut fresh)
}

fn rewrite_array_equality_with(p: &ProductTerm, m: &Model, fresh: &mut FreshNames) -> Result<ArrayRewrite> {
    let mut lits = p.literals.clone();
    let mut model = m.clone();
    let mut defs: Vec<ArrayDefinition> = Vec::new();
    while let Some(pos) = lits
        .iter()
        .position(|l| matches!(array_literal(l), Some((Rel::Eq, _, _))))
    {
        let lit = lits.remove(pos);
        let (_, lhs, rhs) = array_literal(&lit).unwrap();
        let (lhs, rhs) = (lhs.clone(), rhs.clone());
        let (base1, stores1) = store_chain(&lhs)?;
        let (base2, stores2) = store_chain(&rhs)?;
        let mut new_lits = Vec::new();
        if base1 == base2 {
            let mut indices: Vec<&Term> = Vec::new();
            for (i, _) in stores1.iter().chain(&stores2) {
                if !indices.contains(&i) {
                    indices.push(i);
                }
            }
            for i in indices {
                new_lits.push(Formula::eq(
                    Term::select(lhs.clone(), i.clone()),
                    Term::select(rhs.clone(), i.clone()),
                ));
            }
        } else {
            let (a1, a2) = (Term::array(&base1), Term::array(&base2));
            // an index reading a1 or a2 would make their definitions circular;
            // stored values may read them and are substituted like the rest
            let self_referential = stores1
                .iter()
                .chain(&stores2)
                .any(|(i, _)| i.contains(&a1) || i.contains(&a2));
            if self_referential {
                return Err(Error::UnsupportedFeature(format!(
                    "array equality whose store indices read its own arrays: `{lit}`"
                )));
            }
            let c_name = fresh.fresh("c");
            let c = Term::array(&c_name);
            model.funcs.insert(c_name, eval_array(&lhs, &model)?);
            let mut overwrite = |base: &Term, stores: &[(Term, Term)], model: &mut Model| -> Result<Term> {
                let mut pairs = Vec::with_capacity(stores.len());
                for (i, _) in stores {
                    let u = fresh.fresh("u");
                    let old = model.eval_int(&Term::select(base.clone(), i.clone()))?;
                    model.ints.insert(u.clone(), old);
                    pairs.push((i.clone(), Term::var(u)));
                }
                Ok(build_chain(c.clone(), pairs))
            };
            let sub1 = overwrite(&a1, &stores1, &mut model)?;
            let sub2 = overwrite(&a2, &stores2, &mut model)?;
            chain_constraints(&c, &stores1, &model, &mut new_lits)?;
            chain_constraints(&c, &stores2, &model, &mut new_lits)?;
            for l in lits.iter_mut().chain(new_lits.iter_mut()) {
                *l = l.replace_term(&a1, &sub1).replace_term(&a2, &sub2);
            }
            for d in defs.iter_mut() {
                d.value = d.value.replace(&a1, &sub1).replace(&a2, &sub2);
            }
            defs.push(ArrayDefinition {
                array: base1,
                value: sub1,
            });
            defs.push(ArrayDefinition {
                array: base2,
                value: sub2,
            });
        }
        lits.extend(new_lits);
    }
    let mut out = ProductTerm::default();
    for lit in lits {
        match array_literal(&lit) {
            Some((Rel::Ne, lhs, rhs)) => {
                let (fa, fb) = (eval_array(lhs, &model)?, eval_array(rhs, &model)?);
                let w = fa
                    .witness(&fb)
                    .ok_or_else(|| Error::NoWitness(lhs.to_string(), rhs.to_string()))?;
                out.push(Formula::ne(
                    Term::select(lhs.clone(), Term::IntConst(w.clone())),
                    Term::select(rhs.clone(), Term::IntConst(w)),
                ));
            }
            Some((rel, ..)) => {
                return Err(Error::Sort(format!("relation {} on arrays", rel.smt_name())));
            }
            None => out.push(lit),
        }
    }
    Ok(ArrayRewrite {
        product: out,
        model,
        definitions: defs,
    })
}

fn find_select_store(lit: &Formula) -> Option<Term> {
    let mut found = None;
    lit.visit_terms(&mut |t| {
        if found.is_none() {
            if let Term::Select(a, _) = t {
                if matches!(**a, Term::Store(..)) {
                    found = Some(t.clone());
                }
            }
        }
    });
    found
}

/// Removes every `select(store(s, i, e), j)` by following the branch the
/// model takes: `{i = j, l[e]}` when `m[i] = m[j]`, otherwise
/// `{i != j, l[select(s, j)]}`.
pub fn eliminate_select_store(p: &ProductTerm, m: &Model) -> Result<ProductTerm> {
    let mut work: Vec<Formula> = p.literals.iter().rev().cloned().collect();
    let mut out = ProductTerm::default();
    while let Some(lit) = work.pop() {
        let Some(t) = find_select_store(&lit) else {
            out.push(lit);
            continue;
        };
        let Term::Select(arr, j) = &t else { unreachable!() };
        let Term::Store(s, i, e) = &**arr else { unreachable!() };
        let same = m.eval_int(i)? == m.eval_int(j)?;
        let (index_lit, replacement) = if same {
            (Formula::eq((**i).clone(), (**j).clone()), (**e).clone())
        } else {
            (
                Formula::ne((**i).clone(), (**j).clone()),
                Term::select((**s).clone(), (**j).clone()),
            )
        };
        work.push(lit.replace_term(&t, &replacement));
        if i != j {
            work.push(index_lit);
        }
    }
    Ok(out)
}

/// Index (dis)equalities that freeze which accesses to the same array or
/// function alias under the seed model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AliasingLiterals {
    /// `(i, j, select(a, i), select(a, j))` with `m[i] = m[j]`.
    pub equalities: Vec<(Term, Term, Term, Term)>,
    /// `(i, j)` with `m[i] != m[j]`.
    pub disequalities: Vec<(Term, Term)>,
}

impl AliasingLiterals {
    pub fn to_literals(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        for (i, j, si, sj) in &self.equalities {
            out.push(Formula::eq(i.clone(), j.clone()));
            out.push(Formula::eq(si.clone(), sj.clone()));
        }
        for (i, j) in &self.disequalities {
            out.push(Formula::ne(i.clone(), j.clone()));
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.equalities.is_empty() && self.disequalities.is_empty()
    }
}

/// Symbol and index of a select on an array variable or a function
/// application.
pub(crate) fn access(t: &Term) -> Option<(&str, &Term)> {
    match t {
        Term::Select(a, i) => match &**a {
            Term::ArrayVar(name) => Some((name, i)),
            _ => None,
        },
        Term::FunApp(f, i) => Some((f, i)),
        _ => None,
    }
}

fn accesses(lits: &[Formula]) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for lit in lits {
        lit.visit_terms(&mut |t| {
            if access(t).is_some() && !out.contains(t) {
                out.push(t.clone());
            }
        });
    }
    out
}

/// Builds the aliasing literals for every pair of accesses to the same
/// symbol in `p`.
pub fn build_aliasing(p: &ProductTerm, m: &Model) -> Result<AliasingLiterals> {
    let mut groups: BTreeMap<&str, Vec<(&Term, &Term, BigInt)>> = BTreeMap::new();
    let all = accesses(&p.literals);
    for t in &all {
        let (sym, idx) = access(t).unwrap();
        groups.entry(sym).or_default().push((t, idx, m.eval_int(idx)?));
    }
    let mut out = AliasingLiterals::default();
    for members in groups.values() {
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let (ta, ia, va) = &members[a];
                let (tb, ib, vb) = &members[b];
                if ia == ib {
                    continue;
                }
                if va == vb {
                    out.equalities
                        .push(((*ia).clone(), (*ib).clone(), (*ta).clone(), (*tb).clone()));
                } else {
                    out.disequalities.push(((*ia).clone(), (*ib).clone()));
                }
            }
        }
    }
    Ok(out)
}

/// Bijection between accesses and the fresh int variables replacing them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundingTable {
    by_term: BTreeMap<Term, String>,
    by_var: BTreeMap<String, Term>,
}

impl GroundingTable {
    pub fn var_of(&self, t: &Term) -> Option<&str> {
        self.by_term.get(t).map(String::as_str)
    }

    pub fn term_of(&self, v: &str) -> Option<&Term> {
        self.by_var.get(v)
    }

    pub fn len(&self) -> usize {
        self.by_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_var.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.by_var.iter()
    }

    fn intern(&mut self, t: &Term, fresh: &mut FreshNames) -> String {
        if let Some(v) = self.by_term.get(t) {
            return v.clone();
        }
        let v = fresh.fresh(&GROUND_PREFIX[FRESH_PREFIX.len()..]);
        self.by_term.insert(t.clone(), v.clone());
        self.by_var.insert(v.clone(), t.clone());
        v
    }
}

/// Grounded product term, grounded model and the grounding table.
#[derive(Clone, Debug)]
pub struct Grounding {
    pub product: ProductTerm,
    pub model: Model,
    pub table: GroundingTable,
}

/// Replaces every access (select on an array variable, function
/// application) by a fresh int variable `v_t` and extends the model with
/// `v_t = m[t]`. All accesses, including those nested in indices, are
/// interned; the outermost one is what appears in the grounded literal.
pub fn ground(p: &ProductTerm, m: &Model) -> Result<Grounding> {
    let mut fresh = fresh_for(&p.literals, m);
    ground_with(p, m, &mut fresh)
}

fn ground_with(p: &ProductTerm, m: &Model, fresh: &mut FreshNames) -> Result<Grounding> {
    let mut table = GroundingTable::default();
    let mut ordered = accesses(&p.literals);
    // inner accesses first
    ordered.sort_by_key(Term::select_depth);
    let mut model = Model {
        ints: m.ints.clone(),
        bools: m.bools.clone(),
        funcs: BTreeMap::new(),
    };
    for t in &ordered {
        let v = table.intern(t, fresh);
        model.ints.insert(v, m.eval_int(t)?);
    }
    let mut product = ProductTerm::default();
    for lit in &p.literals {
        product.push(ground_formula(lit, &table)?);
    }
    Ok(Grounding { product, model, table })
}

fn ground_term(t: &Term, table: &GroundingTable) -> Result<Term> {
    if let Some(v) = table.var_of(t) {
        return Ok(Term::var(v));
    }
    Ok(match t {
        Term::IntConst(_) | Term::IntVar(_) => t.clone(),
        Term::Add(xs) => Term::Add(xs.iter().map(|x| ground_term(x, table)).collect::<Result<_>>()?),
        Term::Mul(xs) => Term::Mul(xs.iter().map(|x| ground_term(x, table)).collect::<Result<_>>()?),
        Term::Sub(a, b) => Term::sub(ground_term(a, table)?, ground_term(b, table)?),
        other => {
            return Err(Error::UnsupportedFeature(format!("cannot ground `{other}`")));
        }
    })
}

fn ground_formula(f: &Formula, table: &GroundingTable) -> Result<Formula> {
    Ok(match f {
        Formula::Atom(r, l, rr) => Formula::Atom(*r, ground_term(l, table)?, ground_term(rr, table)?),
        Formula::Not(x) => Formula::not(ground_formula(x, table)?),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| ground_formula(x, table)).collect::<Result<_>>()?),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| ground_formula(x, table)).collect::<Result<_>>()?),
        Formula::Const(_) | Formula::BoolVar(_) => f.clone(),
        other => return Err(Error::UnsupportedFeature(format!("cannot ground `{other}`"))),
    })
}

/// Grounds an arbitrary formula in the core grammar with an existing table
/// (used to check grounding fidelity).
pub fn ground_formula_with(f: &Formula, table: &GroundingTable) -> Result<Formula> {
    ground_formula(f, table)
}

/// Maps grounded variables back to the accesses they stand for.
pub fn unground(iv: &IntervalMap, table: &GroundingTable) -> Result<IntervalMap> {
    let mut out = IntervalMap::new();
    for (k, interval) in iv.iter() {
        let key = match k {
            Term::IntVar(v) => match table.term_of(v) {
                Some(t) => t.clone(),
                None if v.starts_with(GROUND_PREFIX) => {
                    return Err(Error::UnknownGroundVar(v.clone()));
                }
                None => k.clone(),
            },
            other => return Err(Error::UnknownGroundVar(other.to_string())),
        };
        out.refine(key, interval)?;
    }
    Ok(out)
}

/// Interval under-approximation of a product term with arrays and
/// functions, together with what sampling needs to rebuild full models.
#[derive(Clone, Debug)]
pub struct AicApproximation {
    pub intervals: IntervalMap,
    pub aliasing: AliasingLiterals,
    pub definitions: Vec<ArrayDefinition>,
    /// The seed extended with the fresh symbols of the array rewrite.
    pub model: Model,
}

/// Full pipeline: array (dis)equality rewrite, select-store elimination,
/// aliasing literals, grounding, integer strengthening, un-grounding.
pub fn pmga_amia(p: &ProductTerm, m: &Model) -> Result<AicApproximation> {
    let mut fresh = fresh_for(&p.literals, m);
    let rw = rewrite_array_equality_with(p, m, &mut fresh)?;
    let mut flat = eliminate_select_store(&rw.product, &rw.model)?;
    let aliasing = build_aliasing(&flat, &rw.model)?;
    for lit in aliasing.to_literals() {
        flat.push(lit);
    }
    let g = ground_with(&flat, &rw.model, &mut fresh)?;
    let grounded = pmga_mia(&g.product, &g.model)?;
    let intervals = unground(&grounded, &g.table)?;
    Ok(AicApproximation {
        intervals,
        aliasing,
        definitions: rw.definitions,
        model: rw.model,
    })
}
