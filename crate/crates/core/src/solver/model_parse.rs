//! Reading `(get-model)` output into default + exceptions form.

use std::collections::HashMap;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::model::{FuncValue, Model};
use crate::smtlib::sexp::{read_all, Atom, SExpr};
use crate::smtlib::{Declaration, SymbolKind};

struct Define<'a> {
    params: Vec<&'a str>,
    body: &'a SExpr,
}

fn err(fragment: &SExpr, what: &str) -> Error {
    Error::ModelParse(format!("{what}: {}", show(fragment)))
}

fn show(e: &SExpr) -> String {
    match e {
        SExpr::Atom(Atom::Numeral(n), _) => n.to_string(),
        SExpr::Atom(Atom::Symbol(s), _) | SExpr::Atom(Atom::Other(s), _) => s.clone(),
        SExpr::Atom(Atom::Keyword(k), _) => format!(":{k}"),
        SExpr::Atom(Atom::Str(s), _) => format!("{s:?}"),
        SExpr::List(xs, _) => format!("({})", xs.iter().map(show).collect::<Vec<_>>().join(" ")),
    }
}

/// Parses a solver model. Symbols the solver leaves out are absent from the
/// result; callers complete them.
pub fn parse_model(text: &str, decls: &[Declaration]) -> Result<Model> {
    let exprs = read_all(text)?;
    let mut items: &[SExpr] = match exprs.as_slice() {
        [SExpr::List(xs, _)] => xs,
        [] => &[],
        _ => return Err(Error::ModelParse("expected a single parenthesised model".into())),
    };
    // older solvers print `(model (define-fun ...) ...)`
    if items.first().is_some_and(|e| e.is_symbol("model")) {
        items = &items[1..];
    }
    let mut defs: HashMap<&str, Define> = HashMap::new();
    for item in items {
        let xs = item.list().ok_or_else(|| err(item, "expected define-fun"))?;
        match xs {
            [head, name, params, _sort, body] if head.is_symbol("define-fun") => {
                let name = name.symbol().ok_or_else(|| err(item, "bad define-fun name"))?;
                let params = param_names(params).ok_or_else(|| err(item, "bad parameter list"))?;
                defs.insert(name, Define { params, body });
            }
            [head, ..] if head.is_symbol("declare-fun") || head.is_symbol("forall") => {}
            _ => return Err(err(item, "unexpected model entry")),
        }
    }
    let reader = Reader { defs: &defs };
    let mut m = Model::new();
    for d in decls {
        let Some(def) = defs.get(d.name.as_str()) else { continue };
        match d.kind {
            SymbolKind::Int => {
                m.ints.insert(d.name.clone(), reader.int(def.body, &HashMap::new())?);
            }
            SymbolKind::Bool => {
                m.bools.insert(d.name.clone(), reader.boolean(def.body)?);
            }
            SymbolKind::Array => {
                m.funcs.insert(d.name.clone(), reader.array(def.body, 0)?);
            }
            SymbolKind::Function => {
                m.funcs.insert(d.name.clone(), reader.function(def, def.body)?);
            }
        }
    }
    Ok(m)
}

fn param_names(e: &SExpr) -> Option<Vec<&str>> {
    e.list()?
        .iter()
        .map(|p| match p.list()? {
            [name, _sort] => name.symbol(),
            _ => None,
        })
        .collect()
}

struct Reader<'a> {
    defs: &'a HashMap<&'a str, Define<'a>>,
}

const MAX_INDIRECTION: usize = 64;

impl Reader<'_> {
    fn int(&self, e: &SExpr, env: &HashMap<&str, BigInt>) -> Result<BigInt> {
        match e {
            SExpr::Atom(Atom::Numeral(n), _) => Ok(n.clone()),
            SExpr::Atom(Atom::Symbol(s), _) => env.get(s.as_str()).cloned().ok_or_else(|| err(e, "free symbol")),
            SExpr::List(xs, _) => match xs.as_slice() {
                [minus, x] if minus.is_symbol("-") => Ok(-self.int(x, env)?),
                _ => Err(err(e, "unsupported integer value")),
            },
            _ => Err(err(e, "unsupported integer value")),
        }
    }

    fn boolean(&self, e: &SExpr) -> Result<bool> {
        match e.symbol() {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            _ => Err(err(e, "unsupported boolean value")),
        }
    }

    fn array(&self, e: &SExpr, depth: usize) -> Result<FuncValue> {
        if depth > MAX_INDIRECTION {
            return Err(err(e, "array value too deeply indirected"));
        }
        let xs = e.list().ok_or_else(|| err(e, "unsupported array value"))?;
        match xs {
            // ((as const (Array Int Int)) v)
            [head, v]
                if head
                    .list()
                    .is_some_and(|h| h.first().is_some_and(|s| s.is_symbol("as"))) =>
            {
                Ok(FuncValue::constant(self.int(v, &HashMap::new())?))
            }
            [head, a, i, v] if head.is_symbol("store") => {
                let mut f = self.array(a, depth + 1)?;
                let env = HashMap::new();
                f.set(self.int(i, &env)?, self.int(v, &env)?);
                Ok(f)
            }
            // (_ as-array k!0)
            [u, as_array, name] if u.is_symbol("_") && as_array.is_symbol("as-array") => {
                let def = name
                    .symbol()
                    .and_then(|n| self.defs.get(n))
                    .ok_or_else(|| err(e, "as-array of unknown function"))?;
                self.function(def, def.body)
            }
            [lambda, params, body] if lambda.is_symbol("lambda") => {
                let params = param_names(params).ok_or_else(|| err(e, "bad lambda parameters"))?;
                self.function(&Define { params, body }, body)
            }
            _ => Err(err(e, "unsupported array value")),
        }
    }

    /// Reads a unary function body as an `ite` chain over point tests of
    /// its parameter.
    fn function(&self, def: &Define, body: &SExpr) -> Result<FuncValue> {
        let [param] = def.params.as_slice() else {
            return Err(err(body, "function value of arity other than one"));
        };
        let mut points = Vec::new();
        let mut cur = body;
        loop {
            match cur.list() {
                Some([ite, cond, then, rest]) if ite.is_symbol("ite") => {
                    let key = self.point_test(cond, param)?;
                    points.push((key, self.int(then, &HashMap::new())?));
                    cur = rest;
                }
                _ => break,
            }
        }
        let default = self.int(cur, &HashMap::new())?;
        let mut f = FuncValue::constant(default);
        // earlier tests win, so apply them last
        for (k, v) in points.into_iter().rev() {
            f.set(k, v);
        }
        Ok(f)
    }

    fn point_test(&self, cond: &SExpr, param: &str) -> Result<BigInt> {
        if let Some([eq, a, b]) = cond.list() {
            if eq.is_symbol("=") {
                let env = HashMap::new();
                if a.is_symbol(param) {
                    return self.int(b, &env);
                }
                if b.is_symbol(param) {
                    return self.int(a, &env);
                }
            }
        }
        Err(err(cond, "unsupported function case"))
    }
}
