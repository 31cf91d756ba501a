//! Reading and writing the supported SMT-LIB v2 subset.

mod parse;
mod print;
pub mod sexp;

pub use parse::{
    declaration_map, parse_formula, parse_problem, Declaration, ParsedProblem, SymbolKind, SUPPORTED_LOGICS,
};
pub use print::{print_declaration, print_formula, print_int, print_problem, print_term, quote_symbol};
