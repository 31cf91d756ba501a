//! Sampling many distinct models of quantifier-free integer SMT formulas by
//! under-approximating the formula around solver-provided seed models.

pub mod arrays;
pub mod coverage;
pub mod error;
pub mod formula;
pub mod implicant;
pub mod interval;
pub mod model;
pub mod sampler;
pub mod smtlib;
pub mod solver;
pub mod strengthen;
pub mod transform;

pub use arrays::{pmga_amia, AicApproximation};
pub use error::{Error, Result};
pub use formula::{Formula, Rel, Sort, Term};
pub use implicant::{compute_implicant, ProductTerm};
pub use interval::{Interval, IntervalMap};
pub use model::{FuncValue, Model, Sample};
pub use strengthen::pmga_mia;
pub use transform::{preprocess, to_nnf};
