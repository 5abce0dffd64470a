//! Scenario files: the expression grammar, the JSON envelope and the
//! command runner.

mod diagnostic;
mod envelope;
pub mod expr;
pub mod parser;
mod report;
mod run;
pub mod typing;

pub use diagnostic::Diagnostic;
pub use envelope::{
    Envelope, Expect, ExpectSection, FlattenSection, GroupSection, HolonomyEntry, Number, RandomSection, Scales,
    Scenario, RANDOM_FIELDS,
};
pub use expr::{BinOp, Expr, ExprKind, Pos};
pub use parser::parse_expr;
pub use typing::{Env, Value};
pub use report::{anchor, NormalizationInfo, Quadrature, Record, Report, ANCHORS};
pub use run::{run, run_normalize, Command, RunOptions};
