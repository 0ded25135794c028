//! Evolvable programs: genome encoding, stochastic stack execution,
//! symbolic expression trees, rendering and simplification.

pub mod exec;
pub mod expr;
pub mod genome;
pub mod ops;
pub mod simplify;

pub use exec::{evaluate, execute_modal, execute_once, EVAL_RUNS, INVALID_FITNESS, STACK_PREFILL_REPEATS};
pub use expr::{render_listing, to_expression, Expr};
pub use genome::{cast_gene, gene_floor, modal_token, sample_token, Genome, Token};
pub use ops::{Op, OPERATOR_COUNT};
pub use simplify::{expr_interval, simplify, uniform_domain, Interval};
