//! Truncated multivariate Taylor jets over expression trees.

mod expr;
mod index;
mod jet;
mod sexpr;

pub use expr::{jet_from_expr, jet_from_expr_real, Expr, Node, POLE_EPS, RADIAL_EPS};
pub use index::{binomial, factorial, index_map, multi_factorial, IndexMap};
pub use jet::{derivative_at, jet_arith, ArithOp, Jet};
pub use sexpr::{parse_expr, parse_expr_list};
