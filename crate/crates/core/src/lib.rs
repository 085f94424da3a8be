//! Symbolic engine for the Cartan equivalence problem of rigid and general
//! real hypersurfaces in C^2 with nondegenerate Levi form.

pub mod error;
pub mod eval;
pub mod expr;
pub mod forms;
pub mod invariants;
pub mod jet;
pub mod modp;
pub mod parser;
pub mod poly;
pub mod render;
pub mod report;
pub mod sample;
pub mod scalar;
pub mod suites;
pub mod var;
pub mod zero;

pub use error::{Error, Result};
pub use eval::{eval_complex, eval_exact, Assignment, Program};
pub use expr::{arith, ArithOp, Expr, ExprKind};
pub use jet::{apply_field, lie_bracket, make_frame, specialize_phi, Frame, JetContext, VectorField};
pub use parser::{parse_expression, parse_phi};
pub use poly::{expand_canonical, Canonical};
pub use render::{render, render_canonical, Format};
pub use scalar::GaussianRational;
pub use var::{BaseVar, GroupVar, JetVar, VarId};
pub use zero::{is_identically_zero, Witness, ZeroMode, ZeroTester, ZeroVerdict};
