//! Finite-domain constraint solving over integers with two rule languages
//! on top of a propagation engine:
//!
//! * [`matcher`] picks the propagator for a constraint by committed-choice
//!   pattern rules, so that e.g. `abs(X-Y) #= C` gets one specialised
//!   propagator instead of a decomposition;
//! * [`reify`] decomposes expressions inside reified constraints while
//!   tracking whether they are defined, so that `(X/0 #= Y/0) #<==> B`
//!   gives `B = 0` without touching `X` and `Y`.

pub mod arith;
pub mod cli;
pub mod domain;
pub mod engine;
pub mod expr;
pub mod matcher;
pub mod model;
pub mod propagators;
pub mod reify;
pub mod solver;
pub mod template;

pub use domain::{Bound, Domain, Size};
pub use engine::{EngineError, Failure, PropId, Store, Term, VarId};
pub use expr::{eval_ground, eval_rel, BinOp, BoolTerm, Expr, GroundResult, ReifConstraint, Rel};
pub use model::{parse_model, ParseError, Statement};
pub use propagators::Propagator;
pub use solver::{SolveError, Solver};
