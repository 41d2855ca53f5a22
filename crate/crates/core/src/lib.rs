//! Solver for mixed-integer convex quadratic programs with indicator
//! variables:
//!
//! ```text
//!     min  y'Qy + g'y + h'x
//!     s.t. Ay <= b,   Cy <= Dx,
//!          y_i (1 - x_i) = 0,
//!          sum_i x_i <= k,   x binary
//! ```
//!
//! with `Q` positive definite. The binary `x_i` switches component `y_i`
//! on or off; the complementarity rows make the problem nonconvex in the
//! continuous relaxation, so the solver works on the marginal function
//!
//! ```text
//!     fbar(x) = inf_y { y'Qy + g'y + h'x : Ay <= b, Cy <= Dx, y_i = 0 if x_i = 0 }
//! ```
//!
//! obtained from the perspective reformulation of a splitting
//! `Q = diag(delta) + R` with `delta > 0` and `R` positive semidefinite.
//! Subgradient cuts of `fbar` are linear in `x`, so the problem reduces to
//! the semi-infinite linear master
//!
//! ```text
//!     min eta  s.t.  eta >= t'x + c  for every cut (t, c),  x in conv(X)
//! ```
//!
//! solved by outer approximation: a branch-and-bound on the master adds a
//! cut at every binary point it visits until the master value catches up
//! with the marginal value.
//!
//! Module map:
//!
//! * [`linalg`] - dense symmetric factorizations and low-rank solves
//! * [`decompose`] - splitting `Q = diag(delta) + R` and factors of `R`
//! * [`simplex`] - bounded-variable revised simplex (LP engine)
//! * [`qp`] - primal active-set solver for convex inequality-constrained QPs
//! * [`cuts`] - marginal values and the three cut generators
//! * [`master`] - the master MILP: LP relaxations plus branch-and-bound
//! * [`oa`] - the outer-approximation driver (single-tree and multi-tree)
//! * [`instances`] - problem type, text file format, portfolio generator
//! * [`oracle`] - brute-force enumeration, cut audits, finite differences
//! * [`verify`] - the self-check suite shared by tests and the CLI

pub mod cuts;
pub mod decompose;
pub mod instances;
pub mod linalg;
pub mod master;
pub mod oa;
pub mod oracle;
pub mod qp;
pub mod simplex;
pub mod tol;
pub mod verify;

pub use instances::MiqpInstance;
pub use oa::{OaConfig, OaResult, SolveStatus};
pub use tol::Tolerances;
