//! Boundary-layer approximations for singularly perturbed second-order ODEs
//!
//! ```text
//! eps*y'' + k*y = f(u(t), y),    y(a) = y(gamma) = y(b),    a < gamma < b, k < 0
//! ```
//!
//! The crate builds the closed-form approximation `y~ = eta + zeta + zeta^ + C*eps`
//! from the reduced solution `eta` and two exponential layer functions, checks
//! it against an independent finite-difference solver on a layer-adapted mesh,
//! and carries the related tooling: feasibility conditions for the quadratic
//! nonlinearity, open-loop input synthesis for semilinear plants, and the
//! turning-point analysis of the autonomous problem `eps*y'' + f~(y)/2 = 0`.

pub mod approx;
pub mod control;
pub mod error;
pub mod expr;
pub mod layers;
pub mod numeric;
pub mod output;
pub mod problem;
pub mod quadratic;
pub mod solver;
pub mod turning;

pub use error::{Error, Result};
