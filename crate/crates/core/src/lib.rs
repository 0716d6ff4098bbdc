//! Continuation solvers for the Dirichlet problems
//! `det(D^2 u) + sigma * Laplace(u) = f` on the unit ball with `u = 0` on the
//! sphere, `sigma` in `{+1, 0, -1}`, plus pointwise validators for the
//! concavity and ellipticity computations behind their a priori estimates.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ballgrid;
pub mod continuation;
pub mod diffops;
pub mod error;
pub mod linsolve;
pub mod pointalg;
pub mod smallmat;
pub mod verify;

pub use ballgrid::{build_ball_grid, Grid};
pub use diffops::{MonitorReport, Operator, ScalarField};
pub use error::{Error, Result};
