//! Linear time-varying SISO systems: controller canonical form, memoryless
//! output-feedback nullification with explicit step bounds, and zero-order
//! hold sampling of continuous-time analytic systems.
//!
//! The crate works in one of two scalar modes. Rational mode keeps every
//! computation exact, which is what the nullification pipeline wants: its
//! central test is whether a symbolic expression vanishes identically.
//! Float mode carries an explicit relative tolerance and is the natural
//! setting for the sampling side, where trajectories come out of an ODE
//! integrator anyway.
//!
//! All values are immutable after construction and every operation is a
//! pure function, so everything here is safe to use from multiple threads.

pub mod affine;
pub mod analysis;
pub mod comb;
pub mod ct;
pub mod canonical;
pub mod checks;
pub mod error;
pub mod expr;
pub mod gen;
pub mod io;
pub mod matrix;
pub mod nullify;
pub mod ode;
pub mod scalar;
pub mod system;

pub use error::{Error, ErrorClass, Result};
pub use scalar::{Scalar, ScalarMode, Tol};
