//! Mean-field scaled two- and three-layer networks trained by one-sample SGD,
//! particle discretizations of their infinite-width limit ODE systems, and the
//! diagnostics used to compare the two.
//!
//! The crate is organized bottom-up:
//!
//! * [`activation`]: bounded smooth nonlinearities and their derivatives.
//! * [`data`]: compactly supported synthetic regression tasks.
//! * [`finite_net`]: finite-width networks, learning-rate schedules, SGD.
//! * [`limit_ode`]: particle pools and explicit integration of the limit systems.
//! * [`analysis`]: error functionals, rate fits, Lyapunov and stationarity checks,
//!   ablations, moment diagnostics.
//!
//! Data-parallel loops go through [`exec::Exec`]. With the `parallel` feature
//! (on by default) they run on rayon; without it every loop is sequential.
//! Both paths reduce in the same fixed order, so results are bit-identical
//! regardless of the thread count.

pub mod activation;
pub mod analysis;
pub mod data;
pub mod error;
pub mod exec;
pub mod finite_net;
pub mod limit_ode;
pub mod reduce;
pub mod rng;

pub use activation::{Activation, ActivationKind};
pub use data::{Dataset, DomainBox, TeacherKind, TeacherSpec};
pub use error::{Error, Result};
pub use exec::Exec;
