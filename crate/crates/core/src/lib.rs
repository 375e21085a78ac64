//! Probabilistic imperative programs whose `nif`/`nwhile` guards are probit
//! decisions, Gaussian Bayesian network learning for their parameters, and a
//! seeded rover parking simulator that closes the loop.

pub mod check;
pub mod error;
pub mod gauss;
pub mod gbn;
pub mod lang;
pub mod neural;
pub mod sim;

pub use nalgebra;
pub use error::{GaussError, GbnError, ParseError, Pos, RuntimeError, SimError};
pub use gauss::{GaussianParams, Interval, Kernel, Mgd, RngStream};
pub use gbn::{Gbn, GbnNode, LearningState, Trace};
pub use lang::{parse, Env, Stmt, Store};
pub use neural::{CmpOp, GuardResult};
pub use sim::{ParkingReport, Pose, World, WorldConfig};
