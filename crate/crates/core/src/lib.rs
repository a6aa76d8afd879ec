//! Tensor-train neighborhood preserving embedding.
//!
//! Dense tensors are stored with the first mode varying fastest, so left and
//! right unfoldings and reshapes never copy element order.

pub mod classify;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod stiefel;
pub mod tensor;
pub mod tt;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, ModeList, Shape};
pub use tt::{TtChain, TtCore, TtSvdConfig};
pub use graph::{AffinityConfig, Epsilon};
pub use solver::{fit, fit_prepared, prepare, Prepared, SolverConfig, SolverReport, Variant};
