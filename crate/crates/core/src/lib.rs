//! Classical contextual probability systems that emulate entangled states:
//! tables P(x|u), gauge distributions over ignition states, classical
//! collapse, and entropy-based entanglement measures.

pub mod catalog;
pub mod collapse;
pub mod gauge;
pub mod io;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod system;

pub use scalar::{Rational, Scalar, EPS_NUM};
pub use system::{ModelError, ProbabilitySystem};
