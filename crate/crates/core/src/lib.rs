//! Simulator for pre- and post-selected interferometers.
//!
//! Weak values of arm projectors are computed both from the two-state
//! vector and from an exact finite-strength pointer model, and the set of
//! arms with nonzero weak value is checked for continuity between source
//! and detector.
//!
//! ```
//! use weaktrace::{scendsl::builtin_scenario, weakmeas::arm_weak_value};
//!
//! let fig1 = builtin_scenario("fig1").unwrap();
//! let b = arm_weak_value(&fig1, "B", 2).unwrap();
//! assert!((b.value.re - 0.5).abs() < 1e-12);
//! ```

pub mod error;
pub mod evolution;
pub mod exec;
pub mod optics;
pub mod qstate;
pub mod scendsl;
pub mod trace;
pub mod weakmeas;

pub use error::{Error, Result};
pub use evolution::{Node, Scenario, Slot, Stage};
pub use exec::Execution;
pub use qstate::{Basis, Operator, Pol, StateVector};
