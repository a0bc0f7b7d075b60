//! Closest separable states and Hilbert-Schmidt entanglement of small
//! multi-qubit density matrices.
//!
//! The crate simulates a variational separability verifier: product-state
//! overlaps measured through destructive-SWAP-test semantics (exactly or
//! with shot noise) feed a bilevel optimizer whose inner level solves a
//! convex simplex program over mixing probabilities and whose outer level
//! searches the product-state angles. Closed-form references for GHZ
//! states and maximally-entangled mixed X-states, plus a quantum Gilbert
//! algorithm baseline, provide independent ground truth.
//!
//! Qubit 0 is the most significant bit of every basis-state index.

pub mod ensemble;
pub mod error;
pub mod qga;
pub mod qstate;
pub mod random;
pub mod reference;
pub mod trace;
pub mod vsv;

pub use error::{Error, Result};
pub use qstate::{DensityMatrix, ProductStateParams, PureState};
