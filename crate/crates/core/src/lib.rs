//! Numerical toolkit for the cubic (third-order) term of directed
//! divergences.
//!
//! - [`divergence`]: classical exponential families with exact KL divergences,
//!   natural charts and the score third-moment (Amari–Chentsov) oracle.
//! - [`quantum`]: rays, density matrices, the Veronese embedding of qubits into
//!   the spin-1 symmetric subspace, quantum divergences and Bargmann phases.
//! - [`extraction`]: finite-difference extraction of the metric and cubic
//!   expansion coefficients, and the antisymmetry probe.
//! - [`gap`]: the collective/sequential fidelity gap table in exact rationals
//!   and a single-copy Monte-Carlo check.
//! - [`roundtrip`]: triangle log-return simulation, work surcharge, demon
//!   path sums and the spread estimator.
//!
//! Data-parallel loops run through [`exec`]; build without the default
//! `parallel` feature for a purely sequential library.

pub mod divergence;
pub mod error;
pub mod exec;
pub mod extraction;
pub mod gap;
pub mod quadrature;
pub mod quantum;
pub mod roundtrip;
pub mod tensor;

pub use divergence::{CoordinatePoint, Direction, Divergence, Family, FamilyKind};
pub use error::{GeoError, Result};
pub use exec::{Estimate, Execution};
pub use tensor::{CubicTensor, Method, MetricTensor};
