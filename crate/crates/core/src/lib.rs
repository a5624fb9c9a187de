//! Exact sparse ridge regression with safe screening cut generation.
//!
//! The crate solves
//!
//! ```text
//! min (1/n)‖Y − Xβ‖² + γ‖β‖²   s.t.  ‖β‖₀ ≤ k
//! ```
//!
//! Pipeline: [`relaxation`] solves the perspective relaxation and extracts
//! dual weights, [`scg`] certifies screening tuples, [`cutgen`] enumerates
//! minimal inclusive/exclusive cuts, and [`bnb`] solves the cardinality
//! problem exactly while consuming cuts or fixings. [`oracle`] is a
//! brute-force reference for small instances.

pub mod bench;
pub mod bnb;
pub mod cutgen;
pub mod data;
pub mod error;
pub mod index;
pub mod model;
pub mod oracle;
pub mod order;
pub mod pipeline;
pub mod relaxation;
pub mod scg;

pub use error::{Result, ScgError};
pub use index::IndexSet;
pub use model::{objective, restricted_ridge, top_k_indices, Dataset, ProblemInstance};
pub use relaxation::{solve_relaxation, BoundsContext, RelaxOptions, RelaxationSolution};
