//! Tensor-valued random processes: Einstein-product algebra, generic
//! chaining functionals, tail and moment bounds for suprema, and Monte Carlo
//! harnesses that check those bounds empirically.
//!
//! - [`tensor`]: dense complex tensors, Einstein product, spectral norms.
//! - [`chaining`]: finite metric spaces, admissible sequences, gamma
//!   functionals, covering numbers and the entropy integral.
//! - [`process`]: seeded generators for tensor processes and empirical
//!   supremum statistics.
//! - [`bounds`]: closed-form tail/moment bounds and constant fitting.
//! - [`sensing`]: sparse tensors, random selectors, restricted isometry
//!   constants of subsampled unitary tensors.
//! - [`empirical`]: empirical tensor processes and their two metrics.

pub mod bounds;
pub mod chaining;
pub mod empirical;
pub mod error;
pub mod process;
pub mod report;
pub mod rng;
pub mod sensing;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, GaugeNorm, Shape};
