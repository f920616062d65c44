//! Exact maximum-likelihood estimation for multivariate linear exponential
//! Hawkes processes.
//!
//! The excitation state of every node obeys an affine recurrence whose
//! transition matrices have the structure `[[s·I, v], [0, 1]]`. Products of
//! such matrices stay in the same family and cost `O(M)`, so all per-event
//! intensities and all parameter gradients can be computed with a
//! work-efficient prefix scan ([`scan`]). The crate is `no_std` (it needs
//! `alloc`); parallelism is injected through the [`Executor`] trait.
//!
//! Modules:
//! - [`model`]: event sequences, parameters, validation, branching matrix.
//! - [`scan`]: the compressed combine operator and the prefix scans.
//! - [`likelihood`]: states, intensities, compensator, log-likelihood.
//! - [`gradients`]: gradient states, closed-form gradients, FD verifier.
//! - [`trainer`]: batched/unbatched epochs, Adam with projection, `fit`.
//! - [`simulator`]: Ogata thinning and synthetic parameter generators.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod exec;
pub mod gradients;
pub mod likelihood;
mod math;
pub mod model;
mod pass;
pub mod scan;
pub mod simulator;
pub mod trainer;

pub use exec::{Executor, Serial};
pub use gradients::{Evaluation, GradientError, GradientSet, ParamCoord};
pub use likelihood::{Backend, LikelihoodError};
pub use model::{EventSequence, HawkesParams, ModelError, RegConfig, SequenceError};
pub use pass::StateMeter;
pub use scan::{ElementSeq, PrefixSeq, ScanElement, ScanError};
pub use simulator::{SimConfig, SimError};
pub use trainer::{Clock, FitReport, Positivity, TrainConfig, TrainError};
