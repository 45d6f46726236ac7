//! Variable selection for high-dimensional linear and logistic regression.
//!
//! Covariate pairs are screened with extreme-value thresholds for the
//! maximal pairwise sample correlation among independent covariates, then a
//! mixed ℓ1/ℓ2 penalty is fitted by coordinate descent: paired covariates
//! get a ridge penalty, the remaining SIS survivors a lasso penalty, and
//! everything else is held at zero.
//!
//! Module map:
//! - [`stats`]: correlations, ranks, standardization, pairwise R².
//! - [`laws`]: limiting laws and screening thresholds.
//! - [`screening`]: SIS subset, pair set and paired set.
//! - [`solver`]: coordinate descent for Gaussian and logistic models.
//! - [`tuning`]: validation-set and k-fold selection of (λ₁, λ₂).
//! - [`simulate`]: seeded scenario generators, metrics, replication engine
//!   and the Monte Carlo law validator.
//! - [`io`] and [`cli`]: CSV/JSON interchange and the command-line front end.

pub mod cli;
pub mod error;
pub mod io;
pub mod laws;
pub mod screening;
pub mod simulate;
pub mod solver;
pub mod stats;
pub mod tuning;

pub use error::{Error, Result};
pub use laws::{LawThresholds, NormalizingConstants};
pub use screening::{CorrelationMethod, ScreenConfig, ScreenSets};
pub use solver::{Family, FitModel, PenaltySpec, SolverOptions};
pub use stats::{DataMatrix, StandardizedDesign};
