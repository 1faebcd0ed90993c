//! Modeling toolkit for overnight sleep-study data: epoch-scored sleep stages
//! jointly with apnea/hypopnea events.
//!
//! The pipeline runs end to end:
//!
//! 1. [`sim`] generates synthetic patient-nights under configurable scenarios
//!    (or [`data`] parses real epoch/event CSV files).
//! 2. [`data`] reduces each night to the sufficient statistics of the model:
//!    event-conditional stage-transition counts and per-stage event
//!    counts/exposures.
//! 3. [`posterior`] evaluates the joint log-posterior and its analytic
//!    gradient for the hierarchical model: mixed-effects multinomial logit
//!    stage transitions, per-stage Poisson event processes, and a latent
//!    factor model for the 10-dimensional patient random effects.
//! 4. [`hmc`] draws posterior samples with a No-U-Turn sampler (dual-averaging
//!    step size, diagonal mass-matrix adaptation) and computes ESS / split
//!    R-hat diagnostics.
//! 5. [`cluster`] produces K-means clusterings of patient random effects that
//!    minimize posterior-expected loss, with per-patient assignment
//!    probabilities.
//! 6. [`analysis`] covers posterior predictive checks, factor alignment,
//!    scree pre-fits, weighted cluster summaries, PCA projections, and OLS
//!    regressions for downstream comparisons.
//! 7. [`eval`] bundles the replicated simulation studies used to validate
//!    calibration and clustering accuracy.

pub mod analysis;
pub mod cluster;
pub mod data;
pub mod eval;
pub mod hmc;
pub mod posterior;
pub mod rng;
pub mod sim;
pub mod stage;

pub use data::{EventStats, SleepRecord, SufficientStats, TransitionStats};
pub use posterior::{FixedEffects, PriorSpec};
pub use stage::{SleepStage, Stage};
