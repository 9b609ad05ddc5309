//! Photon creation from vacuum in a cavity with a periodically modulated
//! frequency, coupled to a harmonic-oscillator detector.
//!
//! The evolution matrix `Λ` of the quadratures `(p₁, p₂, x₁, x₂)` is obtained
//! both by direct integration ([`symplectic`]) and from the multiple-scales
//! solution ([`multiscale`]). [`observables`] and [`photonstats`] turn it, or
//! the closed-form slow-time expressions, into photon statistics.

// `!(x >= y)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod figures;
pub mod fmt;
pub mod model;
pub mod multiscale;
pub mod observables;
pub mod photonstats;
pub mod pipeline;
pub mod sweep;
pub mod verify;
pub mod symplectic;

pub use error::{Error, Result};
pub use model::{DerivedParams, FrequencyConvention, Mode, ModelParams, ParamSpec};
pub use observables::{CovarianceMatrix, ModeObservables};
pub use photonstats::PhotonDistribution;
pub use pipeline::Pipeline;
pub use symplectic::{EvolutionMatrix, IntegratorConfig, Trajectory};
