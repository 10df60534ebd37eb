//! One-step-ahead forecasting.

mod baseline;
mod differencer;
mod snarimax;

use thiserror::Error;

pub use baseline::{RetrainPolicy, WindowedArBaseline};
pub use differencer::Differencer;
pub use snarimax::SnarimaxModel;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ForecastError {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("weight update produced non-finite values and was skipped")]
    NonFiniteUpdate,
    #[error("differencing history is not full yet")]
    NotWarm,
    #[error("window holds {have} usable values, fit needs at least {need}")]
    InsufficientWindow { have: usize, need: usize },
    #[error("invalid baseline setup: {0}")]
    InvalidBaseline(&'static str),
}
