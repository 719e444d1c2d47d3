use thiserror::Error;

use crate::numkernel::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("group certification failed: defect {defect:e} exceeds threshold {threshold:e}")]
    Certification { defect: f64, threshold: f64 },
    #[error("point lies outside the classical domain (slack {slack:e})")]
    OutsideDomain { slack: f64 },
    #[error("fixed-point iteration stalled after {iterations} iterations (last change {change:e})")]
    FixedPointStalled { iterations: usize, change: f64 },
    #[error("Lyapunov frame collapsed at step {step}")]
    FrameCollapse { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
