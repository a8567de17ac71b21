use thiserror::Error;

/// Errors raised by field evaluation, integration and sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {what} at component {component}")]
    NonFinite { what: &'static str, component: String },

    #[error("metric is degenerate at x = {point:?} (|det g| = {det:e})")]
    Degenerate { point: [f64; 4], det: f64 },

    #[error("metric is not symmetric: g[{i}][{j}] = {a} but g[{j}][{i}] = {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error(
        "metric signature at x = {point:?} is ({positive} positive, {negative} negative), \
         expected (+,-,-,-)"
    )]
    Signature {
        point: [f64; 4],
        positive: usize,
        negative: usize,
    },

    #[error("integration diverged after t = {last_good_t}")]
    Divergence { last_good_t: f64 },

    #[error("velocity is not in the kernel of F (residual {residual:e})")]
    AbnormalityViolation { residual: f64 },

    #[error("sample {index} is not timelike (pseudonorm {pseudonorm:e})")]
    Causality { index: usize, pseudonorm: f64 },

    #[error("invalid particle parameters: {0}")]
    InvalidParticle(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sampling spec: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
