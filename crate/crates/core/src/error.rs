use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: best estimate {estimate} with error bound {error_bound}")]
    Accuracy { estimate: f64, error_bound: f64 },

    /// The bisection target is not bracketed by the endpoint values.
    #[error("target {target} not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("unknown model tag `{0}`")]
    UnknownModel(String),

    #[error("missing model parameter `{field}` for model `{model}`")]
    MissingParam { model: &'static str, field: &'static str },

    /// A failure inside one Monte Carlo replicate.
    #[error("replicate {index} of model `{model}` failed: {source}")]
    Replicate {
        index: u64,
        model: String,
        #[source]
        source: Box<Error>,
    },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
