use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({0}, {1}) lies outside the reference element")]
    Domain(f64, f64),

    #[error("insufficient volume quadrature: {0}")]
    InsufficientQuadrature(String),

    #[error("inverted element {element}: J = {jacobian:e} at a quadrature point")]
    InvertedElement { element: usize, jacobian: f64 },

    #[error("nonphysical state{}: {detail}", element.map(|e| format!(" in element {e}")).unwrap_or_default())]
    NonPhysical { element: Option<usize>, detail: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn nonphysical(detail: impl Into<String>) -> Self {
        Error::NonPhysical { element: None, detail: detail.into() }
    }

    /// Attach an element index to a physicality error.
    pub fn in_element(self, k: usize) -> Self {
        match self {
            Error::NonPhysical { element: None, detail } => {
                Error::NonPhysical { element: Some(k), detail }
            }
            other => other,
        }
    }
}
