use thiserror::Error;

use crate::geometry::GeometryError;
use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spline space and domain are built on different background grids")]
    GridMismatch,
    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
