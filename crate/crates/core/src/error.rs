use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Succinct(#[from] succinct::Error),
    #[error("i/o error on {path}: {source}")]
    IoAt {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("no working seed after {0} attempts")]
    SeedFailure(usize),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("build error: {0}")]
    Build(String),
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("degenerate statistics at order {n}, k = {k}: {reason}")]
    DegenerateStatistics { n: usize, k: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::IoAt { path, source }
    }
}
