use std::path::PathBuf;

/// Crate-wide error type.
///
/// Input problems (bad config, unreadable or malformed files) map to CLI exit
/// code 2; failures that arise while running (infeasible placement, degenerate
/// inputs, broken invariants) map to 3. The mapping lives in `exit_code` so
/// library callers can match on variants directly.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error{}: {source}", path_suffix(.path))]
    Json {
        path: Option<PathBuf>,
        #[source]
        source: serde_json::Error,
    },

    #[error("score map format error at line {line}, column {column}: {message}")]
    MapParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("out of bounds: {0}")]
    Bounds(String),

    #[error("cells {from} and {to} are not adjacent under {connectivity}-connectivity")]
    Adjacency {
        from: usize,
        to: usize,
        connectivity: u8,
    },

    #[error("budget exhausted: {steps_used} of {budget} steps already used")]
    Budget { steps_used: usize, budget: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("episode {id}: {source}")]
    Episode {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

fn path_suffix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" in {}", p.display()),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: Some(path.into()),
            source,
        }
    }

    /// Attach an episode identifier to an error bubbling out of a suite run.
    pub fn in_episode(self, id: impl Into<String>) -> Self {
        Error::Episode {
            id: id.into(),
            source: Box::new(self),
        }
    }

    /// CLI exit code: 2 for invalid inputs, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } | Error::Json { .. } | Error::MapParse { .. } => 2,
            Error::Bounds(_)
            | Error::Adjacency { .. }
            | Error::Budget { .. }
            | Error::Degenerate(_)
            | Error::Numerical(_)
            | Error::Infeasible(_) => 3,
            Error::Episode { source, .. } => source.exit_code(),
        }
    }
}
