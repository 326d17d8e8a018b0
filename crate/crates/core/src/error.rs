use std::path::PathBuf;

use thiserror::Error;

use crate::kg::{EntityId, RelationId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing dataset file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("unknown entity id {0}")]
    UnknownEntity(u32),

    #[error("unknown relation id {0}")]
    UnknownRelation(u32),

    #[error("relation label `{0}` starts with the reserved inverse prefix")]
    ReservedLabel(String),

    #[error("empty label")]
    EmptyLabel,

    #[error("no entity besides the query entity has relation {0:?}")]
    EmptyContext(RelationId),

    #[error("entity {0:?} has no outgoing {1:?} edges")]
    NoAnswers(EntityId, RelationId),

    #[error("path length {0} is outside the supported range 1..={max}", max = crate::paths::MAX_PATH_LEN)]
    PathLength(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("entity {0:?} is already a leaf of the cluster tree")]
    DuplicateLeaf(EntityId),

    #[error("entity {0:?} is not a leaf of the cluster tree")]
    UnknownLeaf(EntityId),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (files, labels, configs).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io { .. }
                | Error::MissingFile(_)
                | Error::ReservedLabel(_)
                | Error::EmptyLabel
                | Error::PathLength(_)
                | Error::InvalidConfig(_)
                | Error::Snapshot(_)
                | Error::Json(_)
        )
    }
}
