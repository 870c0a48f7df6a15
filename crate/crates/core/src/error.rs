use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unsupported OBJ content, positioned at a 1-based line.
    #[error("{message} at line {line}")]
    ObjParse { line: usize, message: String },

    #[error("empty mesh")]
    EmptyMesh,

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid interval [{lo}, {hi}]")]
    Range { lo: f64, hi: f64 },

    #[error("invalid scene: {}", .0.join("; "))]
    InvalidScene(Vec<String>),

    #[error("config error: {0}")]
    Config(String),

    /// Frame buffers and scene disagree (e.g. an ID in a buffer that the scene does not define).
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to encode {channel}: {message}")]
    Encode { channel: String, message: String },

    #[error("failed to decode {what}: {message}")]
    Decode { what: String, message: String },

    #[error("frame {frame_id} failed: {source}")]
    Frame {
        frame_id: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn decode(what: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Decode {
            what: what.into(),
            message: message.into(),
        }
    }
}
