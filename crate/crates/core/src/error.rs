use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Invariant { field: String, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("no empty cell left on the {width}x{height} grid")]
    GridFull { width: usize, height: usize },

    #[error("world already finished at tick {tick} (max_ticks = {max_ticks})")]
    Finished { tick: u32, max_ticks: u32 },

    #[error("migration index undefined: previous enrollment 0, current {curr}")]
    UndefinedIndex { curr: usize },

    #[error("{0} requires a non-empty input")]
    EmptyInput(&'static str),

    #[error("segregation of an empty school is undefined")]
    EmptySchool,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("containment edges do not form a tree rooted at ABM: {0}")]
    NotATree(String),

    #[error("unknown measure `{0}` (expected betweenness or degree)")]
    UnknownMeasure(String),

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error("figure {figure} needs column `{column}`")]
    MissingColumn { figure: String, column: String },

    #[error("run {run_id} repetition {repetition}: {source}")]
    Run {
        run_id: usize,
        repetition: usize,
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invariant(field: &str, message: impl Into<String>) -> Self {
        Error::Invariant {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
