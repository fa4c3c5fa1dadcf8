use std::fmt;

/// One violated invariant in a scenario description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Itemized list of configuration problems, one per violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigIssues(pub Vec<ConfigIssue>);

impl ConfigIssues {
    pub fn iter(&self) -> impl Iterator<Item = &ConfigIssue> {
        self.0.iter()
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.0.iter().any(|i| i.field == field)
    }
}

impl fmt::Display for ConfigIssues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, issue) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(ConfigIssues),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("closed form is defined for {expected} users, scenario has {actual}; use the general engine")]
    WrongEngine { expected: usize, actual: usize },

    #[error(
        "closed form for user {user} requires a_i > phi_i * sum(a_q, q < i) ({power} <= {bound}); use the general engine"
    )]
    ConditionViolated { user: usize, power: f64, bound: f64 },

    #[error(
        "integration did not reach tolerance {requested:e} (achieved error estimate {achieved:e})"
    )]
    Accuracy { requested: f64, achieved: f64 },

    #[error("degenerate outage curve: {0}")]
    DegenerateCurve(String),

    #[error("at {var} = {value} dB: {source}")]
    AtGridPoint {
        var: &'static str,
        value: f64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
