use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("split index {split} out of range 0..={layers}")]
    SplitOutOfRange { split: usize, layers: usize },

    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfBounds {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("no feasible subchannel assignment: AP {ap} serves {users} users but only {slots} slots exist")]
    Infeasible { ap: usize, users: usize, slots: usize },

    #[error("non-finite utility {0} at the start point")]
    NonFiniteUtility(f64),

    #[error("enumeration of {count} candidates exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("unknown profile {0:?}")]
    UnknownProfile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
