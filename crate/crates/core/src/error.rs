use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("duplicate signal id `{0}`")]
    DuplicateSignal(String),

    #[error("unknown signal id `{0}`")]
    UnknownSignal(String),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("signal `{id}` exceeds frame payload ({length_bits} > {payload_bits} bits)")]
    SignalExceedsPayload {
        id: String,
        length_bits: u32,
        payload_bits: u32,
    },

    #[error("signal `{id}` is invalid: {reason}")]
    InvalidSignal { id: String, reason: String },

    #[error("signal `{id}` has period {period_us} us, which is not cycle_us * 2^n within the hyperperiod")]
    PeriodOffGrid { id: String, period_us: u64 },

    #[error("signal `{0}` is not used by any variant")]
    SignalWithoutVariant(String),

    #[error("signal `{id}` has an empty transmission window (release cycle {release_cycle}, deadline cycle {deadline_cycle})")]
    EmptyWindow {
        id: String,
        release_cycle: i64,
        deadline_cycle: i64,
    },

    #[error("unknown ordering strategy `{0}` (expected ff, ffp, ffw, ffl or ffc)")]
    UnknownStrategy(String),

    #[error("unknown benchmark profile `{0}`")]
    UnknownProfile(String),

    #[error("contradictory benchmark profile `{profile}`: {reason}")]
    ContradictoryProfile { profile: String, reason: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
