//! Exit-code classification of command failures.

use std::fmt;

use fairsched::Error;

pub const USAGE: u8 = 2;
pub const DATA: u8 = 3;
pub const NUMERIC: u8 = 4;

/// Marks an error as a usage problem (bad flags or config).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl UsageError {
    pub fn wrap(e: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(UsageError(format!("{e:#}")))
    }
}

/// Marks an error as bad input data regardless of its underlying kind.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

impl DataError {
    pub fn wrap(e: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(DataError(format!("{e:#}")))
    }
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if cause.is::<DataError>() {
            return DATA;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => USAGE,
                Error::Numeric(_) | Error::UndefinedMetric(_) => NUMERIC,
                _ => DATA,
            };
        }
    }
    DATA
}
