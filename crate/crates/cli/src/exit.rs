//! Exit-code map: 0 ok, 1 verify failure, 2 configuration, 3 i/o, 4 query.

use std::fmt;

use sstruss_core::Error as CoreError;

pub const VERIFY_FAILED: u8 = 1;
pub const CONFIG: u8 = 2;
pub const IO: u8 = 3;
pub const QUERY: u8 = 4;

/// An error tagged with the exit code it should produce.
#[derive(Debug)]
pub struct Coded {
    pub code: u8,
    pub source: anyhow::Error,
}

impl Coded {
    pub fn io(source: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(Coded { code: IO, source })
    }

    pub fn query(source: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(Coded { code: QUERY, source })
    }
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for Coded {}

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::InvalidConfig(_) | CoreError::InvalidArgument(_) | CoreError::EmptyNetwork => CONFIG,
        CoreError::Load(_) | CoreError::Decode(_) | CoreError::Io { .. } => IO,
        CoreError::UnknownVertex(_)
        | CoreError::UnknownUser(_)
        | CoreError::TopicLength { .. }
        | CoreError::InvalidTopics(_)
        | CoreError::InvalidQuery(_)
        | CoreError::BatchQuery { .. }
        | CoreError::PoolTooLarge { .. } => QUERY,
    }
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.code;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return core_code(e);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return IO;
        }
    }
    CONFIG
}
