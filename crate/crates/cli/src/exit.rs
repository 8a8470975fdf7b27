//! Exit codes: 0 success, 1 usage error, 2 missing artifact, 3 numeric failure.

use std::fmt;
use std::path::PathBuf;

pub const USAGE: u8 = 1;
pub const MISSING: u8 = 2;
pub const NUMERIC: u8 = 3;

/// A required input file does not exist.
#[derive(Debug)]
pub struct Missing(pub PathBuf);

impl fmt::Display for Missing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing artifact: {}", self.0.display())
    }
}

impl std::error::Error for Missing {}

/// Bad flags, config or parameter combinations.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Fails with [`Missing`] unless `path` exists.
pub fn require(path: &std::path::Path) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Missing(path.to_path_buf()).into())
    }
}

pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Missing>() {
            return MISSING;
        }
        if let Some(e) = cause.downcast_ref::<teesn::Error>() {
            if e.is_numeric() {
                return NUMERIC;
            }
            if let teesn::Error::Io(io) = e {
                if io.kind() == std::io::ErrorKind::NotFound {
                    return MISSING;
                }
            }
            return USAGE;
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return MISSING;
            }
        }
    }
    USAGE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_errors_to_codes() {
        assert_eq!(code(&Missing("x".into()).into()), MISSING);
        assert_eq!(code(&teesn::Error::SingularGram.into()), NUMERIC);
        assert_eq!(code(&teesn::Error::InvalidParameter("p".into()).into()), USAGE);
        assert_eq!(code(&usage("bad")), USAGE);
        let wrapped = anyhow::Error::from(teesn::Error::NonFinite("x".into())).context("training");
        assert_eq!(code(&wrapped), NUMERIC);
    }
}
