use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation or configuration.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] graphxq::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::usage("x").exit_code(), 1);
        assert_eq!(
            CliError::from(graphxq::Error::Schema("s".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(graphxq::Error::Numeric("n".into())).exit_code(),
            3
        );
    }
}
