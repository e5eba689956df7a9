use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameter values; exit code 1.
    Usage(String),
    /// Out-of-domain or infeasible request; exit code 2.
    Core(sdof_core::Error),
    /// Unreadable input or unwritable output; exit code 2.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(_) | CliError::Io(_) => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Core(sdof_core::Error::Domain(m)) => ("domain", m.clone()),
            CliError::Core(sdof_core::Error::Infeasible(m)) => ("infeasible", m.clone()),
            CliError::Io(m) => ("io", m.clone()),
        };
        json!({ "error": { "kind": kind, "message": message } })
    }
}

impl From<sdof_core::Error> for CliError {
    fn from(e: sdof_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn usage(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg.to_string()))
    }
}
