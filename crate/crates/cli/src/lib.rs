//! Configuration, file formats and experiment drivers for the `tadrop`
//! command-line tool.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod io;
pub mod report;

/// Stable code printed with a failing command, as in `error[E_IO]: ...`.
pub fn error_code(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if cause.is::<checks::CheckFailed>() {
            return "E_CHECK";
        }
        if cause.is::<config::ConfigError>() {
            return "E_CONFIG";
        }
        if let Some(e) = cause.downcast_ref::<tadropedge::Error>() {
            return match e {
                tadropedge::Error::Parse { .. } => "E_PARSE",
                tadropedge::Error::Io(_) => "E_IO",
                tadropedge::Error::NonFiniteLoss { .. } => "E_NUMERIC",
                tadropedge::Error::Internal(_) => "E_INTERNAL",
                _ => "E_INPUT",
            };
        }
        if cause.is::<serde_json::Error>() {
            return "E_PARSE";
        }
        if cause.is::<std::io::Error>() {
            return "E_IO";
        }
    }
    "E_RUNTIME"
}

/// `error[CODE]: message` on one line, with the context chain joined by `: `.
pub fn format_error(err: &anyhow::Error) -> String {
    let msg = format!("{err:#}").replace(['\n', '\r'], " ");
    format!("error[{}]: {msg}", error_code(err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn codes_follow_the_cause_chain() {
        let e = anyhow::Error::new(tadropedge::Error::Parse {
            line: 3,
            msg: "x".into(),
        })
        .context("reading f");
        assert_eq!(error_code(&e), "E_PARSE");
        let io: anyhow::Result<()> =
            Err(std::io::Error::new(std::io::ErrorKind::NotFound, "gone")).context("opening f");
        assert_eq!(
            format_error(&io.unwrap_err()),
            "error[E_IO]: opening f: gone"
        );
        assert_eq!(
            error_code(&anyhow::Error::new(config::ConfigError::Dropout)),
            "E_CONFIG"
        );
        assert_eq!(error_code(&anyhow::anyhow!("x")), "E_RUNTIME");
    }
}
