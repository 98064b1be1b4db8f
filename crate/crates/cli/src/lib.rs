//! Command-line front end: flag/config resolution, input loading, run
//! orchestration, and emission of all result artifacts.

pub mod config;
pub mod emit;
pub mod manifest;
pub mod run;

/// A failure with a machine-greppable tag and the process exit code:
/// 1 = input validation, 2 = runtime I/O.
#[derive(Debug)]
pub struct AppFailure {
    pub exit_code: u8,
    pub tag: &'static str,
    pub message: String,
}

impl AppFailure {
    pub fn input(tag: &'static str, message: impl Into<String>) -> Self {
        Self {
            exit_code: 1,
            tag,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            exit_code: 2,
            tag: "SG_IO",
            message: message.into(),
        }
    }

    /// The single-line form printed to stderr.
    pub fn render(&self) -> String {
        format!("error[{}]: {}", self.tag, self.message)
    }
}
