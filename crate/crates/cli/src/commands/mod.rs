pub mod correlate;
pub mod inspect;
pub mod profile;
pub mod report;
pub mod reviews;
pub mod simulate;

/// What a subcommand accumulated while processing its batch. Warnings
/// are informational; any error makes the process exit nonzero after
/// the batch finishes.
#[derive(Debug, Default)]
pub struct Outcome {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn error(&mut self, message: impl Into<String>) {
        self.errors.push(message.into());
    }
}
