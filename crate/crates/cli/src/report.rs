use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// JSON document written by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Parsed arguments; replaying them reproduces `result`.
    pub config: Value,
    pub result: Value,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub extra: Value,
}

impl RunReport {
    pub fn new(
        command: &str,
        seed: u64,
        config: &impl Serialize,
        result: &impl Serialize,
        started: Instant,
    ) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            result: serde_json::to_value(result).unwrap_or(Value::Null),
            wall_time_secs: started.elapsed().as_secs_f64(),
            extra: Value::Null,
        }
    }

    pub fn with_extra(mut self, extra: Value) -> Self {
        self.extra = extra;
        self
    }
}
