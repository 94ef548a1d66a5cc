//! The JSON envelope shared by every subcommand.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use solgas_core::geometry::Verdict;

pub const SCHEMA: u32 = 1;

#[derive(Serialize)]
pub struct Envelope<'a, A: Serialize, R: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub tool_version: &'static str,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub args: &'a A,
    pub result: &'a R,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
    pub exit_code: u8,
}

impl<'a, A: Serialize, R: Serialize> Envelope<'a, A, R> {
    pub fn new(command: &'a str, args: &'a A, result: &'a R) -> Self {
        Envelope {
            schema: SCHEMA,
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            args,
            result,
            verdict: None,
            expected: None,
            exit_code: 0,
        }
    }

    /// Sets the verdicts and derives the exit code from them.
    pub fn judged(mut self, verdict: Verdict, expected: Verdict) -> Self {
        self.verdict = Some(verdict);
        self.expected = Some(expected);
        self.exit_code = if verdict == expected { 0 } else { 1 };
        self
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes to `out` if given and prints either the JSON or `summary`.
    pub fn emit(&self, out: Option<&Path>, json: bool, summary: &str) -> anyhow::Result<u8> {
        let text = self.to_json()?;
        if let Some(path) = out {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        if json {
            print!("{text}");
        } else {
            print!("{summary}");
        }
        Ok(self.exit_code)
    }
}
