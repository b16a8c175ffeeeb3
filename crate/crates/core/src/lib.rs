//! LLM-assisted depression screening from interview transcripts.
//!
//! The pipeline: [`transcript`] ingestion, [`knowledge`] presets and
//! [`prompt`] assembly, chat [`backend`]s with record/replay, reply
//! [`parser`]s, the [`orchestrator`] that runs both tasks, [`metrics`] and [`report`]s.
//! The [`cli`] module backs the `psyscreen` binary.

pub mod backend;
pub mod cli;
pub mod config;
pub mod knowledge;
pub mod metrics;
pub mod orchestrator;
pub mod parser;
pub mod prompt;
pub mod report;
pub mod run;
pub mod tokens;
pub mod transcript;
