//! File ingestion, run orchestration and reports.
//!
//! A run reads one or more metric tables, runs the selected engines on the
//! same immutable records concurrently, and produces one JSON report per
//! engine plus a manifest of input and output digests. Identical inputs,
//! configuration and seed give byte-identical files.

mod agreement;
mod config;
mod engines;
mod ingest;
mod run;

pub use agreement::{agreement, AgreementReport, AgreementRow, TopK};
pub use config::{
    AgreementConfig, Engine, InputKind, InputSpec, NormalizationScope, ParamSource, QTextConfig, RunConfig, UfgConfig,
    DEFAULT_UFG_METHOD_LIMIT,
};
pub use engines::{
    davidson_report, instance_posets, qtext_report, ufg_report, ufg_roster, DavidsonReport, QTextParamChoice, QTextReport,
    ScoredRecord, TuningSummary, UfgReport,
};
pub use ingest::{
    parse_csv, parse_generations, parse_jsonl, parse_ratings, read_generations, read_metric_table, read_ratings, write_csv,
    METHOD_PARTS_SEPARATOR,
};
pub use run::{ingest, run, FileDigest, InputDigest, Manifest, RunOutput};

use thiserror::Error;

use crate::davidson::DavidsonError;
use crate::dominance::DominanceError;
use crate::qtext::{QTextError, TuneError};
use crate::ufg::UfgError;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ENGINE: i32 = 2;
/// The run finished but some result is truncated or not converged.
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: u64, message: String },
    #[error("{file}:{line}: duplicate record for ({instance}, {method}), first seen on line {first_line}")]
    DuplicateRecord { file: String, line: u64, first_line: u64, instance: String, method: String },
    #[error("({instance}, {method}) appears in both {first} and {second}")]
    DuplicateAcrossInputs { instance: String, method: String, first: String, second: String },
    #[error("{file}:{line}: {column} is not finite")]
    NonFiniteValue { file: String, line: u64, column: String },
    #[error("{file}:{line}: {message}")]
    Metrics { file: String, line: u64, message: String },
    #[error("configuration: {0}")]
    Config(String),
}

impl InputError {
    pub(crate) fn parse(source: &str, line: u64, message: impl Into<String>) -> Self {
        InputError::Parse { file: source.to_string(), line, message: message.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Dominance(#[from] DominanceError),
    #[error(transparent)]
    Davidson(#[from] DavidsonError),
    #[error(transparent)]
    Ufg(#[from] UfgError),
    #[error(transparent)]
    QText(#[from] QTextError),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error("{methods} methods exceed the ufg limit of {limit}; give a method filter")]
    MethodFilterRequired { methods: usize, limit: usize },
    #[error("methods {0:?} do not occur in the data")]
    UnknownMethods(Vec<String>),
    #[error("no instance has a record for every selected method")]
    NoCompleteInstances,
    #[error("the two rankings share no methods")]
    NoSharedMethods,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{engine}: {source}")]
    Engine { engine: &'static str, source: EngineError },
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) | PipelineError::Output { .. } => EXIT_INPUT,
            PipelineError::Engine { .. } => EXIT_ENGINE,
        }
    }
}
