//! Batch front end for the facade revision library.
//!
//! Every command is a thin composition of library calls plus file I/O;
//! nothing here owns algorithmic logic. Exit codes: 2 for I/O problems,
//! 3 for malformed or inconsistent inputs, 4 for a window class the
//! palette does not know.

mod commands;
mod config;
mod files;
mod render;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "facade", version, about = "Facade mask revision toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect line segments in an image and write them as JSON.
    DetectLines(commands::detect_lines::Args),
    /// Revise a predicted mask using detected window outlines.
    Revise(commands::revise::Args),
    /// Score predicted masks against ground truth.
    Eval(commands::eval::Args),
    /// Generate a synthetic facade fixture set.
    Synth(commands::synth::Args),
    /// Run the seeded toy transformer segmenter on one image.
    SegmentToy(commands::segment_toy::Args),
    /// Full batch pipeline: segment (optional), revise, score.
    Pipeline(commands::pipeline::Args),
}

/// Library error plus the pipeline stage it surfaced in.
#[derive(Debug)]
pub struct CliError {
    pub context: Option<String>,
    pub source: facade_core::Error,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        use facade_core::Error::*;
        match self.source {
            Io { .. } | BadImage { .. } => 2,
            UnknownWindowClass(_) => 4,
            _ => 3,
        }
    }
}

impl From<facade_core::Error> for CliError {
    fn from(source: facade_core::Error) -> Self {
        CliError { context: None, source }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.context {
            Some(ctx) => write!(f, "{ctx}: {}", self.source),
            None => write!(f, "{}", self.source),
        }
    }
}

/// Tack a stage name onto any error bubbling out of a pipeline step.
pub trait StageExt<T> {
    fn stage(self, ctx: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> StageExt<T> for Result<T, E> {
    fn stage(self, ctx: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|e| {
            let mut err = e.into();
            err.context = Some(match err.context.take() {
                Some(inner) => format!("{}: {inner}", ctx()),
                None => ctx(),
            });
            err
        })
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DetectLines(args) => commands::detect_lines::run(args),
        Command::Revise(args) => commands::revise::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::SegmentToy(args) => commands::segment_toy::run(args),
        Command::Pipeline(args) => commands::pipeline::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
