//! Command-line front end: encode/decode multisets, compare graphs under
//! WL refinement, and run training experiments end to end.

mod cmds;
mod config;
mod graphio;

use clap::{Parser, Subcommand};
use setinject::error::Error;

#[derive(Parser)]
#[command(
    name = "setinject",
    version,
    about = "Injective multiset encodings, their constructive decoder, and ExpGNN experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a multiset of vectors into one fixed-width CSV row
    Encode(cmds::EncodeArgs),
    /// Decode an encoding row back into elements or group sums
    Decode(cmds::DecodeArgs),
    /// Find the WL refinement round that separates two graphs, if any
    WlCompare(cmds::WlArgs),
    /// Train one model on a whole dataset
    Train(cmds::RunArgs),
    /// Stratified k-fold cross-validation
    Cv(cmds::RunArgs),
    /// Write per-graph embeddings from a checkpoint as CSV
    ExportEmbeddings(cmds::ExportArgs),
}

/// 1 for numeric failures inside an otherwise valid request, 2 for
/// usage and contract violations.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite { .. }
        | Error::DegenerateNodes { .. }
        | Error::InconsistentSystem { .. }
        | Error::NonRealRoots { .. }
        | Error::NoConvergence { .. }
        | Error::BadCardinality { .. }
        | Error::SingularPremix { .. } => 1,
        _ => 2,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Ok(raw) = std::env::var("SETINJECT_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: SETINJECT_THREADS must be a positive integer, got {raw:?}");
                std::process::exit(2);
            }
        }
    }

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Encode(a) => cmds::encode(a),
        Command::Decode(a) => cmds::decode(a),
        Command::WlCompare(a) => cmds::wl_compare(a),
        Command::Train(a) => cmds::train(a),
        Command::Cv(a) => cmds::cv(a),
        Command::ExportEmbeddings(a) => cmds::export_embeddings(a),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
