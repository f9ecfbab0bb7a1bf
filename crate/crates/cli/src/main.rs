use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gramwire_cli::commands;

/// Lossless model-based coding: learn a shared grammar, encode and decode
/// messages against it, compare volume against an ordinary compressor, and
/// move encodings over a fingerprint-gated session.
#[derive(Parser)]
#[command(name = "gramwire", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a grammar from a corpus file (one message per line).
    Learn {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        #[arg(long, default_value_t = 2)]
        min_count: u64,
        #[arg(long, default_value_t = 12)]
        max_pattern_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tokenize corpus lines per character instead of per word.
        #[arg(long)]
        char_mode: bool,
    },
    /// Encode a text file as one message against a grammar.
    Encode {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        char_mode: bool,
    },
    /// Decode an encoding file back to message text.
    Decode {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare model-based coding against the baseline compressor per
    /// message.
    Compare {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Emit machine-readable CSV instead of the table.
        #[arg(long)]
        csv: bool,
        /// CSV of precomputed `index,bits` rows from an external compressor.
        #[arg(long)]
        external_baseline: Option<PathBuf>,
        #[arg(long)]
        char_mode: bool,
    },
    /// Encode and decode every corpus message, verifying byte identity.
    Roundtrip {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        char_mode: bool,
        /// Debug: corrupt the encoding of message N to exercise the
        /// mismatch path.
        #[arg(long, hide = true)]
        debug_corrupt: Option<usize>,
    },
    /// Generate a corpus from a planted-template JSON specification.
    GenCorpus {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Stream a corpus to a receiver over TCP.
    Send {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        connect: String,
        #[arg(long)]
        char_mode: bool,
    },
    /// Accept one sender session and write the received corpus.
    Recv {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        listen: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Learn {
            corpus,
            out,
            max_iters,
            min_count,
            max_pattern_len,
            seed,
            char_mode,
        } => commands::cmd_learn(
            corpus,
            out,
            *max_iters,
            *min_count,
            *max_pattern_len,
            *seed,
            *char_mode,
        ),
        Command::Encode {
            grammar,
            input,
            out,
            char_mode,
        } => commands::cmd_encode(grammar, input, out, *char_mode),
        Command::Decode {
            grammar,
            input,
            out,
        } => commands::cmd_decode(grammar, input, out),
        Command::Compare {
            grammar,
            corpus,
            csv,
            external_baseline,
            char_mode,
        } => commands::cmd_compare(grammar, corpus, *csv, external_baseline.as_deref(), *char_mode),
        Command::Roundtrip {
            grammar,
            corpus,
            char_mode,
            debug_corrupt,
        } => commands::cmd_roundtrip(grammar, corpus, *char_mode, *debug_corrupt),
        Command::GenCorpus { spec, out, seed } => commands::cmd_gen_corpus(spec, out, *seed),
        Command::Send {
            grammar,
            corpus,
            connect,
            char_mode,
        } => commands::cmd_send(grammar, corpus, connect, *char_mode),
        Command::Recv {
            grammar,
            listen,
            out,
        } => commands::cmd_recv(grammar, listen, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
