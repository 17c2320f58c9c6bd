use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod load;

/// Build, run, test and compare deterministic finite automata.
#[derive(Debug, Parser)]
#[command(name = "fsmkit", version)]
struct Cli {
    /// Output for people or for programs.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,

    /// Exit with status 1 on a reject, a counterexample or a failed invariant.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Operation {
    Complement,
    Union,
    Intersection,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a machine file loads and report its shape.
    Validate { file: PathBuf },
    /// Apply a machine to a tape and print the outcome.
    Run {
        file: PathBuf,
        /// Whitespace-separated input symbols.
        #[arg(long, default_value = "")]
        tape: String,
    },
    /// Print every configuration of a run.
    Trace {
        file: PathBuf,
        #[arg(long, default_value = "")]
        tape: String,
        /// Annotate each step with its state invariant.
        #[arg(long)]
        invariants: bool,
    },
    /// Apply a machine to random words over its alphabet.
    Test {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a word that exercises each transition.
    Cover { file: PathBuf },
    /// Check every state invariant along the transition cover.
    Sweep {
        file: PathBuf,
        /// Random words to run in addition to the cover.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide whether two machines accept the same language.
    Equiv { first: PathBuf, second: PathBuf },
    /// Build the complement, union or intersection of machines.
    Op {
        #[arg(value_enum)]
        operation: Operation,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Where to write the result; `.fsmx` writes a document, anything
        /// else FSM source. Printed when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Name of the resulting machine.
        #[arg(long)]
        name: Option<String>,
    },
    /// Append a versioned FSM source block for a machine.
    Gencode {
        file: PathBuf,
        /// Defaults to `<name>.gen.rkt` in the current directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time the pattern DFA against the naive recursive matcher.
    Bench {
        #[arg(long, default_value = "b a b a")]
        pattern: String,
        #[arg(long, value_delimiter = ',', default_values_t = [25_000, 50_000, 100_000])]
        sizes: Vec<usize>,
    },
    /// Serve the debugging API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory for documents and generated source.
        #[arg(long, default_value = ".")]
        root: PathBuf,
        /// Built web debugger assets to serve at `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }
}

/// What a command found: success, or a semantic negative that only
/// matters under `--strict`, or one that always fails the invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Negative,
    Failure,
}

pub struct Context {
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Context { format: cli.format };
    let result = match cli.command {
        Command::Validate { file } => commands::validate(&ctx, &file),
        Command::Run { file, tape } => commands::run(&ctx, &file, &tape),
        Command::Trace {
            file,
            tape,
            invariants,
        } => commands::trace(&ctx, &file, &tape, invariants),
        Command::Test { file, n, seed } => commands::test(&ctx, &file, n, seed),
        Command::Cover { file } => commands::cover(&ctx, &file),
        Command::Sweep { file, random, seed } => commands::sweep(&ctx, &file, random, seed),
        Command::Equiv { first, second } => commands::equiv(&ctx, &first, &second),
        Command::Op {
            operation,
            files,
            output,
            name,
        } => commands::op(&ctx, operation, &files, output.as_deref(), name.as_deref()),
        Command::Gencode { file, output } => commands::gencode(&ctx, &file, output.as_deref()),
        Command::Bench { pattern, sizes } => commands::bench(&ctx, &pattern, &sizes),
        Command::Serve {
            port,
            host,
            root,
            assets,
        } => serve(SocketAddr::new(host, port), root, assets),
    };
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) if !cli.strict => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fsmkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn serve(addr: SocketAddr, root: PathBuf, assets: Option<PathBuf>) -> Result<Verdict, CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot listen on {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        println!("listening on http://{local}");
        let config = fsmkit_service::ServiceConfig { root, assets };
        fsmkit_service::serve(listener, config)
            .await
            .map_err(|e| CliError::Usage(format!("server stopped: {e}")))?;
        Ok(Verdict::Ok)
    })
}
