use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conecalc_cli::commands::{self, Global, Outcome};
use conecalc_cli::document::Rep;
use conecalc_cli::CliError;

/// Cone membership, representation conversion and verification suites for
/// linear maps on M_n.
#[derive(Parser, Debug)]
#[command(name = "conecalc", version)]
struct Cli {
    /// Decision margin for membership.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    #[arg(long, global = true, env = "CONECALC_SEED", default_value_t = 0)]
    seed: u64,

    /// Random restarts per optimizer run.
    #[arg(long, global = true, default_value_t = 16)]
    restarts: usize,

    /// Print a structured report instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Include wall-clock timings (makes reports non-reproducible).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide whether a matrix or a map lies in a cone.
    ///
    /// Exit status: 0 member, 1 not a member, 2 inconclusive.
    Check {
        /// psd, ppt, blockpos, sep, schmidtbp:k, cp, cocp, kpos:k, ksp:k or pos.
        cone: String,
        input: PathBuf,
        /// Bipartite dimensions `m,n` of a matrix input.
        #[arg(long, value_parser = commands::parse_dims)]
        dims: Option<(usize, usize)>,
    },
    /// Rewrite a map in Choi or Kraus form.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Rep,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a verification suite (or `all`).
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let g = Global { tol: cli.tol, seed: cli.seed, restarts: cli.restarts, json: cli.json, timings: cli.timings };
    if !(g.tol.is_finite() && g.tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be a nonnegative number, got {}", g.tol)));
    }
    if g.restarts == 0 {
        return Err(CliError::Usage("--restarts must be positive".into()));
    }
    match cli.cmd {
        Cmd::Check { cone, input, dims } => commands::check(&cone, &input, dims, &g),
        Cmd::Convert { input, to, output } => commands::convert(&input, to, output.as_ref()),
        Cmd::Verify { suite, n, trials } => commands::verify(&suite, n, trials, &g),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap's own code 2 would read as "inconclusive"
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
