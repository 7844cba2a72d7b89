use std::path::PathBuf;
use std::process::ExitCode;

use badsieve::run::{
    check_certificate, emit_intervals, run, write_file, DiagLevel, RunConfig, RunError,
    DEFAULT_CAP, DEFAULT_Q_MAX, DEFAULT_THETA,
};
use badsieve::sieve::ChainPolicy;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Sieve for ξ making (θ, ξ) badly approximable, with exact certificates.
#[derive(Parser, Debug)]
#[command(name = "badsieve", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Re-verify a certificate's badness minimum and level counts.
    Check { cert: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Diag {
    Off,
    Summary,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    Leftmost,
    Densest,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `quad:a,b,c,d` for (a+b√d)/c, or `cf:a0,a1,...~s`.
    #[arg(long, default_value = DEFAULT_THETA)]
    theta: String,
    /// Branching factor, as an integer or `2^k`.
    #[arg(long = "R", default_value = "16")]
    r: String,
    #[arg(long, default_value = "1/10000")]
    delta: String,
    /// `canonical` for δ·R^{6/5}, or a rational.
    #[arg(long, default_value = "canonical")]
    kappa: String,
    /// Final level of the construction.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    /// Left end of the first segment.
    #[arg(long, default_value = "0")]
    start: String,
    /// Enforce the asymptotic parameter regime.
    #[arg(long)]
    strict: bool,
    /// Height bound for the badness check [default: R^(depth-1)].
    #[arg(long)]
    hmax: Option<String>,
    /// Refuse runs whose estimated work exceeds this.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
    /// Largest q scanned for the condition on θ.
    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    qmax: u64,
    #[arg(long, value_enum, default_value_t = Diag::Summary)]
    diag: Diag,
    #[arg(long, value_enum, default_value_t = Policy::Leftmost)]
    policy: Policy,
    #[arg(long, value_name = "PATH")]
    out_cert: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out_intervals: Option<PathBuf>,
    /// Record wall-clock timings (makes the certificate non-reproducible).
    #[arg(long)]
    timings: bool,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            theta: self.theta.clone(),
            r: self.r.clone(),
            delta: self.delta.clone(),
            kappa: self.kappa.clone(),
            depth: self.depth,
            start: self.start.clone(),
            strict: self.strict,
            h_max: self.hmax.clone(),
            cap: self.cap,
            q_max: self.qmax,
            diag: match self.diag {
                Diag::Off => DiagLevel::Off,
                Diag::Summary => DiagLevel::Summary,
                Diag::Full => DiagLevel::Full,
            },
            policy: match self.policy {
                Policy::Leftmost => ChainPolicy::Leftmost,
                Policy::Densest => ChainPolicy::DensestSubtree,
            },
            timings: self.timings,
        }
    }
}

fn execute(args: &RunArgs) -> Result<i32, RunError> {
    let out = run(&args.config())?;
    let json = out.certificate.to_json();
    match &args.out_cert {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &args.out_intervals {
        emit_intervals(&out.state, path)?;
    }
    let c = &out.certificate;
    let counts: Vec<String> = c.levels.iter().map(|l| l.survivors.to_string()).collect();
    eprintln!(
        "status: {:?}; survivors per level: {}",
        c.status,
        counts.join(" ")
    );
    if let Some(b) = &c.badness {
        eprintln!(
            "badness minimum {} at (A, B, C) = ({}, {}, {}), H_max = {}",
            b.minimum.value.exact, b.minimum.a, b.minimum.b, b.minimum.c, b.h_max
        );
    }
    Ok(c.exit_code())
}

fn check(path: &PathBuf) -> Result<i32, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let rep = check_certificate(&text)?;
    println!("badness rechecked: {}", rep.badness_rechecked);
    if let Some(m) = &rep.recomputed_minimum {
        println!("recomputed minimum: {m}");
    }
    println!("minimum matches: {}", rep.minimum_matches);
    println!("pass flag matches: {}", rep.pass_matches);
    println!("level counts consistent: {}", rep.counts_consistent);
    Ok(if rep.ok() { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration rejections, not a failed run
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = match &cli.command {
        Some(Command::Check { cert }) => check(cert),
        None => execute(&cli.run),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
