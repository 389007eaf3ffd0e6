use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use k2rank::arith::{build_sieve, ArithError};
use k2rank::fourrank::{four_rank, FourRankError};
use k2rank::output::{write_csv, OutputRecord, TallyDocument};
use k2rank::survey::{self, density_experiment, Family, FamilyKind, PrimeSet, SurveyError};
use k2rank::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "k2rank", version, about = "4-ranks of K2 of rings of integers of quadratic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// 4-rank of a single field Q(√d), as JSON.
    Rank4 {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
    },
    /// Tally 4-ranks over a family, |d| in [min, max].
    Survey {
        #[arg(long)]
        family: FamilyKind,
        #[arg(long)]
        min: u64,
        #[arg(long)]
        max: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "K2_THREADS")]
        threads: Option<usize>,
    },
    /// Predicted 4-ranks of Q(√±pl) over primes l ≤ lmax in A or B.
    Density {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        family: PrimeSet,
        #[arg(long, default_value_t = 1_000_000)]
        lmax: u64,
    },
    /// Run a consistency suite.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        max: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Exit code plus message.
struct Failure(u8, String);

impl Failure {
    fn input(e: impl ToString) -> Self {
        Failure(2, e.to_string())
    }
}

impl From<SurveyError> for Failure {
    fn from(e: SurveyError) -> Self {
        match e {
            SurveyError::Rank { .. } | SurveyError::Forms { .. } | SurveyError::TableViolation { .. } => {
                Failure(3, e.to_string())
            }
            _ => Failure(2, e.to_string()),
        }
    }
}

fn sieve_for(bound: u64) -> Result<k2rank::arith::FactorSieve, Failure> {
    build_sieve(bound.max(2)).map_err(Failure::input)
}

fn rank4(d: i64) -> Result<String, Failure> {
    let sieve = sieve_for(d.unsigned_abs())?;
    match four_rank(d, &sieve) {
        Ok(r) => Ok(serde_json::to_string(&OutputRecord::from(&r)).expect("serializable")),
        Err(e @ FourRankError::Arith(ArithError::NotOddSquarefree(_))) => Err(Failure::input(e)),
        Err(e) => Err(Failure(3, e.to_string())),
    }
}

fn emit(out: &Option<PathBuf>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure(2, e.to_string());
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            body(&mut w).and_then(|_| w.flush()).map_err(io_err)
        }
        None => {
            let mut w = io::stdout().lock();
            body(&mut w).map_err(io_err)
        }
    }
}

fn survey_cmd(
    kind: FamilyKind,
    min: u64,
    max: u64,
    format: Format,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let family = Family::new(kind, min, max)?;
    let sieve = sieve_for(max)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(Failure::input)?;
    match format {
        Format::Json => {
            let t = pool.install(|| survey::tally(&family, &sieve))?;
            let doc = serde_json::to_string(&TallyDocument::from(&t)).expect("serializable");
            emit(&out, |w| writeln!(w, "{doc}"))
        }
        Format::Csv => {
            let reports = pool.install(|| survey::reports(&family, &sieve))?;
            let records: Vec<OutputRecord> = reports.iter().map(OutputRecord::from).collect();
            emit(&out, |w| write_csv(&records, w).map_err(io::Error::other))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Rank4 { d } => {
            println!("{}", rank4(d)?);
            Ok(())
        }
        Command::Survey {
            family,
            min,
            max,
            format,
            out,
            threads,
        } => survey_cmd(family, min, max, format, out, threads),
        Command::Density { p, family, lmax } => {
            let sieve = sieve_for(lmax)?;
            let report = density_experiment(p, family, lmax, &sieve)?;
            println!("{}", serde_json::to_string(&report).expect("serializable"));
            Ok(())
        }
        Command::Verify { suite, max } => {
            let sieve = sieve_for(max)?;
            let outcome = verify::run(suite, max, &sieve)?;
            println!("{}", serde_json::to_string(&outcome).expect("serializable"));
            if outcome.passed() {
                Ok(())
            } else {
                Err(Failure(
                    3,
                    format!("{} failed with {} counterexamples", suite, outcome.failures),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
