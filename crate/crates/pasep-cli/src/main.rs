//! Command-line front end: batch computation of correlation tables and
//! stationary distributions, linked-queue dumps, sampling, simulation, and
//! the verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 cap
//! exceeded.

mod config;
mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pasep_core::formulas::{cq_formula, cq_via_pie, FormulaVariant};
use pasep_core::markov::{
    build_generator, gillespie, mlq_stationary, solve_stationary, two_point, CorrelationTable,
    Distribution, DEFAULT_STATE_CAP,
};
use pasep_core::mlq::{
    enumerate_linkings, enumerate_mlqs, sample_word, ProcessingOrder, SpeciesCount,
    DEFAULT_ENUMERATION_CAP, DEFAULT_LINKING_CAP,
};
use pasep_core::scalar::{parse_rational, parse_rational_or_decimal};
use pasep_core::verify::{run_suite, Family, Outcome, SuiteConfig};
use pasep_core::{Error, QParam, Rational};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "pasep",
    version,
    about = "Exact multispecies PASEP correlations via multiline queues and a chain solver"
)]
struct Cli {
    /// Optional JSON config file mirroring the flags (flags win on conflict).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-point correlation table c_{i,j}(n) of the iden(n) process.
    Correlations(CorrelationsArgs),
    /// Exact stationary distribution of a species type.
    Stationary(StationaryArgs),
    /// Dump every linked multiline queue of a type as JSON records.
    Enumerate(EnumerateArgs),
    /// Draw words from the stationary law and report frequencies.
    Sample(SampleArgs),
    /// Estimate the two-point table by continuous-time simulation.
    Gillespie(GillespieArgs),
    /// Run the identity suite and write a machine-readable report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Formula,
    Pie,
    Ctmc,
    Mlq,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Formula => "formula",
            Method::Pie => "pie",
            Method::Ctmc => "ctmc",
            Method::Mlq => "mlq",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, true).ok()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Corrected,
    Printed,
}

impl Variant {
    fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, true).ok()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, true).ok()
    }
}

#[derive(Args)]
struct CorrelationsArgs {
    /// Number of species (ring size of the iden-type process).
    #[arg(long)]
    n: Option<usize>,
    /// Asymmetry parameter as an exact rational, e.g. 1/2.
    #[arg(long)]
    q: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Reading of the i<j branch (method=formula only).
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    state_cap: Option<u64>,
    #[arg(long)]
    enumeration_cap: Option<u64>,
}

#[derive(Args)]
struct StationaryArgs {
    /// Species counts, comma separated, e.g. 1,2,1.
    #[arg(long = "type")]
    type_: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// ctmc (exact solve) or mlq (multiline-queue construction).
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    state_cap: Option<u64>,
    #[arg(long)]
    enumeration_cap: Option<u64>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long = "type")]
    type_: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Keep only records whose word starts with a prefix: word-prefix=2,3
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    enumeration_cap: Option<u64>,
    #[arg(long)]
    linking_cap: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long = "type")]
    type_: Option<String>,
    /// Asymmetry parameter; decimals are admitted here (0.3 means 3/10).
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    /// Seed for the deterministic random source (required).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GillespieArgs {
    #[arg(long = "type")]
    type_: Option<String>,
    /// Asymmetry parameter; decimal (used as f64 in the simulation).
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
    /// Seed for the deterministic random source (required).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    max_sites: Option<usize>,
    /// Comma-separated exact rationals, e.g. 0,1/10,1/2,9/10.
    #[arg(long)]
    q_list: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated family filter, e.g. eta,lumping.
    #[arg(long)]
    families: Option<String>,
    /// Where to write the JSON report (stdout otherwise).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    enumeration_cap: Option<u64>,
    #[arg(long)]
    linking_cap: Option<u64>,
    #[arg(long)]
    state_cap: Option<u64>,
    #[arg(long)]
    sampler_samples: Option<u64>,
    #[arg(long)]
    gillespie_horizon: Option<f64>,
    #[arg(long)]
    gillespie_burn_in: Option<f64>,
}

/// Failure modes mapped to exit codes.
enum CliError {
    /// Bad arguments or input files: exit 2.
    Usage(String),
    /// A configured cap was exceeded: exit 3.
    Cap(String),
    /// The verification suite found failures: exit 1.
    ChecksFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::ChecksFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_cap_exceeded() {
            CliError::Cap(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match ConfigFile::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Correlations(args) => cmd_correlations(args, &config),
        Command::Stationary(args) => cmd_stationary(args, &config),
        Command::Enumerate(args) => cmd_enumerate(args, &config),
        Command::Sample(args) => cmd_sample(args, &config),
        Command::Gillespie(args) => cmd_gillespie(args, &config),
        Command::Verify(args) => cmd_verify(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Cap(msg) => eprintln!("error: {msg}"),
                CliError::ChecksFailed => eprintln!("verification failed"),
            }
            ExitCode::from(e.code())
        }
    }
}

fn write_out(output: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

fn parse_exact_q(text: &str) -> Result<QParam, CliError> {
    let value = parse_rational(text).map_err(|e| CliError::Usage(e.to_string()))?;
    QParam::new(value).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_species(text: &str) -> Result<SpeciesCount, CliError> {
    let counts: Result<Vec<usize>, _> = text
        .split(',')
        .map(|part| part.trim().parse::<usize>())
        .collect();
    let counts = counts.map_err(|_| CliError::Usage(format!("malformed type \"{text}\"")))?;
    SpeciesCount::new(counts).map_err(CliError::from)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn cmd_correlations(args: CorrelationsArgs, config: &ConfigFile) -> Result<(), CliError> {
    let n = required(args.n.or(config.integer("n").map(|v| v as usize)), "n")?;
    if n < 2 {
        return Err(CliError::Usage("need n >= 2".into()));
    }
    let q_text = required(args.q.or(config.string("q")), "q")?;
    let q = parse_exact_q(&q_text)?;
    let method = args
        .method
        .or_else(|| config.string("method").as_deref().and_then(Method::parse))
        .unwrap_or(Method::Formula);
    let variant = args
        .variant
        .or_else(|| config.string("variant").as_deref().and_then(Variant::parse))
        .unwrap_or(Variant::Corrected);
    let format = args
        .format
        .or_else(|| config.string("format").as_deref().and_then(Format::parse))
        .unwrap_or(Format::Csv);
    let state_cap = args
        .state_cap
        .or(config.integer("state-cap"))
        .unwrap_or(DEFAULT_STATE_CAP);
    let enumeration_cap = args
        .enumeration_cap
        .or(config.integer("enumeration-cap"))
        .unwrap_or(DEFAULT_ENUMERATION_CAP);

    let formula_variant = match variant {
        Variant::Corrected => FormulaVariant::Corrected,
        Variant::Printed => FormulaVariant::Printed,
    };
    let rows: Vec<(usize, usize, Rational)> = match method {
        Method::Formula | Method::Pie => {
            let mut rows = Vec::new();
            for i in 1..=n {
                for j in 1..=n {
                    if i == j {
                        continue;
                    }
                    let value = match method {
                        Method::Formula => {
                            cq_formula(n as i64, i as i64, j as i64, &q, formula_variant)?
                        }
                        _ => cq_via_pie(n as i64, i as i64, j as i64, &q)?,
                    };
                    rows.push((i, j, value));
                }
            }
            rows
        }
        Method::Ctmc => {
            let iden = SpeciesCount::iden(n);
            let table = two_point(&solve_stationary(&build_generator(&iden, &q, state_cap)?)?);
            iden_rows(&table, n)
        }
        Method::Mlq => {
            let iden = SpeciesCount::iden(n);
            let table = two_point(&mlq_stationary(
                &iden,
                &q,
                enumeration_cap,
                DEFAULT_LINKING_CAP,
            )?);
            iden_rows(&table, n)
        }
    };
    let variant_name = matches!(method, Method::Formula).then(|| match variant {
        Variant::Corrected => "corrected",
        Variant::Printed => "printed",
    });
    let text = match format {
        Format::Csv => output::correlations_csv(&rows),
        Format::Json => {
            let value = output::correlations_json(n, &q, method.as_str(), variant_name, &rows);
            format!(
                "{}\n",
                serde_json::to_string_pretty(&value).expect("serializable")
            )
        }
    };
    write_out(args.output.as_ref(), &text)
}

/// Off-diagonal entries over the particle labels `1..=n` (iden has no holes).
fn iden_rows(table: &CorrelationTable, n: usize) -> Vec<(usize, usize, Rational)> {
    let mut rows = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                rows.push((i, j, table.entry(i, j).clone()));
            }
        }
    }
    rows
}

fn cmd_stationary(args: StationaryArgs, config: &ConfigFile) -> Result<(), CliError> {
    let type_text = required(args.type_.or(config.string("type")), "type")?;
    let m = parse_species(&type_text)?;
    let q_text = required(args.q.or(config.string("q")), "q")?;
    let q = parse_exact_q(&q_text)?;
    let method = args
        .method
        .or_else(|| config.string("method").as_deref().and_then(Method::parse))
        .unwrap_or(Method::Ctmc);
    let format = args
        .format
        .or_else(|| config.string("format").as_deref().and_then(Format::parse))
        .unwrap_or(Format::Json);
    let state_cap = args
        .state_cap
        .or(config.integer("state-cap"))
        .unwrap_or(DEFAULT_STATE_CAP);
    let enumeration_cap = args
        .enumeration_cap
        .or(config.integer("enumeration-cap"))
        .unwrap_or(DEFAULT_ENUMERATION_CAP);
    let d: Distribution = match method {
        Method::Ctmc => solve_stationary(&build_generator(&m, &q, state_cap)?)?,
        Method::Mlq => mlq_stationary(&m, &q, enumeration_cap, DEFAULT_LINKING_CAP)?,
        _ => {
            return Err(CliError::Usage(
                "stationary supports --method ctmc or mlq".into(),
            ))
        }
    };
    let text = match format {
        Format::Json => {
            let value = output::distribution_json(&d, &q, method.as_str());
            format!(
                "{}\n",
                serde_json::to_string_pretty(&value).expect("serializable")
            )
        }
        Format::Csv => output::distribution_csv(&d),
    };
    write_out(args.output.as_ref(), &text)
}

fn cmd_enumerate(args: EnumerateArgs, config: &ConfigFile) -> Result<(), CliError> {
    let type_text = required(args.type_.or(config.string("type")), "type")?;
    let m = parse_species(&type_text)?;
    let q_text = required(args.q.or(config.string("q")), "q")?;
    let q = parse_exact_q(&q_text)?;
    let enumeration_cap = args
        .enumeration_cap
        .or(config.integer("enumeration-cap"))
        .unwrap_or(DEFAULT_ENUMERATION_CAP);
    let linking_cap = args
        .linking_cap
        .or(config.integer("linking-cap"))
        .unwrap_or(DEFAULT_LINKING_CAP);
    let prefix: Option<Vec<u8>> = match args.filter.or(config.string("filter")) {
        None => None,
        Some(text) => {
            let prefix_text = text
                .strip_prefix("word-prefix=")
                .ok_or_else(|| CliError::Usage(format!("unknown filter \"{text}\"")))?;
            let labels: Result<Vec<u8>, _> = prefix_text
                .split(',')
                .map(|part| part.trim().parse::<u8>())
                .collect();
            Some(labels.map_err(|_| CliError::Usage(format!("malformed filter \"{text}\"")))?)
        }
    };
    let mut lines = String::new();
    for mlq in enumerate_mlqs(&m, enumeration_cap)? {
        for linked in enumerate_linkings(&mlq, &q, ProcessingOrder::canonical(), linking_cap)? {
            if let Some(prefix) = &prefix {
                if !linked.word.starts_with(prefix) {
                    continue;
                }
            }
            let record = output::linked_mlq_record(&linked);
            lines.push_str(&serde_json::to_string(&record).expect("serializable"));
            lines.push('\n');
        }
    }
    write_out(args.output.as_ref(), &lines)
}

fn cmd_sample(args: SampleArgs, config: &ConfigFile) -> Result<(), CliError> {
    let type_text = required(args.type_.or(config.string("type")), "type")?;
    let m = parse_species(&type_text)?;
    let q_text = required(args.q.or(config.string("q")), "q")?;
    // decimals are legal here and converted exactly (0.3 -> 3/10)
    let q_value = parse_rational_or_decimal(&q_text).map_err(|e| CliError::Usage(e.to_string()))?;
    let q = QParam::new(q_value).map_err(|e| CliError::Usage(e.to_string()))?;
    let samples = args.samples.or(config.integer("samples")).unwrap_or(10_000);
    let seed = required(args.seed.or(config.integer("seed")), "seed")?;
    let format = args
        .format
        .or_else(|| config.string("format").as_deref().and_then(Format::parse))
        .unwrap_or(Format::Json);
    let mut rng = pasep_core::rng::seeded(seed);
    let mut counts: std::collections::BTreeMap<pasep_core::mlq::Word, u64> = Default::default();
    for _ in 0..samples {
        *counts.entry(sample_word(&m, &q, &mut rng)).or_insert(0) += 1;
    }
    let freq: Vec<_> = counts.into_iter().collect();
    let text = match format {
        Format::Json => {
            let value = output::sample_json(&m, &q_text, samples, seed, &freq);
            format!(
                "{}\n",
                serde_json::to_string_pretty(&value).expect("serializable")
            )
        }
        Format::Csv => output::sample_csv(&freq, samples),
    };
    write_out(args.output.as_ref(), &text)
}

fn cmd_gillespie(args: GillespieArgs, config: &ConfigFile) -> Result<(), CliError> {
    let type_text = required(args.type_.or(config.string("type")), "type")?;
    let m = parse_species(&type_text)?;
    let q_text = required(args.q.or(config.string("q")), "q")?;
    let q_value = parse_rational_or_decimal(&q_text).map_err(|e| CliError::Usage(e.to_string()))?;
    let q = pasep_core::markov::entry_to_f64(&q_value);
    let horizon = args
        .horizon
        .or(config.float("horizon"))
        .unwrap_or(1_000_000.0);
    let burn_in = args.burn_in.or(config.float("burn-in")).unwrap_or(10_000.0);
    let seed = required(args.seed.or(config.integer("seed")), "seed")?;
    let format = args
        .format
        .or_else(|| config.string("format").as_deref().and_then(Format::parse))
        .unwrap_or(Format::Csv);
    let table = gillespie(&m, q, horizon, burn_in, seed)?;
    let text = match format {
        Format::Csv => output::empirical_csv(&table),
        Format::Json => {
            let value = output::empirical_json(&m, q, seed, &table);
            format!(
                "{}\n",
                serde_json::to_string_pretty(&value).expect("serializable")
            )
        }
    };
    write_out(args.output.as_ref(), &text)
}

fn cmd_verify(args: VerifyArgs, config: &ConfigFile) -> Result<(), CliError> {
    let defaults = SuiteConfig::default();
    let q_list = match args.q_list.or(config.string("q-list")) {
        None => defaults.q_list.clone(),
        Some(text) => {
            let mut list = Vec::new();
            for part in text.split(',') {
                list.push(parse_exact_q(part)?);
            }
            if list.is_empty() {
                return Err(CliError::Usage("empty q list".into()));
            }
            list
        }
    };
    let families = match args.families.or(config.string("families")) {
        None => None,
        Some(text) => {
            let mut list = Vec::new();
            for part in text.split(',') {
                let name = part.trim();
                let family = Family::parse(name)
                    .ok_or_else(|| CliError::Usage(format!("unknown family \"{name}\"")))?;
                list.push(family);
            }
            Some(list)
        }
    };
    let suite = SuiteConfig {
        max_sites: args
            .max_sites
            .or(config.integer("max-sites").map(|v| v as usize))
            .unwrap_or(defaults.max_sites),
        q_list,
        seed: args
            .seed
            .or(config.integer("seed"))
            .unwrap_or(defaults.seed),
        families,
        enumeration_cap: args
            .enumeration_cap
            .or(config.integer("enumeration-cap"))
            .unwrap_or(defaults.enumeration_cap),
        linking_cap: args
            .linking_cap
            .or(config.integer("linking-cap"))
            .unwrap_or(defaults.linking_cap),
        state_cap: args
            .state_cap
            .or(config.integer("state-cap"))
            .unwrap_or(defaults.state_cap),
        sampler_samples: args
            .sampler_samples
            .or(config.integer("sampler-samples"))
            .unwrap_or(defaults.sampler_samples),
        gillespie_horizon: args
            .gillespie_horizon
            .or(config.float("gillespie-horizon"))
            .unwrap_or(defaults.gillespie_horizon),
        gillespie_burn_in: args
            .gillespie_burn_in
            .or(config.float("gillespie-burn-in"))
            .unwrap_or(defaults.gillespie_burn_in),
    };
    if suite.max_sites < 2 {
        return Err(CliError::Usage("need --max-sites >= 2".into()));
    }
    let report = run_suite(&suite);
    let json = output::report_json(&report);
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&json).expect("serializable")
    );
    match &args.report {
        Some(path) => fs::write(path, &text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => write_out(None, &text)?,
    }
    for (family, counts) in &report.summary.families {
        eprintln!(
            "{}: run {} failed {} skipped {}",
            family.as_str(),
            counts.run,
            counts.failed,
            counts.skipped
        );
    }
    let skipped: usize = report
        .checks
        .iter()
        .filter(|c| c.outcome == Outcome::Skipped)
        .count();
    eprintln!(
        "overall: {} ({} checks, {} skipped)",
        if report.passed() { "PASS" } else { "FAIL" },
        report.checks.len(),
        skipped
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}
