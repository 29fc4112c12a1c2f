//! Verbs of the `pldpch` binary.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 unreadable or
//! malformed input, 3 infeasible request or constraint violation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pldpch::decoder::DecoderConfig;
use pldpch::lifting::{girth, lift_two_step};
use pldpch::pexit::{search, threshold_search, PexitConfig, ThresholdQuery};
use pldpch::protograph::{code_rate, geometry, validate, Protomatrix, PunctureSpec};
use pldpch::sim::{emit_results, run_point, SimCode, StopRule};

use crate::exec::Pool;
use crate::formats::{self, FormatError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl From<pldpch::Error> for CliError {
    fn from(e: pldpch::Error) -> Self {
        match e {
            pldpch::Error::Infeasible(_) => CliError::Infeasible(e.to_string()),
            pldpch::Error::Shape(_) | pldpch::Error::Layout(_) => CliError::Input(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn in_file(path: &Path) -> impl Fn(FormatError) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

const BUILTIN: [(&str, &str); 4] = [
    ("b7x11_r4", include_str!("../data/b7x11_r4.txt")),
    ("b6x10_r5", include_str!("../data/b6x10_r5.txt")),
    ("b5x15_r8", include_str!("../data/b5x15_r8.txt")),
    ("b6x24_r10", include_str!("../data/b6x24_r10.txt")),
];

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads a protomatrix file; `builtin:NAME` selects a bundled matrix.
pub fn load_proto(path: &Path) -> Result<Protomatrix> {
    let text = match path.to_str().and_then(|p| p.strip_prefix("builtin:")) {
        Some(name) => BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| (*t).to_string())
            .ok_or_else(|| CliError::Usage(format!("unknown bundled protomatrix `{name}`")))?,
        None => read_text(path)?,
    };
    formats::parse_protomatrix(&text).map_err(in_file(path))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `x` to three significant digits.
pub fn three_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Parser, Debug)]
#[command(name = "pldpch", version, about = "Protograph-based LDPC-Hadamard code tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact code rate, and k / N_total when lifting factors are given.
    Rate {
        #[arg(long)]
        proto: PathBuf,
        #[arg(long, requires = "z2")]
        z1: Option<usize>,
        #[arg(long, requires = "z1")]
        z2: Option<usize>,
        #[command(flatten)]
        punct: PunctureArgs,
    },
    /// Checks a protomatrix against a constraints file.
    Validate {
        #[arg(long)]
        proto: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
    },
    /// Random-restart protomatrix search under constraints.
    Search {
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        punct: PunctureArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// Best protomatrix so far, rewritten on every improvement.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold search by protograph EXIT analysis.
    Pexit {
        #[arg(long)]
        proto: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        punct: PunctureArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// Per-step CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-step lifting to a CPM table.
    Lift {
        #[arg(long)]
        proto: PathBuf,
        #[arg(long)]
        z1: usize,
        #[arg(long)]
        z2: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Girth of a CPM table.
    Girth {
        #[arg(long)]
        table: PathBuf,
        /// Longest cycle searched for.
        #[arg(long, default_value_t = 12)]
        cap: usize,
    },
    /// AWGN simulation campaign described by a TOML file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the campaign's Eb/N0 list.
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        ebn0: Option<Reals>,
        #[arg(long)]
        frame_errors: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// Newtypes so clap takes each list as a single value.
#[derive(Clone, Debug)]
struct Columns(Vec<usize>);

#[derive(Clone, Debug)]
struct Reals(Vec<f64>);

fn parse_columns(s: &str) -> std::result::Result<Columns, String> {
    formats::parse_columns(s).map(Columns)
}

fn parse_reals(s: &str) -> std::result::Result<Reals, String> {
    formats::parse_reals(s).map(Reals)
}

#[derive(Args, Debug)]
struct PunctureArgs {
    /// Punctured protograph columns, counted from 1 (e.g. `6,8`).
    #[arg(long, value_parser = parse_columns)]
    puncture_cols: Option<Columns>,
    /// Punctured degree-1 Hadamard nodes per check (odd r).
    #[arg(long, default_value_t = 0)]
    puncture_d1h: usize,
}

impl PunctureArgs {
    fn spec(&self) -> PunctureSpec {
        PunctureSpec::new(self.puncture_cols.clone().map(|c| c.0).unwrap_or_default(), self.puncture_d1h)
    }
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    #[arg(long, default_value_t = -1.40, allow_hyphen_values = true)]
    start_db: f64,
    /// Monte-Carlo samples per check update.
    #[arg(long, default_value_t = 10_000)]
    w: usize,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
}

impl AnalysisArgs {
    fn query(&self, b: Protomatrix, punct: PunctureSpec, seed: u64) -> ThresholdQuery {
        let cfg = PexitConfig { max_iters: self.max_iters, samples: self.w, seed, ..PexitConfig::default() };
        ThresholdQuery { start_db: self.start_db, ..ThresholdQuery::new(b, punct, cfg) }
    }
}

fn pool(workers: Option<usize>) -> Result<Pool> {
    Pool::new(workers.unwrap_or(0)).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_rate(proto: &Path, z: Option<(usize, usize)>, punct: &PunctureSpec) -> Result<String> {
    let b = load_proto(proto)?;
    let rate = code_rate(&b, punct)?;
    let mut out = format!("rate {rate} ≈ {}\n", three_sig(rate.to_f64()));
    if let Some((z1, z2)) = z {
        let g = geometry(&b, z1, z2, punct)?;
        let _ = writeln!(out, "k {}\nn_total {}", g.k, g.n_total);
    }
    Ok(out)
}

fn cmd_validate(proto: &Path, constraints: &Path) -> Result<String> {
    let b = load_proto(proto)?;
    let c = formats::parse_constraints(&read_text(constraints)?).map_err(in_file(constraints))?;
    match validate(&b, &c) {
        Ok(()) => Ok("ok\n".into()),
        Err(v) => {
            let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(CliError::Infeasible(format!("{} violation(s):\n{}", v.len(), list.join("\n"))))
        }
    }
}

fn threshold_line(t: Option<f64>, start: f64) -> String {
    match t {
        Some(t) => format!("threshold {t} dB\n"),
        None => format!("threshold above start ({start} dB)\n"),
    }
}

fn cmd_pexit(proto: &Path, seed: u64, a: &AnalysisArgs, punct: PunctureSpec, workers: Option<usize>, out: Option<&Path>) -> Result<String> {
    let b = load_proto(proto)?;
    let q = a.query(b, punct, seed);
    let rep = threshold_search(&q, &pool(workers)?)?;
    let csv = formats::write_pexit_report(&rep);
    let mut text = String::new();
    match out {
        Some(p) => write_out(Some(p), &csv)?,
        None => text.push_str(&csv),
    }
    text.push_str(&threshold_line(rep.threshold_db, a.start_db));
    Ok(text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    constraints: &Path,
    budget: usize,
    seed: u64,
    a: &AnalysisArgs,
    punct: PunctureSpec,
    workers: Option<usize>,
    out: Option<&Path>,
) -> Result<String> {
    let c = formats::parse_constraints(&read_text(constraints)?).map_err(in_file(constraints))?;
    let placeholder = Protomatrix::new(0, 0, Vec::new())?;
    let template = a.query(placeholder, punct, seed);
    let mut write_err = None;
    let rep = search(&c, budget, seed, &template, &pool(workers)?, |b, t| {
        if let Some(p) = out {
            let text = format!("# threshold {t} dB\n{}", formats::write_protomatrix(b));
            if let Err(e) = write_out(Some(p), &text) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let mut text = String::new();
    for (k, t) in rep.thresholds.iter().enumerate() {
        let _ = writeln!(text, "candidate {k}: {}", threshold_line(*t, a.start_db).trim_end());
    }
    match &rep.best {
        Some((b, t)) => {
            let _ = write!(text, "best threshold {t} dB\n{}", formats::write_protomatrix(b));
        }
        None => text.push_str("no candidate converged at the start point\n"),
    }
    Ok(text)
}

fn cmd_lift(proto: &Path, z1: usize, z2: usize, seed: u64, out: Option<&Path>) -> Result<String> {
    let b = load_proto(proto)?;
    let code = lift_two_step(&b, z1, z2, seed)?;
    let table = formats::write_cpm_table(&code);
    match out {
        Some(p) => {
            write_out(Some(p), &table)?;
            Ok(format!("{} block rows written to {}\n", code.block_rows(), p.display()))
        }
        None => Ok(table),
    }
}

fn cmd_girth(table: &Path, cap: usize) -> Result<String> {
    let code = formats::parse_cpm_table(&read_text(table)?).map_err(in_file(table))?;
    Ok(match girth(&code, cap) {
        Some(g) => format!("girth {g}\n"),
        None => format!("girth > {cap}\n"),
    })
}

struct SimOverrides {
    ebn0: Option<Vec<f64>>,
    frame_errors: Option<u64>,
    max_iters: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
}

fn cmd_simulate(config: &Path, o: SimOverrides) -> Result<String> {
    let base = config.parent().unwrap_or(Path::new("."));
    let camp = formats::parse_campaign(&read_text(config)?, base).map_err(in_file(config))?;
    let b = load_proto(&camp.proto)?;
    let punct = PunctureSpec::new(camp.puncture_cols.iter().map(|&c| c.checked_sub(1).ok_or_else(|| CliError::Input(format!("{}: puncture_cols count from 1", config.display())))).collect::<Result<_>>()?, camp.puncture_d1h);
    let sc = SimCode::new(lift_two_step(&b, camp.z1, camp.z2, camp.lift_seed)?, punct)?;
    let cfg = DecoderConfig { max_iters: o.max_iters.unwrap_or(camp.max_iters), early_stop: true };
    let stop = StopRule { max_frame_errors: o.frame_errors.unwrap_or(camp.frame_errors), max_frames: camp.max_frames };
    let exec = pool(o.workers)?;
    let mut rows = Vec::new();
    let mut violations = 0;
    for &db in o.ebn0.as_ref().unwrap_or(&camp.ebn0_db) {
        let st = run_point(&sc, &sc.point(db)?, &cfg, &stop, camp.seed, &exec)?;
        violations += st.spc_violations;
        rows.push((db, st));
    }
    assert_eq!(violations, 0, "decoder reported convergence on frames that violate a check");
    let csv = emit_results(&rows, sc.k() as u64);
    match o.out.or(camp.out) {
        Some(p) => {
            write_out(Some(&p), &csv)?;
            Ok(format!("{} point(s) written to {}\n", rows.len(), p.display()))
        }
        None => Ok(csv),
    }
}

fn dispatch(cmd: Command) -> Result<String> {
    match cmd {
        Command::Rate { proto, z1, z2, punct } => cmd_rate(&proto, z1.zip(z2), &punct.spec()),
        Command::Validate { proto, constraints } => cmd_validate(&proto, &constraints),
        Command::Search { constraints, budget, seed, analysis, punct, workers, out } => {
            cmd_search(&constraints, budget, seed, &analysis, punct.spec(), workers, out.as_deref())
        }
        Command::Pexit { proto, seed, analysis, punct, workers, out } => {
            cmd_pexit(&proto, seed, &analysis, punct.spec(), workers, out.as_deref())
        }
        Command::Lift { proto, z1, z2, seed, out } => cmd_lift(&proto, z1, z2, seed, out.as_deref()),
        Command::Girth { table, cap } => cmd_girth(&table, cap),
        Command::Simulate { config, ebn0, frame_errors, max_iters, workers, out } => {
            cmd_simulate(&config, SimOverrides { ebn0: ebn0.map(|r| r.0), frame_errors, max_iters, workers, out })
        }
    }
}

/// Parses `args` (program name first), runs the verb and maps the outcome
/// to an exit code.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.cmd) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_digits() {
        assert_eq!(three_sig(4.0 / 81.0), "0.0494");
        assert_eq!(three_sig(18.0 / 6096.0), "0.00295");
        assert_eq!(three_sig(4.0 / 79.0), "0.0506");
        assert_eq!(three_sig(0.5), "0.500");
        assert_eq!(three_sig(12.345), "12.3");
    }

    #[test]
    fn builtin_names() {
        assert_eq!(load_proto(Path::new("builtin:b7x11_r4")).unwrap().n(), 11);
        assert_eq!(load_proto(Path::new("builtin:nope")).unwrap_err().code(), 1);
    }
}
