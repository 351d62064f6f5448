//! Front end for the `dfls` binary: run suite problems, persist traces as
//! line-delimited JSON, verify them offline and list the registry.
//!
//! Everything here writes to a caller-supplied `Write` so the commands can be
//! exercised in tests without spawning the binary.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use dfls::diagnostics::{
    check_trace, chi_values, complexity_counters, identification_report, Identification,
    IdentificationReport, VerificationReport,
};
use dfls::problems::{initial_point, make_problem, StartPolicy, SuiteProblem, REGISTRY};
use dfls::{solve_with_mode, IterateRecord, SolverParams, Terminal, Trace, TraceMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: corrupt trace: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl CliError {
    /// 2 for bad input, 3 for unreadable or corrupt files.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io { .. } | CliError::Corrupt { .. } => 3,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<dfls::Error> for CliError {
    fn from(e: dfls::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Solver parameters given on the command line; unset fields keep defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamOverrides {
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    /// Same initial tentative step for every coordinate.
    pub initial_step: Option<f64>,
    pub stop_delta: Option<f64>,
    pub max_iterations: Option<u64>,
    pub max_evaluations: Option<u64>,
}

impl ParamOverrides {
    pub fn apply(&self, n: usize) -> SolverParams {
        let mut p = SolverParams::new(n);
        if let Some(v) = self.theta {
            p.theta = v;
        }
        if let Some(v) = self.delta {
            p.delta = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.c {
            p.c = v;
        }
        if let Some(v) = self.initial_step {
            p.initial_steps = vec![v; n];
        }
        if let Some(v) = self.stop_delta {
            p.stop_delta = v;
        }
        if let Some(v) = self.max_iterations {
            p.max_iterations = v;
        }
        if let Some(v) = self.max_evaluations {
            p.max_evaluations = v;
        }
        p
    }
}

/// One solve session.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub n: usize,
    pub seed: u64,
    pub params: ParamOverrides,
    pub start: StartPolicy,
    pub trace_path: Option<PathBuf>,
    /// Keep intermediate sweep points in the trace.
    pub verbose: bool,
}

impl RunConfig {
    pub fn new(problem: &str, n: usize, seed: u64) -> Self {
        Self {
            problem: problem.to_string(),
            n,
            seed,
            params: ParamOverrides::default(),
            start: StartPolicy::Center,
            trace_path: None,
            verbose: false,
        }
    }

    /// Builds the problem, validated parameters and starting point.
    pub fn resolve(&self) -> Result<Session> {
        let problem = make_problem(&self.problem, self.n, self.seed)?;
        let params = self.params.apply(self.n);
        params.validate(self.n)?;
        let x0 = initial_point(&problem, &self.start)?;
        Ok(Session {
            problem,
            params,
            x0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub problem: SuiteProblem,
    pub params: SolverParams,
    pub x0: Vec<f64>,
}

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format_version: u32,
    pub problem: String,
    pub n: usize,
    pub seed: u64,
    pub params: SolverParams,
    pub start: StartPolicy,
    pub x0: Vec<f64>,
    pub verbose: bool,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum LineOut<'a> {
    Header(&'a TraceHeader),
    Record(&'a IterateRecord),
    Terminal(&'a Terminal),
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum LineIn {
    Header(TraceHeader),
    Record(IterateRecord),
    Terminal(Terminal),
}

/// Header, one line per record, then the terminal state.
pub fn write_trace_to<W: Write>(w: &mut W, header: &TraceHeader, trace: &Trace) -> io::Result<()> {
    let mut line = |item: LineOut<'_>| -> io::Result<()> {
        serde_json::to_writer(&mut *w, &item)?;
        w.write_all(b"\n")
    };
    line(LineOut::Header(header))?;
    for r in &trace.records {
        line(LineOut::Record(r))?;
    }
    line(LineOut::Terminal(&trace.terminal))
}

pub fn write_trace(path: &Path, header: &TraceHeader, trace: &Trace) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_trace_to(&mut w, header, trace)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Trace)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let corrupt = |line: usize, reason: String| CliError::Corrupt {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut header = None;
    let mut records = Vec::new();
    let mut terminal = None;
    for (idx, text) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let text = text.map_err(|e| CliError::io(path, e))?;
        if terminal.is_some() {
            return Err(corrupt(lineno, "content after the terminal line".into()));
        }
        let item: LineIn =
            serde_json::from_str(&text).map_err(|e| corrupt(lineno, e.to_string()))?;
        match (item, header.is_some()) {
            (LineIn::Header(h), false) => {
                if h.format_version != FORMAT_VERSION {
                    return Err(corrupt(
                        lineno,
                        format!("unsupported format version {}", h.format_version),
                    ));
                }
                header = Some(h);
            }
            (_, false) => return Err(corrupt(lineno, "expected a header line".into())),
            (LineIn::Header(_), true) => return Err(corrupt(lineno, "second header".into())),
            (LineIn::Record(r), true) => {
                if r.k != records.len() as u64 {
                    return Err(corrupt(lineno, format!("record k={} out of sequence", r.k)));
                }
                records.push(r);
            }
            (LineIn::Terminal(t), true) => terminal = Some(t),
        }
    }
    let header = header.ok_or_else(|| corrupt(0, "empty file".into()))?;
    let terminal =
        terminal.ok_or_else(|| corrupt(records.len() + 1, "missing terminal line".into()))?;
    Ok((header, Trace { records, terminal }))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub header: TraceHeader,
    pub trace: Trace,
}

fn execute(config: &RunConfig) -> Result<RunOutput> {
    let s = config.resolve()?;
    let mode = if config.verbose {
        TraceMode::Verbose
    } else {
        TraceMode::Compact
    };
    let trace = solve_with_mode(&s.problem.problem, &s.params, &s.x0, mode)?;
    let header = TraceHeader {
        format_version: FORMAT_VERSION,
        problem: config.problem.clone(),
        n: config.n,
        seed: config.seed,
        params: s.params,
        start: config.start.clone(),
        x0: s.x0,
        verbose: config.verbose,
    };
    if let Some(path) = &config.trace_path {
        write_trace(path, &header, &trace)?;
    }
    Ok(RunOutput { header, trace })
}

pub fn summary_line(header: &TraceHeader, terminal: &Terminal) -> String {
    format!(
        "{} n={} seed={}: f={:e} delta={:e} iterations={} evaluations={} stop={}",
        header.problem,
        header.n,
        header.seed,
        terminal.f,
        terminal.delta,
        terminal.iterations,
        terminal.evaluations,
        terminal.reason.as_str()
    )
}

/// Solves one configuration, writes its trace if a path is set and prints a
/// summary line.
pub fn cmd_run<W: Write>(config: &RunConfig, out: &mut W) -> Result<RunOutput> {
    let run = execute(config)?;
    writeln!(out, "{}", summary_line(&run.header, &run.trace.terminal))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(run)
}

fn check_eps(eps: &[f64]) -> Result<()> {
    match eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        Some(e) => Err(CliError::Invalid(format!(
            "eps values must be positive and finite, got {e}"
        ))),
        None => Ok(()),
    }
}

/// Outcome of verifying one trace file.
#[derive(Debug, Clone)]
pub struct Verification {
    pub header: TraceHeader,
    pub report: VerificationReport,
    pub identification: std::result::Result<IdentificationReport, String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Re-runs every check on a persisted trace. Reads the file only.
pub fn verify_file(path: &Path, eps: &[f64]) -> Result<Verification> {
    check_eps(eps)?;
    let (header, trace) = read_trace(path)?;
    let corrupt = |reason: String| CliError::Corrupt {
        path: path.to_path_buf(),
        line: 1,
        reason,
    };
    let sp = make_problem(&header.problem, header.n, header.seed)
        .map_err(|e| corrupt(format!("cannot rebuild problem: {e}")))?;
    header
        .params
        .validate(header.n)
        .map_err(|e| corrupt(format!("invalid parameters: {e}")))?;
    if let Some(first) = trace.records.first() {
        if first.x_before != header.x0 {
            return Err(corrupt("x0 does not match the first record".into()));
        }
    }
    let report = check_trace(&trace, &sp.problem, &header.params, eps)?;
    let identification = identification_report(&trace, &sp.problem).map_err(|e| e.to_string());
    Ok(Verification {
        header,
        report,
        identification,
    })
}

fn write_out<W: Write>(out: &mut W, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Prints the verification report for `path`; returns whether every enabled
/// check passed.
pub fn cmd_verify<W: Write>(path: &Path, eps: &[f64], json: bool, out: &mut W) -> Result<bool> {
    let v = verify_file(path, eps)?;
    let h = &v.header;
    let skipped = v
        .report
        .checks
        .iter()
        .filter(|c| matches!(c.status, dfls::diagnostics::CheckStatus::Skipped(_)))
        .count();
    if json {
        let ident = match &v.identification {
            Ok(r) => serde_json::json!({
                "strict_active": r.strict_active,
                "zeta": r.zeta,
                "first_identified_iteration": r.first_identified_iteration,
                "summary": r.describe(),
            }),
            Err(e) => serde_json::json!({ "error": e }),
        };
        let doc = serde_json::json!({
            "trace": path.display().to_string(),
            "problem": h.problem,
            "n": h.n,
            "seed": h.seed,
            "passed": v.passed(),
            "checks": v.report.checks,
            "notes": v.report.notes,
            "constants": v.report.constants,
            "identification": ident,
        });
        let text = serde_json::to_string_pretty(&doc).expect("report serializes");
        write_out(out, &format!("{text}\n"))?;
    } else {
        let mut text = format!(
            "trace {}: {} n={} seed={}\n{}",
            path.display(),
            h.problem,
            h.n,
            h.seed,
            v.report
        );
        match &v.identification {
            Ok(r) => text.push_str(&format!("identification: {}\n", r.describe())),
            Err(e) => text.push_str(&format!("identification: unavailable ({e})\n")),
        }
        if skipped > 0 {
            text.push_str(&format!(
                "warning: {skipped} check(s) skipped for missing metadata\n"
            ));
        }
        text.push_str(if v.passed() {
            "result: PASS\n"
        } else {
            "result: FAIL\n"
        });
        write_out(out, &text)?;
    }
    Ok(v.passed())
}

/// Prints the problem registry.
pub fn cmd_list<W: Write>(json: bool, out: &mut W) -> Result<()> {
    let text = if json {
        serde_json::to_string_pretty(REGISTRY).expect("registry serializes") + "\n"
    } else {
        let mut s = String::new();
        for p in REGISTRY {
            let dims = if p.even_dimension_only {
                "even n"
            } else {
                "any n"
            };
            let flag = if p.degenerate {
                "degenerate"
            } else {
                "non-degenerate"
            };
            s.push_str(&format!(
                "{:<18} {:<7} {:<15} {}\n",
                p.name, dims, flag, p.description
            ));
        }
        s
    };
    write_out(out, &text)
}

/// Many sessions over problems, dimensions and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub problems: Vec<String>,
    pub dims: Vec<usize>,
    pub seeds: Range<u64>,
    pub params: ParamOverrides,
    pub start: StartPolicy,
    /// One trace file per session is written here when set.
    pub trace_dir: Option<PathBuf>,
    pub eps: Vec<f64>,
    pub verbose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub n: usize,
    pub seed: u64,
    pub iterations: u64,
    pub evaluations: u64,
    pub final_f: f64,
    pub final_delta: f64,
    pub j_eps: Vec<Option<usize>>,
    pub identified_at: String,
}

pub fn trace_file_name(problem: &str, n: usize, seed: u64) -> String {
    format!("{problem}-n{n}-s{seed}.jsonl")
}

fn summarize(config: &RunConfig, eps: &[f64]) -> Result<SummaryRow> {
    let run = execute(config)?;
    let sp = make_problem(&config.problem, config.n, config.seed)?;
    let chis = chi_values(&run.trace, &sp.problem)?;
    let j_eps = eps
        .iter()
        .map(|&e| complexity_counters(&run.trace, &chis, e).map(|c| c.j_eps))
        .collect::<dfls::Result<Vec<_>>>()?;
    let identified_at = match identification_report(&run.trace, &sp.problem) {
        Ok(r) => match r.first_identified_iteration {
            Identification::At(k) => k.to_string(),
            Identification::Never => "never".into(),
            Identification::Vacuous => "vacuous".into(),
        },
        Err(_) => String::new(),
    };
    let t = &run.trace.terminal;
    Ok(SummaryRow {
        problem: config.problem.clone(),
        n: config.n,
        seed: config.seed,
        iterations: t.iterations,
        evaluations: t.evaluations,
        final_f: t.f,
        final_delta: t.delta,
        j_eps,
        identified_at,
    })
}

/// Runs every (problem, n, seed) combination in parallel. Each session owns
/// its counter and trace file; rows come back in input order.
pub fn run_batch(config: &BatchConfig) -> Result<Vec<SummaryRow>> {
    check_eps(&config.eps)?;
    if config.seeds.is_empty() {
        return Err(CliError::Invalid("seed range is empty".into()));
    }
    if let Some(dir) = &config.trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut sessions = Vec::new();
    for problem in &config.problems {
        for &n in &config.dims {
            for seed in config.seeds.clone() {
                let run = RunConfig {
                    problem: problem.clone(),
                    n,
                    seed,
                    params: config.params.clone(),
                    start: config.start.clone(),
                    trace_path: config
                        .trace_dir
                        .as_ref()
                        .map(|d| d.join(trace_file_name(problem, n, seed))),
                    verbose: config.verbose,
                };
                run.resolve()?;
                sessions.push(run);
            }
        }
    }
    sessions
        .par_iter()
        .map(|s| summarize(s, &config.eps))
        .collect()
}

pub fn write_summary<W: Write>(w: W, eps: &[f64], rows: &[SummaryRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut head: Vec<String> = [
        "problem",
        "n",
        "seed",
        "iters",
        "evals",
        "final_f",
        "final_delta",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    head.extend(eps.iter().map(|e| format!("j_eps[{e}]")));
    head.push("identified_at".into());
    out.write_record(&head)?;
    for r in rows {
        let mut rec = vec![
            r.problem.clone(),
            r.n.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.evaluations.to_string(),
            r.final_f.to_string(),
            r.final_delta.to_string(),
        ];
        rec.extend(
            r.j_eps
                .iter()
                .map(|j| j.map_or("not-reached".to_string(), |v| v.to_string())),
        );
        rec.push(r.identified_at.clone());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Batch run followed by the CSV summary, written to `summary` or `out`.
pub fn cmd_batch<W: Write>(
    config: &BatchConfig,
    summary: Option<&Path>,
    out: &mut W,
) -> Result<Vec<SummaryRow>> {
    let rows = run_batch(config)?;
    let csv_err = |path: &Path, e: csv::Error| CliError::io(path, io::Error::other(e));
    match summary {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            write_summary(BufWriter::new(file), &config.eps, &rows)
                .map_err(|e| csv_err(path, e))?;
        }
        None => write_summary(&mut *out, &config.eps, &rows)
            .map_err(|e| csv_err(Path::new("<stdout>"), e))?,
    }
    Ok(rows)
}

/// Parses `a..b` into a half-open range.
pub fn parse_seed_range(s: &str) -> Result<Range<u64>> {
    let bad = || CliError::Invalid(format!("seed range must look like A..B, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    Ok(a..b)
}
