//! Command-line front end. Every subcommand validates its arguments, then
//! computes one report; reports render as CSV (default) or JSON.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{self, SieveConfig};
use crate::arrangement::{self, ErrorModel};
use crate::automaton::{self, Dfa, LeadingZeroPolicy};
use crate::complexity::{self, SubwordOptions};
use crate::equidist::{self, DichotomyOutcome};
use crate::error::{invalid, Error, Result};
use crate::exactmath::{frac_scaled_power, ExponentC};
use crate::par;
use crate::sequences::{self, IndexMode, IntPolynomial, SequenceSpec, Weight};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "autoseq", version, about = "Automatic sequences along Piatetski-Shapiro and polynomial indices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_enum, default_value = "csv", alias = "emit")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Validate the configuration and stop before computing.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Automaton file in the text format.
    #[arg(long, conflicts_with = "builtin")]
    pub automaton: Option<PathBuf>,
    /// thue-morse, mod:M:K, cerny:N or const:A:K.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Redirect the initial state's 0-transition to itself instead of rejecting.
    #[arg(long)]
    pub repair_leading_zeros: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Indexing {
    /// Exponent p/q; evaluate along ⌊n^c⌋.
    #[arg(long)]
    pub c: Option<ExponentC>,
    /// With --c, evaluate along ⌊p_n^c⌋.
    #[arg(long, requires = "c")]
    pub primes: bool,
    /// Polynomial index z0,z1,...
    #[arg(long, conflicts_with = "c", allow_hyphen_values = true)]
    pub poly: Option<IntPolynomial>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Letters a(g(n)) for a range of n.
    Eval {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        index: Indexing,
        #[arg(long, default_value_t = 1)]
        start: u64,
        #[arg(long, default_value_t = 20)]
        count: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Letter frequencies over n = 1..=N.
    Freq {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        index: Indexing,
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Λ-weighted letter sums against θ̂·Ψ(N).
    Pnt {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        index: Indexing,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        n1: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted letter sums, Möbius by default.
    Mobius {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        index: Indexing,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value = "mobius")]
        weight: Weight,
        #[command(flatten)]
        common: Common,
    },
    /// Subword complexity N_H for H = 1..=Hmax.
    Subwords {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        index: Indexing,
        #[arg(long, default_value_t = 1)]
        start: u64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long = "Hmax")]
        h_max: usize,
        #[arg(long)]
        hashes_only: bool,
        #[command(flatten)]
        common: Common,
    },
    /// The words u_{ℓ,i}, optionally located in a sequence.
    Lowerbound {
        #[arg(long)]
        m: u32,
        #[arg(long = "H")]
        h: u32,
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        index: Indexing,
        /// Search occurrences with window start ≤ LIMIT.
        #[arg(long)]
        limit: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Distinct windows of a(P(n)) over small integer polynomials.
    Polysweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        coeff_bound: u32,
        #[arg(long = "H")]
        h: usize,
        #[arg(long)]
        start_bound: u64,
        #[arg(long, default_value_t = complexity::DEFAULT_SWEEP_BUDGET)]
        budget: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Discrepancy of a point file or of {A·n^c}, n = 1..=N.
    Discrepancy {
        #[arg(long, conflicts_with_all = ["c", "n"])]
        points: Option<PathBuf>,
        #[arg(long)]
        c: Option<ExponentC>,
        #[arg(long = "N")]
        n: Option<u64>,
        #[arg(long = "A", default_value_t = 1.0, allow_hyphen_values = true)]
        a: f64,
        /// Erdős–Turán cutoff; 0 skips the bound.
        #[arg(long = "K", default_value_t = 0)]
        k: u32,
        #[arg(long = "C", default_value_t = equidist::DEFAULT_ET_CONSTANT)]
        et_c: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted totals of n ≤ N by ⌊n^c⌋ mod m.
    Residues {
        #[arg(long)]
        c: ExponentC,
        #[arg(long)]
        m: u64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value = "unit")]
        weight: Weight,
        #[command(flatten)]
        common: Common,
    },
    /// Σ_{n≤N} w(n) e(A n^c).
    Expsum {
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        c: ExponentC,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value = "unit")]
        weight: Weight,
        #[command(flatten)]
        common: Common,
    },
    /// Counts of n < k^λ whose P(n) has prescribed digits μ..λ.
    Highdigits {
        #[arg(long, allow_hyphen_values = true)]
        poly: IntPolynomial,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        lambda: u32,
        #[arg(long)]
        mu: u32,
        /// One block value; all of them when absent.
        #[arg(long)]
        w: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Equidistribution or rational approximation of Σ β_j n^j.
    Dichotomy {
        /// β_1,...,β_d as decimals or p/q.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        beta: Vec<String>,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        ell_max: u64,
        #[arg(long)]
        threshold: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Words realized by the strip model, with witness points.
    Cells {
        #[arg(long)]
        m: u32,
        #[arg(long = "H")]
        h: u32,
        /// Exponent for sampling with random error terms.
        #[arg(long)]
        c: Option<ExponentC>,
        /// ε of a fixed error model f_h = ε h² (1 + g_h).
        #[arg(long)]
        error_model: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        g: Vec<String>,
        #[arg(long, requires = "c")]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Synchronization of the minimal automaton.
    Sync {
        #[command(flatten)]
        source: Source,
        /// Force the exhaustive shortest reset word search.
        #[arg(long)]
        exact: bool,
        /// Count non-synchronizing words up to this length.
        #[arg(long)]
        eta: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// The k-kernel as state maps.
    Kernel {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
    },
    /// M(N), Ψ(N), π(N), or a table of μ, Λ over [lo, hi).
    Sieve {
        #[arg(long = "N")]
        n: Option<u64>,
        #[arg(long, requires = "hi")]
        lo: Option<u64>,
        #[arg(long, requires = "lo")]
        hi: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Eval { common, .. }
            | Command::Freq { common, .. }
            | Command::Pnt { common, .. }
            | Command::Mobius { common, .. }
            | Command::Subwords { common, .. }
            | Command::Lowerbound { common, .. }
            | Command::Polysweep { common, .. }
            | Command::Discrepancy { common, .. }
            | Command::Residues { common, .. }
            | Command::Expsum { common, .. }
            | Command::Highdigits { common, .. }
            | Command::Dichotomy { common, .. }
            | Command::Cells { common, .. }
            | Command::Sync { common, .. }
            | Command::Kernel { common, .. }
            | Command::Sieve { common, .. } => common,
        }
    }
}

/// A tabular result with summary values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: BTreeMap<String, Value>,
}

impl Report {
    fn new(columns: &[&str]) -> Self {
        Report { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), summary: BTreeMap::new() }
    }

    fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    fn note(&mut self, key: &str, v: Value) {
        self.summary.insert(key.to_string(), v);
    }

    /// Everything except the configuration header.
    pub fn body(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.iter().map(csv_cell).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                for (k, v) in &self.summary {
                    s.push_str(&format!("# {k}={}\n", csv_cell(v)));
                }
                s
            }
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn render(name: &str, params: &[(String, String)], report: Option<&Report>, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = format!("# autoseq {VERSION}\n# command={name}\n");
            for (k, v) in params {
                s.push_str(&format!("# {k}={v}\n"));
            }
            match report {
                Some(r) => s.push_str(&r.body(format)),
                None => s.push_str("# dry-run: configuration valid\n"),
            }
            s
        }
        Format::Json => {
            let config: serde_json::Map<String, Value> = params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            let mut doc = json!({ "tool": "autoseq", "version": VERSION, "command": name, "config": config });
            match report {
                Some(r) => {
                    doc["columns"] = json!(r.columns);
                    doc["rows"] = json!(r.rows);
                    doc["summary"] = json!(r.summary);
                }
                None => doc["dry_run"] = json!(true),
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    }
}

/// Every argument of the subcommand as resolved by the parser, defaults
/// included, keyed by its long flag.
fn echo_params(name: &str, sub: &ArgMatches) -> Vec<(String, String)> {
    let cmd = Cli::command();
    let sc = cmd.find_subcommand(name).expect("known subcommand");
    let mut out = Vec::new();
    for arg in sc.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if long == "output" {
            continue;
        }
        if let Ok(Some(vals)) = sub.try_get_raw(id) {
            let joined: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push((long.to_string(), joined.join(",")));
        }
    }
    out.push(("memory_budget".into(), arith::memory_budget_from_env().to_string()));
    out
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Domain(_) | Error::Parse(_) => 2,
        Error::ResourceLimit(_) => 3,
        Error::Io(_) => 1,
    }
}

/// Runs the CLI; report text goes to `out` unless `--output` names a file.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let common = cli.command.common().clone();
    let params = echo_params(name, sub);
    match execute(&cli.command, &common) {
        Ok(report) => {
            let text = render(name, &params, report.as_ref(), common.format);
            let written = match &common.output {
                Some(path) => std::fs::write(path, text).map_err(Error::from),
                None => out.write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "autoseq: {e}");
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "autoseq {name}: {e}");
            exit_code(&e)
        }
    }
}

/// [`run`] with captured output: `(exit code, stdout, stderr)`.
pub fn run_captured<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(args, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

type Job = Box<dyn FnOnce() -> Result<Report> + Send>;

fn execute(cmd: &Command, common: &Common) -> Result<Option<Report>> {
    if common.workers == 0 {
        return Err(invalid!("--workers must be at least 1"));
    }
    let job = prepare(cmd, common.workers)?;
    if common.dry_run {
        return Ok(None);
    }
    par::install(common.workers, job).map(Some)
}

fn load_dfa(src: &Source) -> Result<Dfa> {
    let policy = if src.repair_leading_zeros { LeadingZeroPolicy::Repair } else { LeadingZeroPolicy::Reject };
    match (&src.automaton, &src.builtin) {
        (Some(path), _) => Dfa::parse(&std::fs::read_to_string(path)?, policy),
        (None, Some(name)) => automaton::builtin(name),
        (None, None) => Err(invalid!("one of --automaton or --builtin is required")),
    }
}

fn load_spec(src: &Source, ix: &Indexing) -> Result<SequenceSpec> {
    let dfa = load_dfa(src)?;
    let mode = match (ix.c, ix.primes, &ix.poly) {
        (Some(c), true, _) => IndexMode::PiatetskiPrimes(c),
        (Some(c), false, _) => IndexMode::Piatetski(c),
        (None, _, Some(p)) => IndexMode::Polynomial(p.clone()),
        (None, _, None) => IndexMode::Direct,
    };
    Ok(SequenceSpec::new(dfa, mode))
}

fn positive(name: &str, v: u64) -> Result<()> {
    if v == 0 {
        return Err(invalid!("--{name} must be at least 1"));
    }
    Ok(())
}

fn sieve_cfg(workers: usize, n: u64) -> Result<SieveConfig> {
    let cfg = SieveConfig { workers, ..SieveConfig::default() };
    if n > cfg.global_bound {
        return Err(invalid!("N = {n} exceeds the global bound {}", cfg.global_bound));
    }
    Ok(cfg)
}

fn word_str(w: &[u32]) -> String {
    if w.iter().all(|&a| a < 10) {
        w.iter().map(|a| a.to_string()).collect()
    } else {
        w.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(":")
    }
}

fn rat_str(r: &BigRational) -> String {
    r.to_string()
}

fn parse_rat(s: &str) -> Result<BigRational> {
    equidist::parse_rational(s)
}

fn prepare(cmd: &Command, workers: usize) -> Result<Job> {
    Ok(match cmd {
        Command::Eval { source, index, start, count, .. } => {
            let spec = load_spec(source, index)?;
            let (start, count) = (*start, *count);
            if matches!(spec.mode, IndexMode::PiatetskiPrimes(_)) && start == 0 {
                return Err(invalid!("prime indices start at 1"));
            }
            Box::new(move || {
                let letters = spec.stream_with(start, count, workers)?;
                let mut r = Report::new(&["n", "index", "letter"]);
                for (i, a) in letters.iter().enumerate() {
                    let n = start + i as u64;
                    r.row(vec![json!(n), json!(spec.index_value(n)?.to_string()), json!(spec.dfa.letter_name(*a))]);
                }
                Ok(r)
            })
        }
        Command::Freq { source, index, n, .. } => {
            let spec = load_spec(source, index)?;
            let n = *n;
            positive("N", n)?;
            Box::new(move || {
                let f = sequences::letter_frequencies_with(&spec, n, workers)?;
                let mut r = Report::new(&["letter", "count", "rate"]);
                for (&a, &cnt) in &f.counts {
                    r.row(vec![json!(spec.dfa.letter_name(a)), json!(cnt), json!(f.rate(a))]);
                }
                r.note("N", json!(n));
                r.note("rate_sum", json!(f.rate_sum_exact().to_string()));
                Ok(r)
            })
        }
        Command::Pnt { source, index, n, n1, .. } => {
            let spec = load_spec(source, index)?;
            let (n, n1) = (*n, *n1);
            positive("N", n)?;
            let cfg = sieve_cfg(workers, n)?;
            Box::new(move || {
                let p = sequences::pnt_report(&spec, n, n1, &cfg)?;
                let mut r = Report::new(&["letter", "sum", "theta", "prediction", "ratio"]);
                for row in &p.rows {
                    r.row(vec![
                        json!(spec.dfa.letter_name(row.letter)),
                        json!(row.sum),
                        json!(row.theta),
                        json!(row.prediction),
                        json!(row.ratio),
                    ]);
                }
                r.note("psi", json!(p.psi));
                r.note("n1", json!(p.n1));
                r.note("synchronizing", json!(p.synchronizing));
                Ok(r)
            })
        }
        Command::Mobius { source, index, n, weight, .. } => {
            let spec = load_spec(source, index)?;
            let (n, weight) = (*n, *weight);
            positive("N", n)?;
            let cfg = sieve_cfg(workers, n)?;
            Box::new(move || {
                let t = sequences::weighted_totals(&spec, weight, n, &cfg)?;
                let mut r = Report::new(&["letter", "total", "ratio_to_N"]);
                for (&a, &v) in &t.totals {
                    let total = match &t.exact {
                        Some(ex) => json!(ex.get(&a).copied().unwrap_or(0)),
                        None => json!(v),
                    };
                    r.row(vec![json!(spec.dfa.letter_name(a)), total, json!(v / n as f64)]);
                }
                r.note("grand_total", json!(t.grand_total));
                Ok(r)
            })
        }
        Command::Subwords { source, index, start, n, h_max, hashes_only, .. } => {
            let spec = load_spec(source, index)?;
            let (start, n, h_max) = (*start, *n, *h_max);
            positive("N", n)?;
            positive("Hmax", h_max as u64)?;
            let opts = SubwordOptions { workers, hashes_only: *hashes_only, ..SubwordOptions::default() };
            Box::new(move || {
                let p = complexity::subword_count_with(&spec, start, n, h_max, &opts)?;
                let mut r = Report::new(&["H", "N_H", "log2_N_H_over_H"]);
                for h in 1..=h_max {
                    let c = p.count(h);
                    r.row(vec![json!(h), json!(c), json!((c as f64).log2() / h as f64)]);
                }
                r.note("method", json!(format!("{:?}", p.method)));
                if h_max >= 8 {
                    let d = complexity::determinism_diagnostic(&p)?;
                    r.note("entropy_slope", json!(d.entropy_slope));
                    r.note("exponent_fit", json!(d.exponent_fit));
                }
                Ok(r)
            })
        }
        Command::Lowerbound { m, h, source, index, limit, .. } => {
            let words = complexity::lower_bound_words(*m, *h)?;
            let search = match limit {
                Some(l) => Some((load_spec(source, index)?, *l)),
                None => None,
            };
            Box::new(move || {
                let mut r = Report::new(&["ell", "i", "word", "found_at"]);
                let found = match &search {
                    Some((spec, l)) => {
                        let ws: Vec<Vec<u32>> = words.words.iter().map(|w| w.word.clone()).collect();
                        Some(complexity::find_occurrences(spec, &ws, *l, workers)?)
                    }
                    None => None,
                };
                for (j, w) in words.words.iter().enumerate() {
                    let at = found.as_ref().map(|f| json!(f[j].index())).unwrap_or(Value::Null);
                    r.row(vec![json!(w.ell), json!(w.i), json!(word_str(&w.word)), at]);
                }
                r.note("distinct", json!(words.distinct().len()));
                r.note("short_regime", json!(words.short_regime));
                if let Some(f) = &found {
                    r.note("missing", json!(f.iter().filter(|o| o.index().is_none()).count()));
                }
                Ok(r)
            })
        }
        Command::Polysweep { source, d, coeff_bound, h, start_bound, budget, .. } => {
            let dfa = load_dfa(source)?;
            let (d, b, h, sb, budget) = (*d, *coeff_bound, *h, *start_bound, *budget);
            positive("H", h as u64)?;
            Box::new(move || {
                let s = complexity::poly_subword_sweep(&dfa, d, b, h, sb, budget)?;
                let mut r = Report::new(&["distinct", "polynomials", "windows", "skipped_negative"]);
                r.row(vec![json!(s.distinct), json!(s.polynomials), json!(s.windows), json!(s.skipped_negative)]);
                Ok(r)
            })
        }
        Command::Discrepancy { points, c, n, a, k, et_c, .. } => {
            let (a, k, et_c) = (*a, *k, *et_c);
            if et_c.is_nan() || et_c <= 0.0 {
                return Err(invalid!("--C must be positive"));
            }
            let pts_src: Box<dyn FnOnce() -> Result<Vec<f64>> + Send> = match (points, c, n) {
                (Some(path), _, _) => {
                    let text = std::fs::read_to_string(path)?;
                    let pts = text
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(|l| l.parse::<f64>().map_err(|_| Error::Parse(format!("bad point `{l}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    Box::new(move || Ok(pts))
                }
                (None, Some(c), Some(n)) => {
                    let (c, n) = (*c, *n);
                    positive("N", n)?;
                    if !a.is_finite() {
                        return Err(invalid!("--A must be finite"));
                    }
                    let bits = 64 + (64 - n.leading_zeros()) + a.abs().max(1.0).log2().ceil() as u32;
                    Box::new(move || {
                        use rayon::prelude::*;
                        Ok((1..=n).into_par_iter().map(|m| frac_scaled_power(m, c, a, bits)).collect())
                    })
                }
                _ => return Err(invalid!("give either --points or both --c and --N")),
            };
            Box::new(move || {
                let pts = pts_src()?;
                let rep = if k > 0 { equidist::discrepancy_with_et(&pts, k, et_c)? } else { equidist::discrepancy(&pts)? };
                let mut r = Report::new(&["N", "d_star", "d_extreme", "bracket_lo", "bracket_hi", "et_bound", "et_dominates"]);
                r.row(vec![
                    json!(rep.n),
                    json!(rep.d_star),
                    json!(rep.d_extreme),
                    json!(rep.d_extreme_bracket.0),
                    json!(rep.d_extreme_bracket.1),
                    json!(rep.erdos_turan.as_ref().map(|e| e.bound)),
                    json!(rep.et_dominates()),
                ]);
                Ok(r)
            })
        }
        Command::Residues { c, m, n, weight, .. } => {
            let (c, m, n, weight) = (*c, *m, *n, *weight);
            positive("m", m)?;
            positive("N", n)?;
            let cfg = sieve_cfg(workers, n)?;
            Box::new(move || {
                let rep = equidist::residue_counts(c, m, n, weight, &cfg)?;
                let mut r = Report::new(&["residue", "total", "deviation"]);
                for (res, &t) in rep.totals.iter().enumerate() {
                    let total = match &rep.exact {
                        Some(ex) => json!(ex[res]),
                        None => json!(t),
                    };
                    r.row(vec![json!(res), total, json!(t - rep.main_term)]);
                }
                r.note("main_term", json!(rep.main_term));
                r.note("grand_total", json!(rep.grand_total));
                r.note("max_abs_dev", json!(rep.max_abs_dev));
                r.note("max_rel_dev", json!(rep.max_rel_dev));
                Ok(r)
            })
        }
        Command::Expsum { a, c, n, weight, .. } => {
            let (a, c, n, weight) = (*a, *c, *n, *weight);
            positive("N", n)?;
            let cfg = sieve_cfg(workers, n)?;
            Box::new(move || {
                let s = equidist::exp_sum_power(a, c, n, weight, &cfg)?;
                let mut r = Report::new(&["re", "im", "magnitude", "magnitude_over_N"]);
                r.row(vec![json!(s.re), json!(s.im), json!(s.magnitude()), json!(s.magnitude() / n as f64)]);
                Ok(r)
            })
        }
        Command::Highdigits { poly, k, lambda, mu, w, .. } => {
            let (poly, k, lambda, mu, w) = (poly.clone(), *k, *lambda, *mu, *w);
            if poly.degree() == 0 {
                return Err(invalid!("polynomial must have degree at least 1"));
            }
            equidist::check_high_digit_args(k, lambda, mu, w)?;
            Box::new(move || {
                let mut r = Report::new(&["w", "count"]);
                let threshold = equidist::high_digit_threshold(k, lambda, poly.degree());
                let max = match w {
                    Some(w) => {
                        let rep = equidist::high_digit_counts(&poly, k, lambda, mu, w)?;
                        r.row(vec![json!(w), json!(rep.count)]);
                        rep.count
                    }
                    None => {
                        let hist = equidist::high_digit_histogram(&poly, k, lambda, mu)?;
                        for (w, &cnt) in hist.iter().enumerate() {
                            r.row(vec![json!(w), json!(cnt)]);
                        }
                        hist.into_iter().max().unwrap_or(0)
                    }
                };
                r.note("threshold", json!(threshold));
                r.note("max_count", json!(max));
                Ok(r)
            })
        }
        Command::Dichotomy { beta, n, delta, ell_max, threshold, .. } => {
            let betas = beta.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?;
            let threshold = threshold.as_deref().map(parse_rat).transpose()?;
            let (n, delta, ell_max) = (*n, *delta, *ell_max);
            positive("N", n)?;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(invalid!("--delta must lie in (0, 1)"));
            }
            Box::new(move || {
                let out = equidist::weyl_dichotomy(&betas, n, delta, ell_max, threshold)?;
                let mut r = Report::new(&["outcome", "d_star", "ell", "witness", "witness_f64"]);
                let row = match &out {
                    DichotomyOutcome::Equidistributed { d_star } => {
                        vec![json!("equidistributed"), json!(d_star), Value::Null, Value::Null, Value::Null]
                    }
                    DichotomyOutcome::Rational { d_star, ell, witness } => vec![
                        json!("rational"),
                        json!(d_star),
                        json!(ell),
                        json!(rat_str(witness)),
                        json!(witness.to_f64()),
                    ],
                    DichotomyOutcome::Unresolved { d_star, best_ell, best_witness } => vec![
                        json!("unresolved"),
                        json!(d_star),
                        json!(best_ell),
                        json!(rat_str(best_witness)),
                        json!(best_witness.to_f64()),
                    ],
                };
                r.row(row);
                Ok(r)
            })
        }
        Command::Cells { m, h, c, error_model, g, samples, seed, .. } => {
            let (m, h) = (*m, *h);
            positive("m", m as u64)?;
            positive("H", h as u64)?;
            let model = match error_model {
                Some(eps) => {
                    let g = g.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?;
                    Some(ErrorModel::new(parse_rat(eps)?, g)?)
                }
                None if !g.is_empty() => return Err(invalid!("--g needs --error-model")),
                None => None,
            };
            let sampling = match (samples, seed, c) {
                (Some(s), Some(seed), Some(c)) => {
                    if model.is_some() {
                        return Err(invalid!("--samples draws its own error terms; drop --error-model"));
                    }
                    Some((*s, *seed, *c))
                }
                (Some(_), None, _) => return Err(invalid!("--samples requires --seed")),
                _ => None,
            };
            if sampling.is_none() && (m as u64) * (h as u64).pow(2) > arrangement::MAX_LINES_2D {
                return Err(crate::error::resource!("m·H² exceeds {}", arrangement::MAX_LINES_2D));
            }
            let d = sampling.map(|(_, _, c)| c.degree()).unwrap_or(1);
            Box::new(move || {
                let words = match sampling {
                    Some((s, seed, c)) => arrangement::sample_words(c, m, h, s, seed)?,
                    None => arrangement::enumerate_words_2d(m, h, model.as_ref())?,
                };
                let cols: Vec<String> = std::iter::once("word".to_string()).chain((0..=d).map(|j| format!("x{j}"))).collect();
                let mut r = Report { columns: cols, rows: Vec::new(), summary: BTreeMap::new() };
                for (w, s) in &words {
                    let mut row = vec![json!(word_str(w))];
                    row.extend(s.point.iter().map(|x| json!(rat_str(x))));
                    r.row(row);
                }
                r.note("words", json!(words.len()));
                r.note("cell_bound", json!(arrangement::count_cells_bound(m as u64, h as u64, d)?.to_string()));
                Ok(r)
            })
        }
        Command::Sync { source, exact, eta, .. } => {
            let dfa = load_dfa(source)?;
            let (exact, eta) = (*exact, *eta);
            Box::new(move || {
                let rep = automaton::is_synchronizing(&dfa);
                let word = if exact && rep.synchronizing {
                    automaton::shortest_reset_word(&dfa.minimize())?
                } else {
                    rep.reset_word.clone()
                };
                let mut r = Report::new(&["synchronizing", "reset_word", "length", "minimal_states"]);
                r.row(vec![
                    json!(rep.synchronizing),
                    json!(word.as_ref().map(|w| w.iter().map(|d| d.to_string()).collect::<String>())),
                    json!(word.as_ref().map(Vec::len)),
                    json!(rep.minimal_states),
                ]);
                if let Some(len) = eta {
                    let e = automaton::estimate_eta(&dfa, len)?;
                    r.note("eta_hat", json!(e.eta_hat));
                    r.note("first_sync_len", json!(e.first_sync_len));
                }
                Ok(r)
            })
        }
        Command::Kernel { source, .. } => {
            let dfa = load_dfa(source)?;
            Box::new(move || {
                let k = automaton::kernel(&dfa)?;
                let mut r = Report::new(&["element", "lambda", "r", "state_map", "output_fn", "constant"]);
                for (i, e) in k.elements.iter().enumerate() {
                    let (lambda, rr) = e.lambda_r(dfa.base());
                    r.row(vec![
                        json!(i),
                        json!(lambda),
                        json!(rr.to_string()),
                        json!(word_str(&e.state_map)),
                        json!(word_str(&e.output_fn)),
                        json!(e.is_constant()),
                    ]);
                }
                r.note("elements", json!(k.elements.len()));
                r.note("output_functions", json!(k.output_functions.len()));
                Ok(r)
            })
        }
        Command::Sieve { n, lo, hi, .. } => match (n, lo, hi) {
            (Some(n), None, None) => {
                let n = *n;
                positive("N", n)?;
                let cfg = sieve_cfg(workers, n)?;
                Box::new(move || {
                    let mut r = Report::new(&["N", "mertens", "psi", "prime_count"]);
                    let pi = arith::map_segments(1, n + 1, &cfg, |t| (t.lo()..t.hi()).filter(|&x| t.is_prime(x)).count() as u64)?
                        .into_iter()
                        .sum::<u64>();
                    r.row(vec![
                        json!(n),
                        json!(arith::mertens_with(n, &cfg)?),
                        json!(arith::chebyshev_psi_with(n, &cfg)?),
                        json!(pi),
                    ]);
                    Ok(r)
                })
            }
            (None, Some(lo), Some(hi)) => {
                let (lo, hi) = (*lo, *hi);
                if lo == 0 || lo >= hi {
                    return Err(invalid!("need 1 ≤ lo < hi"));
                }
                if hi - lo > 1 << 24 {
                    return Err(crate::error::resource!("table limited to 2^24 rows"));
                }
                let cfg = sieve_cfg(workers, hi)?;
                Box::new(move || {
                    let t = arith::sieve_segment_with(lo, hi, &cfg)?;
                    let mut r = Report::new(&["n", "mu", "lambda", "prime"]);
                    for x in lo..hi {
                        r.row(vec![json!(x), json!(t.mobius(x)), json!(t.mangoldt(x)), json!(t.is_prime(x))]);
                    }
                    Ok(r)
                })
            }
            _ => return Err(invalid!("give either --N or both --lo and --hi")),
        },
    })
}
