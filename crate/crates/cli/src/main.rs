mod grid;
mod input;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use thicksum::fragmentation::{certify_sparse, certify_thick};
use thicksum::functions::{classify_at, lambda, lambda_limit};
use thicksum::halfline::{
    chain_certify, chain_certify_bigtau, envelopes_for, image_prefix_for_horizon, phase_scan,
    stratum_refute, sum_coverage_upto, BigTauParams, ChainParams, CoverageKind, ReasonKind,
    ScanRow,
};
use thicksum::rational::{format_decimal, serde_rational};
use thicksum::selftest::{run_selftest, SelftestConfig, Suite};
use thicksum::thickness::{tau, tau_bruteforce};
use thicksum::{
    format_rational, parse_rational, AdmissibleFunction, Error as CoreError, Extended,
    Fragmentation, HalfLineVerdict, Interval, IntervalUnion, LambdaEstimate, Rational, Verdict,
};

use input::{InputError, Shape};

const SCHEMAS: &str = r#"JSON INPUTS
  Numbers are exact: strings "p/q", "n" or finite decimals "0.125".
  Plain JSON numbers are accepted too and read as their decimal literal.

  Interval union (closed intervals, any order, overlaps merged):
    {"parts": [["0", "4"], ["5", "9"]]}      or the bare array [[0, 4], [5, 9]]

  Function:
    {"kind": "power", "m": "3/2"}                 x^m, m > 0
    {"kind": "exp", "r": "1/10"}                  e^{rx}, r > 0
    {"kind": "stretched_exp", "a": "1", "b": "1/2"}
    {"kind": "pwa", "points": [["0","0"], ["1","2"]], "final_slope": "1"}
    {"kind": "pwa", "points": [...], "periodic_from": 0}
    {"kind": "sum", "terms": [{"coeff": "2", "fn": <function>}, ...]}
    {"kind": "product", "factors": [<function>, <function>]}

  Fragmentation (ordered fragments K_0 < K_1 < ..., optional translation tail):
    {"fragments": [<interval union>, ...],
     "tail": {"kind": "translate", "period": "3/2"}}

OUTPUT
  All machine-readable numbers are exact fraction strings; every JSON document
  printed can be read back by the matching input schema. A completed analysis
  exits 0 whatever the verdict. Errors print {"error": {...}} on stderr and
  exit 2; a failing selftest exits 1.

ENVIRONMENT
  THICKSUM_PRECISION   default working precision in bits (>= 16)"#;

#[derive(Parser, Debug)]
#[command(name = "thicksum", version, about = "Exact thickness, sums of Cantor-like sets and half-line certificates", after_long_help = SCHEMAS)]
struct Cli {
    /// Working precision in bits for transcendental enclosures.
    #[arg(long, global = true, env = "THICKSUM_PRECISION", default_value_t = 64, value_parser = parse_precision)]
    precision: u32,

    /// Print JSON on a single line.
    #[arg(long, global = true)]
    compact: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Newhouse thickness of an interval union; prints a fraction or "inf".
    Tau {
        set: PathBuf,
        #[arg(long, value_enum, default_value_t = Presentation::Canonical)]
        presentation: Presentation,
    },
    /// Minkowski sum of two interval unions.
    Sum { a: PathBuf, b: PathBuf },
    /// Relative variation Λ(g, γ, M), or its limit as M → ∞ when --M is omitted.
    Lambda {
        function: PathBuf,
        #[arg(long, value_parser = parse_positive)]
        gamma: Rational,
        #[arg(long = "M", value_parser = parse_nonnegative)]
        m: Option<Rational>,
        /// Also print decimal renderings with this many digits.
        #[arg(long)]
        digits: Option<usize>,
    },
    /// TRV / BRV classification from the limit of Λ(g, γ, M).
    Classify {
        function: PathBuf,
        #[arg(long, default_value = "1", value_parser = parse_positive)]
        gamma: Rational,
    },
    /// Check the thickness or sparsity hypotheses of a fragmentation.
    Certify {
        fragmentation: PathBuf,
        /// Thickness hypotheses as A,a,tau.
        #[arg(
            long,
            value_name = "A,a,tau",
            conflicts_with = "sparse",
            required_unless_present = "sparse"
        )]
        thick: Option<String>,
        /// Minimal distance between consecutive fragments.
        #[arg(long, value_name = "a", value_parser = parse_positive)]
        sparse: Option<Rational>,
        /// Fragments before this index are exempt from the thickness check.
        #[arg(long, default_value_t = 0)]
        skip: usize,
    },
    /// Certify or refute that g[F] + g[F] contains a half-line.
    Halfline(HalflineArgs),
    /// Scan g = e^{rx} on F(A, a) over an (r, a) grid; writes CSV.
    PhaseScan(PhaseScanArgs),
    /// Run the randomized property suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cases per property.
        #[arg(long, default_value_t = 200)]
        cases: usize,
        /// Suites to run (comma-separated); all when omitted.
        #[arg(long, value_delimiter = ',', value_parser = parse_suite)]
        suite: Vec<Suite>,
        /// Deliberately break one property, to exercise failure reporting.
        #[arg(long)]
        inject_fault: bool,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Presentation {
    Canonical,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    /// Overlapping chain for the Λ(g, A)-small regime (needs --A --a --eps).
    Chain,
    /// Chain for the large-thickness regime (needs --A --a --tau --R).
    Bigtau,
    /// Stratum refutation with explicit gap witnesses.
    Refute,
    /// Exact coverage of the sum up to the horizon value.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Coverage {
    Exact,
    Inner,
    Outer,
}

#[derive(clap::Args, Debug)]
struct HalflineArgs {
    #[arg(long = "frag")]
    fragmentation: PathBuf,
    #[arg(long = "fn")]
    function: PathBuf,
    /// Number of fragments examined, or the end of the checked range in exact mode.
    #[arg(long)]
    horizon: String,
    #[arg(long, value_enum, default_value_t = Mode::Chain)]
    mode: Mode,
    #[arg(long = "A", value_parser = parse_positive)]
    big_a: Option<Rational>,
    #[arg(long = "a", value_parser = parse_positive)]
    a: Option<Rational>,
    #[arg(long, value_parser = parse_positive)]
    eps: Option<Rational>,
    #[arg(long, default_value_t = 0)]
    skip: usize,
    #[arg(long, value_parser = parse_positive)]
    tau: Option<Rational>,
    #[arg(long = "R", value_parser = parse_positive)]
    r: Option<Rational>,
    /// Number of summands in refute mode.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Start of the checked range in exact mode; defaults to the minimum of the sum.
    #[arg(long, value_parser = parse_any)]
    from: Option<Rational>,
    /// Image enclosure used in exact mode; defaults to exact when g allows it, else inner.
    #[arg(long, value_enum)]
    coverage: Option<Coverage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug)]
struct PhaseScanArgs {
    /// Fragment length A of F(A, a).
    #[arg(long = "A", value_parser = parse_positive)]
    big_a: Rational,
    /// Rates r: comma-separated values or start:step:end ranges.
    #[arg(long = "r-grid", visible_alias = "r")]
    r_grid: String,
    /// Gaps a: like --r-grid; ln2 forms such as 3/4*ln2 are allowed.
    #[arg(long = "a-grid", visible_alias = "a")]
    a_grid: String,
    /// Number of fragments examined per cell.
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the runtime_ms column, making the output byte-identical across runs.
    #[arg(long)]
    no_runtime: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Summary of an exact coverage run; the sum itself is omitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CoverageSummary {
    kind: CoverageKind,
    #[serde(with = "serde_rational")]
    from: Rational,
    #[serde(with = "serde_rational")]
    to: Rational,
    covered: bool,
    certified: bool,
    uncovered: Vec<Interval>,
    fragments_used: usize,
    pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct HalflineReport {
    mode: Mode,
    horizon: String,
    #[serde(flatten)]
    result: HalfLineVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coverage: Option<CoverageSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct LambdaReport {
    #[serde(with = "serde_rational")]
    gamma: Rational,
    /// Absent for the limit `M → ∞`.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<String>,
    lambda: LambdaEstimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decimal: Option<[String; 2]>,
}

fn parse_precision(s: &str) -> Result<u32, String> {
    let p: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if p < 16 {
        return Err(format!("precision must be at least 16 bits, got {p}"));
    }
    Ok(p)
}

fn parse_any(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<Rational, String> {
    let q = parse_any(s)?;
    if q <= Rational::from_integer(0.into()) {
        return Err(format!("expected a positive number, got {s}"));
    }
    Ok(q)
}

fn parse_nonnegative(s: &str) -> Result<Rational, String> {
    let q = parse_any(s)?;
    if q < Rational::from_integer(0.into()) {
        return Err(format!("expected a nonnegative number, got {s}"));
    }
    Ok(q)
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

struct Out {
    compact: bool,
}

impl Out {
    fn json<T: Serialize>(&self, v: &T) -> Result<()> {
        let s = if self.compact {
            serde_json::to_string(v)?
        } else {
            serde_json::to_string_pretty(v)?
        };
        println!("{s}");
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let body = error_json(&e);
            let _ = writeln!(io::stderr(), "{body}");
            ExitCode::from(2)
        }
    }
}

fn error_json(e: &anyhow::Error) -> serde_json::Value {
    if let Some(ie) = e.downcast_ref::<InputError>() {
        let mut obj = json!({
            "kind": "malformed_input",
            "file": ie.file.display().to_string(),
            "path": ie.path,
            "message": ie.message,
        });
        if ie.line > 0 {
            obj["line"] = json!(ie.line);
            obj["column"] = json!(ie.column);
        }
        return json!({ "error": obj });
    }
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<CoreError>())
        .map(core_error_kind)
        .unwrap_or("error");
    json!({ "error": { "kind": kind, "message": format!("{e:#}") } })
}

fn core_error_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::Parse(_) => "parse",
        CoreError::EmptySet => "empty_set",
        CoreError::InvalidInterval { .. } => "invalid_interval",
        CoreError::NotCanonical { .. } => "not_canonical",
        CoreError::Refused(_) => "refused",
        CoreError::Domain(_) => "domain",
        CoreError::InfiniteDerivative(_) => "infinite_derivative",
        CoreError::InvalidFunction(_) => "invalid_function",
        CoreError::InvalidFragmentation(_) => "invalid_fragmentation",
        CoreError::PrecisionExhausted => "precision_exhausted",
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = Out {
        compact: cli.compact,
    };
    let precision = cli.precision;
    match cli.command {
        Command::Tau { set, presentation } => {
            let k: IntervalUnion = input::load(&set, Shape::Set)?;
            let t = match presentation {
                Presentation::Canonical => tau(&k),
                Presentation::Brute => tau_bruteforce(&k)?,
            };
            println!("{t}");
        }
        Command::Sum { a, b } => {
            let ka: IntervalUnion = input::load(&a, Shape::Set)?;
            let kb: IntervalUnion = input::load(&b, Shape::Set)?;
            out.json(&ka.minkowski_sum(&kb))?;
        }
        Command::Lambda {
            function,
            gamma,
            m,
            digits,
        } => {
            let g: AdmissibleFunction = input::load(&function, Shape::Function)?;
            let est = match &m {
                Some(m) => lambda(&g, &gamma, m, precision)?,
                None => lambda_limit(&g, &gamma, precision)?,
            };
            let decimal = digits.map(|d| [decimal(&est.lower, d), decimal(&est.upper, d)]);
            out.json(&LambdaReport {
                gamma,
                m: m.as_ref().map(format_rational),
                lambda: est,
                decimal,
            })?;
        }
        Command::Classify { function, gamma } => {
            let g: AdmissibleFunction = input::load(&function, Shape::Function)?;
            let class = classify_at(&g, &gamma)?;
            let est = lambda_limit(&g, &gamma, precision)?;
            out.json(&json!({
                "class": class,
                "gamma": format_rational(&gamma),
                "lambda_limit": est,
            }))?;
        }
        Command::Certify {
            fragmentation,
            thick,
            sparse,
            skip,
        } => {
            let f: Fragmentation = input::load(&fragmentation, Shape::Fragmentation)?;
            let report = if let Some(spec) = thick {
                let [big_a, a, t] = parse_triple(&spec)?;
                match certify_thick(&f, &big_a, &a, &t, skip) {
                    Ok(c) => json!({ "certified": true, "certificate": c }),
                    Err(v) => json!({ "certified": false, "violation": v }),
                }
            } else {
                let a = sparse.expect("clap requires --thick or --sparse");
                match certify_sparse(&f, &a) {
                    Ok(c) => json!({ "certified": true, "certificate": c }),
                    Err(v) => json!({ "certified": false, "violation": v }),
                }
            };
            out.json(&report)?;
        }
        Command::Halfline(args) => out.json(&halfline(args, precision)?)?,
        Command::PhaseScan(args) => phase(args)?,
        Command::Selftest {
            seed,
            cases,
            suite,
            inject_fault,
            json,
        } => {
            let cfg = SelftestConfig {
                seed,
                cases,
                suites: if suite.is_empty() {
                    Suite::ALL.to_vec()
                } else {
                    suite
                },
                inject_fault,
            };
            let report = run_selftest(&cfg)?;
            if json {
                out.json(&report)?;
            } else {
                println!("{report}");
            }
            if !report.passed() {
                let dump: Vec<_> = report
                    .failures()
                    .map(|c| {
                        json!({
                            "suite": c.suite,
                            "property": c.property,
                            "counterexample": c.counterexample,
                        })
                    })
                    .collect();
                eprintln!("{}", serde_json::to_string_pretty(&dump)?);
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn decimal(x: &Extended, digits: usize) -> String {
    match x {
        Extended::Finite(q) => format_decimal(q, digits),
        Extended::Infinite => "inf".into(),
    }
}

fn parse_triple(spec: &str) -> Result<[Rational; 3]> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        bail!("--thick expects A,a,tau, got {spec:?}");
    };
    let p = |s: &str| parse_positive(s).map_err(|e| anyhow!("--thick: {e}"));
    Ok([p(a)?, p(b)?, p(c)?])
}

fn need(v: Option<Rational>, flag: &str, mode: &str) -> Result<Rational> {
    v.ok_or_else(|| anyhow!("--mode {mode} needs {flag}"))
}

fn halfline(args: HalflineArgs, precision: u32) -> Result<HalflineReport> {
    let f: Fragmentation = input::load(&args.fragmentation, Shape::Fragmentation)?;
    let g: AdmissibleFunction = input::load(&args.function, Shape::Function)?;
    let count = || -> Result<usize> {
        match args.horizon.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => bail!(
                "--horizon must be a positive fragment count in {:?} mode, got {:?}",
                args.mode,
                args.horizon
            ),
        }
    };
    let mut coverage = None;
    let result = match args.mode {
        Mode::Chain => {
            let p = ChainParams {
                big_a: need(args.big_a, "--A", "chain")?,
                a: need(args.a, "--a", "chain")?,
                eps: need(args.eps, "--eps", "chain")?,
                skip: args.skip,
            };
            chain_certify(&f, &g, &p, count()?)?
        }
        Mode::Bigtau => {
            let p = BigTauParams {
                big_a: need(args.big_a, "--A", "bigtau")?,
                a: need(args.a, "--a", "bigtau")?,
                tau: need(args.tau, "--tau", "bigtau")?,
                r: need(args.r, "--R", "bigtau")?,
            };
            chain_certify_bigtau(&f, &g, &p, count()?)?
        }
        Mode::Refute => {
            let n = count()?;
            let env = envelopes_for(&f, &g, args.d, n)?;
            stratum_refute(&env, n)?
        }
        Mode::Exact => {
            let x = parse_rational(&args.horizon)
                .with_context(|| format!("--horizon {:?}", args.horizon))?;
            let kind = match args.coverage {
                Some(Coverage::Exact) => CoverageKind::Exact,
                Some(Coverage::Inner) => CoverageKind::Inner,
                Some(Coverage::Outer) => CoverageKind::Outer,
                None if g.is_exact() => CoverageKind::Exact,
                None => CoverageKind::Inner,
            };
            let frags = image_prefix_for_horizon(&f, &g, kind, &x, precision)?;
            let from = match args.from {
                Some(c) => c,
                None => frags[0].min() * Rational::from_integer(2.into()),
            };
            if from > x {
                bail!(
                    "--from {} lies beyond the horizon {}",
                    format_rational(&from),
                    format_rational(&x)
                );
            }
            let rep = sum_coverage_upto(&frags, kind, &from, &x)?;
            let verdict = exact_verdict(kind, &rep.uncovered, &from, &x);
            coverage = Some(CoverageSummary {
                kind: rep.kind,
                from: rep.from,
                to: rep.to,
                covered: rep.covered,
                certified: rep.certified,
                uncovered: rep.uncovered,
                fragments_used: rep.fragments_used,
                pairs: rep.pairs,
            });
            HalfLineVerdict::bare(verdict)
        }
    };
    Ok(HalflineReport {
        mode: args.mode,
        horizon: args.horizon,
        result,
        coverage,
    })
}

/// Largest covered final segment `[s, x]` of the checked range.
fn exact_verdict(
    kind: CoverageKind,
    uncovered: &[Interval],
    from: &Rational,
    x: &Rational,
) -> Verdict {
    if kind == CoverageKind::Outer {
        return Verdict::inconclusive(
            ReasonKind::Precondition,
            None,
            "outer enclosures certify gaps only",
        );
    }
    let start = uncovered.last().map_or(from, |gap| gap.hi());
    if start >= x {
        return Verdict::inconclusive(
            ReasonKind::Inequality,
            None,
            format!(
                "the sum has a gap reaching the horizon {}",
                format_rational(x)
            ),
        );
    }
    Verdict::CoveredUpToHorizon {
        from: start.clone(),
        to: x.clone(),
    }
}

const CSV_HEADER: [&str; 10] = [
    "r",
    "a",
    "ra",
    "ra_lo",
    "ra_hi",
    "verdict",
    "n0_or_N0",
    "first_gap",
    "alarge",
    "runtime_ms",
];

fn phase(args: PhaseScanArgs) -> Result<()> {
    let rs = grid::parse_rational_grid(&args.r_grid).context("--r-grid")?;
    let as_ = grid::parse_log_affine_grid(&args.a_grid).context("--a-grid")?;
    if args.horizon == 0 {
        bail!("--horizon must be positive");
    }
    let scan = || phase_scan(&args.big_a, &rs, &as_, args.horizon);
    let mut rows = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()?
            .install(scan)?,
        None => scan()?,
    };
    if args.no_runtime {
        for r in &mut rows {
            r.runtime_ms = 0;
        }
    }
    let stdout = io::stdout();
    match args.format {
        Format::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let mut v = serde_json::to_value(r)?;
                    if args.no_runtime {
                        v.as_object_mut()
                            .expect("row is an object")
                            .remove("runtime_ms");
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            serde_json::to_writer_pretty(stdout.lock(), &v)?;
            println!();
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            let cols = if args.no_runtime { 9 } else { 10 };
            w.write_record(&CSV_HEADER[..cols])?;
            for r in &rows {
                w.write_record(&csv_fields(r)[..cols])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_fields(r: &ScanRow) -> [String; 10] {
    [
        r.r.clone(),
        r.a.clone(),
        r.ra.clone(),
        r.ra_lo.clone(),
        r.ra_hi.clone(),
        r.verdict.clone(),
        r.n0.map(|n| n.to_string()).unwrap_or_default(),
        r.first_gap.clone().unwrap_or_default(),
        r.alarge.map(|b| b.to_string()).unwrap_or_default(),
        r.runtime_ms.to_string(),
    ]
}
