//! Command-line front end shared by the `absum` binary and the integration tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Float;
use serde::Serialize;

use crate::combinatorics::{cache_file_name, stirling_cache, StirlingKind, StirlingTable};
use crate::error::{Error, Result};
use crate::eval::{
    cancellation_profile, cross_validate, direct_sum, evaluate, evaluate_auto, judge, EntryStatus, EvalOptions,
    EvalResult, Method, SumParams,
};
use crate::extensions::{eval2_quad, eval2_series, TwoParamForm, TwoParamSpec};
use crate::numeric::{format_float, format_rational, PrecisionContext, Scalar};
use crate::selftest::{run_selftest, SelftestOptions};

pub const CACHE_ENV: &str = "ABSUM_CACHE";

#[derive(Parser, Debug)]
#[command(name = "absum", version, about = "Alternating binomial sums S(x, N, m) = sum_k (-1)^k C(N,k) (x+k)^-m")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one sum.
    Eval(EvalArgs),
    /// Evaluate by every applicable method and compare with the reference.
    Validate(EvalArgs),
    /// Evaluate over N and m sweeps.
    Table(TableArgs),
    /// Digits lost by the fixed-precision direct sum.
    Bench(BenchArgs),
    /// Run the identity suite.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory holding the Stirling table cache; ABSUM_CACHE takes precedence.
    #[arg(long = "cache_path", alias = "cache-path")]
    pub cache_path: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Numeric {
    #[arg(long, alias = "precision_bits", alias = "precision-bits", default_value_t = 128,
          value_parser = clap::value_parser!(u32).range(53..))]
    pub bits: u32,
    #[arg(long, default_value_t = 1e-25)]
    pub tol: f64,
    #[arg(long = "max_terms", alias = "max-terms", default_value_t = 2_000_000)]
    pub max_terms: u64,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    /// "p/q", integer, decimal, "re+imi" or "re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long = "N")]
    pub big_n: Option<u64>,
    #[arg(long)]
    pub m: Option<u32>,
    /// Evaluate S(x, y, m, n) instead.
    #[arg(long = "two-param", alias = "two_param")]
    pub two_param: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Method identifier, "auto" or "all"; validate also takes a comma list.
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[command(flatten)]
    pub numeric: Numeric,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// "a..b" (inclusive), a comma list, or both mixed.
    #[arg(long = "N")]
    pub big_n: String,
    #[arg(long)]
    pub m: String,
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[command(flatten)]
    pub numeric: Numeric,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long = "N")]
    pub big_n: String,
    #[arg(long)]
    pub m: u32,
    #[arg(long, alias = "precision_bits", default_value_t = 53,
          value_parser = clap::value_parser!(u32).range(53..))]
    pub bits: u32,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone)]
pub struct SelftestArgs {
    /// Run only checks whose name contains this string.
    #[arg(long)]
    pub filter: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

/// Exit code plus the rendered document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Pole(_)
        | Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::DivisionByZero
        | Error::ContextMismatch(..) => 2,
        Error::NoConvergence(_) => 3,
        Error::IdentityViolation { .. } | Error::Cache(_) => 1,
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
}

fn error_outcome(e: &Error) -> Outcome {
    let rec = ErrorRecord {
        error: e.kind(),
        message: e.to_string(),
    };
    Outcome {
        code: exit_code(e),
        body: serde_json::to_string(&rec).expect("serializable") + "\n",
    }
}

/// A serialized value: "p/q", a decimal string, or {"re": ..., "im": ...}.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum ValueRepr {
    Text(String),
    Complex { re: String, im: String },
}

impl ValueRepr {
    pub fn of(v: &Scalar, digits: usize) -> ValueRepr {
        match v {
            Scalar::Rational(q) => ValueRepr::Text(format_rational(q)),
            Scalar::Real(r) => ValueRepr::Text(format_float(&r.0, digits)),
            Scalar::Complex(c) => ValueRepr::Complex {
                re: format_float(&c.re, digits),
                im: format_float(&c.im, digits),
            },
        }
    }

    pub fn parse(&self, ctx: PrecisionContext) -> Result<Scalar> {
        match self {
            ValueRepr::Text(s) => Scalar::parse(s, ctx),
            ValueRepr::Complex { re, im } => Scalar::parse(&format!("{re},{im}"), ctx),
        }
    }

    fn flat(&self) -> String {
        match self {
            ValueRepr::Text(s) => s.clone(),
            ValueRepr::Complex { re, im } if im.starts_with('-') => format!("{re}{im}i"),
            ValueRepr::Complex { re, im } => format!("{re}+{im}i"),
        }
    }
}

const BOUND_DIGITS: usize = 6;

/// Error bounds round upward so the printed bound still covers the error.
fn format_bound(e: &Float) -> String {
    if e.is_zero() {
        return "0".into();
    }
    e.to_string_radix_round(10, Some(BOUND_DIGITS), rug::float::Round::Up)
}

/// One EvalResult in its published field order.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ResultRecord {
    pub method: String,
    pub value: ValueRepr,
    pub exact: bool,
    pub error_bound: Option<String>,
    pub terms_used: u64,
    pub bits: Option<u32>,
}

impl ResultRecord {
    pub fn of(r: &EvalResult) -> ResultRecord {
        let digits = r.context.map(PrecisionContext::decimal_digits).unwrap_or(0);
        ResultRecord {
            method: r.method.id().into(),
            value: ValueRepr::of(&r.value, digits),
            exact: r.exact,
            error_bound: r.error_bound.as_ref().map(format_bound),
            terms_used: r.terms_used,
            bits: r.context.map(PrecisionContext::bits),
        }
    }
}

fn cache_dir(output: &Output) -> Option<PathBuf> {
    match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => output.cache_path.clone(),
    }
}

/// Writes back any table that grew beyond what is on disk.
fn persist_cache(dir: &Path) -> Result<()> {
    for kind in [StirlingKind::FirstSigned, StirlingKind::Second] {
        let path = dir.join(cache_file_name(kind));
        let on_disk = StirlingTable::load(&path).map(|t| t.max_n()).unwrap_or(0);
        if stirling_cache().max_n(kind) > on_disk {
            stirling_cache().snapshot(kind).save(&path)?;
        }
    }
    Ok(())
}

fn with_cache(output: &Output, body: impl FnOnce() -> Outcome) -> Outcome {
    let dir = cache_dir(output);
    if let Some(dir) = &dir {
        if let Err(e) = stirling_cache().sync_dir(dir, 0) {
            return error_outcome(&e);
        }
    }
    let out = body();
    if let Some(dir) = &dir {
        if let Err(e) = persist_cache(dir) {
            eprintln!("warning: {e}");
        }
    }
    out
}

fn csv_document(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn opt(s: &Option<String>) -> String {
    s.clone().unwrap_or_default()
}

const RESULT_HEADER: [&str; 6] = ["method", "value", "exact", "error_bound", "terms_used", "bits"];

fn result_row(r: &ResultRecord) -> Vec<String> {
    vec![
        r.method.clone(),
        r.value.flat(),
        r.exact.to_string(),
        opt(&r.error_bound),
        r.terms_used.to_string(),
        r.bits.map(|b| b.to_string()).unwrap_or_default(),
    ]
}

fn render_results(records: &[ResultRecord], single: bool, format: Format) -> String {
    match format {
        Format::Json if single => json(&records[0]),
        Format::Json => json(&records),
        Format::Csv => csv_document(&RESULT_HEADER, records.iter().map(result_row).collect()),
        Format::Text => text_table(&RESULT_HEADER, &records.iter().map(result_row).collect::<Vec<_>>()),
    }
}

fn options(n: &Numeric) -> Result<EvalOptions> {
    if !(n.tol > 0.0 && n.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tol must lie in (0, 1), got {}", n.tol)));
    }
    Ok(EvalOptions {
        ctx: PrecisionContext::new(n.bits)?,
        tol: n.tol,
        max_terms: n.max_terms,
    })
}

fn sum_params(a: &EvalArgs, ctx: PrecisionContext) -> Result<SumParams> {
    let x = Scalar::parse(&a.x, ctx)?;
    let n = a.big_n.ok_or_else(|| Error::InvalidArgument("--N is required".into()))?;
    let m = a.m.ok_or_else(|| Error::InvalidArgument("--m is required".into()))?;
    SumParams::new(x, n, m)
}

fn two_param_spec(a: &EvalArgs, ctx: PrecisionContext) -> Result<TwoParamSpec> {
    let x = Scalar::parse(&a.x, ctx)?;
    let y = a
        .y
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--two-param needs --y".into()))?;
    let y = Scalar::parse(y, ctx)?;
    let m = a.m.ok_or_else(|| Error::InvalidArgument("--m is required".into()))?;
    let n = a.n.ok_or_else(|| Error::InvalidArgument("--two-param needs --n".into()))?;
    TwoParamSpec::new(x, y, m, n)
}

fn eval_two_param(spec: &TwoParamSpec, method: Method, opts: &EvalOptions) -> Result<EvalResult> {
    match method {
        Method::TwoParamSeries => eval2_series(spec, opts.tol, opts.max_terms, opts.ctx),
        Method::TwoParamQuadrature30 => eval2_quad(spec, TwoParamForm::Eq30, opts.tol, opts.ctx),
        Method::TwoParamQuadrature34 => eval2_quad(spec, TwoParamForm::Eq34, opts.tol, opts.ctx),
        Method::TwoParamQuadrature36 => eval2_quad(spec, TwoParamForm::Eq36, opts.tol, opts.ctx),
        other => Err(Error::InvalidArgument(format!("{other} is not a two-parameter method"))),
    }
}

fn parse_methods(s: &str, two_param: bool) -> Result<Vec<Method>> {
    if s == "all" || s == "auto" {
        return Ok(if two_param {
            Method::TWO_PARAM.to_vec()
        } else {
            Method::ALL.to_vec()
        });
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

pub fn cmd_eval(a: &EvalArgs) -> Outcome {
    match eval_inner(a) {
        Ok(o) => o,
        Err(e) => error_outcome(&e),
    }
}

fn eval_inner(a: &EvalArgs) -> Result<Outcome> {
    let opts = options(&a.numeric)?;
    let format = a.output.format;
    if a.method == "all" {
        let methods = parse_methods("all", a.two_param)?;
        let mut records = Vec::new();
        let mut worst = 0;
        for method in methods {
            let r = if a.two_param {
                eval_two_param(&two_param_spec(a, opts.ctx)?, method, &opts)
            } else {
                evaluate(&sum_params(a, opts.ctx)?, method, &opts)
            };
            match r {
                Ok(r) => records.push(ResultRecord::of(&r)),
                Err(Error::InvalidArgument(_)) => {}
                Err(e) => worst = worst.max(exit_code(&e)),
            }
        }
        if records.is_empty() && worst == 0 {
            return Err(Error::InvalidArgument("no method applies".into()));
        }
        return Ok(Outcome {
            code: worst,
            body: render_results(&records, false, format),
        });
    }
    let r = if a.two_param {
        let spec = two_param_spec(a, opts.ctx)?;
        let method = if a.method == "auto" {
            Method::TwoParamSeries
        } else {
            a.method.parse()?
        };
        eval_two_param(&spec, method, &opts)?
    } else {
        let p = sum_params(a, opts.ctx)?;
        if a.method == "auto" {
            evaluate_auto(&p, &opts)?
        } else {
            evaluate(&p, a.method.parse()?, &opts)?
        }
    };
    Ok(Outcome {
        code: 0,
        body: render_results(&[ResultRecord::of(&r)], true, format),
    })
}

#[derive(Serialize)]
struct EntryRecord {
    method: String,
    status: EntryStatus,
    discrepancy: Option<f64>,
    value: Option<ValueRepr>,
    exact: Option<bool>,
    error_bound: Option<String>,
    message: Option<String>,
}

#[derive(Serialize)]
struct ValidateRecord {
    x: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    big_n: Option<u64>,
    m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    tol: f64,
    passed: bool,
    reference: ResultRecord,
    entries: Vec<EntryRecord>,
}

fn entry_record(method: Method, status: EntryStatus, d: Option<f64>, r: Option<&EvalResult>, msg: Option<String>) -> EntryRecord {
    let rec = r.map(ResultRecord::of);
    EntryRecord {
        method: method.id().into(),
        status,
        discrepancy: d,
        value: rec.as_ref().map(|r| r.value.clone()),
        exact: rec.as_ref().map(|r| r.exact),
        error_bound: rec.and_then(|r| r.error_bound),
        message: msg,
    }
}

pub fn cmd_validate(a: &EvalArgs) -> Outcome {
    match validate_inner(a) {
        Ok(o) => o,
        Err(e) => error_outcome(&e),
    }
}

fn validate_inner(a: &EvalArgs) -> Result<Outcome> {
    let opts = options(&a.numeric)?;
    let methods = parse_methods(&a.method, a.two_param)?;
    let record = if a.two_param {
        let spec = two_param_spec(a, opts.ctx)?;
        let reference = eval_two_param(&spec, Method::TwoParamSeries, &opts)?;
        let (spec_ref, opts_ref) = (&spec, &opts);
        let results: Vec<(Method, Result<EvalResult>)> = thread::scope(|s| {
            let handles: Vec<_> = methods
                .iter()
                .filter(|&&m| m != Method::TwoParamSeries)
                .map(|&m| (m, s.spawn(move || eval_two_param(spec_ref, m, opts_ref))))
                .collect();
            handles.into_iter().map(|(m, h)| (m, h.join().expect("evaluator panicked"))).collect()
        });
        let mut entries = Vec::new();
        for (method, r) in results {
            entries.push(match r {
                Ok(r) => {
                    let (status, d) = judge(&reference, &r, opts.tol);
                    entry_record(method, status, Some(d), Some(&r), None)
                }
                Err(e @ Error::InvalidArgument(_)) => entry_record(method, EntryStatus::Skipped, None, None, Some(e.to_string())),
                Err(e) => entry_record(method, EntryStatus::Error, None, None, Some(e.to_string())),
            });
        }
        ValidateRecord {
            x: spec.x.to_string(),
            y: Some(spec.y.to_string()),
            big_n: None,
            m: spec.m,
            n: Some(spec.n),
            tol: opts.tol,
            passed: entries.iter().all(|e| matches!(e.status, EntryStatus::Pass | EntryStatus::Skipped)),
            reference: ResultRecord::of(&reference),
            entries,
        }
    } else {
        let p = sum_params(a, opts.ctx)?;
        let report = cross_validate(&p, &methods, &opts)?;
        ValidateRecord {
            x: p.x.to_string(),
            y: None,
            big_n: Some(p.n),
            m: p.m,
            n: None,
            tol: opts.tol,
            passed: report.passed(),
            reference: ResultRecord::of(&report.reference),
            entries: report
                .entries
                .iter()
                .map(|e| entry_record(e.method, e.status, e.discrepancy, e.result.as_ref(), e.message.clone()))
                .collect(),
        }
    };
    let header = ["method", "status", "discrepancy", "value", "exact", "error_bound", "message"];
    let mut rows = vec![{
        let r = &record.reference;
        vec![
            r.method.clone(),
            "reference".into(),
            String::new(),
            r.value.flat(),
            r.exact.to_string(),
            opt(&r.error_bound),
            String::new(),
        ]
    }];
    for e in &record.entries {
        rows.push(vec![
            e.method.clone(),
            e.status.to_string(),
            e.discrepancy.map(|d| format!("{d:e}")).unwrap_or_default(),
            e.value.as_ref().map(ValueRepr::flat).unwrap_or_default(),
            e.exact.map(|b| b.to_string()).unwrap_or_default(),
            opt(&e.error_bound),
            opt(&e.message),
        ]);
    }
    let body = match a.output.format {
        Format::Json => json(&record),
        Format::Csv => csv_document(&header, rows),
        Format::Text => {
            let verdict = if record.passed { "PASS" } else { "FAIL" };
            text_table(&header, &rows) + verdict + "\n"
        }
    };
    Ok(Outcome {
        code: if record.passed { 0 } else { 1 },
        body,
    })
}

/// Parses "a..b" (inclusive) and comma lists such as "1..3,7".
pub fn parse_range(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("bad range {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct TableRow {
    x: String,
    #[serde(rename = "N")]
    big_n: u64,
    m: u32,
    value: Option<ValueRepr>,
    method: Option<String>,
    exact: Option<bool>,
    error_bound: Option<String>,
    error: Option<String>,
}

pub fn cmd_table(a: &TableArgs) -> Outcome {
    match table_inner(a) {
        Ok(o) => o,
        Err(e) => error_outcome(&e),
    }
}

fn table_inner(a: &TableArgs) -> Result<Outcome> {
    let opts = options(&a.numeric)?;
    let x = Scalar::parse(&a.x, opts.ctx)?;
    let ns = parse_range(&a.big_n)?;
    let ms: Vec<u32> = parse_range(&a.m)?
        .into_iter()
        .map(|m| u32::try_from(m).map_err(|_| Error::Parse(format!("m out of range: {m}"))))
        .collect::<Result<_>>()?;
    let method = match a.method.as_str() {
        "auto" => None,
        other => Some(other.parse::<Method>()?),
    };
    let grid: Vec<(u64, u32)> = ns.iter().flat_map(|&n| ms.iter().map(move |&m| (n, m))).collect();
    let row = |&(n, m): &(u64, u32)| -> TableRow {
        let r = SumParams::new(x.clone(), n, m).and_then(|p| match method {
            None => evaluate_auto(&p, &opts),
            Some(meth) => evaluate(&p, meth, &opts),
        });
        let rec = r.as_ref().ok().map(ResultRecord::of);
        TableRow {
            x: x.to_string(),
            big_n: n,
            m,
            value: rec.as_ref().map(|r| r.value.clone()),
            method: rec.as_ref().map(|r| r.method.clone()),
            exact: rec.as_ref().map(|r| r.exact),
            error_bound: rec.and_then(|r| r.error_bound),
            error: r.err().map(|e| e.to_string()),
        }
    };
    let workers = thread::available_parallelism().map_or(4, |n| n.get()).max(1);
    let chunk = grid.len().div_ceil(workers).max(1);
    let rows: Vec<TableRow> = thread::scope(|s| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(row).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("table worker panicked"))
            .collect()
    });
    let failed = rows.iter().any(|r| r.error.is_some());
    let header = ["x", "N", "m", "value", "method", "exact", "error_bound", "error"];
    let cells = || -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                vec![
                    r.x.clone(),
                    r.big_n.to_string(),
                    r.m.to_string(),
                    r.value.as_ref().map(ValueRepr::flat).unwrap_or_default(),
                    opt(&r.method),
                    r.exact.map(|b| b.to_string()).unwrap_or_default(),
                    opt(&r.error_bound),
                    opt(&r.error),
                ]
            })
            .collect()
    };
    let body = match a.output.format {
        Format::Json => json(&rows),
        Format::Csv => csv_document(&header, cells()),
        Format::Text => text_table(&header, &cells()),
    };
    Ok(Outcome {
        code: i32::from(failed),
        body,
    })
}

#[derive(Serialize)]
struct BenchRow {
    #[serde(rename = "N")]
    big_n: u64,
    m: u32,
    bits: u32,
    exact: String,
    predicted_digits_lost: f64,
    relative_error: f64,
    digits_lost: f64,
    /// Loss of the Bell evaluation against the same reference (exact, so zero).
    bell_digits_lost: f64,
}

pub fn cmd_bench(a: &BenchArgs) -> Outcome {
    match bench_inner(a) {
        Ok(o) => o,
        Err(e) => error_outcome(&e),
    }
}

fn bench_inner(a: &BenchArgs) -> Result<Outcome> {
    let ctx = PrecisionContext::new(a.bits)?;
    let x = match Scalar::parse(&a.x, ctx)? {
        Scalar::Rational(q) => q,
        _ => return Err(Error::InvalidArgument("bench needs a rational x".into())),
    };
    let mut rows = Vec::new();
    for n in parse_range(&a.big_n)? {
        let p = SumParams::new(Scalar::Rational(x.clone()), n, a.m)?;
        let prof = cancellation_profile(&x, n, a.m, a.bits)?;
        let exact = direct_sum(&x, n, a.m)?;
        let bell = evaluate(&p, Method::Bell, &EvalOptions::new(ctx, 1e-25))?;
        let bell_loss = if bell.value == Scalar::Rational(exact.clone()) {
            0.0
        } else {
            let digits = f64::from(a.bits) * std::f64::consts::LOG10_2;
            let rel = crate::numeric::relative_difference(&bell.value, &Scalar::Rational(exact.clone()), 2 * a.bits);
            (digits + rel.log10()).max(0.0)
        };
        rows.push(BenchRow {
            big_n: n,
            m: a.m,
            bits: a.bits,
            exact: format_rational(&exact),
            predicted_digits_lost: round4(prof.predicted_digits_lost),
            relative_error: prof.relative_error,
            digits_lost: round4(prof.digits_lost),
            bell_digits_lost: bell_loss,
        });
    }
    let header = [
        "N",
        "m",
        "bits",
        "exact",
        "predicted_digits_lost",
        "relative_error",
        "digits_lost",
        "bell_digits_lost",
    ];
    let cells = || -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                vec![
                    r.big_n.to_string(),
                    r.m.to_string(),
                    r.bits.to_string(),
                    r.exact.clone(),
                    r.predicted_digits_lost.to_string(),
                    format!("{:e}", r.relative_error),
                    r.digits_lost.to_string(),
                    r.bell_digits_lost.to_string(),
                ]
            })
            .collect()
    };
    let body = match a.output.format {
        Format::Json => json(&rows),
        Format::Csv => csv_document(&header, cells()),
        Format::Text => text_table(&header, &cells()),
    };
    Ok(Outcome { code: 0, body })
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

pub fn cmd_selftest(a: &SelftestArgs) -> Outcome {
    let opts = SelftestOptions {
        filter: a.filter.clone(),
        cache_dir: cache_dir(&a.output),
    };
    let report = match run_selftest(&opts) {
        Ok(r) => r,
        Err(e) => return error_outcome(&e),
    };
    let code = if report.passed() { 0 } else { 1 };
    let header = ["check", "status", "cases", "error"];
    let cells: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                if c.passed { "pass" } else { "fail" }.to_string(),
                c.cases.to_string(),
                opt(&c.error),
            ]
        })
        .collect();
    let body = match a.output.format {
        Format::Json => json(&report),
        Format::Csv => csv_document(&header, cells),
        Format::Text => {
            let mut out = String::new();
            for s in &report.cache {
                let _ = writeln!(out, "cache {} {}: {:?}", s.kind, s.path, s.outcome);
            }
            for c in &report.checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                let _ = write!(out, "{status:4} {:26} {:6} cases {:>7} ms", c.name, c.cases, c.millis);
                if let Some(e) = &c.error {
                    let _ = write!(out, "  {e}");
                }
                out.push('\n');
            }
            let passed = report.checks.iter().filter(|c| c.passed).count();
            let _ = writeln!(out, "{passed}/{} checks passed", report.checks.len());
            out
        }
    };
    Outcome { code, body }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Eval(a) => with_cache(&a.output, || cmd_eval(a)),
        Command::Validate(a) => with_cache(&a.output, || cmd_validate(a)),
        Command::Table(a) => with_cache(&a.output, || cmd_table(a)),
        Command::Bench(a) => with_cache(&a.output, || cmd_bench(a)),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

fn output_of(cli: &Cli) -> &Output {
    match &cli.command {
        Command::Eval(a) | Command::Validate(a) => &a.output,
        Command::Table(a) => &a.output,
        Command::Bench(a) => &a.output,
        Command::Selftest(a) => &a.output,
    }
}

/// Executes and writes the document to `--out` or stdout; returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = execute(cli);
    match &output_of(cli).out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.body) {
                eprintln!("error: {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{}", outcome.body),
    }
    outcome.code
}

/// Float at the context precision for a serialized bound.
pub fn parse_bound(s: &str, bits: u32) -> Result<Float> {
    let v = Float::parse(s).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    Ok(Float::with_val(bits, v))
}
