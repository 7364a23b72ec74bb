//! Command-line front end.
//!
//! Exit codes: 0 when every check holds, 1 when the report contains at least
//! one violation, 2 on usage, parse or domain errors (message on stderr).

pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::certify::{check_modulus, estimate_modulus, CertificateStatus, ModulusCertificate, ModulusCheck, Triple};
use crate::chains::{
    classical_hh_terms, dragomir_mond_chain, max_feasible_c, theorem1_chain, theorem2_bound, ChainError, ChainOptions,
    ChainReport, Theorem2Form, Theorem2Report, DEFAULT_VERDICT_TOL,
};
use crate::expr::Expression;
use crate::harness::{parse_families, sweep, CaseResult, SweepConfig, SweepReport, Violation};
use crate::quadrature::{integrate_expr, QuadratureOptions, DEFAULT_TOL};
use output::{fmt_f64, to_canonical_json, to_csv};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hhcheck",
    version,
    about = "Certify strong log-convexity and check Hermite-Hadamard type chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct FunctionArgs {
    /// Function of x, e.g. "exp(x^2)"
    #[arg(long = "f", value_name = "EXPR", allow_hyphen_values = true)]
    f: String,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Emit the JSON report
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV rows
    #[arg(long)]
    csv: bool,
    /// Write the output to a file instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Classical,
    Dm,
    T1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Corrected,
    Printed,
    Both,
}

impl From<FormArg> for Theorem2Form {
    fn from(f: FormArg) -> Theorem2Form {
        match f {
            FormArg::Corrected => Theorem2Form::Corrected,
            FormArg::Printed => Theorem2Form::AsPrinted,
            FormArg::Both => Theorem2Form::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an inequality chain term by term
    Chain {
        #[command(flatten)]
        func: FunctionArgs,
        /// Modulus (used by t1 only)
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, value_enum)]
        which: Which,
        /// Quadrature tolerance
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERDICT_TOL)]
        verdict_tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Estimate the modulus of strong log-convexity on a grid
    Certify {
        #[command(flatten)]
        func: FunctionArgs,
        #[arg(long, default_value_t = crate::certify::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = crate::certify::DEFAULT_REFINE_ROUNDS)]
        refine: usize,
        /// Also check this modulus on the base grid
        #[arg(long, value_name = "C")]
        check: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the product bound for modulus c
    Theorem2 {
        #[command(flatten)]
        func: FunctionArgs,
        #[arg(long)]
        c: f64,
        #[arg(long, value_enum, default_value = "corrected")]
        form: FormArg,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERDICT_TOL)]
        verdict_tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a seeded random sweep over function families
    Sweep {
        /// Comma-separated: exp_quadratic, log_affine, scaled_power, custom:EXPR
        #[arg(long)]
        families: String,
        #[arg(long)]
        cases: usize,
        #[arg(long)]
        seed: u64,
        /// Force this modulus for every case
        #[arg(long)]
        c: Option<f64>,
        /// Fix the left endpoint (requires --b)
        #[arg(long, requires = "b", allow_hyphen_values = true)]
        a: Option<f64>,
        /// Fix the right endpoint (requires --a)
        #[arg(long, requires = "a", allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, default_value_t = crate::certify::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = crate::certify::DEFAULT_REFINE_ROUNDS)]
        refine: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERDICT_TOL)]
        verdict_tol: f64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate f over [a, b]
    Integrate {
        #[command(flatten)]
        func: FunctionArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Largest modulus for which the strong chain holds
    Maxc {
        #[command(flatten)]
        func: FunctionArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VERDICT_TOL)]
        verdict_tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// A rendered command result.
struct Rendered {
    /// Full JSON report.
    report: Value,
    /// CSV header and rows.
    csv: (Vec<&'static str>, Vec<Vec<String>>),
    table: String,
    violations: usize,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn num(v: f64) -> Value {
    // serde_json maps non-finite floats to null
    json!(v)
}

fn envelope(command: &str, inputs: Value, outputs: Value, violations: Vec<Value>) -> Value {
    json!({
        "command": command,
        "version": VERSION,
        "inputs": inputs,
        "outputs": outputs,
        "violations": violations,
    })
}

fn parse_function(text: &str) -> Result<Expression, Failure> {
    Expression::parse(text).map_err(|e| Failure(format!("cannot parse {text:?}: {e}")))
}

fn chain_json(r: &ChainReport) -> Value {
    json!({
        "kind": r.kind.as_str(),
        "terms": r.terms.iter().map(|t| json!({"name": t.name, "value": num(t.value)})).collect::<Vec<_>>(),
        "margins": r.margins.iter().map(|&m| num(m)).collect::<Vec<_>>(),
        "holds": r.holds,
        "min_margin": num(r.min_margin),
        "worst_pair": [r.worst.0, r.worst.1],
        "first_violation": r.first_violation,
        "threshold": num(r.threshold),
    })
}

fn chain_violations(r: &ChainReport) -> Vec<Value> {
    r.first_violation
        .map(|i| {
            json!({
                "kind": r.kind.as_str(),
                "witness": [r.terms[i].name, r.terms[i + 1].name],
                "margin": num(r.margins[i]),
                "min_margin": num(r.min_margin),
            })
        })
        .into_iter()
        .collect()
}

fn chain_table(r: &ChainReport) -> String {
    let mut s = format!(
        "{} chain for f(x) = {} on [{}, {}], c = {}\n",
        r.kind.as_str(),
        r.function_text,
        r.a,
        r.b,
        r.c
    );
    s += &format!("{:>3}  {:<24} {:>24} {:>24}\n", "#", "term", "value", "margin to next");
    for (i, t) in r.terms.iter().enumerate() {
        let m = r.margins.get(i).map(|&m| fmt_f64(m)).unwrap_or_default();
        s += &format!("{:>3}  {:<24} {:>24} {:>24}\n", i, t.name, fmt_f64(t.value), m);
    }
    s += &format!(
        "{} (min margin {}, threshold {})\n",
        if r.holds { "HOLDS" } else { "VIOLATED" },
        fmt_f64(r.min_margin),
        fmt_f64(r.threshold)
    );
    s
}

fn chain_csv(r: &ChainReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = r
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                i.to_string(),
                t.name.to_string(),
                fmt_f64(t.value),
                r.margins.get(i).map(|&m| fmt_f64(m)).unwrap_or_default(),
            ]
        })
        .collect();
    (vec!["term_index", "term_name", "value", "margin_to_next"], rows)
}

fn field_csv(fields: &[(&str, String)]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = fields.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    (vec!["field", "value"], rows)
}

fn field_table(title: &str, fields: &[(&str, String)]) -> String {
    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = format!("{title}\n");
    for (k, v) in fields {
        s += &format!("  {k:<width$}  {v}\n");
    }
    s
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "n/a".to_string())
}

fn run_chain(func: &FunctionArgs, c: f64, which: Which, opts: ChainOptions) -> Result<Rendered, Failure> {
    let f = parse_function(&func.f)?;
    let report = match which {
        Which::Classical => classical_hh_terms(&f, func.a, func.b, &opts)?,
        Which::Dm => dragomir_mond_chain(&f, func.a, func.b, &opts)?,
        Which::T1 => theorem1_chain(&f, func.a, func.b, c, &opts)?,
    };
    let which_name = match which {
        Which::Classical => "classical",
        Which::Dm => "dm",
        Which::T1 => "t1",
    };
    let violations = chain_violations(&report);
    Ok(Rendered {
        violations: violations.len(),
        report: envelope(
            "chain",
            json!({
                "function": func.f, "a": num(func.a), "b": num(func.b), "c": num(report.c),
                "which": which_name, "tol": num(opts.quad_tol), "verdict_tol": num(opts.verdict_tol),
            }),
            chain_json(&report),
            violations,
        ),
        csv: chain_csv(&report),
        table: chain_table(&report),
    })
}

fn triple_json(t: &Triple) -> Value {
    json!({"x": num(t.x), "y": num(t.y), "lambda": num(t.lambda)})
}

fn certificate_json(c: &ModulusCertificate) -> Value {
    json!({
        "c_star": num(c.c_star),
        "status": c.status.as_str(),
        "witness": triple_json(&c.witness),
        "grid_size": c.grid_size,
        "refinement_rounds": c.refinement_rounds,
        "triples_evaluated": c.triples_evaluated,
    })
}

fn certificate_fields(c: &ModulusCertificate) -> Vec<(&'static str, String)> {
    vec![
        ("c_star", fmt_f64(c.c_star)),
        ("status", c.status.as_str().to_string()),
        ("witness_x", fmt_f64(c.witness.x)),
        ("witness_y", fmt_f64(c.witness.y)),
        ("witness_lambda", fmt_f64(c.witness.lambda)),
        ("grid_size", c.grid_size.to_string()),
        ("refinement_rounds", c.refinement_rounds.to_string()),
        ("triples_evaluated", c.triples_evaluated.to_string()),
    ]
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(Failure("--threads must be at least 1".into())),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(job)),
    }
}

fn run_certify(
    func: &FunctionArgs,
    grid: usize,
    refine: usize,
    check: Option<f64>,
    threads: Option<usize>,
) -> Result<Rendered, Failure> {
    let f = parse_function(&func.f)?;
    let (cert, checked) = with_threads(threads, || -> Result<_, Failure> {
        let cert = estimate_modulus(&f, func.a, func.b, grid, refine)?;
        let checked = match check {
            Some(c) => Some(check_modulus(&f, func.a, func.b, c, grid)?),
            None => None,
        };
        Ok((cert, checked))
    })??;
    let mut violations = Vec::new();
    if cert.status == CertificateStatus::NotLogConvex {
        violations.push(json!({
            "kind": "log_convexity",
            "witness": triple_json(&cert.witness),
            "defect": num(cert.c_star),
        }));
    }
    let mut fields = certificate_fields(&cert);
    let check_json = match checked {
        None => Value::Null,
        Some(ModulusCheck::Ok { min_defect, witness }) => {
            fields.push(("check", "ok".into()));
            fields.push(("check_min_defect", fmt_f64(min_defect)));
            json!({"c": num(check.unwrap_or_default()), "ok": true, "defect": num(min_defect), "witness": triple_json(&witness)})
        }
        Some(ModulusCheck::Violation { defect, witness }) => {
            fields.push(("check", "violation".into()));
            fields.push(("check_min_defect", fmt_f64(defect)));
            violations.push(json!({
                "kind": "modulus_check",
                "witness": triple_json(&witness),
                "defect": num(defect),
            }));
            json!({"c": num(check.unwrap_or_default()), "ok": false, "defect": num(defect), "witness": triple_json(&witness)})
        }
    };
    let mut outputs = certificate_json(&cert);
    outputs["check"] = check_json;
    Ok(Rendered {
        violations: violations.len(),
        report: envelope(
            "certify",
            json!({
                "function": func.f, "a": num(func.a), "b": num(func.b), "grid": grid, "refine": refine,
                "check": check.map(num),
            }),
            outputs,
            violations,
        ),
        table: field_table(
            &format!("certificate for f(x) = {} on [{}, {}]", func.f, func.a, func.b),
            &fields,
        ),
        csv: field_csv(&fields),
    })
}

fn theorem2_json(r: &Theorem2Report) -> Value {
    json!({
        "lhs": num(r.lhs),
        "rhs_corrected": num(r.rhs_corrected),
        "margin_corrected": num(r.margin_corrected),
        "holds_corrected": r.holds_corrected,
        "printed_applicable": r.printed_applicable,
        "rhs_as_printed": r.rhs_as_printed.map(num),
        "margin_as_printed": r.margin_as_printed.map(num),
        "holds_as_printed": r.holds_as_printed,
        "bracket_value": num(r.bracket_value),
        "k": num(r.k),
    })
}

fn run_theorem2(func: &FunctionArgs, c: f64, form: FormArg, opts: ChainOptions) -> Result<Rendered, Failure> {
    let f = parse_function(&func.f)?;
    let r = theorem2_bound(&f, func.a, func.b, c, form.into(), &opts)?;
    let violations: Vec<Value> = r
        .verdicts()
        .into_iter()
        .filter(|(_, holds)| !holds)
        .map(|(kind, _)| {
            let (rhs, margin) = match kind {
                crate::chains::ChainKind::Theorem2AsPrinted => {
                    ("rhs_as_printed", r.margin_as_printed.expect("verdict implies a value"))
                }
                _ => ("rhs_corrected", r.margin_corrected),
            };
            json!({"kind": kind.as_str(), "witness": ["lhs", rhs], "margin": num(margin), "min_margin": num(margin)})
        })
        .collect();
    let mut fields = vec![("lhs", fmt_f64(r.lhs))];
    if r.form.includes_corrected() {
        fields.push(("rhs_corrected", fmt_f64(r.rhs_corrected)));
        fields.push(("margin_corrected", fmt_f64(r.margin_corrected)));
        fields.push(("holds_corrected", r.holds_corrected.to_string()));
    }
    if r.form.includes_printed() {
        fields.push(("printed_applicable", r.printed_applicable.to_string()));
        fields.push(("rhs_as_printed", opt_f64(r.rhs_as_printed)));
        fields.push(("margin_as_printed", opt_f64(r.margin_as_printed)));
        fields.push((
            "holds_as_printed",
            r.holds_as_printed.map_or("n/a".to_string(), |h| h.to_string()),
        ));
    }
    fields.push(("bracket_value", fmt_f64(r.bracket_value)));
    fields.push(("k", fmt_f64(r.k)));
    let form_name = match form {
        FormArg::Corrected => "corrected",
        FormArg::Printed => "printed",
        FormArg::Both => "both",
    };
    Ok(Rendered {
        violations: violations.len(),
        report: envelope(
            "theorem2",
            json!({
                "function": func.f, "a": num(func.a), "b": num(func.b), "c": num(c), "form": form_name,
                "tol": num(opts.quad_tol), "verdict_tol": num(opts.verdict_tol),
            }),
            theorem2_json(&r),
            violations,
        ),
        table: field_table(
            &format!(
                "product bound for f(x) = {} on [{}, {}], c = {}",
                func.f, func.a, func.b, c
            ),
            &fields,
        ),
        csv: field_csv(&fields),
    })
}

fn violation_json(v: &Violation) -> Value {
    json!({
        "case_index": v.case_index,
        "family": v.family,
        "function": v.function_text,
        "a": num(v.a),
        "b": num(v.b),
        "c": num(v.c),
        "kind": v.kind.as_str(),
        "witness": [v.witness.0, v.witness.1],
        "margin": num(v.witness_margin),
        "min_margin": num(v.min_margin),
    })
}

fn case_json(case: &CaseResult) -> Value {
    let mut outcomes = Map::new();
    for (kind, o) in &case.outcomes {
        outcomes.insert(
            kind.as_str().to_string(),
            serde_json::to_value(o).expect("outcome serializes"),
        );
    }
    let spec = case.spec.as_ref();
    json!({
        "index": case.index,
        "family": case.family,
        "function": spec.map(|s| s.function_text.clone()),
        "params": spec.map(|s| s.params.iter().map(|(k, v)| (k.to_string(), num(*v))).collect::<Map<_, _>>()),
        "a": spec.map(|s| num(s.a)),
        "b": spec.map(|s| num(s.b)),
        "certificate": case.certificate.as_ref().map(certificate_json),
        "c": case.c.map(num),
        "outcomes": outcomes,
    })
}

fn sweep_csv(r: &SweepReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let mut rows = Vec::new();
    for case in &r.cases {
        let spec = case.spec.as_ref();
        for (kind, o) in &case.outcomes {
            let c = match kind {
                crate::chains::ChainKind::DragomirMond => Some(0.0),
                _ => case.c,
            };
            rows.push(vec![
                case.index.to_string(),
                case.family.to_string(),
                opt_f64(spec.map(|s| s.a)),
                opt_f64(spec.map(|s| s.b)),
                opt_f64(c),
                kind.as_str().to_string(),
                o.holds().map_or("n/a".to_string(), |h| h.to_string()),
                opt_f64(o.min_margin()),
            ]);
        }
    }
    (
        vec![
            "case_index",
            "family",
            "a",
            "b",
            "c",
            "chain_kind",
            "holds",
            "min_margin",
        ],
        rows,
    )
}

fn sweep_table(r: &SweepReport) -> String {
    let mut s = format!(
        "sweep of {} cases, seed {}, families {}\n",
        r.cases_run,
        r.seed,
        r.families.join(",")
    );
    s += &format!(
        "  {:<22} {:>8} {:>10} {:>14}\n",
        "chain", "holds", "violated", "not applicable"
    );
    for (kind, t) in &r.tallies {
        s += &format!(
            "  {:<22} {:>8} {:>10} {:>14}\n",
            kind.as_str(),
            t.holds,
            t.violations,
            t.not_applicable
        );
    }
    for v in &r.violations {
        s += &format!(
            "  VIOLATION case {} {} f(x) = {} on [{}, {}], c = {}: {} > {} by {}\n",
            v.case_index,
            v.kind.as_str(),
            v.function_text,
            fmt_f64(v.a),
            fmt_f64(v.b),
            fmt_f64(v.c),
            v.witness.0,
            v.witness.1,
            fmt_f64(-v.witness_margin)
        );
    }
    if !r.printed_violations.is_empty() {
        s += &format!(
            "  {} as-printed product bound violations (reported, not counted as failures)\n",
            r.printed_violations.len()
        );
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    families: &str,
    cases: usize,
    seed: u64,
    c: Option<f64>,
    interval: Option<(f64, f64)>,
    grid: usize,
    refine: usize,
    opts: ChainOptions,
    threads: Option<usize>,
) -> Result<Rendered, Failure> {
    if threads == Some(0) {
        return Err(Failure("--threads must be at least 1".into()));
    }
    if let Some(c) = c {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Failure(format!("--c must be finite and non-negative, got {c}")));
        }
    }
    if let Some((a, b)) = interval {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Failure(format!("invalid interval [{a}, {b}]")));
        }
    }
    let mut config = SweepConfig::new(cases, parse_families(families)?, seed);
    config.options = opts;
    config.c_override = c;
    config.interval = interval;
    config.grid_n = grid;
    config.refine_rounds = refine;
    config.threads = threads;
    let r = sweep(&config)?;
    let tallies: Map<String, Value> = r
        .tallies
        .iter()
        .map(|(k, t)| {
            (
                k.as_str().to_string(),
                serde_json::to_value(t).expect("tally serializes"),
            )
        })
        .collect();
    let violations: Vec<Value> = r.violations.iter().map(violation_json).collect();
    let report = envelope(
        "sweep",
        json!({
            "families": r.families, "cases": cases, "seed": seed, "c": c.map(num),
            "a": interval.map(|i| num(i.0)), "b": interval.map(|i| num(i.1)),
            "grid": grid, "refine": refine, "tol": num(opts.quad_tol), "verdict_tol": num(opts.verdict_tol),
        }),
        json!({
            "cases_run": r.cases_run,
            "tallies": tallies,
            "printed_violations": r.printed_violations.iter().map(violation_json).collect::<Vec<_>>(),
            "cases": r.cases.iter().map(case_json).collect::<Vec<_>>(),
        }),
        violations,
    );
    Ok(Rendered {
        violations: r.violations.len(),
        report,
        csv: sweep_csv(&r),
        table: sweep_table(&r),
    })
}

fn run_integrate(func: &FunctionArgs, tol: f64) -> Result<Rendered, Failure> {
    let f = parse_function(&func.f)?;
    let r = integrate_expr(&f, func.a, func.b, QuadratureOptions::with_tol(tol))?;
    let fields = vec![
        ("value", fmt_f64(r.value)),
        ("error_estimate", fmt_f64(r.error_estimate)),
        ("evaluations", r.evaluations.to_string()),
        ("converged", r.converged.to_string()),
    ];
    Ok(Rendered {
        violations: 0,
        report: envelope(
            "integrate",
            json!({"function": func.f, "a": num(func.a), "b": num(func.b), "tol": num(tol)}),
            json!({
                "value": num(r.value),
                "error_estimate": num(r.error_estimate),
                "evaluations": r.evaluations,
                "converged": r.converged,
            }),
            Vec::new(),
        ),
        table: field_table(
            &format!("integral of f(x) = {} over [{}, {}]", func.f, func.a, func.b),
            &fields,
        ),
        csv: field_csv(&fields),
    })
}

fn run_maxc(func: &FunctionArgs, opts: ChainOptions) -> Result<Rendered, Failure> {
    let f = parse_function(&func.f)?;
    let inputs = json!({
        "function": func.f, "a": num(func.a), "b": num(func.b),
        "tol": num(opts.quad_tol), "verdict_tol": num(opts.verdict_tol),
    });
    match max_feasible_c(&f, func.a, func.b, &opts) {
        Ok(m) => {
            let mut fields = vec![("c", fmt_f64(m.c)), ("c_upper", fmt_f64(m.c_upper))];
            fields.extend(certificate_fields(&m.certificate));
            Ok(Rendered {
                violations: 0,
                report: envelope(
                    "maxc",
                    inputs,
                    json!({"c": num(m.c), "c_upper": num(m.c_upper), "certificate": certificate_json(&m.certificate)}),
                    Vec::new(),
                ),
                table: field_table(
                    &format!(
                        "largest feasible modulus for f(x) = {} on [{}, {}]",
                        func.f, func.a, func.b
                    ),
                    &fields,
                ),
                csv: field_csv(&fields),
            })
        }
        Err(ChainError::FailsAtZero(chain)) => {
            let violations = chain_violations(&chain);
            Ok(Rendered {
                violations: violations.len(),
                report: envelope(
                    "maxc",
                    inputs,
                    json!({"c": null, "chain_at_zero": chain_json(&chain)}),
                    violations,
                ),
                table: format!(
                    "the chain fails at c = 0; f is not log-convex here\n{}",
                    chain_table(&chain)
                ),
                csv: chain_csv(&chain),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn execute(command: &Command) -> Result<(Rendered, &OutputArgs), Failure> {
    let opts = |tol: f64, verdict_tol: f64| -> Result<ChainOptions, Failure> {
        if !(tol.is_finite() && tol > 0.0 && verdict_tol.is_finite() && verdict_tol > 0.0) {
            return Err(Failure("tolerances must be positive and finite".into()));
        }
        Ok(ChainOptions {
            quad_tol: tol,
            verdict_tol,
        })
    };
    Ok(match command {
        Command::Chain {
            func,
            c,
            which,
            tol,
            verdict_tol,
            out,
        } => (run_chain(func, *c, *which, opts(*tol, *verdict_tol)?)?, out),
        Command::Certify {
            func,
            grid,
            refine,
            check,
            threads,
            out,
        } => (run_certify(func, *grid, *refine, *check, *threads)?, out),
        Command::Theorem2 {
            func,
            c,
            form,
            tol,
            verdict_tol,
            out,
        } => (run_theorem2(func, *c, *form, opts(*tol, *verdict_tol)?)?, out),
        Command::Sweep {
            families,
            cases,
            seed,
            c,
            a,
            b,
            grid,
            refine,
            tol,
            verdict_tol,
            threads,
            out,
        } => {
            let interval = a.zip(*b);
            let o = opts(*tol, *verdict_tol)?;
            (
                run_sweep(families, *cases, *seed, *c, interval, *grid, *refine, o, *threads)?,
                out,
            )
        }
        Command::Integrate { func, tol, out } => (run_integrate(func, *tol)?, out),
        Command::Maxc {
            func,
            tol,
            verdict_tol,
            out,
        } => (run_maxc(func, opts(*tol, *verdict_tol)?)?, out),
    })
}

/// Runs the CLI with explicit argument list and output streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (rendered, out) = match execute(&cli.command) {
        Ok(r) => r,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_ERROR;
        }
    };
    let text = if out.json {
        to_canonical_json(&rendered.report) + "\n"
    } else if out.csv {
        to_csv(&rendered.csv.0, &rendered.csv.1)
    } else {
        rendered.table
    };
    let written = match &out.out {
        Some(path) => fs::write(path, text.as_bytes()).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_ERROR;
    }
    if rendered.violations > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}
