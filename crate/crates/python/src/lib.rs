//! Python bindings: parse functions, certify log-convexity, evaluate chains, run sweeps.

use hhcheck::certify::{self, ModulusCheck};
use hhcheck::chains::{self, ChainOptions, Theorem2Form};
use hhcheck::harness::{self, SweepConfig};
use hhcheck::quadrature::{self, QuadratureOptions};
use hhcheck::{means, CertificateStatus};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed function of `x`.
#[pyclass(name = "Expression", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyExpression {
    inner: hhcheck::Expression,
}

#[pymethods]
impl PyExpression {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        hhcheck::parse(text)
            .map(|inner| PyExpression { inner })
            .map_err(value_error)
    }

    fn evaluate(&self, x: f64) -> PyResult<f64> {
        self.inner.evaluate(x).map_err(value_error)
    }

    /// Fully parenthesized text that parses back to the same tree.
    fn canonical(&self) -> String {
        self.inner.canonical()
    }

    #[getter]
    fn source(&self) -> String {
        self.inner.source().to_string()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.evaluate(x)
    }

    fn __str__(&self) -> String {
        self.inner.canonical()
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.inner.source())
    }
}

/// Either an `Expression` or expression text.
#[derive(FromPyObject)]
enum FunctionArg {
    Parsed(PyExpression),
    Text(String),
}

impl FunctionArg {
    fn expression(self) -> PyResult<hhcheck::Expression> {
        match self {
            FunctionArg::Parsed(e) => Ok(e.inner),
            FunctionArg::Text(t) => hhcheck::parse(&t).map_err(value_error),
        }
    }
}

#[pyclass(name = "QuadratureResult", frozen, get_all)]
struct PyQuadratureResult {
    value: f64,
    error_estimate: f64,
    evaluations: usize,
    converged: bool,
}

#[pyclass(name = "ModulusCertificate", frozen, get_all)]
struct PyCertificate {
    c_star: f64,
    /// `(x, y, λ)`
    witness: (f64, f64, f64),
    grid_size: usize,
    refinement_rounds: usize,
    status: &'static str,
    triples_evaluated: usize,
}

impl From<certify::ModulusCertificate> for PyCertificate {
    fn from(c: certify::ModulusCertificate) -> Self {
        PyCertificate {
            c_star: c.c_star,
            witness: (c.witness.x, c.witness.y, c.witness.lambda),
            grid_size: c.grid_size,
            refinement_rounds: c.refinement_rounds,
            status: c.status.as_str(),
            triples_evaluated: c.triples_evaluated,
        }
    }
}

#[pymethods]
impl PyCertificate {
    fn __repr__(&self) -> String {
        format!("ModulusCertificate(c_star={}, status={:?})", self.c_star, self.status)
    }
}

#[pyclass(name = "ChainReport", frozen, get_all)]
struct PyChainReport {
    kind: &'static str,
    function_text: String,
    a: f64,
    b: f64,
    c: f64,
    terms: Vec<(&'static str, f64)>,
    margins: Vec<f64>,
    holds: bool,
    min_margin: f64,
    worst: (usize, usize),
    first_violation: Option<usize>,
    tol: f64,
    threshold: f64,
}

impl From<chains::ChainReport> for PyChainReport {
    fn from(r: chains::ChainReport) -> Self {
        PyChainReport {
            kind: r.kind.as_str(),
            terms: r.terms.iter().map(|t| (t.name, t.value)).collect(),
            function_text: r.function_text,
            a: r.a,
            b: r.b,
            c: r.c,
            margins: r.margins,
            holds: r.holds,
            min_margin: r.min_margin,
            worst: r.worst,
            first_violation: r.first_violation,
            tol: r.tol,
            threshold: r.threshold,
        }
    }
}

#[pymethods]
impl PyChainReport {
    fn __repr__(&self) -> String {
        format!(
            "ChainReport(kind={:?}, holds={}, min_margin={})",
            self.kind, self.holds, self.min_margin
        )
    }
}

#[pyclass(name = "Theorem2Report", frozen, get_all)]
struct PyTheorem2Report {
    lhs: f64,
    rhs_corrected: f64,
    margin_corrected: f64,
    holds_corrected: bool,
    printed_applicable: bool,
    rhs_as_printed: Option<f64>,
    margin_as_printed: Option<f64>,
    holds_as_printed: Option<bool>,
    bracket_value: f64,
    k: f64,
}

impl From<chains::Theorem2Report> for PyTheorem2Report {
    fn from(r: chains::Theorem2Report) -> Self {
        PyTheorem2Report {
            lhs: r.lhs,
            rhs_corrected: r.rhs_corrected,
            margin_corrected: r.margin_corrected,
            holds_corrected: r.holds_corrected,
            printed_applicable: r.printed_applicable,
            rhs_as_printed: r.rhs_as_printed,
            margin_as_printed: r.margin_as_printed,
            holds_as_printed: r.holds_as_printed,
            bracket_value: r.bracket_value,
            k: r.k,
        }
    }
}

#[pyclass(name = "SweepReport", frozen, get_all)]
struct PySweepReport {
    seed: u64,
    cases_run: usize,
    /// `[(chain kind, (holds, violations, not_applicable))]`
    tallies: Vec<(&'static str, (usize, usize, usize))>,
    /// `(case index, chain kind, function text, a, b, c, min margin)`
    violations: Vec<(u64, &'static str, String, f64, f64, f64, f64)>,
    printed_violations: Vec<(u64, &'static str, String, f64, f64, f64, f64)>,
}

#[pymethods]
impl PySweepReport {
    fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }
}

fn options(tol: f64, verdict_tol: f64) -> ChainOptions {
    ChainOptions {
        quad_tol: tol,
        verdict_tol,
    }
}

#[pyfunction]
fn parse(text: &str) -> PyResult<PyExpression> {
    PyExpression::new(text)
}

#[pyfunction]
fn arithmetic_mean(p: f64, q: f64) -> PyResult<f64> {
    means::arithmetic_mean(p, q).map_err(value_error)
}

#[pyfunction]
fn geometric_mean(p: f64, q: f64) -> PyResult<f64> {
    means::geometric_mean(p, q).map_err(value_error)
}

#[pyfunction]
fn logarithmic_mean(p: f64, q: f64) -> PyResult<f64> {
    means::logarithmic_mean(p, q).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (f, a, b, tol = quadrature::DEFAULT_TOL))]
fn integrate(f: FunctionArg, a: f64, b: f64, tol: f64) -> PyResult<PyQuadratureResult> {
    let r =
        quadrature::integrate_expr(&f.expression()?, a, b, QuadratureOptions::with_tol(tol)).map_err(value_error)?;
    Ok(PyQuadratureResult {
        value: r.value,
        error_estimate: r.error_estimate,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

#[pyfunction]
#[pyo3(signature = (f, a, b, tol = quadrature::DEFAULT_TOL))]
fn mean_integral(f: FunctionArg, a: f64, b: f64, tol: f64) -> PyResult<f64> {
    quadrature::mean_integral(&f.expression()?, a, b, QuadratureOptions::with_tol(tol)).map_err(value_error)
}

#[pyfunction]
fn log_defect(f: FunctionArg, x: f64, y: f64, lam: f64) -> PyResult<f64> {
    certify::log_defect(&f.expression()?, x, y, lam).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (f, a, b, grid_n = certify::DEFAULT_GRID, refine_rounds = certify::DEFAULT_REFINE_ROUNDS))]
fn estimate_modulus(
    py: Python<'_>,
    f: FunctionArg,
    a: f64,
    b: f64,
    grid_n: usize,
    refine_rounds: usize,
) -> PyResult<PyCertificate> {
    let f = f.expression()?;
    py.detach(|| certify::estimate_modulus(&f, a, b, grid_n, refine_rounds))
        .map(PyCertificate::from)
        .map_err(value_error)
}

/// Returns `(ok, defect, (x, y, λ))`: the smallest sampled defect and where it occurs.
#[pyfunction]
#[pyo3(signature = (f, a, b, c, grid_n = certify::DEFAULT_GRID))]
fn check_modulus(
    py: Python<'_>,
    f: FunctionArg,
    a: f64,
    b: f64,
    c: f64,
    grid_n: usize,
) -> PyResult<(bool, f64, (f64, f64, f64))> {
    let f = f.expression()?;
    let r = py
        .detach(|| certify::check_modulus(&f, a, b, c, grid_n))
        .map_err(value_error)?;
    Ok(match r {
        ModulusCheck::Ok { min_defect, witness } => (true, min_defect, (witness.x, witness.y, witness.lambda)),
        ModulusCheck::Violation { defect, witness } => (false, defect, (witness.x, witness.y, witness.lambda)),
    })
}

#[pyfunction]
#[pyo3(signature = (f, a, b, tol = quadrature::DEFAULT_TOL, verdict_tol = chains::DEFAULT_VERDICT_TOL))]
fn classical_hh_terms(f: FunctionArg, a: f64, b: f64, tol: f64, verdict_tol: f64) -> PyResult<PyChainReport> {
    chains::classical_hh_terms(&f.expression()?, a, b, &options(tol, verdict_tol))
        .map(PyChainReport::from)
        .map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (f, a, b, tol = quadrature::DEFAULT_TOL, verdict_tol = chains::DEFAULT_VERDICT_TOL))]
fn dragomir_mond_chain(f: FunctionArg, a: f64, b: f64, tol: f64, verdict_tol: f64) -> PyResult<PyChainReport> {
    chains::dragomir_mond_chain(&f.expression()?, a, b, &options(tol, verdict_tol))
        .map(PyChainReport::from)
        .map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (f, a, b, c, tol = quadrature::DEFAULT_TOL, verdict_tol = chains::DEFAULT_VERDICT_TOL))]
fn theorem1_chain(f: FunctionArg, a: f64, b: f64, c: f64, tol: f64, verdict_tol: f64) -> PyResult<PyChainReport> {
    chains::theorem1_chain(&f.expression()?, a, b, c, &options(tol, verdict_tol))
        .map(PyChainReport::from)
        .map_err(value_error)
}

#[pyfunction]
fn closed_form_j(u: f64) -> PyResult<f64> {
    chains::closed_form_j(u).map_err(value_error)
}

/// `form` is one of "corrected", "printed", "both".
#[pyfunction]
#[pyo3(signature = (f, a, b, c, form = "corrected", tol = quadrature::DEFAULT_TOL, verdict_tol = chains::DEFAULT_VERDICT_TOL))]
fn theorem2_bound(
    f: FunctionArg,
    a: f64,
    b: f64,
    c: f64,
    form: &str,
    tol: f64,
    verdict_tol: f64,
) -> PyResult<PyTheorem2Report> {
    let form = match form {
        "corrected" => Theorem2Form::Corrected,
        "printed" => Theorem2Form::AsPrinted,
        "both" => Theorem2Form::Both,
        other => return Err(PyValueError::new_err(format!("unknown form {other:?}"))),
    };
    chains::theorem2_bound(&f.expression()?, a, b, c, form, &options(tol, verdict_tol))
        .map(PyTheorem2Report::from)
        .map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (f, a, b, tol = quadrature::DEFAULT_TOL, verdict_tol = chains::DEFAULT_VERDICT_TOL))]
fn max_feasible_c(py: Python<'_>, f: FunctionArg, a: f64, b: f64, tol: f64, verdict_tol: f64) -> PyResult<f64> {
    let f = f.expression()?;
    py.detach(|| chains::max_feasible_c(&f, a, b, &options(tol, verdict_tol)))
        .map(|m| m.c)
        .map_err(value_error)
}

/// `families` is a comma-separated list as accepted by the CLI.
#[pyfunction]
#[pyo3(signature = (families, cases, seed, c = None, interval = None, grid_n = certify::DEFAULT_GRID, refine_rounds = certify::DEFAULT_REFINE_ROUNDS))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    families: &str,
    cases: usize,
    seed: u64,
    c: Option<f64>,
    interval: Option<(f64, f64)>,
    grid_n: usize,
    refine_rounds: usize,
) -> PyResult<PySweepReport> {
    let mut config = SweepConfig::new(cases, harness::parse_families(families).map_err(value_error)?, seed);
    config.c_override = c;
    config.interval = interval;
    config.grid_n = grid_n;
    config.refine_rounds = refine_rounds;
    let r = py.detach(|| harness::sweep(&config)).map_err(value_error)?;
    let rows = |vs: &[harness::Violation]| {
        vs.iter()
            .map(|v| {
                (
                    v.case_index,
                    v.kind.as_str(),
                    v.function_text.clone(),
                    v.a,
                    v.b,
                    v.c,
                    v.min_margin,
                )
            })
            .collect()
    };
    Ok(PySweepReport {
        seed: r.seed,
        cases_run: r.cases_run,
        tallies: r
            .tallies
            .iter()
            .map(|(k, t)| (k.as_str(), (t.holds, t.violations, t.not_applicable)))
            .collect(),
        violations: rows(&r.violations),
        printed_violations: rows(&r.printed_violations),
    })
}

#[pymodule]
fn hhcheck_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PyQuadratureResult>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyChainReport>()?;
    m.add_class::<PyTheorem2Report>()?;
    m.add_class::<PySweepReport>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(arithmetic_mean, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_mean, m)?)?;
    m.add_function(wrap_pyfunction!(logarithmic_mean, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(mean_integral, m)?)?;
    m.add_function(wrap_pyfunction!(log_defect, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(check_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(classical_hh_terms, m)?)?;
    m.add_function(wrap_pyfunction!(dragomir_mond_chain, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_chain, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_j, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(max_feasible_c, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add("CERTIFIED_POSITIVE", CertificateStatus::CertifiedPositive.as_str())?;
    m.add("CERTIFIED_ZERO", CertificateStatus::CertifiedZero.as_str())?;
    m.add("NOT_LOG_CONVEX", CertificateStatus::NotLogConvex.as_str())?;
    Ok(())
}
