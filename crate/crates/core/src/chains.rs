//! Hermite–Hadamard type inequality chains, evaluated term by term.
//!
//! Every chain is reported as its terms in left-to-right order together with
//! the consecutive margins `termᵢ₊₁ − termᵢ`. A chain holds when no margin is
//! below `−verdict_tol · max(1, max |term|)`; the scale factor keeps the
//! verdict meaningful for functions whose values run into the millions,
//! where the quadrature error is itself relative.
//!
//! The strong log-convexity chain and the log-convex chain share their
//! integrals and means, so at `c = 0` the former reproduces the latter
//! bit for bit.

use std::cell::Cell;

use serde::Serialize;
use thiserror::Error;

use crate::certify::{estimate_modulus, CertifyError, ModulusCertificate, DEFAULT_GRID, DEFAULT_REFINE_ROUNDS};
use crate::expr::{EvalError, Expression};
use crate::means::{arithmetic_mean, geometric_mean, log_ratio, logarithmic_mean, MeanError};
use crate::quadrature::{integrate_converged, QuadError, QuadratureOptions, DEFAULT_TOL};

pub const DEFAULT_VERDICT_TOL: f64 = 1e-9;
/// `|ln u|` below which [`closed_form_j`] sums its power series.
pub const J_SERIES_SWITCH: f64 = 1.0;
/// Absolute resolution of the bisection in [`max_feasible_c`].
pub const MAX_C_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub quad_tol: f64,
    pub verdict_tol: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            quad_tol: DEFAULT_TOL,
            verdict_tol: DEFAULT_VERDICT_TOL,
        }
    }
}

impl ChainOptions {
    fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions::with_tol(self.quad_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    /// `f(m) ≤ mean ∫f ≤ A(f(a), f(b))`
    Classical,
    /// The six-term chain for log-convex `f`.
    DragomirMond,
    /// The five-term chain for strongly log-convex `f` with modulus `c`.
    Theorem1,
    /// Product bound, re-derived bracket.
    Theorem2Corrected,
    /// Product bound exactly as typeset.
    Theorem2AsPrinted,
}

impl ChainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainKind::Classical => "classical",
            ChainKind::DragomirMond => "dragomir_mond",
            ChainKind::Theorem1 => "theorem1",
            ChainKind::Theorem2Corrected => "theorem2_corrected",
            ChainKind::Theorem2AsPrinted => "theorem2_as_printed",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChainError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("modulus must be finite and non-negative, got {0}")]
    InvalidModulus(f64),
    #[error("evaluating f at {x} failed: {source}")]
    Eval { x: f64, source: EvalError },
    #[error("not applicable: f({x}) = {value} is not positive")]
    NonPositive { x: f64, value: f64 },
    #[error("J(u) needs u > 0 finite, got {0}")]
    JDomain(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Mean(#[from] MeanError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error("chain fails already at c = 0 (min margin {})", .0.min_margin)]
    FailsAtZero(Box<ChainReport>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTerm {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub kind: ChainKind,
    pub function_text: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub terms: Vec<ChainTerm>,
    pub margins: Vec<f64>,
    pub holds: bool,
    pub min_margin: f64,
    /// Indices `(i, i+1)` of the consecutive pair with the smallest margin.
    pub worst: (usize, usize),
    /// Index `i` of the first margin below the threshold, if any.
    pub first_violation: Option<usize>,
    pub tol: f64,
    /// The margin floor actually applied: `−tol · max(1, max |term|)`.
    pub threshold: f64,
}

impl ChainReport {
    fn new(kind: ChainKind, f: &Expression, a: f64, b: f64, c: f64, terms: Vec<ChainTerm>, tol: f64) -> ChainReport {
        let margins: Vec<f64> = terms.windows(2).map(|w| w[1].value - w[0].value).collect();
        let (i, min_margin) =
            margins.iter().copied().enumerate().fold(
                (0, f64::INFINITY),
                |(bi, bm), (i, m)| if m < bm { (i, m) } else { (bi, bm) },
            );
        let scale = terms.iter().fold(1.0f64, |s, t| s.max(t.value.abs()));
        let threshold = -tol * scale;
        ChainReport {
            kind,
            function_text: f.source().to_string(),
            a,
            b,
            c,
            holds: margins.iter().all(|&m| m >= threshold),
            first_violation: margins.iter().position(|&m| m < threshold),
            margins,
            min_margin,
            worst: (i, i + 1),
            tol,
            threshold,
            terms,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.value).collect()
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), ChainError> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(ChainError::InvalidInterval { a, b })
    }
}

fn check_modulus(c: f64) -> Result<(), ChainError> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(ChainError::InvalidModulus(c))
    }
}

fn eval(f: &Expression, x: f64) -> Result<f64, ChainError> {
    f.evaluate(x).map_err(|source| ChainError::Eval { x, source })
}

fn eval_positive(f: &Expression, x: f64) -> Result<f64, ChainError> {
    let value = eval(f, x)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ChainError::NonPositive { x, value })
    }
}

/// Mean value over `[a, b]` of an integrand built from `f`, with positivity
/// of `f` enforced at every abscissa the quadrature visits.
fn positive_mean<G>(f: &Expression, a: f64, b: f64, opts: &ChainOptions, g: G) -> Result<f64, ChainError>
where
    G: Fn(&dyn Fn(f64) -> Result<f64, EvalError>, f64) -> Result<f64, EvalError>,
{
    let bad = Cell::new(None);
    let fx = |x: f64| {
        let v = f.evaluate(x)?;
        if v > 0.0 {
            Ok(v)
        } else {
            bad.set(Some((x, v)));
            // any error aborts the quadrature; `bad` says which one it was
            Err(EvalError::NonFinite { op: "f", value: v })
        }
    };
    let result = integrate_converged(|x| g(&fx, x), a, b, opts.quadrature());
    if let Some((x, value)) = bad.get() {
        return Err(ChainError::NonPositive { x, value });
    }
    Ok(result? / (b - a))
}

/// Values shared by the classical, log-convex and strong chains.
struct Pieces {
    f_mid: f64,
    f_a: f64,
    f_b: f64,
    mean_f: f64,
}

fn pieces(f: &Expression, a: f64, b: f64, opts: &ChainOptions, positive: bool) -> Result<Pieces, ChainError> {
    check_interval(a, b)?;
    let at = |x| if positive { eval_positive(f, x) } else { eval(f, x) };
    let (f_a, f_b, f_mid) = (at(a)?, at(b)?, at(0.5 * (a + b))?);
    let mean_f = if positive {
        positive_mean(f, a, b, opts, |fx, x| fx(x))?
    } else {
        integrate_converged(|x| f.evaluate(x), a, b, opts.quadrature())? / (b - a)
    };
    Ok(Pieces {
        f_mid,
        f_a,
        f_b,
        mean_f,
    })
}

/// `mean ∫ G(f(x), f(a+b−x)) dx`
fn mean_geometric(f: &Expression, a: f64, b: f64, opts: &ChainOptions) -> Result<f64, ChainError> {
    positive_mean(f, a, b, opts, |fx, x| {
        let (p, q) = (fx(x)?, fx(a + b - x)?);
        Ok(geometric_mean(p, q).expect("both values checked positive"))
    })
}

/// `mean ∫ f(x) f(a+b−x) dx`
fn mean_product(f: &Expression, a: f64, b: f64, opts: &ChainOptions) -> Result<f64, ChainError> {
    positive_mean(f, a, b, opts, |fx, x| Ok(fx(x)? * fx(a + b - x)?))
}

/// Classical three-term chain `f((a+b)/2) ≤ mean ∫f ≤ (f(a)+f(b))/2`.
///
/// Convexity alone is the hypothesis here, so `f` may take any sign.
pub fn classical_hh_terms(f: &Expression, a: f64, b: f64, opts: &ChainOptions) -> Result<ChainReport, ChainError> {
    let p = pieces(f, a, b, opts, false)?;
    let terms = vec![
        ChainTerm {
            name: "f_mid",
            value: p.f_mid,
        },
        ChainTerm {
            name: "mean_f",
            value: p.mean_f,
        },
        ChainTerm {
            name: "endpoint_average",
            value: 0.5 * p.f_a + 0.5 * p.f_b,
        },
    ];
    Ok(ChainReport::new(
        ChainKind::Classical,
        f,
        a,
        b,
        0.0,
        terms,
        opts.verdict_tol,
    ))
}

/// Integrals and means of the log-convex chain; the strong chain at any `c`
/// is derived from the same values.
#[derive(Debug, Clone, Copy)]
struct LogChainValues {
    f_mid: f64,
    exp_mean_ln: f64,
    mean_g: f64,
    mean_f: f64,
    l: f64,
    a_mean: f64,
}

fn log_chain_values(
    f: &Expression,
    a: f64,
    b: f64,
    opts: &ChainOptions,
    with_ln: bool,
) -> Result<LogChainValues, ChainError> {
    let p = pieces(f, a, b, opts, true)?;
    let exp_mean_ln = if with_ln {
        positive_mean(f, a, b, opts, |fx, x| Ok(fx(x)?.ln()))?.exp()
    } else {
        f64::NAN
    };
    Ok(LogChainValues {
        f_mid: p.f_mid,
        exp_mean_ln,
        mean_g: mean_geometric(f, a, b, opts)?,
        mean_f: p.mean_f,
        l: logarithmic_mean(p.f_a, p.f_b)?,
        a_mean: arithmetic_mean(p.f_a, p.f_b)?,
    })
}

/// Six-term chain for log-convex `f`:
/// `f(m) ≤ exp(mean ∫ ln f) ≤ mean ∫ G(f(x), f(a+b−x)) ≤ mean ∫ f ≤ L(f(a), f(b)) ≤ A(f(a), f(b))`.
pub fn dragomir_mond_chain(f: &Expression, a: f64, b: f64, opts: &ChainOptions) -> Result<ChainReport, ChainError> {
    let v = log_chain_values(f, a, b, opts, true)?;
    let terms = vec![
        ChainTerm {
            name: "f_mid",
            value: v.f_mid,
        },
        ChainTerm {
            name: "exp_mean_ln_f",
            value: v.exp_mean_ln,
        },
        ChainTerm {
            name: "mean_geometric",
            value: v.mean_g,
        },
        ChainTerm {
            name: "mean_f",
            value: v.mean_f,
        },
        ChainTerm {
            name: "logarithmic_mean",
            value: v.l,
        },
        ChainTerm {
            name: "arithmetic_mean",
            value: v.a_mean,
        },
    ];
    Ok(ChainReport::new(
        ChainKind::DragomirMond,
        f,
        a,
        b,
        0.0,
        terms,
        opts.verdict_tol,
    ))
}

fn theorem1_terms(v: &LogChainValues, a: f64, b: f64, c: f64) -> Vec<ChainTerm> {
    let h2 = (b - a) * (b - a);
    let up = c * h2 / 12.0;
    let down = c * h2 / 6.0;
    vec![
        ChainTerm {
            name: "f_mid_plus",
            value: v.f_mid + up,
        },
        ChainTerm {
            name: "mean_geometric",
            value: v.mean_g,
        },
        ChainTerm {
            name: "mean_f",
            value: v.mean_f,
        },
        ChainTerm {
            name: "logarithmic_mean_minus",
            value: v.l - down,
        },
        ChainTerm {
            name: "arithmetic_mean_minus",
            value: v.a_mean - down,
        },
    ]
}

/// Five-term chain for `f` strongly log-convex with modulus `c`:
///
/// ```text
/// f(m) + c(b−a)²/12 ≤ mean ∫ G(f(x), f(a+b−x)) ≤ mean ∫ f
///                   ≤ L(f(a), f(b)) − c(b−a)²/6 ≤ A(f(a), f(b)) − c(b−a)²/6
/// ```
///
/// `c` is not checked against the function; infeasible values are allowed
/// so that violations can be hunted.
pub fn theorem1_chain(f: &Expression, a: f64, b: f64, c: f64, opts: &ChainOptions) -> Result<ChainReport, ChainError> {
    check_modulus(c)?;
    let v = log_chain_values(f, a, b, opts, false)?;
    Ok(ChainReport::new(
        ChainKind::Theorem1,
        f,
        a,
        b,
        c,
        theorem1_terms(&v, a, b, c),
        opts.verdict_tol,
    ))
}

/// `J(u) = ∫₀¹ t(1−t) uᵗ dt = (u(k−2) + k + 2)/k³`, `k = ln u`.
///
/// For `|k| < 1` the closed form cancels badly (the numerator is `k³/6 + …`),
/// so the series `Σ kⁿ / (n! (n+2)(n+3))` is summed instead.
pub fn closed_form_j(u: f64) -> Result<f64, ChainError> {
    if !(u.is_finite() && u > 0.0) {
        return Err(ChainError::JDomain(u));
    }
    let k = u.ln();
    j_of_log(u, k)
}

fn j_of_log(u: f64, k: f64) -> Result<f64, ChainError> {
    let value = if k.abs() < J_SERIES_SWITCH {
        let mut sum = 0.0;
        let mut power = 1.0; // kⁿ/n!
        for n in 0..30 {
            let n = n as f64;
            sum += power / ((n + 2.0) * (n + 3.0));
            power *= k / (n + 1.0);
        }
        sum
    } else {
        (u * (k - 2.0) + k + 2.0) / (k * k * k)
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ChainError::JDomain(u))
    }
}

/// `f(b)·J(f(a)/f(b)) + f(a)·J(f(b)/f(a))`
pub fn bracket(fa: f64, fb: f64) -> Result<f64, ChainError> {
    for v in [fa, fb] {
        if !(v.is_finite() && v > 0.0) {
            return Err(ChainError::JDomain(v));
        }
    }
    let k = log_ratio(fa, fb);
    Ok(fb * j_of_log(fa / fb, k)? + fa * j_of_log(fb / fa, -k)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem2Form {
    Corrected,
    AsPrinted,
    Both,
}

impl Theorem2Form {
    pub fn includes_printed(self) -> bool {
        !matches!(self, Theorem2Form::Corrected)
    }

    pub fn includes_corrected(self) -> bool {
        !matches!(self, Theorem2Form::AsPrinted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub function_text: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub form: Theorem2Form,
    pub lhs: f64,
    pub rhs_corrected: f64,
    pub margin_corrected: f64,
    pub holds_corrected: bool,
    pub printed_applicable: bool,
    pub rhs_as_printed: Option<f64>,
    pub margin_as_printed: Option<f64>,
    pub holds_as_printed: Option<bool>,
    pub bracket_value: f64,
    pub k: f64,
    pub tol: f64,
}

impl Theorem2Report {
    /// Verdicts for the forms that were requested, in (corrected, printed) order.
    pub fn verdicts(&self) -> Vec<(ChainKind, bool)> {
        let mut out = Vec::new();
        if self.form.includes_corrected() {
            out.push((ChainKind::Theorem2Corrected, self.holds_corrected));
        }
        if let Some(h) = self.holds_as_printed {
            out.push((ChainKind::Theorem2AsPrinted, h));
        }
        out
    }
}

fn verdict(lhs: f64, rhs: f64, tol: f64) -> bool {
    rhs - lhs >= -tol * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Product bound `mean ∫ f(x) f(a+b−x) dx ≤ RHS`.
///
/// The corrected right-hand side is
/// `f(a)f(b) + c²(b−a)⁴/30 − c(b−a)²·[f(b)J(f(a)/f(b)) + f(a)J(f(b)/f(a))]`.
/// The as-printed one, `f(a)f(b) + c²(b−a)⁴/30 − 4c(b−a)²(A + L)/ln²(f(b) − f(a))`,
/// is only computed when `f(b) − f(a)` is positive and not 1.
pub fn theorem2_bound(
    f: &Expression,
    a: f64,
    b: f64,
    c: f64,
    form: Theorem2Form,
    opts: &ChainOptions,
) -> Result<Theorem2Report, ChainError> {
    check_interval(a, b)?;
    check_modulus(c)?;
    let (fa, fb) = (eval_positive(f, a)?, eval_positive(f, b)?);
    let lhs = mean_product(f, a, b, opts)?;
    let h2 = (b - a) * (b - a);
    let base = fa * fb + c * c * h2 * h2 / 30.0;
    let bracket_value = bracket(fa, fb)?;
    let rhs_corrected = base - c * h2 * bracket_value;

    let diff = fb - fa;
    let printed_applicable = diff > 0.0 && diff != 1.0;
    let rhs_as_printed = if form.includes_printed() && printed_applicable {
        let l = diff.ln();
        let sum = arithmetic_mean(fa, fb)? + logarithmic_mean(fa, fb)?;
        Some(base - 4.0 * c * h2 / (l * l) * sum)
    } else {
        None
    };
    let tol = opts.verdict_tol;
    Ok(Theorem2Report {
        function_text: f.source().to_string(),
        a,
        b,
        c,
        form,
        lhs,
        rhs_corrected,
        margin_corrected: rhs_corrected - lhs,
        holds_corrected: verdict(lhs, rhs_corrected, tol),
        printed_applicable,
        rhs_as_printed,
        margin_as_printed: rhs_as_printed.map(|r| r - lhs),
        holds_as_printed: rhs_as_printed.map(|r| verdict(lhs, r, tol)),
        bracket_value,
        k: log_ratio(fa, fb),
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleModulus {
    /// Largest `c` found for which the strong chain holds.
    pub c: f64,
    /// Upper end of the bisection bracket, `max(c*, 0) + 1`.
    pub c_upper: f64,
    pub certificate: ModulusCertificate,
}

/// Largest modulus for which [`theorem1_chain`] still holds, by bisection on
/// `[0, max(c*, 0) + 1]` to [`MAX_C_RESOLUTION`].
///
/// Only the first and third margins depend on `c`. A value of `c` is
/// feasible when each of them is at least `min(0, its value at c = 0)`, with
/// no tolerance, so a function attaining equality (a constant) gets 0. The
/// chain must hold at `c = 0` under the usual tolerance.
pub fn max_feasible_c(f: &Expression, a: f64, b: f64, opts: &ChainOptions) -> Result<FeasibleModulus, ChainError> {
    check_interval(a, b)?;
    let certificate = estimate_modulus(f, a, b, DEFAULT_GRID, DEFAULT_REFINE_ROUNDS)?;
    let v = log_chain_values(f, a, b, opts, false)?;
    let at_zero = ChainReport::new(
        ChainKind::Theorem1,
        f,
        a,
        b,
        0.0,
        theorem1_terms(&v, a, b, 0.0),
        opts.verdict_tol,
    );
    if !at_zero.holds {
        return Err(ChainError::FailsAtZero(Box::new(at_zero)));
    }
    let floor = |i: usize| at_zero.margins[i].min(0.0);
    let feasible = |c: f64| {
        let t = theorem1_terms(&v, a, b, c);
        t[1].value - t[0].value >= floor(0) && t[3].value - t[2].value >= floor(2)
    };
    let c_upper = certificate.c_star.max(0.0) + 1.0;
    let c = if feasible(c_upper) {
        c_upper
    } else {
        let (mut lo, mut hi) = (0.0f64, c_upper);
        while hi - lo > MAX_C_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(FeasibleModulus {
        c,
        c_upper,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::quadrature::integrate;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn opts() -> ChainOptions {
        ChainOptions::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn classical_square() {
        let r = classical_hh_terms(&parse("x^2").unwrap(), 0.0, 1.0, &opts()).unwrap();
        let v = r.values();
        assert_eq!(v[0], 0.25);
        assert!(close(v[1], 1.0 / 3.0, 1e-14));
        assert_eq!(v[2], 0.5);
        assert!(r.holds);
        assert_eq!(r.margins.len(), 2);
        assert_eq!(r.min_margin, r.margins[0].min(r.margins[1]));
    }

    #[test]
    fn classical_affine_is_tight() {
        let r = classical_hh_terms(&parse("x").unwrap(), 0.0, 2.0, &opts()).unwrap();
        for (v, m) in r.values().iter().zip([1.0, 1.0, 1.0]) {
            assert!(close(*v, m, 1e-14));
        }
        assert!(r.margins.iter().all(|m| m.abs() < 1e-14));
        assert!(r.holds);
    }

    #[test]
    fn classical_running_example() {
        // (e^{1/4}, ∫₀¹ e^{x²}, (1+e)/2) from an independent 50-digit evaluation
        let r = classical_hh_terms(&parse("exp(x^2)").unwrap(), 0.0, 1.0, &opts()).unwrap();
        let expected = [1.2840254166877415, 1.4626517459071816, 1.8591409142295226];
        for (v, e) in r.values().iter().zip(expected) {
            assert!(close(*v, e, 1e-12), "{v} vs {e}");
        }
        assert!(r.holds);
    }

    #[test]
    fn dm_chain_running_example() {
        let r = dragomir_mond_chain(&parse("exp(x^2)").unwrap(), 0.0, 1.0, &opts()).unwrap();
        let expected = [
            1.2840254166877415,
            1.3956124250860895,
            1.3995545870776422,
            1.4626517459071816,
            1.718281828459045,
            1.8591409142295226,
        ];
        for (v, e) in r.values().iter().zip(expected) {
            assert!(close(*v, e, 1e-11), "{v} vs {e}");
        }
        assert!(r.holds);
        assert!(r.margins.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn dm_chain_constant_collapses() {
        let r = dragomir_mond_chain(&parse("2.5").unwrap(), -1.0, 3.0, &opts()).unwrap();
        for v in r.values() {
            assert!(close(v, 2.5, 1e-15), "{v}");
        }
        assert!(r.holds);
    }

    #[test]
    fn dm_chain_log_affine() {
        let r = dragomir_mond_chain(&parse("exp(x)").unwrap(), 0.0, 1.0, &opts()).unwrap();
        let h = 0.5f64.exp();
        let expected = [h, h, h, E - 1.0, E - 1.0, (1.0 + E) / 2.0];
        for (v, e) in r.values().iter().zip(expected) {
            assert!(close(*v, e, 1e-12), "{v} vs {e}");
        }
        assert!(r.holds);
    }

    #[test]
    fn dm_chain_rejects_non_positive() {
        let err = dragomir_mond_chain(&parse("x").unwrap(), -1.0, 1.0, &opts()).unwrap_err();
        assert!(matches!(err, ChainError::NonPositive { x, .. } if x == -1.0));
        // positive at both ends and the midpoint, negative inside
        let err = dragomir_mond_chain(&parse("(x-0.3)^2 - 0.01").unwrap(), 0.0, 1.0, &opts()).unwrap_err();
        assert!(matches!(err, ChainError::NonPositive { .. }), "{err:?}");
    }

    #[test]
    fn theorem1_degenerates_bitwise_at_zero() {
        for text in ["exp(x^2)", "exp(0.3*x - 1)", "(x+2)^-1.5", "cosh(x)"] {
            let f = parse(text).unwrap();
            let dm = dragomir_mond_chain(&f, -0.5, 1.25, &opts()).unwrap().values();
            let t1 = theorem1_chain(&f, -0.5, 1.25, 0.0, &opts()).unwrap().values();
            assert_eq!(t1[0].to_bits(), dm[0].to_bits());
            for i in 1..5 {
                assert_eq!(t1[i].to_bits(), dm[i + 1].to_bits(), "{text} term {i}");
            }
        }
    }

    #[test]
    fn theorem1_constant_violation() {
        let r = theorem1_chain(&parse("1").unwrap(), 0.0, 1.0, 1.0, &opts()).unwrap();
        let expected = [1.0 + 1.0 / 12.0, 1.0, 1.0, 1.0 - 1.0 / 6.0, 1.0 - 1.0 / 6.0];
        for (v, e) in r.values().iter().zip(expected) {
            assert!(close(*v, e, 1e-15));
        }
        assert!(!r.holds);
        // both c-dependent margins break; the first one is the midpoint step
        assert_eq!(r.first_violation, Some(0));
        assert!((r.margins[0] + 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(r.worst, (2, 3));
        assert!((r.min_margin + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn theorem1_min_margin_nonincreasing_in_c() {
        let f = parse("exp(x^2)").unwrap();
        let mut last = f64::INFINITY;
        for c in [0.0, 0.1, 0.2, 0.4, 0.8, 1.6] {
            let m = theorem1_chain(&f, 0.0, 1.0, c, &opts()).unwrap().min_margin;
            assert!(m <= last);
            last = m;
        }
        assert!(theorem1_chain(&f, 0.0, 1.0, -1.0, &opts()).is_err());
    }

    #[test]
    fn j_reference_values() {
        // 50-digit references
        assert_eq!(closed_form_j(1.0).unwrap(), 1.0 / 6.0);
        assert!(close(closed_form_j(E).unwrap(), 0.28171817154095476, 1e-15));
        assert!(close(closed_form_j(5.0).unwrap(), 0.3973764972125205, 1e-15));
        assert!(close(closed_form_j(1000.0).unwrap(), 14.916248655379325, 1e-14));
        assert!(close(closed_form_j(1e-3).unwrap(), 0.014916248655379325, 1e-14));
        assert!(closed_form_j(0.0).is_err());
        assert!(closed_form_j(-1.0).is_err());
    }

    #[test]
    fn j_matches_quadrature_across_the_switch() {
        for &u in &[
            1e-3f64,
            0.2,
            0.36,
            0.37,
            0.5,
            1.0 - 1e-7,
            1.0 + 1e-7,
            2.7,
            2.72,
            40.0,
            1e3,
        ] {
            let q = integrate(
                |t| Ok(t * (1.0 - t) * u.powf(t)),
                0.0,
                1.0,
                QuadratureOptions::with_tol(1e-14),
            )
            .unwrap()
            .value;
            let j = closed_form_j(u).unwrap();
            assert!(close(j, q, 1e-13), "u={u}: {j} vs {q}");
        }
    }

    #[test]
    fn bracket_at_equal_values() {
        let p = 3.5;
        assert!(close(bracket(p, p).unwrap(), p / 3.0, 1e-15));
    }

    #[test]
    fn theorem2_reduces_at_zero_modulus() {
        let f = parse("exp(x^2)").unwrap();
        let r = theorem2_bound(&f, 0.0, 1.0, 0.0, Theorem2Form::Both, &opts()).unwrap();
        assert_eq!(r.rhs_corrected, E);
        assert!(close(r.lhs, 1.9701521147774846, 1e-12));
        assert!(r.holds_corrected);
        assert!(r.printed_applicable);
        assert_eq!(r.rhs_as_printed, Some(E));
    }

    #[test]
    fn theorem2_symmetric_endpoints() {
        let f = parse("exp((x-0.5)^2)").unwrap();
        let c = 0.7;
        let r = theorem2_bound(&f, 0.0, 1.0, c, Theorem2Form::Both, &opts()).unwrap();
        let p = 0.25f64.exp();
        assert_eq!(r.k, 0.0);
        assert!(close(r.rhs_corrected, p * p + c * c / 30.0 - c * p / 3.0, 1e-15));
        assert!(!r.printed_applicable);
        assert_eq!(r.rhs_as_printed, None);
        assert_eq!(r.holds_as_printed, None);
        assert!(r.holds_corrected);
    }

    #[test]
    fn theorem2_running_example_at_certified_modulus() {
        let f = parse("exp(x^2)").unwrap();
        let cert = estimate_modulus(&f, 0.0, 1.0, 64, 3).unwrap();
        let r = theorem2_bound(&f, 0.0, 1.0, cert.c_star, Theorem2Form::Corrected, &opts()).unwrap();
        assert!(r.holds_corrected, "{r:?}");
        assert_eq!(r.rhs_as_printed, None);
        assert_eq!(r.verdicts(), vec![(ChainKind::Theorem2Corrected, true)]);
    }

    #[test]
    fn max_feasible_c_examples() {
        let zero = max_feasible_c(&parse("1").unwrap(), 0.0, 1.0, &opts()).unwrap();
        assert_eq!(zero.c, 0.0);
        let affine = max_feasible_c(&parse("exp(x)").unwrap(), 0.0, 1.0, &opts()).unwrap();
        assert!(affine.c >= 0.0);
        let f = parse("exp(x^2)").unwrap();
        let m = max_feasible_c(&f, 0.0, 1.0, &opts()).unwrap();
        assert!(m.c >= m.certificate.c_star, "{m:?}");
        assert!(theorem1_chain(&f, 0.0, 1.0, m.c, &opts()).unwrap().holds);
    }

    #[test]
    fn max_feasible_c_fails_for_non_log_convex() {
        let err = max_feasible_c(&parse("exp(-x^2)").unwrap(), -1.0, 1.0, &opts()).unwrap_err();
        assert!(matches!(err, ChainError::FailsAtZero(_)), "{err:?}");
    }

    proptest! {
        #[test]
        fn j_reflection(k in -7.0f64..7.0) {
            let u = k.exp();
            let lhs = u * closed_form_j(1.0 / u).unwrap();
            let rhs = closed_form_j(u).unwrap();
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-13);
        }

        #[test]
        fn bracket_is_nonnegative_and_symmetric(p in 1e-3f64..1e3, q in 1e-3f64..1e3) {
            let b1 = bracket(p, q).unwrap();
            let b2 = bracket(q, p).unwrap();
            prop_assert!(b1 > 0.0);
            prop_assert!(((b1 - b2) / b1).abs() < 1e-14);
        }

        #[test]
        fn theorem2_lhs_reflection(alpha in 0.0f64..2.0, beta in -1.0f64..1.0) {
            let f = parse(&format!("exp({alpha}*x^2 + {beta}*x)")).unwrap();
            let g = parse(&format!("exp({alpha}*(1-x)^2 + {beta}*(1-x))")).unwrap();
            let o = opts();
            let l1 = theorem2_bound(&f, 0.0, 1.0, 0.0, Theorem2Form::Corrected, &o).unwrap().lhs;
            let l2 = theorem2_bound(&g, 0.0, 1.0, 0.0, Theorem2Form::Corrected, &o).unwrap().lhs;
            prop_assert!((l1 - l2).abs() <= 2.0 * o.quad_tol * l1.max(1.0));
        }
    }
}
