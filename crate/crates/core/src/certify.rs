//! Grid certification of (strong) log-convexity.
//!
//! `f > 0` is strongly log-convex with modulus `c` on `[a, b]` when
//!
//! ```text
//! f(λx + (1−λ)y) ≤ f(x)^λ f(y)^(1−λ) − c λ(1−λ)(x−y)²
//! ```
//!
//! for all `x, y ∈ [a, b]`, `λ ∈ (0, 1)`. The defect ratio at a triple is the
//! largest `c` the inequality allows there; its infimum over triples is the
//! maximal modulus `c*`. [`estimate_modulus`] samples that infimum on a grid
//! and refines around the minimizer. A grid infimum is evidence, not a proof,
//! which is why the certificate records its grid size and refinement rounds.
//!
//! The numerator `f(x)^λ f(y)^(1−λ) − f(z)` is formed as
//! `f(z)·expm1(λ ln f(x) + (1−λ) ln f(y) − ln f(z))` with the logarithms in
//! double-double precision, since the denominator `λ(1−λ)(x−y)²` is tiny on
//! fine grids and would otherwise amplify `f64` rounding into the result.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dd::Dd;
use crate::expr::{EvalError, Expression, LnError};

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_REFINE_ROUNDS: usize = 3;
/// `|c*|` at or below this is reported as zero; below `−ZERO_TOL` as a violation.
pub const ZERO_TOL: f64 = 1e-12;
/// Slack allowed by [`check_modulus`].
pub const CHECK_SLACK: f64 = 1e-12;
/// Points per axis in each refinement round.
pub const REFINE_POINTS: usize = 17;
/// Sampled pairs closer than this fraction of `b − a` are skipped; the
/// refinement boxes for `x` and `y` can overlap and would otherwise produce
/// pairs a few ulps apart.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexityKind {
    Convex,
    LogConvex,
    StronglyConvex { modulus: f64 },
    StronglyLogConvex { modulus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    CertifiedPositive,
    CertifiedZero,
    NotLogConvex,
}

impl CertificateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateStatus::CertifiedPositive => "certified_positive",
            CertificateStatus::CertifiedZero => "certified_zero",
            CertificateStatus::NotLogConvex => "not_log_convex",
        }
    }
}

/// A sample point `(x, y, λ)` of the defining inequality, stored with `x < y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple {
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
}

impl Triple {
    fn cmp_lex(&self, other: &Triple) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.lambda.total_cmp(&other.lambda))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusCertificate {
    pub c_star: f64,
    pub witness: Triple,
    pub grid_size: usize,
    pub refinement_rounds: usize,
    pub status: CertificateStatus,
    pub triples_evaluated: usize,
}

impl ModulusCertificate {
    pub fn kind(&self) -> Option<ConvexityKind> {
        match self.status {
            CertificateStatus::CertifiedPositive => Some(ConvexityKind::StronglyLogConvex { modulus: self.c_star }),
            CertificateStatus::CertifiedZero => Some(ConvexityKind::LogConvex),
            CertificateStatus::NotLogConvex => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ModulusCheck {
    Ok { min_defect: f64, witness: Triple },
    Violation { defect: f64, witness: Triple },
}

impl ModulusCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, ModulusCheck::Ok { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("grid needs at least 3 points, got {0}")]
    GridTooSmall(usize),
    #[error("modulus must be positive and finite, got {0}")]
    InvalidModulus(f64),
    #[error("x and y must differ (both {0})")]
    CoincidentPoints(f64),
    #[error("λ must lie strictly between 0 and 1, got {0}")]
    LambdaOutOfRange(f64),
    #[error("not applicable: f({x}) = {value} is not positive")]
    NonPositive { x: f64, value: f64 },
    #[error("not applicable: evaluating f at {x} failed: {source}")]
    Eval { x: f64, source: EvalError },
    #[error("not applicable: defect ratio is not finite at ({}, {}, {})", .0.x, .0.y, .0.lambda)]
    NonFiniteDefect(Triple),
}

fn ln_f(f: &Expression, x: Dd) -> Result<Dd, CertifyError> {
    f.ln_precise(x).map_err(|e| match e {
        LnError::NonPositive(value) => CertifyError::NonPositive { x: x.to_f64(), value },
        LnError::Eval(source) => CertifyError::Eval { x: x.to_f64(), source },
    })
}

/// A sampled abscissa with `ln f` cached.
#[derive(Debug, Clone, Copy)]
struct Point {
    x: f64,
    ln_f: Dd,
}

impl Point {
    fn new(f: &Expression, x: f64) -> Result<Point, CertifyError> {
        Ok(Point {
            x,
            ln_f: ln_f(f, Dd::from_f64(x))?,
        })
    }
}

/// Defect ratio for `p.x < q.x`, weight `lambda` on `p`.
fn defect_ordered(f: &Expression, p: &Point, q: &Point, lambda: f64) -> Result<f64, CertifyError> {
    let lam = Dd::from_f64(lambda);
    let mu = Dd::ONE - lam;
    let z = lam * Dd::from_f64(p.x) + mu * Dd::from_f64(q.x);
    let ln_fz = ln_f(f, z)?;
    let gap = (lam * p.ln_f + mu * q.ln_f - ln_fz).to_f64();
    let fz = ln_fz.to_f64().exp();
    let dx = q.x - p.x;
    let defect = fz * gap.exp_m1() / (lambda * mu.to_f64() * dx * dx);
    if defect.is_finite() {
        Ok(defect)
    } else {
        Err(CertifyError::NonFiniteDefect(Triple { x: p.x, y: q.x, lambda }))
    }
}

/// Orders the pair so that `x < y`, complementing λ when swapped.
fn canonical(x: f64, y: f64, lambda: f64) -> Triple {
    if x < y {
        Triple { x, y, lambda }
    } else {
        Triple {
            x: y,
            y: x,
            lambda: 1.0 - lambda,
        }
    }
}

fn validate_triple(x: f64, y: f64, lambda: f64) -> Result<(), CertifyError> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(CertifyError::InvalidInterval { a: x, b: y });
    }
    if x == y {
        return Err(CertifyError::CoincidentPoints(x));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(CertifyError::LambdaOutOfRange(lambda));
    }
    Ok(())
}

/// `( f(x)^λ f(y)^(1−λ) − f(λx + (1−λ)y) ) / ( λ(1−λ)(x−y)² )`
///
/// Invariant under `(x, y, λ) ↔ (y, x, 1−λ)`: both orders are evaluated
/// through the same `x < y` arithmetic.
pub fn log_defect(f: &Expression, x: f64, y: f64, lambda: f64) -> Result<f64, CertifyError> {
    validate_triple(x, y, lambda)?;
    let t = canonical(x, y, lambda);
    let p = Point::new(f, t.x)?;
    let q = Point::new(f, t.y)?;
    defect_ordered(f, &p, &q, t.lambda)
}

/// The ordinary strong-convexity defect
/// `( λf(x) + (1−λ)f(y) − f(λx + (1−λ)y) ) / ( λ(1−λ)(x−y)² )`, in `f64`.
pub fn convex_defect(f: &Expression, x: f64, y: f64, lambda: f64) -> Result<f64, CertifyError> {
    validate_triple(x, y, lambda)?;
    let t = canonical(x, y, lambda);
    let mu = 1.0 - t.lambda;
    let eval = |x: f64| f.evaluate(x).map_err(|source| CertifyError::Eval { x, source });
    let z = t.lambda * t.x + mu * t.y;
    let dx = t.y - t.x;
    Ok((t.lambda * eval(t.x)? + mu * eval(t.y)? - eval(z)?) / (t.lambda * mu * dx * dx))
}

#[derive(Debug, Clone, Copy)]
struct Best {
    defect: f64,
    triple: Triple,
}

impl Best {
    fn better(self, other: Best) -> Best {
        match other
            .defect
            .total_cmp(&self.defect)
            .then_with(|| other.triple.cmp_lex(&self.triple))
        {
            Ordering::Less => other,
            _ => self,
        }
    }
}

fn merge(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.better(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Minimum defect over `xs × ys × lambdas` with `|x − y| ≥ min_gap`. With `ordered_only`,
/// only pairs with `x < y` are visited (enough when the λ grid is symmetric).
fn scan(
    f: &Expression,
    xs: &[Point],
    ys: &[Point],
    lambdas: &[f64],
    ordered_only: bool,
    min_gap: f64,
) -> Result<(Option<Best>, usize), CertifyError> {
    let rows: Vec<Result<(Option<Best>, usize), CertifyError>> = xs
        .par_iter()
        .map(|p| {
            let mut best = None;
            let mut count = 0;
            for q in ys {
                if (q.x - p.x).abs() < min_gap || (ordered_only && q.x < p.x) {
                    continue;
                }
                for &lambda in lambdas {
                    let (lo, hi, lam) = if p.x < q.x {
                        (p, q, lambda)
                    } else {
                        (q, p, 1.0 - lambda)
                    };
                    let defect = defect_ordered(f, lo, hi, lam)?;
                    count += 1;
                    best = merge(
                        best,
                        Some(Best {
                            defect,
                            triple: Triple {
                                x: lo.x,
                                y: hi.x,
                                lambda: lam,
                            },
                        }),
                    );
                }
            }
            Ok((best, count))
        })
        .collect();
    // fold in row order so the first error and the tie-break are deterministic
    let mut best = None;
    let mut count = 0;
    for row in rows {
        let (b, c) = row?;
        best = merge(best, b);
        count += c;
    }
    Ok((best, count))
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * (i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

fn interior_lambdas(n: usize) -> Vec<f64> {
    (1..n).map(|k| k as f64 / n as f64).collect()
}

fn validate_interval(a: f64, b: f64, grid_n: usize) -> Result<(), CertifyError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(CertifyError::InvalidInterval { a, b });
    }
    if grid_n < 3 {
        return Err(CertifyError::GridTooSmall(grid_n));
    }
    Ok(())
}

fn base_grid(f: &Expression, a: f64, b: f64, grid_n: usize) -> Result<(Vec<Point>, Vec<f64>), CertifyError> {
    let points = uniform(a, b, grid_n)
        .into_iter()
        .map(|x| Point::new(f, x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((points, interior_lambdas(grid_n)))
}

fn status_of(c_star: f64) -> CertificateStatus {
    if c_star < -ZERO_TOL {
        CertificateStatus::NotLogConvex
    } else if c_star <= ZERO_TOL {
        CertificateStatus::CertifiedZero
    } else {
        CertificateStatus::CertifiedPositive
    }
}

/// Estimate `c* = inf log_defect` over `[a, b]`.
///
/// `x` and `y` range over `grid_n` uniform points including the endpoints,
/// `λ` over `k/grid_n` for `k = 1..grid_n−1`. Each refinement round then
/// samples a box around the current minimizer with [`REFINE_POINTS`] points
/// per axis; the box starts at one grid cell either way and halves every
/// round. The estimate never increases with more rounds.
pub fn estimate_modulus(
    f: &Expression,
    a: f64,
    b: f64,
    grid_n: usize,
    refine_rounds: usize,
) -> Result<ModulusCertificate, CertifyError> {
    validate_interval(a, b, grid_n)?;
    let (points, lambdas) = base_grid(f, a, b, grid_n)?;
    let (best, mut evaluated) = scan(f, &points, &points, &lambdas, true, MIN_SEPARATION * (b - a))?;
    let mut best = best.expect("grid of at least 3 points has an admissible triple");

    let mut half_x = (b - a) / (grid_n - 1) as f64;
    let mut half_lambda = 1.0 / grid_n as f64;
    for _ in 0..refine_rounds {
        let Triple { x, y, lambda } = best.triple;
        let around = |c: f64| -> Vec<f64> {
            let mut v: Vec<f64> = uniform(c - half_x, c + half_x, REFINE_POINTS)
                .into_iter()
                .filter(|t| (a..=b).contains(t))
                .collect();
            v.dedup();
            v
        };
        let xs = around(x)
            .into_iter()
            .map(|t| Point::new(f, t))
            .collect::<Result<Vec<_>, _>>()?;
        let ys = around(y)
            .into_iter()
            .map(|t| Point::new(f, t))
            .collect::<Result<Vec<_>, _>>()?;
        let lams: Vec<f64> = uniform(lambda - half_lambda, lambda + half_lambda, REFINE_POINTS)
            .into_iter()
            .filter(|&l| l > 0.0 && l < 1.0)
            .collect();
        let (found, n) = scan(f, &xs, &ys, &lams, false, MIN_SEPARATION * (b - a))?;
        evaluated += n;
        if let Some(found) = found {
            best = best.better(found);
        }
        half_x /= 2.0;
        half_lambda /= 2.0;
    }

    Ok(ModulusCertificate {
        c_star: best.defect,
        witness: best.triple,
        grid_size: grid_n,
        refinement_rounds: refine_rounds,
        status: status_of(best.defect),
        triples_evaluated: evaluated,
    })
}

/// Check `log_defect ≥ c − 1e−12` at every triple of the base grid.
pub fn check_modulus(f: &Expression, a: f64, b: f64, c: f64, grid_n: usize) -> Result<ModulusCheck, CertifyError> {
    validate_interval(a, b, grid_n)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(CertifyError::InvalidModulus(c));
    }
    let (points, lambdas) = base_grid(f, a, b, grid_n)?;
    let (best, _) = scan(f, &points, &points, &lambdas, true, MIN_SEPARATION * (b - a))?;
    let best = best.expect("grid of at least 3 points has an admissible triple");
    Ok(if best.defect >= c - CHECK_SLACK {
        ModulusCheck::Ok {
            min_defect: best.defect,
            witness: best.triple,
        }
    } else {
        ModulusCheck::Violation {
            defect: best.defect,
            witness: best.triple,
        }
    })
}
