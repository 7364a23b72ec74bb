//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! Each panel is integrated with the 15-point Kronrod rule and the embedded
//! 7-point Gauss rule; `|K15 − G7|` is the panel's error estimate. The panel
//! with the largest estimate is bisected until the summed estimate drops to
//! `tol · max(1, |I|)` or no panel may be split further.

use thiserror::Error;

use crate::expr::{EvalError, Expression};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: u32 = 50;
/// Hard cap on the number of live panels.
pub const MAX_PANELS: usize = 20_000;

// Kronrod abscissae on [-1, 1] (positive half, descending); odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tol: DEFAULT_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl QuadratureOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureResult {
    /// The absolute error target the run was held to.
    pub fn target(&self, tol: f64) -> f64 {
        tol * self.value.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("integrand failed at x = {x}: {source}")]
    Integrand { x: f64, source: EvalError },
    #[error("integrand is not finite at x = {x} ({value})")]
    NonFinite { x: f64, value: f64 },
    #[error("quadrature did not converge (estimate {}, error {})", result.value, result.error_estimate)]
    NotConverged { result: QuadratureResult },
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: f64,
    error: f64,
}

fn kronrod<F>(g: &mut F, a: f64, b: f64, depth: u32) -> Result<Panel, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, QuadError> {
        let v = g(x).map_err(|source| QuadError::Integrand { x, source })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { x, value: v })
        }
    };
    let fc = eval(center)?;
    let mut k = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = eval(center - dx)? + eval(center + dx)?;
        k += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Panel {
        a,
        b,
        depth,
        value: k * half,
        error: ((k - gauss) * half).abs(),
    })
}

/// Integrate `g` over `[a, b]`.
///
/// Non-convergence is not an error: the best estimate comes back with
/// `converged == false`. Integrand failures carry the offending abscissa.
pub fn integrate<F>(mut g: F, a: f64, b: f64, opts: QuadratureOptions) -> Result<QuadratureResult, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(QuadError::InvalidTolerance(opts.tol));
    }
    // kept sorted by left endpoint so the final sum has a fixed order
    let mut panels = vec![kronrod(&mut g, a, b, 0)?];
    let mut evaluations = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let target = opts.tol * value.abs().max(1.0);
        let done = |converged| QuadratureResult {
            value,
            error_estimate: error,
            evaluations,
            converged,
        };
        if error <= target {
            return Ok(done(true));
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < opts.max_depth && p.error > 0.0)
            .fold(None::<(usize, f64)>, |best, (i, p)| match best {
                Some((_, e)) if e >= p.error => best,
                _ => Some((i, p.error)),
            });
        let Some((i, _)) = worst else {
            return Ok(done(false));
        };
        if panels.len() >= MAX_PANELS {
            return Ok(done(false));
        }
        let p = panels[i];
        let mid = 0.5 * (p.a + p.b);
        if !(p.a < mid && mid < p.b) {
            // panel is down to adjacent floats
            panels[i].depth = opts.max_depth;
            continue;
        }
        let left = kronrod(&mut g, p.a, mid, p.depth + 1)?;
        let right = kronrod(&mut g, mid, p.b, p.depth + 1)?;
        evaluations += 30;
        panels[i] = left;
        panels.insert(i + 1, right);
    }
}

/// Integrate an expression over `[a, b]`.
pub fn integrate_expr(f: &Expression, a: f64, b: f64, opts: QuadratureOptions) -> Result<QuadratureResult, QuadError> {
    integrate(|x| f.evaluate(x), a, b, opts)
}

/// Integrate and insist on convergence.
pub fn integrate_converged<F>(g: F, a: f64, b: f64, opts: QuadratureOptions) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    let result = integrate(g, a, b, opts)?;
    if result.converged {
        Ok(result.value)
    } else {
        Err(QuadError::NotConverged { result })
    }
}

/// `(1/(b−a)) ∫ₐᵇ f(x) dx`; a scalar result, so non-convergence is an error here.
pub fn mean_integral(f: &Expression, a: f64, b: f64, opts: QuadratureOptions) -> Result<f64, QuadError> {
    Ok(integrate_converged(|x| f.evaluate(x), a, b, opts)? / (b - a))
}
