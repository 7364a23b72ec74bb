//! Seeded random sweeps over parameterized function families.
//!
//! Case `i` of a sweep draws from its own ChaCha stream (`seed`, stream `i`),
//! so a case's parameters do not depend on how many cases ran before it or on
//! which thread ran it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::certify::{estimate_modulus, CertificateStatus, ModulusCertificate, DEFAULT_GRID, DEFAULT_REFINE_ROUNDS};
use crate::chains::{
    dragomir_mond_chain, theorem1_chain, theorem2_bound, ChainError, ChainKind, ChainOptions, ChainReport,
    Theorem2Form, Theorem2Report,
};
use crate::expr::{Expression, ParseError};

pub const ALPHA_RANGE: (f64, f64) = (0.0, 3.0);
pub const BETA_RANGE: (f64, f64) = (-2.0, 2.0);
pub const GAMMA_RANGE: (f64, f64) = (-1.0, 1.0);
pub const SHIFT_RANGE: (f64, f64) = (0.5, 3.0);
pub const POWER_RANGE: (f64, f64) = (-3.0, 3.0);
pub const ENDPOINT_RANGE: (f64, f64) = (-2.0, 2.0);
pub const MIN_WIDTH: f64 = 0.1;
/// `(x + s)^p` is only drawn when `a + s` is at least this far from zero.
pub const MIN_POWER_BASE: f64 = 0.1;
/// Points at which a custom expression must be positive to be accepted.
pub const CUSTOM_PROBES: usize = 33;
pub const MAX_DRAWS: usize = 1000;

/// Chains checked by a sweep, in reporting order.
pub const SWEEP_KINDS: [ChainKind; 4] = [
    ChainKind::DragomirMond,
    ChainKind::Theorem1,
    ChainKind::Theorem2Corrected,
    ChainKind::Theorem2AsPrinted,
];

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `e^(αx² + βx + γ)`
    ExpQuadratic,
    /// `e^(βx + γ)`
    LogAffine,
    /// `(x + s)^p`
    ScaledPower,
    Custom(Expression),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::ExpQuadratic => "exp_quadratic",
            Family::LogAffine => "log_affine",
            Family::ScaledPower => "scaled_power",
            Family::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Custom(e) => write!(f, "custom:{}", e.source()),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("unknown family {0:?} (expected exp_quadratic, log_affine, scaled_power or custom:EXPR)")]
    Unknown(String),
    #[error("custom family expression: {0}")]
    Parse(#[from] ParseError),
}

impl FromStr for Family {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Family, FamilyError> {
        match s.trim() {
            "exp_quadratic" => Ok(Family::ExpQuadratic),
            "log_affine" => Ok(Family::LogAffine),
            "scaled_power" => Ok(Family::ScaledPower),
            other => match other.strip_prefix("custom:") {
                Some(text) => Ok(Family::Custom(Expression::parse(text)?)),
                None => Err(FamilyError::Unknown(other.to_string())),
            },
        }
    }
}

/// Parses a comma-separated family list. Custom expressions may not contain commas.
pub fn parse_families(list: &str) -> Result<Vec<Family>, FamilyError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSpec {
    pub index: u64,
    pub seed: u64,
    pub family: &'static str,
    /// Family parameters by name, in a fixed order.
    pub params: Vec<(&'static str, f64)>,
    pub function_text: String,
    pub a: f64,
    pub b: f64,
    #[serde(skip)]
    pub function: Expression,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn draw_interval<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let (p, q) = (uniform(rng, ENDPOINT_RANGE), uniform(rng, ENDPOINT_RANGE));
        let (a, b) = if p < q { (p, q) } else { (q, p) };
        if b - a >= MIN_WIDTH {
            return (a, b);
        }
    }
}

fn positive_on(f: &Expression, a: f64, b: f64) -> bool {
    (0..CUSTOM_PROBES).all(|i| {
        let x = a + (b - a) * i as f64 / (CUSTOM_PROBES - 1) as f64;
        matches!(f.evaluate(x), Ok(v) if v > 0.0 && v.is_finite())
    })
}

/// The per-case generator for case `index` of a sweep seeded with `seed`.
pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one case. `interval` replaces the random interval when given.
///
/// Returns `None` only for a custom expression that stays non-positive over
/// [`MAX_DRAWS`] interval draws (or on the fixed interval).
pub fn generate_case<R: Rng>(
    family: &Family,
    rng: &mut R,
    index: u64,
    seed: u64,
    interval: Option<(f64, f64)>,
) -> Option<CaseSpec> {
    for _ in 0..MAX_DRAWS {
        let (a, b) = interval.unwrap_or_else(|| draw_interval(rng));
        let (params, text) = match family {
            Family::ExpQuadratic => {
                let (al, be, ga) = (
                    uniform(rng, ALPHA_RANGE),
                    uniform(rng, BETA_RANGE),
                    uniform(rng, GAMMA_RANGE),
                );
                (
                    vec![("alpha", al), ("beta", be), ("gamma", ga)],
                    format!("exp({al:?}*x^2 + {be:?}*x + {ga:?})"),
                )
            }
            Family::LogAffine => {
                let (be, ga) = (uniform(rng, BETA_RANGE), uniform(rng, GAMMA_RANGE));
                (vec![("beta", be), ("gamma", ga)], format!("exp({be:?}*x + {ga:?})"))
            }
            Family::ScaledPower => {
                let (s, p) = (uniform(rng, SHIFT_RANGE), uniform(rng, POWER_RANGE));
                if a + s < MIN_POWER_BASE {
                    continue;
                }
                (vec![("s", s), ("p", p)], format!("(x + {s:?})^{p:?}"))
            }
            Family::Custom(f) => {
                if !positive_on(f, a, b) {
                    if interval.is_some() {
                        return None;
                    }
                    continue;
                }
                (Vec::new(), f.source().to_string())
            }
        };
        let function = match family {
            Family::Custom(f) => f.clone(),
            _ => Expression::parse(&text).expect("generated text parses"),
        };
        return Some(CaseSpec {
            index,
            seed,
            family: family.name(),
            params,
            function_text: text,
            a,
            b,
            function,
        });
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_cases: usize,
    pub families: Vec<Family>,
    pub seed: u64,
    pub options: ChainOptions,
    /// Use this modulus for every case instead of `u · c*`.
    pub c_override: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub grid_n: usize,
    pub refine_rounds: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(n_cases: usize, families: Vec<Family>, seed: u64) -> SweepConfig {
        SweepConfig {
            n_cases,
            families,
            seed,
            options: ChainOptions::default(),
            c_override: None,
            interval: None,
            grid_n: DEFAULT_GRID,
            refine_rounds: DEFAULT_REFINE_ROUNDS,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Holds {
        min_margin: f64,
    },
    Violated {
        min_margin: f64,
        /// Names of the first consecutive pair that breaks the chain.
        witness: (String, String),
        witness_margin: f64,
    },
    NotApplicable {
        reason: String,
    },
}

impl Outcome {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Outcome::Holds { .. } => Some(true),
            Outcome::Violated { .. } => Some(false),
            Outcome::NotApplicable { .. } => None,
        }
    }

    pub fn min_margin(&self) -> Option<f64> {
        match self {
            Outcome::Holds { min_margin } | Outcome::Violated { min_margin, .. } => Some(*min_margin),
            Outcome::NotApplicable { .. } => None,
        }
    }

    fn not_applicable(reason: impl fmt::Display) -> Outcome {
        Outcome::NotApplicable {
            reason: reason.to_string(),
        }
    }

    pub fn from_chain(r: &ChainReport) -> Outcome {
        match r.first_violation {
            None => Outcome::Holds {
                min_margin: r.min_margin,
            },
            Some(i) => Outcome::Violated {
                min_margin: r.min_margin,
                witness: (r.terms[i].name.to_string(), r.terms[i + 1].name.to_string()),
                witness_margin: r.margins[i],
            },
        }
    }

    fn from_bound(margin: f64, holds: bool, rhs_name: &str) -> Outcome {
        if holds {
            Outcome::Holds { min_margin: margin }
        } else {
            Outcome::Violated {
                min_margin: margin,
                witness: ("lhs".to_string(), rhs_name.to_string()),
                witness_margin: margin,
            }
        }
    }

    /// Outcomes of both product-bound forms.
    pub fn from_theorem2(r: &Theorem2Report) -> (Outcome, Outcome) {
        let corrected = Outcome::from_bound(r.margin_corrected, r.holds_corrected, "rhs_corrected");
        let printed = match (r.margin_as_printed, r.holds_as_printed) {
            (Some(m), Some(h)) => Outcome::from_bound(m, h, "rhs_as_printed"),
            _ => Outcome::not_applicable("printed form needs f(b) - f(a) > 0 and != 1"),
        };
        (corrected, printed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub spec: Option<CaseSpec>,
    pub index: u64,
    pub family: &'static str,
    pub certificate: Option<ModulusCertificate>,
    /// Modulus used for the strong chains, when they ran.
    pub c: Option<f64>,
    /// One outcome per entry of [`SWEEP_KINDS`].
    pub outcomes: Vec<(ChainKind, Outcome)>,
}

fn na_all(reason: &str) -> Vec<(ChainKind, Outcome)> {
    SWEEP_KINDS
        .iter()
        .map(|&k| (k, Outcome::not_applicable(reason)))
        .collect()
}

/// Runs one case: certify, then the log-convex chain at `c = 0` and the
/// strong chains at the drawn (or forced) modulus. Errors become
/// not-applicable outcomes.
pub fn run_case(config: &SweepConfig, index: u64) -> CaseResult {
    let family = &config.families[(index % config.families.len() as u64) as usize];
    let mut rng = case_rng(config.seed, index);
    let Some(spec) = generate_case(family, &mut rng, index, config.seed, config.interval) else {
        return CaseResult {
            spec: None,
            index,
            family: family.name(),
            certificate: None,
            c: None,
            outcomes: na_all("no positive draw for this family"),
        };
    };
    let u = 1.0 - rng.gen::<f64>();
    let (f, a, b) = (&spec.function, spec.a, spec.b);
    let opts = &config.options;
    let certificate = match estimate_modulus(f, a, b, config.grid_n, config.refine_rounds) {
        Ok(c) => c,
        Err(e) => {
            return CaseResult {
                index,
                family: spec.family,
                spec: Some(spec),
                certificate: None,
                c: None,
                outcomes: na_all(&e.to_string()),
            }
        }
    };
    let chain = |r: Result<ChainReport, ChainError>| match r {
        Ok(r) => Outcome::from_chain(&r),
        Err(e) => Outcome::not_applicable(e),
    };
    let dm = if certificate.status == CertificateStatus::NotLogConvex {
        Outcome::not_applicable("not log-convex on the grid")
    } else {
        chain(dragomir_mond_chain(f, a, b, opts))
    };
    let c = match (config.c_override, certificate.status) {
        (Some(c), _) => Some(c),
        (None, CertificateStatus::CertifiedPositive) => Some(certificate.c_star * u),
        (None, _) => None,
    };
    let (t1, t2c, t2p) = match c {
        None => {
            let reason = format!("certificate status {}", certificate.status.as_str());
            (
                Outcome::not_applicable(&reason),
                Outcome::not_applicable(&reason),
                Outcome::not_applicable(&reason),
            )
        }
        Some(c) => {
            let t1 = chain(theorem1_chain(f, a, b, c, opts));
            match theorem2_bound(f, a, b, c, Theorem2Form::Both, opts) {
                Ok(r) => {
                    let (corrected, printed) = Outcome::from_theorem2(&r);
                    (t1, corrected, printed)
                }
                Err(e) => (t1, Outcome::not_applicable(&e), Outcome::not_applicable(&e)),
            }
        }
    };
    let outcomes = SWEEP_KINDS.iter().copied().zip([dm, t1, t2c, t2p]).collect();
    CaseResult {
        index,
        family: spec.family,
        spec: Some(spec),
        certificate: Some(certificate),
        c,
        outcomes,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub holds: usize,
    pub violations: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub case_index: u64,
    pub family: &'static str,
    pub function_text: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub kind: ChainKind,
    pub min_margin: f64,
    pub witness: (String, String),
    pub witness_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub cases_run: usize,
    pub families: Vec<String>,
    pub tallies: BTreeMap<ChainKind, Tally>,
    /// Violations of every chain except the as-printed product bound.
    pub violations: Vec<Violation>,
    /// As-printed product bound violations, kept apart: they do not fail a sweep.
    pub printed_violations: Vec<Violation>,
    pub cases: Vec<CaseResult>,
}

impl SweepReport {
    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("a sweep needs at least one case")]
    NoCases,
    #[error("a sweep needs at least one family")]
    NoFamilies,
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub fn sweep(config: &SweepConfig) -> Result<SweepReport, SweepError> {
    if config.n_cases == 0 {
        return Err(SweepError::NoCases);
    }
    if config.families.is_empty() {
        return Err(SweepError::NoFamilies);
    }
    let run = || -> Vec<CaseResult> {
        (0..config.n_cases as u64)
            .into_par_iter()
            .map(|i| run_case(config, i))
            .collect()
    };
    let cases = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run),
        None => run(),
    };

    let mut tallies: BTreeMap<ChainKind, Tally> = SWEEP_KINDS.iter().map(|&k| (k, Tally::default())).collect();
    let mut violations = Vec::new();
    let mut printed_violations = Vec::new();
    for case in &cases {
        for (kind, outcome) in &case.outcomes {
            let t = tallies.get_mut(kind).expect("every sweep kind is tallied");
            match outcome {
                Outcome::Holds { .. } => t.holds += 1,
                Outcome::NotApplicable { .. } => t.not_applicable += 1,
                Outcome::Violated {
                    min_margin,
                    witness,
                    witness_margin,
                } => {
                    t.violations += 1;
                    let spec = case.spec.as_ref().expect("violations come from generated cases");
                    let v = Violation {
                        case_index: case.index,
                        family: case.family,
                        function_text: spec.function_text.clone(),
                        a: spec.a,
                        b: spec.b,
                        c: if *kind == ChainKind::DragomirMond {
                            0.0
                        } else {
                            case.c.unwrap_or(0.0)
                        },
                        kind: *kind,
                        min_margin: *min_margin,
                        witness: witness.clone(),
                        witness_margin: *witness_margin,
                    };
                    if *kind == ChainKind::Theorem2AsPrinted {
                        printed_violations.push(v);
                    } else {
                        violations.push(v);
                    }
                }
            }
        }
    }
    Ok(SweepReport {
        seed: config.seed,
        cases_run: cases.len(),
        families: config.families.iter().map(|f| f.to_string()).collect(),
        tallies,
        violations,
        printed_violations,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::theorem1_chain;
    use crate::expr::parse;

    #[test]
    fn family_parsing() {
        let fams = parse_families("exp_quadratic, log_affine,scaled_power,custom:exp(x^2)").unwrap();
        assert_eq!(fams.len(), 4);
        assert_eq!(fams[3], Family::Custom(parse("exp(x^2)").unwrap()));
        assert_eq!(fams[3].to_string(), "custom:exp(x^2)");
        assert!(matches!(parse_families("cubic"), Err(FamilyError::Unknown(_))));
        assert!(matches!(parse_families("custom:exp("), Err(FamilyError::Parse(_))));
    }

    #[test]
    fn generated_cases_respect_ranges() {
        for family in [Family::ExpQuadratic, Family::LogAffine, Family::ScaledPower] {
            for i in 0..200 {
                let c = generate_case(&family, &mut case_rng(7, i), i, 7, None).unwrap();
                assert!(c.a >= -2.0 && c.b <= 2.0 && c.b - c.a >= MIN_WIDTH);
                for (name, v) in &c.params {
                    let (lo, hi) = match *name {
                        "alpha" => ALPHA_RANGE,
                        "beta" => BETA_RANGE,
                        "gamma" => GAMMA_RANGE,
                        "s" => SHIFT_RANGE,
                        "p" => POWER_RANGE,
                        _ => unreachable!(),
                    };
                    assert!(*v >= lo && *v <= hi, "{name}={v}");
                }
                assert!(positive_on(&c.function, c.a, c.b), "{}", c.function_text);
            }
        }
    }

    #[test]
    fn generated_text_reproduces_parameters() {
        let c = generate_case(&Family::ExpQuadratic, &mut case_rng(1, 3), 3, 1, Some((0.0, 1.0))).unwrap();
        let (al, be, ga) = (c.params[0].1, c.params[1].1, c.params[2].1);
        let x = 0.3;
        assert_eq!(c.function.evaluate(x).unwrap(), (al * x.powi(2) + be * x + ga).exp());
        assert_eq!((c.a, c.b), (0.0, 1.0));
    }

    #[test]
    fn same_seed_same_case() {
        let draw = |seed, i| generate_case(&Family::ScaledPower, &mut case_rng(seed, i), i, seed, None).unwrap();
        assert_eq!(draw(11, 5), draw(11, 5));
        assert_ne!(draw(11, 5), draw(11, 6));
        assert_ne!(draw(11, 5), draw(12, 5));
    }

    #[test]
    fn custom_family_rejects_non_positive() {
        let fam = Family::Custom(parse("x").unwrap());
        assert!(generate_case(&fam, &mut case_rng(0, 0), 0, 0, Some((-1.0, 1.0))).is_none());
        let c = generate_case(&fam, &mut case_rng(0, 0), 0, 0, None);
        assert!(c.is_none_or(|c| c.a > 0.0));
    }

    #[test]
    fn forced_constant_gives_one_strong_chain_violation() {
        let mut config = SweepConfig::new(1, vec![Family::Custom(parse("1").unwrap())], 0);
        config.c_override = Some(0.1);
        config.interval = Some((0.0, 1.0));
        let r = sweep(&config).unwrap();
        assert_eq!(r.tallies[&ChainKind::Theorem1].violations, 1);
        assert_eq!(r.tallies[&ChainKind::DragomirMond].holds, 1);
        let v = r.violations.iter().find(|v| v.kind == ChainKind::Theorem1).unwrap();
        assert_eq!(v.witness, ("f_mid_plus".to_string(), "mean_geometric".to_string()));
        assert!((v.witness_margin + 0.1 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_is_deterministic_and_thread_independent() {
        let fams = vec![Family::ExpQuadratic, Family::LogAffine, Family::ScaledPower];
        let mut config = SweepConfig::new(12, fams, 2024);
        config.grid_n = 16;
        config.refine_rounds = 1;
        let a = sweep(&config).unwrap();
        config.threads = Some(1);
        let b = sweep(&config).unwrap();
        assert_eq!(a, b);
        for kind in SWEEP_KINDS {
            let t = a.tallies[&kind];
            assert_eq!(t.holds + t.violations + t.not_applicable, a.cases_run);
        }
    }

    #[test]
    fn recorded_violations_reproduce() {
        let mut config = SweepConfig::new(4, vec![Family::ExpQuadratic], 5);
        config.c_override = Some(50.0);
        config.grid_n = 16;
        let r = sweep(&config).unwrap();
        assert!(!r.violations.is_empty());
        for v in r.violations.iter().filter(|v| v.kind == ChainKind::Theorem1) {
            let f = parse(&v.function_text).unwrap();
            let again = theorem1_chain(&f, v.a, v.b, v.c, &config.options).unwrap();
            assert!((again.min_margin - v.min_margin).abs() <= 1e-12);
        }
    }
}
