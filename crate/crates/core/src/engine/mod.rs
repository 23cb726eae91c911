//! The two-step extended process
//!
//! ```text
//! y_n     = β_n g_n(x_n) + (1 − β_n) T x_n
//! x_{n+1} = α_n f_n(x_n) + (1 − α_n) T y_n
//! ```
//!
//! and constructors that express the classical schemes as instances of it.

pub mod direct;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{BoundedSequence, DomainSpec, FamilySpec, OperatorSpec};
use crate::schedules::ScheduleSpec;
use crate::space::{SpaceSpec, Vector};

pub const DEFAULT_DIVERGENCE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopRule {
    pub max_iters: u64,
    pub residual_tol: f64,
    pub divergence_radius: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_iters: 10_000,
            residual_tol: 0.0,
            divergence_radius: DEFAULT_DIVERGENCE_RADIUS,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol.is_finite() && self.residual_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("residual_tol must be >= 0, got {}", self.residual_tol)));
        }
        if !(self.divergence_radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "divergence_radius must be > 0, got {}",
                self.divergence_radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    ResidualBelowTol,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxIters => "max_iters",
            StopReason::ResidualBelowTol => "residual_below_tol",
            StopReason::Diverged => "diverged",
        }
    }
}

/// `x_n` as the anchor `u` or as the current iterate.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Anchored(Vec<f64>),
    Inertial,
}

/// Which source recursion a config was built from, with the raw inputs the
/// theorem validators need.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Extended,
    Mann {
        variant: Variant,
    },
    Ishikawa {
        variant: Variant,
    },
    MannErrors {
        u: Vec<f64>,
        u_seq: BoundedSequence,
        alpha: ScheduleSpec,
        gamma: ScheduleSpec,
    },
    IshikawaErrors {
        u: Vec<f64>,
        u_seq: BoundedSequence,
        v_seq: BoundedSequence,
        alpha: ScheduleSpec,
        beta: ScheduleSpec,
        gamma: ScheduleSpec,
        delta: ScheduleSpec,
    },
    Viscosity,
    Yao {
        u: Vec<f64>,
        alpha: ScheduleSpec,
        beta: ScheduleSpec,
    },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Extended => "extended",
            Scheme::Mann { .. } => "mann",
            Scheme::Ishikawa { .. } => "ishikawa",
            Scheme::MannErrors { .. } => "mann_errors",
            Scheme::IshikawaErrors { .. } => "ishikawa_errors",
            Scheme::Viscosity => "viscosity",
            Scheme::Yao { .. } => "yao",
        }
    }
}

/// Inputs shared by every scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessBase {
    pub space: SpaceSpec,
    pub domain: DomainSpec,
    pub t_op: OperatorSpec,
    pub x0: Vector,
    pub stop: StopRule,
    pub seed: u64,
}

/// One fully specified run of the extended process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessConfig {
    pub space: SpaceSpec,
    pub domain: DomainSpec,
    pub t_op: OperatorSpec,
    pub f_family: FamilySpec,
    pub g_family: FamilySpec,
    pub alpha: ScheduleSpec,
    pub beta: ScheduleSpec,
    pub x0: Vector,
    pub stop: StopRule,
    /// Seed for the sampling checks run against this config.
    pub seed: u64,
    /// `δ_n` and `M` of the perturbation bound `β_n‖g_n(x) − x‖ ≤ δ_n(‖x‖ + M)`.
    pub delta: ScheduleSpec,
    pub perturbation_m: f64,
    pub scheme: Scheme,
}

impl ProcessConfig {
    /// A directly specified extended process.
    #[allow(clippy::too_many_arguments)]
    pub fn extended(
        base: ProcessBase,
        f_family: FamilySpec,
        g_family: FamilySpec,
        alpha: ScheduleSpec,
        beta: ScheduleSpec,
        delta: ScheduleSpec,
        perturbation_m: f64,
    ) -> Result<Self> {
        let cfg = ProcessConfig {
            space: base.space,
            domain: base.domain,
            t_op: base.t_op,
            f_family,
            g_family,
            alpha,
            beta,
            x0: base.x0,
            stop: base.stop,
            seed: base.seed,
            delta,
            perturbation_m,
            scheme: Scheme::Extended,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_base(base: ProcessBase, f_family: FamilySpec, g_family: FamilySpec, alpha: ScheduleSpec, beta: ScheduleSpec, scheme: Scheme) -> Self {
        ProcessConfig {
            space: base.space,
            domain: base.domain,
            t_op: base.t_op,
            f_family,
            g_family,
            alpha,
            beta,
            x0: base.x0,
            stop: base.stop,
            seed: base.seed,
            delta: ScheduleSpec::zero(),
            perturbation_m: 1.0,
            scheme,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.space;
        if self.x0.space() != space {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: self.x0.dim(),
            });
        }
        self.domain.validate(space)?;
        self.t_op.validate(space)?;
        self.f_family.validate(space, &self.domain)?;
        self.g_family.validate(space, &self.domain)?;
        self.alpha.check_unit_range().map_err(|e| tag("alpha", e))?;
        self.beta.check_unit_range().map_err(|e| tag("beta", e))?;
        self.delta.check_unit_range().map_err(|e| tag("delta", e))?;
        self.stop.validate()?;
        if !(self.perturbation_m.is_finite() && self.perturbation_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "perturbation bound M must be > 0, got {}",
                self.perturbation_m
            )));
        }
        if !self.domain.contains(&self.x0, 1e-12) {
            return Err(Error::InvalidArgument("x0 must lie in the domain".into()));
        }
        Ok(())
    }
}

fn tag(name: &str, e: Error) -> Error {
    match e {
        Error::InvalidSchedule(m) => Error::InvalidSchedule(format!("{name}: {m}")),
        other => other,
    }
}

fn check_anchor(space: SpaceSpec, domain: &DomainSpec, u: &[f64], what: &str) -> Result<()> {
    let v = Vector::new(space, u.to_vec())?;
    if !domain.contains(&v, 1e-12) {
        return Err(Error::InvalidArgument(format!("{what} must lie in the domain")));
    }
    Ok(())
}

fn check_sequence(space: SpaceSpec, domain: &DomainSpec, s: &BoundedSequence, what: &str) -> Result<()> {
    s.validate(space)?;
    if !s.inside(space, domain) {
        return Err(Error::InvalidArgument(format!("{what} must stay in the domain")));
    }
    Ok(())
}

/// Raw weights whose sum becomes an engine weight must stay in `[0,1]` and
/// must not vanish.
fn combined_weight(a: &ScheduleSpec, b: &ScheduleSpec, what: &str) -> Result<ScheduleSpec> {
    a.check_unit_range()?;
    b.check_unit_range()?;
    let sum = a.plus(b);
    if sum.sup() > 1.0 {
        return Err(Error::InvalidSchedule(format!("{what} reaches {} > 1", sum.sup())));
    }
    if !sum.strictly_positive() {
        return Err(Error::DegenerateIndex { n: 0, what: what.into() });
    }
    Ok(sum)
}

fn anchor_family(variant: &Variant) -> FamilySpec {
    match variant {
        Variant::Anchored(u) => FamilySpec::ConstantFamily {
            f: OperatorSpec::constant(u.clone()),
        },
        Variant::Inertial => FamilySpec::IdentityFamily,
    }
}

/// `x_{n+1} = α_n u + (1 − α_n) T x_n`, or `α_n x_n + (1 − α_n) T x_n`.
pub fn make_mann(base: ProcessBase, variant: Variant, alpha: ScheduleSpec) -> Result<ProcessConfig> {
    if let Variant::Anchored(u) = &variant {
        check_anchor(base.space, &base.domain, u, "anchor u")?;
    }
    let f = anchor_family(&variant);
    let cfg = ProcessConfig::from_base(base, f, FamilySpec::IdentityFamily, alpha, ScheduleSpec::one(), Scheme::Mann { variant });
    cfg.validate()?;
    Ok(cfg)
}

/// `y_n = β_n x_n + (1 − β_n) T x_n`, `x_{n+1} = α_n u + (1 − α_n) T y_n`
/// (or `α_n x_n` in place of `α_n u`).
pub fn make_ishikawa(base: ProcessBase, variant: Variant, alpha: ScheduleSpec, beta: ScheduleSpec) -> Result<ProcessConfig> {
    if let Variant::Anchored(u) = &variant {
        check_anchor(base.space, &base.domain, u, "anchor u")?;
    }
    let f = anchor_family(&variant);
    let cfg = ProcessConfig::from_base(base, f, FamilySpec::IdentityFamily, alpha, beta, Scheme::Ishikawa { variant });
    cfg.validate()?;
    Ok(cfg)
}

/// `x_{n+1} = α_n u + (1 − α_n − γ_n) T x_n + γ_n u_n`.
pub fn make_mann_with_errors(
    base: ProcessBase,
    u: Vec<f64>,
    u_seq: BoundedSequence,
    alpha: ScheduleSpec,
    gamma: ScheduleSpec,
) -> Result<ProcessConfig> {
    check_anchor(base.space, &base.domain, &u, "anchor u")?;
    check_sequence(base.space, &base.domain, &u_seq, "u_seq")?;
    let alpha_eff = combined_weight(&alpha, &gamma, "alpha_n + gamma_n")?;
    let f = FamilySpec::ErrorsFamily {
        u: u.clone(),
        u_seq: u_seq.clone(),
        alpha: alpha.clone(),
        gamma: gamma.clone(),
    };
    let scheme = Scheme::MannErrors { u, u_seq, alpha, gamma };
    let cfg = ProcessConfig::from_base(base, f, FamilySpec::IdentityFamily, alpha_eff, ScheduleSpec::one(), scheme);
    cfg.validate()?;
    Ok(cfg)
}

/// `y_n = β_n x_n + (1 − β_n − δ_n) T x_n + δ_n v_n`,
/// `x_{n+1} = α_n u + (1 − α_n − γ_n) T y_n + γ_n u_n`.
#[allow(clippy::too_many_arguments)]
pub fn make_ishikawa_with_errors(
    base: ProcessBase,
    u: Vec<f64>,
    u_seq: BoundedSequence,
    v_seq: BoundedSequence,
    alpha: ScheduleSpec,
    beta: ScheduleSpec,
    gamma: ScheduleSpec,
    delta: ScheduleSpec,
) -> Result<ProcessConfig> {
    check_anchor(base.space, &base.domain, &u, "anchor u")?;
    check_sequence(base.space, &base.domain, &u_seq, "u_seq")?;
    check_sequence(base.space, &base.domain, &v_seq, "v_seq")?;
    let alpha_eff = combined_weight(&alpha, &gamma, "alpha_n + gamma_n")?;
    let beta_eff = combined_weight(&beta, &delta, "beta_n + delta_n")?;
    let f = FamilySpec::ErrorsFamily {
        u: u.clone(),
        u_seq: u_seq.clone(),
        alpha: alpha.clone(),
        gamma: gamma.clone(),
    };
    let g = FamilySpec::ErrorsStateFamily {
        v_seq: v_seq.clone(),
        beta: beta.clone(),
        delta: delta.clone(),
    };
    let m = v_seq.norm_bound(base.space).max(1.0);
    let scheme = Scheme::IshikawaErrors { u, u_seq, v_seq, alpha, beta, gamma, delta: delta.clone() };
    let mut cfg = ProcessConfig::from_base(base, f, g, alpha_eff, beta_eff, scheme);
    cfg.delta = delta;
    cfg.perturbation_m = m;
    cfg.validate()?;
    Ok(cfg)
}

/// `x_{n+1} = α_n f(x_n) + (1 − α_n) T x_n`.
pub fn make_viscosity(base: ProcessBase, f: OperatorSpec, alpha: ScheduleSpec) -> Result<ProcessConfig> {
    let fam = FamilySpec::ConstantFamily { f };
    let cfg = ProcessConfig::from_base(base, fam, FamilySpec::IdentityFamily, alpha, ScheduleSpec::one(), Scheme::Viscosity);
    cfg.validate()?;
    Ok(cfg)
}

/// `x_{n+1} = α_n u + β_n x_n + γ_n T x_n` with `γ_n = 1 − α_n − β_n`.
pub fn make_yao_three_term(base: ProcessBase, u: Vec<f64>, alpha: ScheduleSpec, beta: ScheduleSpec) -> Result<ProcessConfig> {
    check_anchor(base.space, &base.domain, &u, "anchor u")?;
    let alpha_eff = combined_weight(&alpha, &beta, "alpha_n + beta_n")?;
    let f = FamilySpec::ThreeTermFamily {
        u: u.clone(),
        alpha: alpha.clone(),
        beta: beta.clone(),
    };
    let scheme = Scheme::Yao { u, alpha, beta };
    let cfg = ProcessConfig::from_base(base, f, FamilySpec::IdentityFamily, alpha_eff, ScheduleSpec::one(), scheme);
    cfg.validate()?;
    Ok(cfg)
}

/// One step from `x_n`: returns `(x_{n+1}, y_n)`.
///
/// Evaluation order: `g_n(x_n)`, `T x_n`, combine, `T y_n`, `f_n(x_n)`, combine.
pub fn step_extended(cfg: &ProcessConfig, n: u64, x: &Vector) -> Result<(Vector, Vector)> {
    let (y, _) = half_step(cfg, n, x)?;
    let x_next = second_half(cfg, n, x, &y)?;
    Ok((x_next, y))
}

/// `(y_n, T x_n)`.
fn half_step(cfg: &ProcessConfig, n: u64, x: &Vector) -> Result<(Vector, Vector)> {
    let g = cfg.g_family.eval(n, x)?;
    let tx = cfg.t_op.apply(x)?;
    let y = tx.lerp(&g, cfg.beta.eval(n))?;
    Ok((y, tx))
}

fn second_half(cfg: &ProcessConfig, n: u64, x: &Vector, y: &Vector) -> Result<Vector> {
    let ty = cfg.t_op.apply(y)?;
    let f = cfg.f_family.eval(n, x)?;
    ty.lerp(&f, cfg.alpha.eval(n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub n: u64,
    pub x: Vector,
    pub y: Vector,
    /// `‖T x_n − x_n‖`
    pub residual: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `‖x_n − q̂‖` when a reference point was supplied.
    pub dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub space: SpaceSpec,
    pub steps: Vec<Step>,
    pub stop: StopReason,
    pub reference: Option<Vector>,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &Step {
        self.steps.last().expect("trajectory always holds x_0")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Iterates until a stop rule fires.
///
/// Each row is recorded before the rules are checked, in this order:
/// `‖x_n‖ > R_max`, residual strictly below tolerance, `n = max_iters`. An
/// iterate that is no longer finite stops the run as diverged without being
/// recorded.
pub fn run(cfg: &ProcessConfig, reference: Option<&Vector>) -> Result<TrajectoryRecord> {
    if let Some(q) = reference {
        cfg.x0.ensure_same_space(q)?;
    }
    let mut steps = Vec::new();
    let mut x = cfg.x0.clone();
    let mut n = 0u64;
    let stop = loop {
        if !x.is_finite() {
            break StopReason::Diverged;
        }
        let (y, tx) = half_step(cfg, n, &x)?;
        let residual = tx.distance(&x)?;
        if !(y.is_finite() && residual.is_finite()) {
            break StopReason::Diverged;
        }
        let dist = match reference {
            Some(q) => Some(x.distance(q)?),
            None => None,
        };
        let norm = x.norm();
        let row = Step {
            n,
            x,
            y,
            residual,
            alpha: cfg.alpha.eval(n),
            beta: cfg.beta.eval(n),
            dist,
        };
        steps.push(row);
        let last = steps.last().expect("just pushed");
        if !(norm <= cfg.stop.divergence_radius) {
            break StopReason::Diverged;
        }
        if residual < cfg.stop.residual_tol {
            break StopReason::ResidualBelowTol;
        }
        if n >= cfg.stop.max_iters {
            break StopReason::MaxIters;
        }
        x = second_half(cfg, n, &last.x, &last.y)?;
        n += 1;
    };
    Ok(TrajectoryRecord {
        space: cfg.space,
        steps,
        stop,
        reference: reference.cloned(),
    })
}
