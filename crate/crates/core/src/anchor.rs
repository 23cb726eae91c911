//! Implicit anchor path `z_t = t f(z_t) + (1 − t) T z_t` and its limit as
//! `t → 0`.
//!
//! Each implicit equation is solved by plain Picard iteration on
//! `G(z) = T z + t (f(z) − T z)`, a contraction with factor
//! `κ = t L_f + (1 − t) L_T`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{FamilySpec, OperatorSpec};
use crate::schedules::ScheduleSpec;
use crate::space::{duality_map, pairing, SpaceSpec, Vector};

#[derive(Debug, Clone, Serialize)]
pub struct ImplicitSolution {
    pub z: Vector,
    pub iters: usize,
    /// Measured `‖z − G(z)‖`.
    pub residual: f64,
    pub kappa: f64,
    /// `⌈ln(tol / ‖G(z_init) − z_init‖) / ln κ⌉`.
    pub budget: usize,
    /// Largest `(‖z_{k+1} − z_k‖ − (κ + 1e-12) ‖z_k − z_{k−1}‖) / max(1, ‖z_k‖)`
    /// seen; positive values above rounding level break the contraction law.
    pub contraction_excess: f64,
}

fn certificate(op: &OperatorSpec, space: SpaceSpec, what: &str) -> Result<f64> {
    op.lipschitz_claim(space)
        .ok_or_else(|| Error::InvalidOperator(format!("{what} ({}) has no Lipschitz certificate in l_{}", op.kind_name(), space.p())))
}

fn kappa_for(t: f64, lf: f64, lt: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("t must lie in (0,1], got {t}")));
    }
    if !(lf < 1.0) {
        return Err(Error::InvalidOperator(format!("f must be a contraction, certificate {lf}")));
    }
    if lt > 1.0 {
        return Err(Error::InvalidOperator(format!("T must be nonexpansive, certificate {lt}")));
    }
    Ok(t * lf + (1.0 - t) * lt)
}

/// Iterations a contraction with factor `kappa` needs to shrink `res0` to `tol`.
pub fn iteration_budget(kappa: f64, res0: f64, tol: f64) -> usize {
    if res0 <= tol {
        return 0;
    }
    if kappa <= 0.0 {
        return 1;
    }
    let n = (tol / res0).ln() / (kappa - 1.0).ln_1p();
    if n.is_finite() {
        n.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

fn picard(
    g: impl Fn(&Vector) -> Result<Vector>,
    kappa: f64,
    z_init: &Vector,
    tol: f64,
    max_inner: Option<usize>,
) -> Result<ImplicitSolution> {
    let mut z = z_init.clone();
    let mut gz = g(&z)?;
    let mut step = gz.distance(&z)?;
    let budget = iteration_budget(kappa, step, tol);
    let cap = max_inner.unwrap_or_else(|| budget.saturating_mul(2).max(16));
    let mut iters = 0usize;
    let mut excess = f64::NEG_INFINITY;
    let mut best = (z.clone(), step);
    while !(step <= tol) {
        if iters >= cap || !step.is_finite() {
            return Err(Error::NonConvergence {
                best: Box::new(best.0),
                residual: best.1,
                iters,
                tol,
            });
        }
        z = gz;
        gz = g(&z)?;
        let next = gz.distance(&z)?;
        excess = excess.max((next - (kappa + 1e-12) * step) / z.norm().max(1.0));
        step = next;
        iters += 1;
        if step < best.1 {
            best = (z.clone(), step);
        }
    }
    Ok(ImplicitSolution {
        z,
        iters,
        residual: step,
        kappa,
        budget,
        contraction_excess: excess.max(0.0),
    })
}

/// Solves `z = t f(z) + (1 − t) T z` to measured residual `≤ inner_tol`.
///
/// `max_inner` defaults to twice the contraction budget.
pub fn solve_implicit(
    t_op: &OperatorSpec,
    f: &OperatorSpec,
    t: f64,
    z_init: &Vector,
    inner_tol: f64,
    max_inner: Option<usize>,
) -> Result<ImplicitSolution> {
    let space = z_init.space();
    let kappa = kappa_for(t, certificate(f, space, "f")?, certificate(t_op, space, "T")?)?;
    picard(|z| t_op.apply(z)?.lerp(&f.apply(z)?, t), kappa, z_init, inner_tol, max_inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathParams {
    pub t0: f64,
    pub sigma: f64,
    pub path_tol: f64,
    pub inner_tol: f64,
    pub max_stages: usize,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            t0: 0.5,
            sigma: 0.5,
            path_tol: 1e-8,
            inner_tol: 1e-12,
            max_stages: 60,
        }
    }
}

impl PathParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0 < 1.0) {
            return Err(Error::InvalidArgument(format!("t0 must lie in (0,1), got {}", self.t0)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidArgument(format!("sigma must lie in (0,1), got {}", self.sigma)));
        }
        if !(self.path_tol > 0.0 && self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument("path_tol and inner_tol must be > 0".into()));
        }
        if self.max_stages == 0 {
            return Err(Error::InvalidArgument("max_stages must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathEntry {
    pub stage: usize,
    pub t: f64,
    pub z: Vector,
    pub inner_iters: usize,
    pub inner_residual: f64,
    /// `‖T z − z‖`
    pub fixed_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnchorResult {
    pub q_hat: Vector,
    pub path: Vec<PathEntry>,
    /// The last path step fell below `path_tol`.
    pub converged: bool,
    /// `‖T q̂ − q̂‖`, measured.
    pub fixed_residual: f64,
    /// A priori bound `t_last ‖f(q̂) − T q̂‖ + inner_tol` on `‖T q̂ − q̂‖`.
    pub epsilon: f64,
    /// `max_j (‖T z_j − z_j‖ − inner_tol) / t_j`.
    pub residual_rate: f64,
    /// Whether every stage satisfies `‖T z_j − z_j‖ ≤ t_j ‖f(z_j) − T z_j‖ + inner_tol`.
    pub residual_rate_ok: bool,
    /// Estimated `‖q̂ − Q(f)‖` from the geometric tail of the path steps.
    pub limit_error: f64,
    /// Tolerance for [`vi_residual`] derived from `limit_error`.
    pub vi_tolerance: f64,
    pub vi_residual_max: Option<f64>,
}

impl AnchorResult {
    /// Converged and, when checked, the variational inequality holds.
    pub fn accepted(&self) -> bool {
        self.converged && self.vi_residual_max.is_some_and(|v| v <= self.vi_tolerance)
    }

    /// `stage,t,z_0..z_{d-1},inner_iters,inner_residual` rows.
    pub fn path_csv(&self) -> String {
        let d = self.q_hat.dim();
        let mut out = String::from("stage,t");
        for i in 0..d {
            let _ = write!(out, ",z_{i}");
        }
        out.push_str(",inner_iters,inner_residual\n");
        let mut buf = ryu::Buffer::new();
        for e in &self.path {
            let _ = write!(out, "{},{}", e.stage, buf.format(e.t));
            for c in e.z.coords() {
                let _ = write!(out, ",{}", buf.format(*c));
            }
            let _ = writeln!(out, ",{},{}", e.inner_iters, buf.format(e.inner_residual));
        }
        out
    }
}

/// Follows `t_j = t0 σ^j` with warm starts until consecutive path points are
/// within `path_tol`.
pub fn estimate_q(
    t_op: &OperatorSpec,
    f: &OperatorSpec,
    start: &Vector,
    params: &PathParams,
) -> Result<AnchorResult> {
    params.validate()?;
    let space = start.space();
    let lf = certificate(f, space, "f")?;
    let mut path: Vec<PathEntry> = Vec::new();
    let mut z = start.clone();
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    let mut rate = 0.0_f64;
    let mut rate_ok = true;
    for stage in 0..params.max_stages {
        let t = params.t0 * params.sigma.powi(stage as i32);
        let sol = solve_implicit(t_op, f, t, &z, params.inner_tol, None)?;
        let tz = t_op.apply(&sol.z)?;
        let fixed_residual = tz.distance(&sol.z)?;
        let pull = f.apply(&sol.z)?.distance(&tz)?;
        rate = rate.max((fixed_residual - params.inner_tol).max(0.0) / t);
        rate_ok &= fixed_residual <= t * pull + params.inner_tol * (1.0 + 1e-9) + 1e-15 * sol.z.norm().max(1.0);
        if stage > 0 {
            last_step = sol.z.distance(&z)?;
        }
        z = sol.z.clone();
        path.push(PathEntry {
            stage,
            t,
            z: sol.z,
            inner_iters: sol.iters,
            inner_residual: sol.residual,
            fixed_residual,
        });
        if stage > 0 && last_step <= params.path_tol {
            converged = true;
            break;
        }
    }
    let last = path.last().expect("at least one stage");
    let t_last = last.t;
    let tq = t_op.apply(&z)?;
    let fq = f.apply(&z)?;
    let epsilon = t_last * fq.distance(&tq)? + params.inner_tol;
    let limit_error = if last_step.is_finite() {
        last_step * params.sigma / (1.0 - params.sigma) + params.inner_tol / (t_last * (1.0 - lf))
    } else {
        f64::INFINITY
    };
    let pull = z.distance(&fq)?;
    Ok(AnchorResult {
        fixed_residual: last.fixed_residual,
        q_hat: z,
        path,
        converged,
        epsilon,
        residual_rate: rate,
        residual_rate_ok: rate_ok,
        limit_error,
        vi_tolerance: f64::NAN,
        vi_residual_max: None,
    }
    .with_vi_tolerance(lf, pull))
}

impl AnchorResult {
    fn with_vi_tolerance(mut self, lf: f64, pull: f64) -> Self {
        // First-order change of ⟨q − f(q), J(q − p)⟩ under a perturbation of q
        // of size `limit_error`, with `‖q − p‖` bounded by the path spread.
        let spread = self
            .path
            .iter()
            .map(|e| e.z.distance(&self.q_hat).unwrap_or(f64::INFINITY))
            .fold(1.0_f64, f64::max);
        self.vi_tolerance = (1.0 + lf) * self.limit_error * (spread + pull) + 1e-12;
        self
    }

    /// Fills `vi_residual_max` from the given fixed-point sample.
    pub fn check_vi(&mut self, f: &OperatorSpec, fixed_points: &[Vector]) -> Result<f64> {
        let v = vi_residual(&self.q_hat, f, fixed_points)?;
        self.vi_residual_max = Some(v);
        Ok(v)
    }
}

/// `max_p ⟨q̂ − f(q̂), J(q̂ − p)⟩` over the supplied fixed points.
pub fn vi_residual(q_hat: &Vector, f: &OperatorSpec, fixed_points: &[Vector]) -> Result<f64> {
    if fixed_points.is_empty() {
        return Err(Error::InvalidArgument("vi_residual needs at least one fixed point".into()));
    }
    let pull = q_hat.sub(&f.apply(q_hat)?)?;
    let mut worst = f64::NEG_INFINITY;
    for p in fixed_points {
        worst = worst.max(pairing(&pull, &duality_map(&q_hat.sub(p)?))?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyPathEntry {
    pub n: u64,
    pub t: f64,
    /// Solution with `f_n`.
    pub z_n: Vector,
    /// Solution with the limit `f`.
    pub z_limit: Vector,
    /// `‖z_n − z_limit‖`
    pub gap: f64,
    /// `‖f_n(z_n) − f(z_n)‖`
    pub f_gap: f64,
    /// Common contraction constant `L` of `f` and `f_n`.
    pub lipschitz: f64,
    pub slack: f64,
    /// `(1 − L) gap ≤ f_gap + slack`.
    pub bound_holds: bool,
}

/// For each `n`, solves the implicit equation once with `f_n` and once with
/// the limit `f`, and checks `(1 − L)‖z_n − z'_n‖ ≤ ‖f_n(z_n) − f(z_n)‖ + 4·inner_tol`.
///
/// Both solves are driven to residual `t_n · inner_tol`, which makes the
/// slack `2·inner_tol` sufficient; the check uses twice that.
pub fn solve_implicit_family(
    t_op: &OperatorSpec,
    fam: &FamilySpec,
    f: &OperatorSpec,
    t: &ScheduleSpec,
    n_list: &[u64],
    start: &Vector,
    inner_tol: f64,
) -> Result<Vec<FamilyPathEntry>> {
    let space = start.space();
    let lt = certificate(t_op, space, "T")?;
    let lf = certificate(f, space, "f")?;
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let tn = t.eval(n);
        if !(tn > 0.0 && tn < 1.0) {
            return Err(Error::InvalidArgument(format!("t_{n} = {tn} must lie in (0,1)")));
        }
        let lfn = fam
            .lipschitz_at(space, n)
            .ok_or_else(|| Error::InvalidFamily(format!("{} has no Lipschitz certificate at n = {n}", fam.kind_name())))?;
        let l = lf.max(lfn);
        let tol = inner_tol * tn;
        let zn = picard(
            |z| t_op.apply(z)?.lerp(&fam.eval(n, z)?, tn),
            kappa_for(tn, lfn, lt)?,
            start,
            tol,
            None,
        )?
        .z;
        let zl = solve_implicit(t_op, f, tn, start, tol, None)?.z;
        let gap = zn.distance(&zl)?;
        let f_gap = fam.eval(n, &zn)?.distance(&f.apply(&zn)?)?;
        let slack = 4.0 * inner_tol;
        out.push(FamilyPathEntry {
            n,
            t: tn,
            bound_holds: (1.0 - l) * gap <= f_gap + slack,
            z_n: zn,
            z_limit: zl,
            gap,
            f_gap,
            lipschitz: l,
            slack,
        });
    }
    Ok(out)
}
