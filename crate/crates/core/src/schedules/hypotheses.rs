//! Itemized hypothesis checks for the convergence theorems.
//!
//! Series and limit items are decided analytically from the schedule
//! families. Items about operators use the catalog certificate plus a seeded
//! sampling falsifier. Assumptions on the trajectory itself are marked
//! runtime-monitored and settled only by an actual run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{weight_ratio_limit, ScheduleSpec};
use crate::engine::{ProcessConfig, Scheme, Variant};
use crate::error::{Error, Result};
use crate::operators::{
    check_nonexpansive, check_perturbation_bound, check_uniform_convergence, fixed_set, BoundedSequence, FamilySpec,
    OperatorSpec,
};
use crate::space::Vector;

/// Indices at which per-`n` properties are sampled.
pub const SAMPLE_N: [u64; 7] = [0, 1, 2, 5, 10, 100, 1000];
const OPERATOR_SAMPLES: usize = 2000;
const POINT_SAMPLES: usize = 200;
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Pass,
    Fail,
    /// Depends on the trajectory; decided after a run.
    Monitored,
    /// Reported, not part of the verdict.
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemMethod {
    Analytic,
    Certificate,
    Sampled,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisItem {
    pub id: String,
    pub description: String,
    pub method: ItemMethod,
    pub status: ItemStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub theorem: String,
    pub scheme: String,
    pub seed: u64,
    pub items: Vec<HypothesisItem>,
}

impl HypothesisReport {
    fn new(theorem: &str, cfg: &ProcessConfig) -> Self {
        HypothesisReport {
            theorem: theorem.into(),
            scheme: cfg.scheme.name().into(),
            seed: cfg.seed,
            items: Vec::new(),
        }
    }

    fn push(&mut self, id: &str, description: &str, method: ItemMethod, ok: bool, detail: String) {
        self.items.push(HypothesisItem {
            id: id.into(),
            description: description.into(),
            method,
            status: if ok { ItemStatus::Pass } else { ItemStatus::Fail },
            detail,
        });
    }

    fn note(&mut self, id: &str, description: &str, method: ItemMethod, status: ItemStatus, detail: String) {
        self.items.push(HypothesisItem {
            id: id.into(),
            description: description.into(),
            method,
            status,
            detail,
        });
    }

    /// Every item that can be decided before a run passed.
    pub fn passed(&self) -> bool {
        self.items
            .iter()
            .all(|i| matches!(i.status, ItemStatus::Pass | ItemStatus::Monitored | ItemStatus::Info))
    }

    pub fn item(&self, id: &str) -> Option<&HypothesisItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn failed(&self) -> impl Iterator<Item = &HypothesisItem> {
        self.items.iter().filter(|i| i.status == ItemStatus::Fail)
    }

    /// Settles the runtime-monitored items against a finished run.
    pub fn settle_runtime(&mut self, diverged: bool, final_residual: f64, tail_slope: Option<f64>) {
        for item in self.items.iter_mut().filter(|i| i.method == ItemMethod::Runtime) {
            if diverged {
                item.status = ItemStatus::Fail;
                item.detail = "run hit the divergence radius: {x_n} is not bounded".into();
            } else {
                item.detail = match tail_slope {
                    Some(s) => format!("final residual {final_residual:e}, tail slope {s:.3}"),
                    None => format!("final residual {final_residual:e}"),
                };
            }
        }
    }

    /// Plain-text rendering, one item per line.
    pub fn render(&self) -> String {
        let mut out = format!("theorem {} ({} scheme, seed {})\n", self.theorem, self.scheme, self.seed);
        for i in &self.items {
            let status = match i.status {
                ItemStatus::Pass => "PASS",
                ItemStatus::Fail => "FAIL",
                ItemStatus::Monitored => "MONITORED",
                ItemStatus::Info => "INFO",
            };
            let method = match i.method {
                ItemMethod::Analytic => "analytic",
                ItemMethod::Certificate => "certificate",
                ItemMethod::Sampled => "sampled",
                ItemMethod::Runtime => "runtime",
            };
            out.push_str(&format!("  [{status:<9}] {:<6} {} ({method}): {}\n", i.id, i.description, i.detail));
        }
        out.push_str(if self.passed() { "verdict: pass\n" } else { "verdict: fail\n" });
        out
    }
}

fn unit_range(s: &ScheduleSpec) -> (bool, String) {
    match s.check_unit_range() {
        Ok(()) => (true, format!("sup {}", s.sup())),
        Err(e) => (false, e.to_string()),
    }
}

fn positive_unit_range(s: &ScheduleSpec) -> (bool, String) {
    let (ok, detail) = unit_range(s);
    if !ok {
        return (false, detail);
    }
    if !s.strictly_positive() {
        return (false, "not strictly positive".into());
    }
    (true, detail)
}

fn push_alpha_items(r: &mut HypothesisReport, alpha: &ScheduleSpec, name: &str) {
    let (ok, detail) = unit_range(alpha);
    r.push("a1", &format!("{name}_n in [0,1]"), ItemMethod::Analytic, ok, detail);
    let p = alpha.predicate_report();
    r.push(
        "a2",
        &format!("{name}_n -> 0"),
        ItemMethod::Analytic,
        p.tends_to_zero,
        predicate_detail(alpha),
    );
    r.push(
        "a3",
        &format!("sum {name}_n = infinity"),
        ItemMethod::Analytic,
        p.sum_diverges,
        predicate_detail(alpha),
    );
}

fn predicate_detail(s: &ScheduleSpec) -> String {
    let p = s.predicate_report();
    if p.indeterminate {
        return "tail indeterminate under clamp".into();
    }
    format!(
        "{:?}: tends_to_zero={}, sum_diverges={}, sum_converges={}",
        s.tail(),
        p.tends_to_zero,
        p.sum_diverges,
        p.sum_converges
    )
}

fn push_summable(r: &mut HypothesisReport, id: &str, s: &ScheduleSpec, name: &str) {
    r.push(
        id,
        &format!("sum {name}_n < infinity"),
        ItemMethod::Analytic,
        s.predicate_report().sum_converges,
        predicate_detail(s),
    );
}

fn push_t_items(r: &mut HypothesisReport, cfg: &ProcessConfig) -> Result<()> {
    let space = cfg.space;
    let claim = cfg.t_op.lipschitz_claim(space);
    let sampled = check_nonexpansive(&cfg.t_op, space, &cfg.domain, OPERATOR_SAMPLES, cfg.seed)?;
    let cert_issues: Vec<_> = cfg
        .t_op
        .certificate_issues(space, cfg.seed)
        .into_iter()
        .filter(|c| !c.consistent)
        .collect();
    let ok = cfg.t_op.claims_nonexpansive(space) && sampled.nonexpansive(SLACK) && cert_issues.is_empty();
    let mut detail = format!(
        "claimed L = {}, sampled ratio {:.6} ({} pairs, seed {})",
        claim.map_or("none".to_string(), |l| l.to_string()),
        sampled.ratio,
        sampled.samples,
        sampled.seed
    );
    for c in cert_issues {
        detail.push_str(&format!("; certificate {} contradicted by estimate {:.6}", c.claimed, c.estimate));
    }
    r.push("T", "T nonexpansive", ItemMethod::Certificate, ok, detail);
    let fs = fixed_set(&cfg.t_op, space);
    let (status, detail) = if fs.is_known() {
        (ItemStatus::Pass, format!("{fs:?}"))
    } else {
        (ItemStatus::Info, "no closed form; not checked".to_string())
    };
    r.note("F", "F(T) nonempty", ItemMethod::Analytic, status, detail);
    Ok(())
}

fn push_in_domain(r: &mut HypothesisReport, cfg: &ProcessConfig, id: &str, what: &str, v: &[f64]) {
    let ok = Vector::new(cfg.space, v.to_vec()).is_ok_and(|v| cfg.domain.contains(&v, 1e-12));
    r.push(id, &format!("{what} in D"), ItemMethod::Analytic, ok, String::new());
}

fn push_sequence_bounded(r: &mut HypothesisReport, cfg: &ProcessConfig, id: &str, name: &str, s: &BoundedSequence) {
    let ok = s.inside(cfg.space, &cfg.domain);
    r.push(
        id,
        &format!("{{{name}}} bounded in D"),
        ItemMethod::Certificate,
        ok,
        format!("sup norm <= {}", s.norm_bound(cfg.space)),
    );
}

fn push_runtime(r: &mut HypothesisReport) {
    r.note(
        "g",
        "{x_n} bounded and ||T x_n - x_n|| -> 0",
        ItemMethod::Runtime,
        ItemStatus::Monitored,
        "monitored during run".into(),
    );
}

/// Largest sampled Lipschitz ratio of `f_n` over the domain for the sampled `n`.
fn sampled_family_lipschitz(fam: &FamilySpec, cfg: &ProcessConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_f00d);
    let pairs: Vec<(Vector, Vector)> = (0..POINT_SAMPLES)
        .map(|_| (cfg.domain.sample(&mut rng, cfg.space), cfg.domain.sample(&mut rng, cfg.space)))
        .collect();
    let mut worst = 0.0_f64;
    for &n in &SAMPLE_N {
        for (x, y) in &pairs {
            let d = x.distance(y)?;
            if d > 0.0 {
                worst = worst.max(fam.eval(n, x)?.distance(&fam.eval(n, y)?)? / d);
            }
        }
    }
    Ok(worst)
}

fn family_operators(fam: &FamilySpec) -> Vec<&OperatorSpec> {
    match fam {
        FamilySpec::ConstantFamily { f } => vec![f],
        FamilySpec::DecayingPerturbation { base, direction, .. } => vec![base, direction],
        _ => Vec::new(),
    }
}

fn push_uniform_contraction(r: &mut HypothesisReport, cfg: &ProcessConfig, id: &str, description: &str) -> Result<()> {
    let space = cfg.space;
    let fam = &cfg.f_family;
    let claim = fam.uniform_lipschitz(space);
    let sampled = sampled_family_lipschitz(fam, cfg)?;
    let bad_certs: Vec<_> = family_operators(fam)
        .into_iter()
        .flat_map(|op| op.certificate_issues(space, cfg.seed))
        .filter(|c| !c.consistent)
        .collect();
    let ok = match claim {
        Some(l) => l < 1.0 && sampled <= l + SLACK && bad_certs.is_empty(),
        None => false,
    };
    let mut detail = format!(
        "{}: certified L = {}, sampled max ratio {:.6} at n in {:?}",
        fam.kind_name(),
        claim.map_or("none".to_string(), |l| l.to_string()),
        sampled,
        SAMPLE_N
    );
    if claim.is_some_and(|l| l >= 1.0) {
        detail.push_str("; L >= 1 is not a contraction");
    }
    for c in bad_certs {
        detail.push_str(&format!("; certificate {} contradicted by estimate {:.6}", c.claimed, c.estimate));
    }
    r.push(id, description, ItemMethod::Certificate, ok, detail);
    Ok(())
}

fn push_uniform_convergence(r: &mut HypothesisReport, cfg: &ProcessConfig, id: &str) -> Result<()> {
    let space = cfg.space;
    let Some(limit) = cfg.f_family.uniform_limit(space) else {
        r.push(
            id,
            "f_n -> f uniformly on D, f a contraction",
            ItemMethod::Sampled,
            false,
            "no closed-form uniform limit".into(),
        );
        return Ok(());
    };
    let rep = check_uniform_convergence(
        &cfg.f_family,
        &limit,
        space,
        &cfg.domain,
        &SAMPLE_N,
        POINT_SAMPLES,
        cfg.seed,
    )?;
    let limit_l = limit.lipschitz_claim(space);
    let ok = rep.looks_convergent() && limit_l.is_some_and(|l| l < 1.0);
    let detail = format!(
        "limit {} (L = {}), sampled sup gaps {:?}",
        limit.kind_name(),
        limit_l.map_or("none".to_string(), |l| l.to_string()),
        rep.sup_gap.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()
    );
    r.push(id, "f_n -> f uniformly on D, f a contraction", ItemMethod::Sampled, ok, detail);
    Ok(())
}

fn push_perturbation(r: &mut HypothesisReport, cfg: &ProcessConfig, id: &str) -> Result<()> {
    let rep = check_perturbation_bound(
        &cfg.g_family,
        &cfg.beta,
        &cfg.delta,
        cfg.perturbation_m,
        cfg.space,
        &cfg.domain,
        &SAMPLE_N,
        POINT_SAMPLES,
        cfg.seed,
    )?;
    r.push(
        id,
        "beta_n ||g_n(x) - x|| <= delta_n (||x|| + M)",
        ItemMethod::Sampled,
        rep.passed,
        format!(
            "M = {}, min margin {:.3e} at n = {} ({} points, seed {})",
            cfg.perturbation_m, rep.min_margin, rep.worst_n, rep.samples, rep.seed
        ),
    );
    Ok(())
}

fn sampling_error(e: Error) -> HypothesisItem {
    HypothesisItem {
        id: "eval".into(),
        description: "sampling checks evaluate".into(),
        method: ItemMethod::Sampled,
        status: ItemStatus::Fail,
        detail: e.to_string(),
    }
}

/// Hypotheses of the general convergence theorem for the extended process.
pub fn validate_theorem_2_1(cfg: &ProcessConfig) -> HypothesisReport {
    let mut r = HypothesisReport::new("2.1", cfg);
    push_alpha_items(&mut r, &cfg.alpha, "alpha");
    let (ok, detail) = positive_unit_range(&cfg.beta);
    r.push("b", "beta_n in (0,1]", ItemMethod::Analytic, ok, detail);
    push_summable(&mut r, "c", &cfg.delta, "delta");
    let sampled = (|| -> Result<()> {
        push_uniform_contraction(&mut r, cfg, "d", "{f_n} uniform contractions with common L < 1")?;
        push_uniform_convergence(&mut r, cfg, "e")?;
        push_perturbation(&mut r, cfg, "f")?;
        push_t_items(&mut r, cfg)
    })();
    if let Err(e) = sampled {
        r.items.push(sampling_error(e));
    }
    push_in_domain(&mut r, cfg, "x0", "x_0", cfg.x0.coords());
    push_runtime(&mut r);
    r
}

/// Hypotheses of the viscosity theorem. Accepts viscosity configs and
/// anchored Mann configs (constant `f`).
pub fn validate_theorem_3_1(cfg: &ProcessConfig) -> Result<HypothesisReport> {
    let anchored_mann = matches!(&cfg.scheme, Scheme::Mann { variant: Variant::Anchored(_) });
    if !(matches!(cfg.scheme, Scheme::Viscosity) || anchored_mann) {
        return Err(mismatch("3.1", "viscosity or anchored mann", cfg));
    }
    let mut r = HypothesisReport::new("3.1", cfg);
    push_alpha_items(&mut r, &cfg.alpha, "alpha");
    let sampled = (|| -> Result<()> {
        push_uniform_contraction(&mut r, cfg, "d", "f is a contraction on D")?;
        push_t_items(&mut r, cfg)
    })();
    if let Err(e) = sampled {
        r.items.push(sampling_error(e));
    }
    push_in_domain(&mut r, cfg, "x0", "x_0", cfg.x0.coords());
    r.note(
        "g",
        "||T x_n - x_n|| -> 0",
        ItemMethod::Runtime,
        ItemStatus::Monitored,
        "monitored during run".into(),
    );
    Ok(r)
}

/// Hypotheses of the with-errors theorem, on the raw schedules.
pub fn validate_theorem_3_2(cfg: &ProcessConfig) -> Result<HypothesisReport> {
    let one = ScheduleSpec::one();
    let zero = ScheduleSpec::zero();
    let (u, u_seq, v_seq, alpha, beta, gamma, delta) = match &cfg.scheme {
        Scheme::MannErrors { u, u_seq, alpha, gamma } => (u, u_seq, None, alpha, &one, gamma, &zero),
        Scheme::IshikawaErrors { u, u_seq, v_seq, alpha, beta, gamma, delta } => {
            (u, u_seq, Some(v_seq), alpha, beta, gamma, delta)
        }
        _ => return Err(mismatch("3.2", "mann_errors or ishikawa_errors", cfg)),
    };
    let alpha_eff = alpha.plus(gamma);
    let beta_eff = beta.plus(delta);
    if !alpha_eff.strictly_positive() {
        return Err(Error::DegenerateIndex { n: 0, what: "alpha_n + gamma_n".into() });
    }
    let mut r = HypothesisReport::new("3.2", cfg);
    let (ok, detail) = unit_range(&alpha_eff);
    let raw_ok = alpha.check_unit_range().is_ok() && gamma.check_unit_range().is_ok();
    r.push("s1", "0 <= alpha_n + gamma_n <= 1", ItemMethod::Analytic, ok && raw_ok, detail);
    let (ok, detail) = positive_unit_range(&beta_eff);
    let raw_ok = beta.check_unit_range().is_ok() && delta.check_unit_range().is_ok();
    r.push("s2", "0 < beta_n + delta_n <= 1", ItemMethod::Analytic, ok && raw_ok, detail);
    let p = alpha.predicate_report();
    r.push("a2", "alpha_n -> 0", ItemMethod::Analytic, p.tends_to_zero, predicate_detail(alpha));
    r.push("a3", "sum alpha_n = infinity", ItemMethod::Analytic, p.sum_diverges, predicate_detail(alpha));
    push_summable(&mut r, "gamma", gamma, "gamma");
    push_summable(&mut r, "delta", delta, "delta");
    push_sequence_bounded(&mut r, cfg, "u_seq", "u_n", u_seq);
    if let Some(v) = v_seq {
        push_sequence_bounded(&mut r, cfg, "v_seq", "v_n", v);
    }
    let ratio = weight_ratio_limit(gamma, alpha);
    r.push(
        "ratio",
        "gamma_n / (alpha_n + gamma_n) -> 0",
        ItemMethod::Analytic,
        ratio == Some(0.0),
        format!("limit {}", ratio.map_or("indeterminate".to_string(), |l| l.to_string())),
    );
    let sampled = (|| -> Result<()> {
        push_uniform_contraction(&mut r, cfg, "d", "induced {f_n} uniform contractions")?;
        push_uniform_convergence(&mut r, cfg, "e")?;
        push_perturbation(&mut r, cfg, "f")?;
        push_t_items(&mut r, cfg)
    })();
    if let Err(e) = sampled {
        r.items.push(sampling_error(e));
    }
    push_in_domain(&mut r, cfg, "u", "u", u);
    push_in_domain(&mut r, cfg, "x0", "x_0", cfg.x0.coords());
    push_runtime(&mut r);
    Ok(r)
}

/// Hypotheses of the three-term theorem. The induced anchor maps have
/// Lipschitz constants `L_n = β_n / (α_n + β_n)`; their supremum is reported
/// but does not enter the verdict.
pub fn validate_theorem_3_3(cfg: &ProcessConfig) -> Result<HypothesisReport> {
    let Scheme::Yao { u, alpha, beta } = &cfg.scheme else {
        return Err(mismatch("3.3", "yao", cfg));
    };
    let mut r = HypothesisReport::new("3.3", cfg);
    let sum = alpha.plus(beta);
    let nonneg = alpha.check_unit_range().is_ok() && beta.check_unit_range().is_ok();
    let (ok, detail) = unit_range(&sum);
    r.push(
        "nonneg",
        "alpha_n, beta_n, gamma_n >= 0",
        ItemMethod::Analytic,
        nonneg && ok,
        format!("sup(alpha_n + beta_n): {detail}"),
    );
    r.push(
        "pos",
        "alpha_n + beta_n > 0",
        ItemMethod::Analytic,
        sum.strictly_positive(),
        String::new(),
    );
    let p = alpha.predicate_report();
    r.push("a2", "alpha_n -> 0", ItemMethod::Analytic, p.tends_to_zero, predicate_detail(alpha));
    r.push("b2", "beta_n -> 0", ItemMethod::Analytic, beta.tends_to_zero(), predicate_detail(beta));
    r.push("a3", "sum alpha_n = infinity", ItemMethod::Analytic, p.sum_diverges, predicate_detail(alpha));
    let sampled = push_t_items(&mut r, cfg);
    if let Err(e) = sampled {
        r.items.push(sampling_error(e));
    }
    push_in_domain(&mut r, cfg, "u", "u", u);
    push_in_domain(&mut r, cfg, "x0", "x_0", cfg.x0.coords());
    let ln: Vec<String> = SAMPLE_N
        .iter()
        .map(|&n| {
            let (a, b) = (alpha.eval(n), beta.eval(n));
            format!("L_{n}={:.4}", if a + b > 0.0 { b / (a + b) } else { f64::NAN })
        })
        .collect();
    let sup = cfg.f_family.uniform_lipschitz(cfg.space);
    let flag = if sup.is_none_or(|s| s >= 1.0) { "; sup L_n = 1" } else { "" };
    r.note(
        "Ln",
        "induced anchor maps: L_n = beta_n / (alpha_n + beta_n)",
        ItemMethod::Analytic,
        ItemStatus::Info,
        format!(
            "{}; sup L_n = {}{flag}",
            ln.join(", "),
            sup.map_or("indeterminate".to_string(), |s| format!("{s:.4}"))
        ),
    );
    push_runtime(&mut r);
    Ok(r)
}

fn mismatch(theorem: &str, expected: &str, cfg: &ProcessConfig) -> Error {
    Error::Config(format!(
        "theorem {theorem} applies to {expected} configs, not '{}'",
        cfg.scheme.name()
    ))
}
