//! The `ishikawa-lab` command line.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 config or usage error,
//! 3 divergence guard, 4 anchor non-convergence.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{convergence_report, export_csv, ConvergenceReport};
use crate::anchor::{estimate_q, AnchorResult};
use crate::config::{preset, ExperimentConfig, PRESETS};
use crate::engine::{run, ProcessConfig, Scheme, StopReason};
use crate::error::{Error, Result};
use crate::operators::{fixed_set, OperatorSpec};
use crate::schedules::{
    validate_theorem_2_1, validate_theorem_3_1, validate_theorem_3_2, validate_theorem_3_3, HypothesisReport,
};
use crate::space::Vector;
use crate::suites::{run_suites, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_ANCHOR: i32 = 4;

/// Points on a known fixed-point segment or box used for the variational check.
pub const VI_GRID_POINTS: usize = 101;

#[derive(Debug, Parser)]
#[command(name = "ishikawa-lab", version, about = "Fixed-point iteration laboratory on finite-dimensional l_p spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a config and write the trajectory CSV plus `<out>.report.json`.
    Run {
        /// Config file, or `preset:<name>`.
        config: String,
        /// Trajectory CSV path.
        #[arg(long)]
        out: PathBuf,
        /// `anchor`, `none`, or comma-separated coordinates.
        #[arg(long, default_value = "none")]
        reference: String,
    },
    /// Check a theorem's hypotheses for a config.
    Validate {
        config: String,
        #[arg(long)]
        theorem: Theorem,
    },
    /// Estimate Q(f) along the implicit anchor path.
    Anchor {
        /// Config file, or `preset:<name>`.
        config: String,
        /// Optional CSV of the path stages.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded property suites.
    Check {
        #[arg(long, default_value = "all")]
        suite: SuiteName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List catalog entries and bundled presets.
    Catalog {
        #[arg(long)]
        json: bool,
        /// Print the JSON of one preset.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    #[value(name = "2.1")]
    T21,
    #[value(name = "3.1")]
    T31,
    #[value(name = "3.2")]
    T32,
    #[value(name = "3.3")]
    T33,
}

impl Theorem {
    pub fn label(self) -> &'static str {
        match self {
            Theorem::T21 => "2.1",
            Theorem::T31 => "3.1",
            Theorem::T32 => "3.2",
            Theorem::T33 => "3.3",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        <Theorem as ValueEnum>::from_str(label, false).ok()
    }

    /// Theorem a run report is checked against for a given scheme.
    pub fn for_scheme(scheme: &Scheme) -> Self {
        match scheme {
            Scheme::Extended | Scheme::Mann { .. } | Scheme::Ishikawa { .. } => Theorem::T21,
            Scheme::Viscosity => Theorem::T31,
            Scheme::MannErrors { .. } | Scheme::IshikawaErrors { .. } => Theorem::T32,
            Scheme::Yao { .. } => Theorem::T33,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteName {
    Duality,
    Lemma12,
    Lemma13,
    Operators,
    Reductions,
    All,
}

pub fn validate(cfg: &ProcessConfig, theorem: Theorem) -> Result<HypothesisReport> {
    match theorem {
        Theorem::T21 => Ok(validate_theorem_2_1(cfg)),
        Theorem::T31 => validate_theorem_3_1(cfg),
        Theorem::T32 => validate_theorem_3_2(cfg),
        Theorem::T33 => validate_theorem_3_3(cfg),
    }
}

/// Loads a config path, or a bundled preset given as `preset:<name>`.
pub fn load_config(arg: &str) -> Result<ExperimentConfig> {
    match arg.strip_prefix("preset:") {
        Some(name) => preset(name)
            .map(|p| p.config())
            .ok_or_else(|| Error::Config(format!("no bundled preset named {name:?}"))),
        None => ExperimentConfig::load(Path::new(arg)),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => EXIT_ANCHOR,
        _ => EXIT_CONFIG,
    }
}

/// The contraction `f` the anchor path uses: the uniform limit of `f_n`.
pub fn anchor_map(cfg: &ProcessConfig) -> Result<OperatorSpec> {
    cfg.f_family.uniform_limit(cfg.space).ok_or_else(|| {
        Error::InvalidFamily(format!("{} has no known uniform limit for the anchor path", cfg.f_family.kind_name()))
    })
}

/// Fixed-point sample for the variational check, when `F(T)` is known.
pub fn fixed_point_sample(cfg: &ProcessConfig) -> Vec<Vector> {
    let fs = fixed_set(&cfg.t_op, cfg.space);
    if fs.is_known() {
        fs.grid(cfg.space, VI_GRID_POINTS)
    } else {
        Vec::new()
    }
}

/// `estimate_q` from `x0`, followed by the variational check when a fixed-point
/// sample exists.
pub fn anchor_for(exp: &ExperimentConfig, cfg: &ProcessConfig) -> Result<AnchorResult> {
    let f = anchor_map(cfg)?;
    let mut res = estimate_q(&cfg.t_op, &f, &cfg.x0, &exp.anchor_params())?;
    let sample = fixed_point_sample(cfg);
    if !sample.is_empty() {
        res.check_vi(&f, &sample)?;
    }
    Ok(res)
}

#[derive(Debug, Serialize)]
struct AnchorSummary {
    q_hat: Vec<f64>,
    converged: bool,
    accepted: bool,
    stages: usize,
    t_last: f64,
    epsilon: f64,
    fixed_residual: f64,
    vi_residual_max: Option<f64>,
    vi_tolerance: f64,
}

impl From<&AnchorResult> for AnchorSummary {
    fn from(a: &AnchorResult) -> Self {
        AnchorSummary {
            q_hat: a.q_hat.coords().to_vec(),
            converged: a.converged,
            accepted: a.accepted(),
            stages: a.path.len(),
            t_last: a.path.last().map_or(f64::NAN, |e| e.t),
            epsilon: a.epsilon,
            fixed_residual: a.fixed_residual,
            vi_residual_max: a.vi_residual_max,
            vi_tolerance: a.vi_tolerance,
        }
    }
}

#[derive(Debug, Serialize)]
struct RunReport {
    scheme: &'static str,
    theorem: &'static str,
    seed: u64,
    reference: Option<Vec<f64>>,
    anchor: Option<AnchorSummary>,
    convergence: ConvergenceReport,
}

fn report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn warn_certificates(cfg: &ProcessConfig, err: &mut dyn Write) {
    let mut ops = vec![("operator_T", cfg.t_op.clone())];
    if let Some(f) = cfg.f_family.uniform_limit(cfg.space) {
        ops.push(("f", f));
    }
    for (name, op) in ops {
        for c in op.certificate_issues(cfg.space, cfg.seed).into_iter().filter(|c| !c.consistent) {
            let _ = writeln!(
                err,
                "warning: {name}: affine norm certificate {} is below the {} estimate {:.6}",
                c.claimed, c.method, c.estimate
            );
        }
    }
}

enum Reference {
    None,
    Anchor,
    Point(Vec<f64>),
}

fn parse_reference(s: &str) -> Result<Reference> {
    match s {
        "none" => Ok(Reference::None),
        "anchor" => Ok(Reference::Anchor),
        other => other
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Reference::Point)
            .map_err(|_| Error::Config(format!("--reference expects anchor, none, or coordinates; got {other:?}"))),
    }
}

fn cmd_run(config: &str, out: &Path, reference: &str, stdout: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let exp = load_config(config)?;
    let reference = parse_reference(reference)?;
    let cfg = exp.build()?;
    warn_certificates(&cfg, err);
    let anchor = match reference {
        Reference::Anchor => Some(anchor_for(&exp, &cfg)?),
        _ => None,
    };
    let q = match (&reference, &anchor) {
        (Reference::Point(v), _) => Some(cfg.space.vector(v.clone())?),
        (_, Some(a)) => Some(a.q_hat.clone()),
        _ => None,
    };
    let theorem = Theorem::for_scheme(&cfg.scheme);
    let hyp = validate(&cfg, theorem)?;
    let traj = run(&cfg, q.as_ref())?;
    export_csv(&traj, out)?;
    let conv = convergence_report(&traj, q.as_ref(), Some(hyp))?;
    let report = RunReport {
        scheme: cfg.scheme.name(),
        theorem: theorem.label(),
        seed: cfg.seed,
        reference: q.as_ref().map(|v| v.coords().to_vec()),
        anchor: anchor.as_ref().map(AnchorSummary::from),
        convergence: conv,
    };
    let rpath = report_path(out);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&rpath, json + "\n").map_err(|e| Error::io(&rpath, e))?;
    let c = &report.convergence;
    let _ = writeln!(stdout, "scheme {} (checked against theorem {})", report.scheme, report.theorem);
    let _ = writeln!(stdout, "stop: {} after {} iterations", c.stop.as_str(), c.iterations);
    let _ = writeln!(stdout, "final residual {:e}, final norm {:e}", c.final_residual, c.final_norm);
    if let Some(d) = c.final_dist {
        let _ = writeln!(stdout, "final distance to reference {d:e}");
    }
    if let Some(s) = c.tail_slope {
        let _ = writeln!(stdout, "tail slope {s:.4}");
    }
    let _ = writeln!(stdout, "wrote {} and {}", out.display(), rpath.display());
    if c.stop == StopReason::Diverged {
        let _ = writeln!(err, "divergence guard: ‖x_n‖ exceeded {}", cfg.stop.divergence_radius);
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_validate(config: &str, theorem: Theorem, stdout: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(config)?.build()?;
    warn_certificates(&cfg, err);
    let report = validate(&cfg, theorem)?;
    let _ = write!(stdout, "{}", report.render());
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_anchor(config: &str, out: Option<&Path>, stdout: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let exp = load_config(config)?;
    let cfg = exp.build()?;
    warn_certificates(&cfg, err);
    let res = match anchor_for(&exp, &cfg) {
        Ok(r) => r,
        Err(Error::NonConvergence { best, residual, iters, tol }) => {
            let _ = writeln!(
                err,
                "anchor path did not converge: inner residual {residual:e} > {tol:e} after {iters} iterations"
            );
            let _ = writeln!(stdout, "best estimate {:?}", best.coords());
            return Ok(EXIT_ANCHOR);
        }
        Err(e) => return Err(e),
    };
    let t_last = res.path.last().map_or(f64::NAN, |e| e.t);
    let _ = writeln!(stdout, "q_hat = {:?}", res.q_hat.coords());
    let _ = writeln!(
        stdout,
        "stages {}, t_last {t_last:e}, converged {}, epsilon(t_last) {:e}, ‖T q − q‖ {:e}",
        res.path.len(),
        res.converged,
        res.epsilon,
        res.fixed_residual
    );
    match res.vi_residual_max {
        Some(v) => {
            let _ = writeln!(
                stdout,
                "variational residual {v:e} over {VI_GRID_POINTS}-point fixed-set grid (tolerance {:e})",
                res.vi_tolerance
            );
        }
        None => {
            let _ = writeln!(stdout, "variational residual not checked: F(T) unknown to the catalog");
        }
    }
    let _ = writeln!(stdout, "{}", if res.accepted() { "accepted as Q(f)" } else { "estimate only" });
    if let Some(path) = out {
        std::fs::write(path, res.path_csv()).map_err(|e| Error::io(path, e))?;
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    Ok(if res.converged { EXIT_OK } else { EXIT_ANCHOR })
}

fn cmd_check(suite: SuiteName, seed: u64, stdout: &mut dyn Write) -> Result<i32> {
    let names: Vec<&str> = match suite {
        SuiteName::All => SUITES.to_vec(),
        SuiteName::Duality => vec!["duality"],
        SuiteName::Lemma12 => vec!["lemma12"],
        SuiteName::Lemma13 => vec!["lemma13"],
        SuiteName::Operators => vec!["operators"],
        SuiteName::Reductions => vec!["reductions"],
    };
    let results = run_suites(&names, seed)?;
    let mut all = true;
    for r in &results {
        all &= r.passed;
        let _ = writeln!(
            stdout,
            "suite {}: {} (max violation {:e}, seed {seed})",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.max_violation
        );
        for l in &r.lines {
            let _ = writeln!(stdout, "{l}");
        }
    }
    Ok(if all { EXIT_OK } else { EXIT_VALIDATION })
}

#[derive(Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Catalog {
    pub spaces: Vec<CatalogEntry>,
    pub domains: Vec<CatalogEntry>,
    pub operators: Vec<CatalogEntry>,
    pub families: Vec<CatalogEntry>,
    pub sequences: Vec<CatalogEntry>,
    pub schedules: Vec<CatalogEntry>,
    pub schemes: Vec<CatalogEntry>,
    pub suites: Vec<CatalogEntry>,
    pub presets: Vec<crate::config::Preset>,
}

fn entries(items: &[(&'static str, &'static str)]) -> Vec<CatalogEntry> {
    items.iter().map(|&(name, description)| CatalogEntry { name, description }).collect()
}

pub fn catalog() -> Catalog {
    Catalog {
        spaces: entries(&[("l_p", "finite-dimensional l_p^d with 1 < p < inf: {\"dim\", \"p\"}")]),
        domains: entries(&[
            ("box", "componentwise box lo <= x <= hi"),
            ("ball", "closed l_p ball around center"),
            ("whole_space", "all of l_p^d"),
        ]),
        operators: entries(&[
            ("rotation2d", "rotation by theta about center in a coordinate plane; nonexpansive only for p = 2"),
            ("box_clamp", "componentwise clamp to [lo, hi]; nonexpansive in every l_p"),
            ("segment_projection", "Euclidean projection onto the segment [a, b]; nonexpansive for p = 2"),
            ("affine", "x -> M x + offset with a caller-supplied operator-norm certificate"),
            ("convex_combination", "weight * first + (1 - weight) * second"),
            ("composition", "outer(inner(x))"),
            ("constant", "x -> u"),
            ("identity", "x -> x"),
        ]),
        families: entries(&[
            ("constant_family", "f_n = f"),
            ("decaying_perturbation", "f_n(x) = base(x) + rate_n * direction(x)"),
            ("errors_family", "f_n(x) = (alpha_n u + gamma_n u_n) / (alpha_n + gamma_n)"),
            ("errors_state_family", "g_n(x) = (beta_n x + delta_n v_n) / (beta_n + delta_n)"),
            ("three_term_family", "f_n(x) = (beta_n x + alpha_n u) / (alpha_n + beta_n)"),
            ("identity_family", "f_n(x) = x"),
        ]),
        sequences: entries(&[
            ("constant", "u_n = v"),
            ("seeded_ball", "seeded points of the l_p ball (center, radius)"),
        ]),
        schedules: entries(&[
            ("power", "c / (n + offset)^rho"),
            ("constant", "c"),
            ("geometric", "c * r^n"),
            ("zero", "0"),
            ("sum", "termwise sum of schedules"),
        ]),
        schemes: entries(&[
            ("extended", "x_{n+1} = a_n f_n(x_n) + (1 - a_n) T y_n, y_n = b_n g_n(x_n) + (1 - b_n) T x_n"),
            ("mann", "x_{n+1} = a_n u + (1 - a_n) T x_n (anchored) or a_n x_n + (1 - a_n) T x_n (inertial)"),
            ("ishikawa", "mann with y_n = b_n x_n + (1 - b_n) T x_n in place of x_n under T"),
            ("mann_errors", "x_{n+1} = a_n u + (1 - a_n - c_n) T x_n + c_n u_n"),
            ("ishikawa_errors", "ishikawa with error terms c_n u_n and d_n v_n"),
            ("viscosity", "x_{n+1} = a_n f(x_n) + (1 - a_n) T x_n"),
            ("yao", "x_{n+1} = a_n u + b_n x_n + (1 - a_n - b_n) T x_n"),
        ]),
        suites: entries(&[
            ("duality", "duality-map identities, homogeneity, continuity probe"),
            ("lemma12", "||x+y||^pi <= ||x||^pi + pi <y, J_pi(x+y)>"),
            ("lemma13", "scalar recursion a_{n+1} = (1 - t_n) a_n + b_n + c_n"),
            ("operators", "sampled Lipschitz ratios and fixed sets of catalog operators"),
            ("reductions", "engine vs direct recursions for every scheme constructor"),
        ]),
        presets: PRESETS.to_vec(),
    }
}

fn cmd_catalog(json: bool, show: Option<&str>, stdout: &mut dyn Write) -> Result<i32> {
    if let Some(name) = show {
        let p = preset(name).ok_or_else(|| Error::Config(format!("no bundled preset named {name:?}")))?;
        let _ = write!(stdout, "{}", p.json);
        return Ok(EXIT_OK);
    }
    let cat = catalog();
    if json {
        let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&cat).expect("catalog serializes"));
        return Ok(EXIT_OK);
    }
    let sections: [(&str, &Vec<CatalogEntry>); 8] = [
        ("spaces", &cat.spaces),
        ("domains", &cat.domains),
        ("operators", &cat.operators),
        ("families", &cat.families),
        ("sequences", &cat.sequences),
        ("schedules", &cat.schedules),
        ("schemes", &cat.schemes),
        ("suites", &cat.suites),
    ];
    for (title, items) in sections {
        let _ = writeln!(stdout, "{title}:");
        for e in items {
            let _ = writeln!(stdout, "  {:<22} {}", e.name, e.description);
        }
    }
    let _ = writeln!(stdout, "presets:");
    for p in &cat.presets {
        let _ = writeln!(stdout, "  {:<22} [theorem {}] {}", p.name, p.theorem, p.description);
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run { config, out, reference } => cmd_run(config, out, reference, stdout, stderr),
        Command::Validate { config, theorem } => cmd_validate(config, *theorem, stdout, stderr),
        Command::Anchor { config, out } => cmd_anchor(config, out.as_deref(), stdout, stderr),
        Command::Check { suite, seed } => cmd_check(*suite, *seed, stdout),
        Command::Catalog { json, show } => cmd_catalog(*json, show.as_deref(), stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
