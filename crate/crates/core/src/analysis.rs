//! Recursion and inequality checks, trajectory diagnostics and CSV output.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{StopReason, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::schedules::{HypothesisReport, ScheduleSpec};
use crate::space::{generalized_duality_map, pairing, random_in_ball, SpaceSpec, Vector};

/// `a_{n+1} = (1 − t_n) a_n + b_n + c_n` for `n < n_max`; returns `a_0..=a_{n_max}`.
///
/// Any sequence with `a_{n+1} ≤ (1 − t_n) a_n + b_n + c_n` and the same
/// `a_0` stays below this one.
pub fn scalar_recursion(a0: f64, t: &ScheduleSpec, b: &ScheduleSpec, c: &ScheduleSpec, n_max: u64) -> Result<Vec<f64>> {
    if !(a0.is_finite() && a0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("a0 must be finite and >= 0, got {a0}")));
    }
    t.check_unit_range()?;
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut a = a0;
    out.push(a);
    for n in 0..n_max {
        a = (1.0 - t.eval(n)) * a + b.eval(n) + c.eval(n);
        out.push(a);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma12Report {
    /// `max ‖x+y‖^π − ‖x‖^π − π ⟨y, J_π(x+y)⟩` over the sampled pairs.
    pub max_violation: f64,
    /// `max(1, radius^π)`
    pub scale: f64,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
}

/// Samples `‖x+y‖^π ≤ ‖x‖^π + π ⟨y, J_π(x+y)⟩` over pairs in the ball of
/// the given radius. Half of the `y` are drawn at log-uniform scales down to
/// `1e-9·radius`, where the two sides nearly agree.
pub fn check_lemma_1_2(space: SpaceSpec, gauge: f64, samples: usize, seed: u64, radius: f64) -> Result<Lemma12Report> {
    if !(gauge > 1.0) {
        return Err(Error::InvalidArgument(format!("gauge exponent must be > 1, got {gauge}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be > 0, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..samples.max(1) {
        let x = Vector::new(space, random_in_ball(&mut rng, space, radius))?;
        let ry = if k % 2 == 0 { radius } else { radius * 10f64.powf(-9.0 * rng.gen::<f64>()) };
        let y = Vector::new(space, random_in_ball(&mut rng, space, ry))?;
        let s = x.add(&y)?;
        let lhs = s.norm().powf(gauge);
        let rhs = x.norm().powf(gauge) + gauge * pairing(&y, &generalized_duality_map(&s, gauge)?)?;
        worst = worst.max(lhs - rhs);
    }
    let scale = radius.powf(gauge).max(1.0);
    Ok(Lemma12Report {
        max_violation: worst,
        scale,
        samples: samples.max(1),
        seed,
        passed: worst <= 1e-9 * scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub stop: StopReason,
    pub iterations: u64,
    pub final_residual: f64,
    pub final_dist: Option<f64>,
    pub final_norm: f64,
    /// Least-squares slope of `ln r_n` against `ln n` over the last half of the run.
    pub tail_slope: Option<f64>,
    pub hypotheses: Option<HypothesisReport>,
}

/// Slope of `ln r_n` vs `ln n` over rows with `n ≥ max(1, N/2)`; needs at
/// least 10 rows and positive residuals throughout the window.
pub fn tail_slope(traj: &TrajectoryRecord) -> Option<f64> {
    if traj.steps.len() < 10 {
        return None;
    }
    let last_n = traj.last().n;
    let from = (last_n / 2).max(1);
    let pts: Vec<(f64, f64)> = traj
        .steps
        .iter()
        .filter(|s| s.n >= from)
        .map(|s| ((s.n as f64).ln(), s.residual))
        .collect();
    if pts.len() < 2 || pts.iter().any(|(_, r)| !(*r > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, r)| (a, r.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Measured decay of a finished run. Runtime-monitored hypothesis items are
/// settled against it.
pub fn convergence_report(
    traj: &TrajectoryRecord,
    q_hat: Option<&Vector>,
    hypotheses: Option<HypothesisReport>,
) -> Result<ConvergenceReport> {
    let last = traj
        .steps
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let final_dist = match q_hat {
        Some(q) => Some(last.x.distance(q)?),
        None => last.dist,
    };
    let slope = tail_slope(traj);
    let hypotheses = hypotheses.map(|mut h| {
        h.settle_runtime(traj.stop == StopReason::Diverged, last.residual, slope);
        h
    });
    Ok(ConvergenceReport {
        stop: traj.stop,
        iterations: last.n,
        final_residual: last.residual,
        final_dist,
        final_norm: last.x.norm(),
        tail_slope: slope,
        hypotheses,
    })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
    pub dist: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Trajectory table with header `n,alpha,beta,residual,dist,x_0..,y_0..`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub dim: usize,
    pub rows: Vec<CsvRow>,
}

impl From<&TrajectoryRecord> for CsvTable {
    fn from(traj: &TrajectoryRecord) -> Self {
        CsvTable {
            dim: traj.space.dim(),
            rows: traj
                .steps
                .iter()
                .map(|s| CsvRow {
                    n: s.n,
                    alpha: s.alpha,
                    beta: s.beta,
                    residual: s.residual,
                    dist: s.dist,
                    x: s.x.coords().to_vec(),
                    y: s.y.coords().to_vec(),
                })
                .collect(),
        }
    }
}

fn header(dim: usize) -> String {
    let mut h = String::from("n,alpha,beta,residual,dist");
    for i in 0..dim {
        let _ = write!(h, ",x_{i}");
    }
    for i in 0..dim {
        let _ = write!(h, ",y_{i}");
    }
    h
}

impl CsvTable {
    /// Shortest round-trip decimals, LF line endings.
    pub fn render(&self) -> String {
        let mut out = header(self.dim);
        out.push('\n');
        let mut buf = ryu::Buffer::new();
        for r in &self.rows {
            let _ = write!(out, "{},", r.n);
            out.push_str(buf.format(r.alpha));
            out.push(',');
            out.push_str(buf.format(r.beta));
            out.push(',');
            out.push_str(buf.format(r.residual));
            out.push(',');
            if let Some(d) = r.dist {
                out.push_str(buf.format(d));
            }
            for c in r.x.iter().chain(&r.y) {
                out.push(',');
                out.push_str(buf.format(*c));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let head = lines.next().ok_or(Error::CsvParse { line: 1, msg: "missing header".into() })?;
        let cols = head.split(',').count();
        if cols < 5 || (cols - 5) % 2 != 0 {
            return Err(Error::CsvParse { line: 1, msg: format!("unexpected column count {cols}") });
        }
        let dim = (cols - 5) / 2;
        if head != header(dim) {
            return Err(Error::CsvParse { line: 1, msg: format!("unexpected header '{head}'") });
        }
        let mut rows = Vec::new();
        let mut ended = false;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.is_empty() {
                ended = true;
                continue;
            }
            if ended {
                return Err(Error::CsvParse { line: lineno, msg: "data after blank line".into() });
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::CsvParse { line: lineno, msg: format!("expected {cols} fields, found {}", fields.len()) });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::CsvParse { line: lineno, msg: format!("'{s}': {e}") })
            };
            let n = fields[0]
                .parse::<u64>()
                .map_err(|e| Error::CsvParse { line: lineno, msg: format!("'{}': {e}", fields[0]) })?;
            let dist = if fields[4].is_empty() { None } else { Some(num(fields[4])?) };
            rows.push(CsvRow {
                n,
                alpha: num(fields[1])?,
                beta: num(fields[2])?,
                residual: num(fields[3])?,
                dist,
                x: fields[5..5 + dim].iter().map(|s| num(s)).collect::<Result<_>>()?,
                y: fields[5 + dim..].iter().map(|s| num(s)).collect::<Result<_>>()?,
            });
        }
        if !ended {
            return Err(Error::CsvParse { line: 1, msg: "missing final newline".into() });
        }
        Ok(CsvTable { dim, rows })
    }
}

pub fn render_csv(traj: &TrajectoryRecord) -> String {
    CsvTable::from(traj).render()
}

pub fn export_csv(traj: &TrajectoryRecord, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(traj)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{make_mann, run, ProcessBase, StopRule, Variant};
    use crate::operators::{DomainSpec, OperatorSpec};

    #[test]
    fn recursion_closed_forms() {
        let z = ScheduleSpec::zero();
        let a = scalar_recursion(3.0, &ScheduleSpec::one(), &z, &z, 5).unwrap();
        assert_eq!(a, vec![3.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let tau = 0.25;
        let a = scalar_recursion(2.0, &ScheduleSpec::constant(tau).unwrap(), &z, &z, 20).unwrap();
        for (n, v) in a.iter().enumerate() {
            assert!((v - 2.0 * (1.0 - tau).powi(n as i32)).abs() <= 1e-15);
        }
    }

    #[test]
    fn norm_inequality_hilbert_identity() {
        let e = SpaceSpec::euclidean(3);
        let r = check_lemma_1_2(e, 2.0, 1000, 1, 5.0).unwrap();
        assert!(r.passed && r.max_violation <= 1e-9);
        assert!(check_lemma_1_2(e, 1.0, 10, 1, 1.0).is_err());
    }

    fn short_run(steps: u64, reference: Option<&Vector>) -> TrajectoryRecord {
        let e = SpaceSpec::euclidean(2);
        let base = ProcessBase {
            space: e,
            domain: DomainSpec::WholeSpace,
            t_op: OperatorSpec::rotation(1.0, vec![0.0, 0.0]),
            x0: e.vector(vec![1.0, -0.5]).unwrap(),
            stop: StopRule { max_iters: steps, residual_tol: 0.0, divergence_radius: 1e6 },
            seed: 0,
        };
        let cfg = make_mann(base, Variant::Anchored(vec![0.3, 0.1]), ScheduleSpec::power(1.0, 1.0, 1).unwrap()).unwrap();
        run(&cfg, reference).unwrap()
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let t = short_run(0, None);
        let text = render_csv(&t);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("n,alpha,beta,residual,dist,x_0,x_1,y_0,y_1\n0,1.0,1.0,"));

        let q = SpaceSpec::euclidean(2).zero();
        let t = short_run(3, Some(&q));
        let text = render_csv(&t);
        let ns: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(ns, vec!["0", "1", "2", "3"]);
        let again = CsvTable::parse(&text).unwrap().render();
        assert_eq!(again, text);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn csv_rejects_malformed() {
        assert!(CsvTable::parse("n,alpha\n").is_err());
        assert!(CsvTable::parse("n,alpha,beta,residual,dist,x_0,y_0\n0,1,1,1,,1\n").is_err());
        assert!(CsvTable::parse("n,alpha,beta,residual,dist,x_0,y_0\n0,1,1,1,,1,x\n").is_err());
    }

    #[test]
    fn report_on_fixed_point() {
        let e = SpaceSpec::euclidean(2);
        let base = ProcessBase {
            space: e,
            domain: DomainSpec::WholeSpace,
            t_op: OperatorSpec::rotation(1.0, vec![0.0, 0.0]),
            x0: e.zero(),
            stop: StopRule { max_iters: 20, residual_tol: 0.0, divergence_radius: 1e6 },
            seed: 0,
        };
        let cfg = make_mann(base, Variant::Anchored(vec![0.0, 0.0]), ScheduleSpec::power(1.0, 1.0, 1).unwrap()).unwrap();
        let t = run(&cfg, None).unwrap();
        let r = convergence_report(&t, Some(&e.zero()), None).unwrap();
        assert_eq!(r.final_residual, 0.0);
        assert_eq!(r.final_dist, Some(0.0));
        assert_eq!(r.tail_slope, None);
    }
}
