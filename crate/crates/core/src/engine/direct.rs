//! Source recursions evaluated literally, term by term, as a cross-check for
//! the reductions to the extended process.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    make_ishikawa, make_ishikawa_with_errors, make_mann, make_mann_with_errors, make_viscosity, make_yao_three_term,
    run, ProcessBase, ProcessConfig, Scheme, StopRule, Variant,
};
use crate::error::{Error, Result};
use crate::operators::{BoundedSequence, DomainSpec, FamilySpec, OperatorSpec};
use crate::schedules::ScheduleSpec;
use crate::space::{SpaceSpec, Vector};

/// `Σ w_i v_i`, coordinate by coordinate.
fn weighted(space: SpaceSpec, terms: &[(f64, &[f64])]) -> Vector {
    let mut out = vec![0.0; space.dim()];
    for (w, v) in terms {
        for (o, c) in out.iter_mut().zip(v.iter()) {
            *o += w * c;
        }
    }
    Vector::from_raw(space, out)
}

fn anchor_or_state<'a>(variant: &'a Variant, x: &'a Vector) -> &'a [f64] {
    match variant {
        Variant::Anchored(u) => u,
        Variant::Inertial => x.coords(),
    }
}

/// Iterates the source recursion behind `cfg.scheme` for `steps` steps and
/// returns `x_0, ..., x_steps`.
pub fn direct_trajectory(cfg: &ProcessConfig, steps: u64) -> Result<Vec<Vector>> {
    let space = cfg.space;
    let t = &cfg.t_op;
    let mut xs = vec![cfg.x0.clone()];
    for n in 0..steps {
        let x = xs.last().expect("nonempty");
        let tx = t.apply(x)?;
        let next = match &cfg.scheme {
            Scheme::Mann { variant } => {
                let a = cfg.alpha.eval(n);
                weighted(space, &[(a, anchor_or_state(variant, x)), (1.0 - a, tx.coords())])
            }
            Scheme::Ishikawa { variant } => {
                let (a, b) = (cfg.alpha.eval(n), cfg.beta.eval(n));
                let y = weighted(space, &[(b, x.coords()), (1.0 - b, tx.coords())]);
                let ty = t.apply(&y)?;
                weighted(space, &[(a, anchor_or_state(variant, x)), (1.0 - a, ty.coords())])
            }
            Scheme::MannErrors { u, u_seq, alpha, gamma } => {
                let (a, g) = (alpha.eval(n), gamma.eval(n));
                let un = u_seq.term(space, n);
                weighted(space, &[(a, u), (1.0 - a - g, tx.coords()), (g, un.coords())])
            }
            Scheme::IshikawaErrors { u, u_seq, v_seq, alpha, beta, gamma, delta } => {
                let (a, b, g, d) = (alpha.eval(n), beta.eval(n), gamma.eval(n), delta.eval(n));
                let vn = v_seq.term(space, n);
                let y = weighted(space, &[(b, x.coords()), (1.0 - b - d, tx.coords()), (d, vn.coords())]);
                let ty = t.apply(&y)?;
                let un = u_seq.term(space, n);
                weighted(space, &[(a, u), (1.0 - a - g, ty.coords()), (g, un.coords())])
            }
            Scheme::Viscosity => {
                let FamilySpec::ConstantFamily { f } = &cfg.f_family else {
                    return Err(Error::Config("viscosity config without a constant family".into()));
                };
                let a = cfg.alpha.eval(n);
                let fx = f.apply(x)?;
                weighted(space, &[(a, fx.coords()), (1.0 - a, tx.coords())])
            }
            Scheme::Yao { u, alpha, beta } => {
                let (a, b) = (alpha.eval(n), beta.eval(n));
                weighted(space, &[(a, u), (b, x.coords()), (1.0 - a - b, tx.coords())])
            }
            Scheme::Extended => {
                return Err(Error::Config("the extended scheme has no separate source recursion".into()));
            }
        };
        xs.push(next);
    }
    Ok(xs)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionGap {
    pub scheme: &'static str,
    pub steps: u64,
    /// `max_n ‖x_n^engine − x_n^direct‖ / max(1, ‖x_n^direct‖)`.
    pub max_gap: f64,
}

/// Runs `cfg` through the engine and its source recursion; returns the
/// largest relative per-step gap.
pub fn reduction_gap(cfg: &ProcessConfig, steps: u64) -> Result<ReductionGap> {
    let mut cfg = cfg.clone();
    cfg.stop = StopRule {
        max_iters: steps,
        residual_tol: 0.0,
        divergence_radius: f64::INFINITY,
    };
    let traj = run(&cfg, None)?;
    let direct = direct_trajectory(&cfg, steps)?;
    let mut max_gap = 0.0_f64;
    for (s, d) in traj.steps.iter().zip(&direct) {
        max_gap = max_gap.max(s.x.distance(d)? / d.norm().max(1.0));
    }
    if traj.steps.len() != direct.len() {
        max_gap = f64::INFINITY;
    }
    Ok(ReductionGap {
        scheme: cfg.scheme.name(),
        steps,
        max_gap,
    })
}

/// Seeded generic instances of every reduction constructor.
pub fn generic_reduction_configs(seed: u64) -> Result<Vec<ProcessConfig>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 3;
    let space = SpaceSpec::euclidean(d);
    let domain = DomainSpec::Box { lo: vec![-2.0; d], hi: vec![2.0; d] };
    let point = |rng: &mut ChaCha8Rng, r: f64| -> Vec<f64> { (0..d).map(|_| rng.gen_range(-r..=r)).collect() };
    let theta = rng.gen_range(0.3..2.8);
    let center = point(&mut rng, 0.5);
    let t_op = OperatorSpec::compose(
        OperatorSpec::box_clamp(vec![-1.0; d], vec![1.0; d]),
        OperatorSpec::Rotation2d { theta, center, plane: [0, 2] },
    );
    let base = |rng: &mut ChaCha8Rng| -> Result<ProcessBase> {
        let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        Ok(ProcessBase {
            space,
            domain: domain.clone(),
            t_op: t_op.clone(),
            x0: space.vector(x0)?,
            stop: StopRule::default(),
            seed,
        })
    };
    let c = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| rng.gen_range(lo..hi);
    let alpha = ScheduleSpec::power(c(&mut rng, 0.2, 0.5), c(&mut rng, 0.5, 1.0), 1)?;
    let beta = ScheduleSpec::constant(c(&mut rng, 0.2, 0.8))?;
    let gamma = ScheduleSpec::power(c(&mut rng, 0.1, 0.4), c(&mut rng, 1.1, 2.0), 1)?;
    let delta = ScheduleSpec::geometric(c(&mut rng, 0.05, 0.2), c(&mut rng, 0.5, 0.95))?;
    let u = point(&mut rng, 1.5);
    let u_seq = BoundedSequence::SeededBall { center: point(&mut rng, 1.0), radius: 0.5, seed: rng.gen() };
    let v_seq = BoundedSequence::SeededBall { center: point(&mut rng, 1.0), radius: 0.5, seed: rng.gen() };
    let f = OperatorSpec::homothety(c(&mut rng, 0.1, 0.9), point(&mut rng, 0.2));
    let yao_beta = ScheduleSpec::power(c(&mut rng, 0.1, 0.4), 1.0, 2)?;
    Ok(vec![
        make_mann(base(&mut rng)?, Variant::Anchored(u.clone()), alpha.clone())?,
        make_ishikawa(base(&mut rng)?, Variant::Anchored(u.clone()), alpha.clone(), beta.clone())?,
        make_mann_with_errors(base(&mut rng)?, u.clone(), u_seq.clone(), alpha.clone(), gamma.clone())?,
        make_ishikawa_with_errors(base(&mut rng)?, u.clone(), u_seq, v_seq, alpha.clone(), beta, gamma, delta)?,
        make_viscosity(base(&mut rng)?, f, alpha.clone())?,
        make_yao_three_term(base(&mut rng)?, u, alpha, yao_beta)?,
    ])
}

/// Reduction gaps for every constructor at `seed`.
pub fn reduction_suite(seed: u64, steps: u64) -> Result<Vec<ReductionGap>> {
    generic_reduction_configs(seed)?
        .iter()
        .map(|cfg| reduction_gap(cfg, steps))
        .collect()
}
