//! Sampling falsifiers. A pass means no violation was found for the given
//! seed and sample count; every report carries both.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{DomainSpec, FamilySpec, OperatorSpec};
use crate::error::Result;
use crate::schedules::ScheduleSpec;
use crate::space::{random_direction, SpaceSpec, Vector};

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// Largest sampled `‖T x − T y‖ / ‖x − y‖`.
    pub ratio: f64,
    pub claimed: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl LipschitzReport {
    /// No sampled pair exceeded ratio 1 (up to `tol`).
    pub fn nonexpansive(&self, tol: f64) -> bool {
        self.ratio <= 1.0 + tol
    }

    /// Claimed constant is below 1 and no sample contradicts it.
    pub fn contraction(&self, tol: f64) -> bool {
        match self.claimed {
            Some(l) => l < 1.0 && self.ratio <= l + tol,
            None => false,
        }
    }
}

/// `‖op(x) − op(y)‖ / ‖x − y‖` for one pair (`0` when `x = y`).
pub fn lipschitz_ratio(op: &OperatorSpec, x: &Vector, y: &Vector) -> Result<f64> {
    let den = x.distance(y)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(op.apply(x)?.distance(&op.apply(y)?)? / den)
}

fn sampled_ratio(op: &OperatorSpec, space: SpaceSpec, domain: &DomainSpec, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = domain.sample(&mut rng, space);
        let y = domain.sample(&mut rng, space);
        worst = worst.max(lipschitz_ratio(op, &x, &y)?);
    }
    Ok(worst)
}

/// Sampled Lipschitz ratio of `op` over `domain` (`samples` pairs).
pub fn check_nonexpansive(
    op: &OperatorSpec,
    space: SpaceSpec,
    domain: &DomainSpec,
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    Ok(LipschitzReport {
        ratio: sampled_ratio(op, space, domain, samples.max(2), seed)?,
        claimed: op.lipschitz_claim(space),
        samples: samples.max(2),
        seed,
    })
}

/// Same sampling as [`check_nonexpansive`]; read the result with
/// [`LipschitzReport::contraction`].
pub fn check_contraction(
    op: &OperatorSpec,
    space: SpaceSpec,
    domain: &DomainSpec,
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    check_nonexpansive(op, space, domain, samples, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateCheck {
    pub claimed: f64,
    pub estimate: f64,
    pub method: &'static str,
    pub consistent: bool,
}

/// Lower estimate of `‖M‖_{p→p}`: power iteration on `MᵀM` in `ℓ_2`,
/// sampled ratios otherwise.
pub fn affine_norm_estimate(matrix: &[Vec<f64>], space: SpaceSpec, seed: u64) -> f64 {
    let d = matrix.len();
    let mat_vec = |v: &[f64]| -> Vec<f64> {
        matrix.iter().map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum()).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if space.is_hilbert() {
        let mut v: Vec<f64> = random_direction(&mut rng, space);
        let mut sigma = 0.0;
        for _ in 0..500 {
            let mv = mat_vec(&v);
            let mtmv: Vec<f64> = (0..d).map(|j| (0..d).map(|i| matrix[i][j] * mv[i]).sum()).collect();
            let n = space.norm_of(&mtmv);
            if n == 0.0 {
                return 0.0;
            }
            sigma = n.sqrt();
            v = mtmv.into_iter().map(|c| c / n).collect();
        }
        // The Rayleigh-type quotient above converges from below; take the
        // direct ratio at the final vector too.
        sigma.max(space.norm_of(&mat_vec(&v)))
    } else {
        let mut best = 0.0_f64;
        for k in 0..4000 {
            let v = if k < d {
                (0..d).map(|j| if j == k { 1.0 } else { 0.0 }).collect()
            } else {
                let mut v = random_direction(&mut rng, space);
                // Sparse-ish probes find extreme ratios faster in l_p.
                if rng.gen_bool(0.3) {
                    v.iter_mut().for_each(|c| *c = c.signum());
                }
                v
            };
            let n = space.norm_of(&v);
            if n > 0.0 {
                best = best.max(space.norm_of(&mat_vec(&v)) / n);
            }
        }
        best
    }
}

pub(super) fn check_affine_certificate(matrix: &[Vec<f64>], claimed: f64, space: SpaceSpec, seed: u64) -> CertificateCheck {
    let estimate = affine_norm_estimate(matrix, space, seed);
    CertificateCheck {
        claimed,
        estimate,
        method: if space.is_hilbert() { "power_iteration" } else { "sampling" },
        consistent: estimate <= claimed * (1.0 + 1e-9) + 1e-12,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformConvergenceReport {
    pub n: Vec<u64>,
    /// Sampled `sup_x ‖f_n(x) − f(x)‖` per index.
    pub sup_gap: Vec<f64>,
    /// Certified envelope per index, when the family provides one.
    pub envelope: Vec<Option<f64>>,
    pub envelope_tends_to_zero: bool,
    pub within_envelope: bool,
    pub non_increasing: bool,
    pub samples: usize,
    pub seed: u64,
}

impl UniformConvergenceReport {
    /// Convergent by certificate, or (without one) sampled gaps that shrink
    /// monotonically to below `1e-3` of their initial value.
    pub fn looks_convergent(&self) -> bool {
        if self.envelope.iter().all(Option::is_some) {
            return self.envelope_tends_to_zero && self.within_envelope;
        }
        let first = self.sup_gap.first().copied().unwrap_or(0.0);
        let last = self.sup_gap.last().copied().unwrap_or(0.0);
        self.non_increasing && last <= 1e-3 * first.max(1e-12)
    }
}

/// For each `n` in `sample_n`, the sampled `sup_{x∈D} ‖f_n(x) − f(x)‖`.
pub fn check_uniform_convergence(
    fam: &FamilySpec,
    limit: &OperatorSpec,
    space: SpaceSpec,
    domain: &DomainSpec,
    sample_n: &[u64],
    samples: usize,
    seed: u64,
) -> Result<UniformConvergenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vector> = (0..samples.max(1)).map(|_| domain.sample(&mut rng, space)).collect();
    let mut sup_gap = Vec::with_capacity(sample_n.len());
    let mut envelope = Vec::with_capacity(sample_n.len());
    let mut tends = true;
    for &n in sample_n {
        let mut worst = 0.0_f64;
        for x in &points {
            worst = worst.max(fam.eval(n, x)?.distance(&limit.apply(x)?)?);
        }
        sup_gap.push(worst);
        match fam.convergence_envelope(space, domain, n) {
            Some((e, t)) => {
                envelope.push(Some(e));
                tends &= t;
            }
            None => {
                envelope.push(None);
                tends = false;
            }
        }
    }
    let within_envelope = sup_gap
        .iter()
        .zip(&envelope)
        .all(|(g, e)| e.is_some_and(|e| *g <= e + 1e-12 * e.max(1.0)));
    let non_increasing = sup_gap.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(UniformConvergenceReport {
        n: sample_n.to_vec(),
        sup_gap,
        envelope,
        envelope_tends_to_zero: tends,
        within_envelope,
        non_increasing,
        samples: samples.max(1),
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    /// Smallest `δ_n(‖x‖ + M) − β_n ‖g_n(x) − x‖` seen.
    pub min_margin: f64,
    pub worst_n: u64,
    pub passed: bool,
    pub samples: usize,
    pub seed: u64,
}

/// Samples the margin `δ_n(‖x‖ + M) − β_n ‖g_n(x) − x‖` over `D` and the listed `n`.
#[allow(clippy::too_many_arguments)]
pub fn check_perturbation_bound(
    g: &FamilySpec,
    beta: &ScheduleSpec,
    delta: &ScheduleSpec,
    m: f64,
    space: SpaceSpec,
    domain: &DomainSpec,
    sample_n: &[u64],
    samples: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vector> = (0..samples.max(1)).map(|_| domain.sample(&mut rng, space)).collect();
    let mut min_margin = f64::INFINITY;
    let mut worst_n = sample_n.first().copied().unwrap_or(0);
    for &n in sample_n {
        let (b, d) = (beta.eval(n), delta.eval(n));
        for x in &points {
            let lhs = b * g.eval(n, x)?.distance(x)?;
            let margin = d * (x.norm() + m) - lhs;
            if margin < min_margin {
                min_margin = margin;
                worst_n = n;
            }
        }
    }
    Ok(PerturbationReport {
        min_margin,
        worst_n,
        passed: min_margin >= -1e-12,
        samples: samples.max(1),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::BoundedSequence;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn unit_box(d: usize) -> DomainSpec {
        DomainSpec::Box { lo: vec![-1.0; d], hi: vec![1.0; d] }
    }

    #[test]
    fn rotation_is_isometry_in_l2() {
        let e = SpaceSpec::euclidean(2);
        let rot = OperatorSpec::rotation(FRAC_PI_2, vec![0.0, 0.0]);
        let r = check_nonexpansive(&rot, e, &unit_box(2), 2000, 1).unwrap();
        assert!(r.ratio >= 1.0 - 1e-12 && r.ratio <= 1.0 + 1e-12, "{}", r.ratio);
    }

    #[test]
    fn clamp_is_nonexpansive_in_l3() {
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        let clamp = OperatorSpec::box_clamp(vec![0.0, 0.0], vec![0.5, 0.5]);
        let r = check_nonexpansive(&clamp, l3, &unit_box(2), 10_000, 2).unwrap();
        assert!(r.nonexpansive(1e-12));
    }

    #[test]
    fn rotation_in_l3_is_caught() {
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        let rot = OperatorSpec::rotation(FRAC_PI_4, vec![0.0, 0.0]);
        let x = l3.vector(vec![SQRT_2 / 2.0, SQRT_2 / 2.0]).unwrap();
        let ratio = lipschitz_ratio(&rot, &x, &l3.zero()).unwrap();
        // ‖(0,1)‖_3 / ‖(√2/2, √2/2)‖_3 = 2^{1/6}
        assert!((ratio - 2f64.powf(1.0 / 6.0)).abs() < 1e-12);
        assert!(ratio > 1.05);
        let sampled = check_nonexpansive(&rot, l3, &unit_box(2), 10_000, 3).unwrap();
        assert!(sampled.ratio > 1.0);
        assert!(!rot.claims_nonexpansive(l3));
    }

    #[test]
    fn contraction_examples() {
        let e = SpaceSpec::euclidean(2);
        let f = OperatorSpec::homothety(0.5, vec![0.5, 0.5]);
        let r = check_contraction(&f, e, &unit_box(2), 1000, 5).unwrap();
        assert!(r.ratio <= 0.5 + 1e-12 && r.ratio > 0.5 - 1e-9);
        assert!(r.contraction(1e-12));
        let c = check_contraction(&OperatorSpec::constant(vec![1.0, 2.0]), e, &unit_box(2), 100, 5).unwrap();
        assert!(c.ratio <= 1e-12 && c.contraction(1e-12));
        let id = check_contraction(&OperatorSpec::Identity, e, &unit_box(2), 100, 5).unwrap();
        assert!((id.ratio - 1.0).abs() < 1e-12);
        assert!(!id.contraction(1e-12));
    }

    #[test]
    fn affine_certificate_cross_check() {
        let e = SpaceSpec::euclidean(2);
        let m = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        // Spectral norm of [[1,1],[0,1]] is the golden ratio.
        let est = affine_norm_estimate(&m, e, 0);
        assert!((est - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9);
        let bad = OperatorSpec::Affine { matrix: vec![vec![2.0, 0.0], vec![0.0, 2.0]], offset: vec![0.0, 0.0], norm_certificate: 1.0 };
        let issues = bad.certificate_issues(e, 0);
        assert_eq!(issues.len(), 1);
        assert!(!issues[0].consistent);
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        let good = OperatorSpec::homothety(0.5, vec![0.0, 0.0]);
        assert!(good.certificate_issues(l3, 1).iter().all(|c| c.consistent));
    }

    #[test]
    fn uniform_convergence_examples() {
        let e = SpaceSpec::euclidean(2);
        let dom = unit_box(2);
        let f = OperatorSpec::homothety(0.5, vec![0.5, 0.5]);
        let ns = [0u64, 1, 10, 100, 1000];
        let r = check_uniform_convergence(&FamilySpec::ConstantFamily { f: f.clone() }, &f, e, &dom, &ns, 50, 1).unwrap();
        assert!(r.sup_gap.iter().all(|g| *g == 0.0));
        assert!(r.looks_convergent());

        let fam = FamilySpec::DecayingPerturbation {
            base: f.clone(),
            direction: OperatorSpec::constant(vec![1.0, 0.0]),
            rate: ScheduleSpec::power(1.0, 1.0, 1).unwrap(),
        };
        let r = check_uniform_convergence(&fam, &f, e, &dom, &ns, 50, 1).unwrap();
        for (n, g) in ns.iter().zip(&r.sup_gap) {
            assert!(*g >= 0.0 && *g <= 1.0 / (*n as f64 + 1.0) + 1e-15);
        }
        assert!(r.non_increasing && r.looks_convergent());

        let u = vec![0.5, 0.5];
        let errs = FamilySpec::ErrorsFamily {
            u: u.clone(),
            u_seq: BoundedSequence::SeededBall { center: vec![0.0, 0.0], radius: 0.5, seed: 8 },
            alpha: ScheduleSpec::power(1.0, 1.0, 1).unwrap(),
            gamma: ScheduleSpec::power(1.0, 2.0, 1).unwrap(),
        };
        let limit = errs.uniform_limit(e).unwrap();
        assert_eq!(limit, OperatorSpec::constant(u));
        let r = check_uniform_convergence(&errs, &limit, e, &dom, &ns, 20, 2).unwrap();
        assert!(r.within_envelope && r.looks_convergent());
    }

    #[test]
    fn perturbation_bound_examples() {
        let e = SpaceSpec::euclidean(2);
        let dom = unit_box(2);
        let ns = [0u64, 1, 5, 50, 500];
        let beta = ScheduleSpec::constant(0.5).unwrap();
        let delta = ScheduleSpec::power(1.0, 2.0, 1).unwrap();
        let r = check_perturbation_bound(&FamilySpec::IdentityFamily, &beta, &delta, 1.0, e, &dom, &ns, 200, 3).unwrap();
        assert!(r.passed);

        let v_seq = BoundedSequence::SeededBall { center: vec![0.2, 0.0], radius: 0.3, seed: 1 };
        let m = v_seq.norm_bound(e);
        let g = FamilySpec::ErrorsStateFamily { v_seq, beta: beta.clone(), delta: delta.clone() };
        let r = check_perturbation_bound(&g, &beta.plus(&delta), &delta, m, e, &dom, &ns, 200, 3).unwrap();
        assert!(r.passed, "{r:?}");

        let shift = FamilySpec::DecayingPerturbation {
            base: OperatorSpec::Identity,
            direction: OperatorSpec::constant(vec![0.6, -0.8]),
            rate: delta.clone(),
        };
        let r = check_perturbation_bound(&shift, &ScheduleSpec::one(), &delta, 1.0, e, &dom, &ns, 200, 3).unwrap();
        assert!(r.passed);
        // Too-small delta is caught.
        let r = check_perturbation_bound(&shift, &ScheduleSpec::one(), &delta.plus(&ScheduleSpec::zero()), 0.0, e, &DomainSpec::Box { lo: vec![0.0; 2], hi: vec![0.0; 2] }, &ns, 5, 3).unwrap();
        assert!(!r.passed);
    }
}
