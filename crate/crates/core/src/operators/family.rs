use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::domain::check_len;
use super::{DomainSpec, OperatorSpec};
use crate::error::{Error, Result};
use crate::schedules::{weight_ratio_limit, ScheduleSpec};
use crate::space::{random_in_ball, SpaceSpec, Vector};

/// Horizon over which the supremum of a weight ratio is evaluated (together
/// with its analytic limit) when certifying a uniform contraction constant.
const RATIO_SUP_HORIZON: u64 = 10_000;

/// State-independent bounded sequence `u_n` (or `v_n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundedSequence {
    Constant { v: Vec<f64> },
    /// Seeded draws from the closed ball `B(center, radius)`; term `n` is
    /// reproducible on its own.
    SeededBall { center: Vec<f64>, radius: f64, seed: u64 },
}

impl BoundedSequence {
    pub fn validate(&self, space: SpaceSpec) -> Result<()> {
        match self {
            BoundedSequence::Constant { v } => check_len(space, v, "sequence value"),
            BoundedSequence::SeededBall { center, radius, .. } => {
                check_len(space, center, "sequence ball center")?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidFamily(format!("sequence radius {radius} must be >= 0")));
                }
                Ok(())
            }
        }
    }

    pub fn term(&self, space: SpaceSpec, n: u64) -> Vector {
        match self {
            BoundedSequence::Constant { v } => Vector::from_raw(space, v.clone()),
            BoundedSequence::SeededBall { center, radius, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(n);
                let d = random_in_ball(&mut rng, space, *radius);
                Vector::from_raw(space, center.iter().zip(d).map(|(c, x)| c + x).collect())
            }
        }
    }

    /// Certified `sup_n ‖s_n‖`.
    pub fn norm_bound(&self, space: SpaceSpec) -> f64 {
        match self {
            BoundedSequence::Constant { v } => space.norm_of(v),
            BoundedSequence::SeededBall { center, radius, .. } => space.norm_of(center) + radius,
        }
    }

    /// Certified `sup_n ‖s_n − u‖`.
    pub fn distance_bound_from(&self, space: SpaceSpec, u: &[f64]) -> f64 {
        let (c, r) = match self {
            BoundedSequence::Constant { v } => (v, 0.0),
            BoundedSequence::SeededBall { center, radius, .. } => (center, *radius),
        };
        let d: Vec<f64> = c.iter().zip(u).map(|(a, b)| a - b).collect();
        space.norm_of(&d) + r
    }

    /// Whether every term lies in `domain`.
    pub fn inside(&self, space: SpaceSpec, domain: &DomainSpec) -> bool {
        match self {
            BoundedSequence::Constant { v } => domain.contains(&Vector::from_raw(space, v.clone()), 0.0),
            BoundedSequence::SeededBall { center, radius, .. } => domain.contains_ball(space, center, *radius),
        }
    }
}

/// Indexed maps `f_n` / `g_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `f_n = f`.
    ConstantFamily { f: OperatorSpec },
    /// `f_n(x) = base(x) + rate_n · direction(x)`.
    DecayingPerturbation {
        base: OperatorSpec,
        direction: OperatorSpec,
        rate: ScheduleSpec,
    },
    /// `f_n(x) = (α_n u + γ_n u_n) / (α_n + γ_n)`.
    ErrorsFamily {
        u: Vec<f64>,
        u_seq: BoundedSequence,
        alpha: ScheduleSpec,
        gamma: ScheduleSpec,
    },
    /// `g_n(x) = (β_n x + δ_n v_n) / (β_n + δ_n)`.
    ErrorsStateFamily {
        v_seq: BoundedSequence,
        beta: ScheduleSpec,
        delta: ScheduleSpec,
    },
    /// `f_n(x) = (β_n x + α_n u) / (α_n + β_n)`, the anchor of the three-term scheme.
    ThreeTermFamily {
        u: Vec<f64>,
        alpha: ScheduleSpec,
        beta: ScheduleSpec,
    },
    IdentityFamily,
}

impl FamilySpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FamilySpec::ConstantFamily { .. } => "constant_family",
            FamilySpec::DecayingPerturbation { .. } => "decaying_perturbation",
            FamilySpec::ErrorsFamily { .. } => "errors_family",
            FamilySpec::ErrorsStateFamily { .. } => "errors_state_family",
            FamilySpec::ThreeTermFamily { .. } => "three_term_family",
            FamilySpec::IdentityFamily => "identity_family",
        }
    }

    pub fn validate(&self, space: SpaceSpec, domain: &DomainSpec) -> Result<()> {
        match self {
            FamilySpec::ConstantFamily { f } => f.validate(space),
            FamilySpec::DecayingPerturbation { base, direction, .. } => {
                base.validate(space)?;
                direction.validate(space)?;
                if direction.range_norm_bound(space, domain).is_none() {
                    return Err(Error::InvalidFamily(
                        "decaying_perturbation direction must have bounded range over the domain".into(),
                    ));
                }
                Ok(())
            }
            FamilySpec::ErrorsFamily { u, u_seq, alpha, gamma } => {
                check_len(space, u, "errors_family u")?;
                u_seq.validate(space)?;
                if !alpha.plus(gamma).strictly_positive() {
                    return Err(Error::InvalidFamily(
                        "errors_family requires alpha_n + gamma_n > 0 for all n".into(),
                    ));
                }
                Ok(())
            }
            FamilySpec::ErrorsStateFamily { v_seq, beta, delta } => {
                v_seq.validate(space)?;
                if !beta.plus(delta).strictly_positive() {
                    return Err(Error::InvalidFamily(
                        "errors_state_family requires beta_n + delta_n > 0 for all n".into(),
                    ));
                }
                Ok(())
            }
            FamilySpec::ThreeTermFamily { u, alpha, beta } => {
                check_len(space, u, "three_term_family u")?;
                if !alpha.plus(beta).strictly_positive() {
                    return Err(Error::InvalidFamily(
                        "three_term_family requires alpha_n + beta_n > 0 for all n".into(),
                    ));
                }
                Ok(())
            }
            FamilySpec::IdentityFamily => Ok(()),
        }
    }

    /// Evaluates the `n`-th member at `x`.
    pub fn eval(&self, n: u64, x: &Vector) -> Result<Vector> {
        family_eval(self, n, x)
    }

    /// Common Lipschitz constant of all members, where known.
    pub fn uniform_lipschitz(&self, space: SpaceSpec) -> Option<f64> {
        match self {
            FamilySpec::ConstantFamily { f } => f.lipschitz_claim(space),
            FamilySpec::DecayingPerturbation { base, direction, rate } => {
                Some(base.lipschitz_claim(space)? + rate.sup() * direction.lipschitz_claim(space)?)
            }
            FamilySpec::ErrorsFamily { .. } => Some(0.0),
            FamilySpec::ErrorsStateFamily { beta, delta, .. } => ratio_sup(beta, delta),
            FamilySpec::ThreeTermFamily { alpha, beta, .. } => ratio_sup(beta, alpha),
            FamilySpec::IdentityFamily => Some(1.0),
        }
    }

    /// Lipschitz constant of the `n`-th member.
    pub fn lipschitz_at(&self, space: SpaceSpec, n: u64) -> Option<f64> {
        match self {
            FamilySpec::DecayingPerturbation { base, direction, rate } => {
                Some(base.lipschitz_claim(space)? + rate.eval(n) * direction.lipschitz_claim(space)?)
            }
            FamilySpec::ErrorsStateFamily { beta, delta, .. } => {
                let (b, d) = (beta.eval(n), delta.eval(n));
                Some(b / (b + d))
            }
            FamilySpec::ThreeTermFamily { alpha, beta, .. } => {
                let (a, b) = (alpha.eval(n), beta.eval(n));
                Some(b / (a + b))
            }
            other => other.uniform_lipschitz(space),
        }
    }

    /// The uniform limit `f = lim f_n`, when it exists in closed form.
    pub fn uniform_limit(&self, _space: SpaceSpec) -> Option<OperatorSpec> {
        match self {
            FamilySpec::ConstantFamily { f } => Some(f.clone()),
            FamilySpec::DecayingPerturbation { base, rate, .. } => {
                rate.tends_to_zero().then(|| base.clone())
            }
            FamilySpec::ErrorsFamily { u, u_seq, alpha, gamma } => {
                let w = weight_ratio_limit(gamma, alpha)?;
                if w == 0.0 {
                    return Some(OperatorSpec::constant(u.clone()));
                }
                match u_seq {
                    BoundedSequence::Constant { v } => Some(OperatorSpec::constant(
                        u.iter().zip(v).map(|(a, b)| a + w * (b - a)).collect(),
                    )),
                    BoundedSequence::SeededBall { .. } => None,
                }
            }
            FamilySpec::ErrorsStateFamily { v_seq, beta, delta } => {
                let w = weight_ratio_limit(delta, beta)?;
                if w == 0.0 {
                    return Some(OperatorSpec::Identity);
                }
                match v_seq {
                    BoundedSequence::Constant { v } => Some(OperatorSpec::homothety(
                        1.0 - w,
                        v.iter().map(|c| w * c).collect(),
                    )),
                    BoundedSequence::SeededBall { .. } => None,
                }
            }
            FamilySpec::ThreeTermFamily { u, alpha, beta } => {
                let l = weight_ratio_limit(beta, alpha)?;
                Some(OperatorSpec::homothety(l, u.iter().map(|c| (1.0 - l) * c).collect()))
            }
            FamilySpec::IdentityFamily => Some(OperatorSpec::Identity),
        }
    }

    /// Certified bound on `sup_{x∈D} ‖f_n(x) − f(x)‖` against [`Self::uniform_limit`],
    /// together with whether that envelope provably tends to zero.
    pub fn convergence_envelope(&self, space: SpaceSpec, domain: &DomainSpec, n: u64) -> Option<(f64, bool)> {
        match self {
            FamilySpec::ConstantFamily { .. } | FamilySpec::IdentityFamily => Some((0.0, true)),
            FamilySpec::DecayingPerturbation { direction, rate, .. } => {
                let h = direction.range_norm_bound(space, domain)?;
                Some((rate.eval(n) * h, rate.tends_to_zero()))
            }
            FamilySpec::ErrorsFamily { u, u_seq, alpha, gamma } => {
                if weight_ratio_limit(gamma, alpha)? != 0.0 {
                    return None;
                }
                let (a, g) = (alpha.eval(n), gamma.eval(n));
                Some((g / (a + g) * u_seq.distance_bound_from(space, u), true))
            }
            FamilySpec::ErrorsStateFamily { v_seq, beta, delta } => {
                if weight_ratio_limit(delta, beta)? != 0.0 {
                    return None;
                }
                let (b, d) = (beta.eval(n), delta.eval(n));
                let reach = domain.norm_bound(space)? + v_seq.norm_bound(space);
                Some((d / (b + d) * reach, true))
            }
            FamilySpec::ThreeTermFamily { u, alpha, beta } => {
                let l = weight_ratio_limit(beta, alpha)?;
                let (a, b) = (alpha.eval(n), beta.eval(n));
                let spread = domain.distance_bound_from(space, u)?;
                Some(((b / (a + b) - l).abs() * spread, true))
            }
        }
    }
}

fn ratio_sup(num: &ScheduleSpec, other: &ScheduleSpec) -> Option<f64> {
    let limit = weight_ratio_limit(num, other)?;
    let mut sup = limit;
    for n in 0..RATIO_SUP_HORIZON {
        let (a, b) = (num.eval(n), other.eval(n));
        if a + b > 0.0 {
            sup = sup.max(a / (a + b));
        }
    }
    Some(sup)
}

fn degenerate(n: u64, what: &str) -> Error {
    Error::DegenerateIndex {
        n,
        what: what.to_string(),
    }
}

/// Evaluates `f_n(x)` (or `g_n(x)`).
///
/// Weighted averages are written as `a + w·(b − a)` with the weight on the
/// error term, so a vanishing error weight reproduces the unperturbed value
/// bitwise.
pub fn family_eval(fam: &FamilySpec, n: u64, x: &Vector) -> Result<Vector> {
    let space = x.space();
    match fam {
        FamilySpec::ConstantFamily { f } => f.apply(x),
        FamilySpec::DecayingPerturbation { base, direction, rate } => {
            let fx = base.apply(x)?;
            let hx = direction.apply(x)?;
            fx.add(&hx.scale(rate.eval(n)))
        }
        FamilySpec::ErrorsFamily { u, u_seq, alpha, gamma } => {
            let (a, g) = (alpha.eval(n), gamma.eval(n));
            let denom = a + g;
            if denom == 0.0 {
                return Err(degenerate(n, "alpha_n + gamma_n"));
            }
            let anchor = Vector::from_raw(space, u.clone());
            anchor.lerp(&u_seq.term(space, n), g / denom)
        }
        FamilySpec::ErrorsStateFamily { v_seq, beta, delta } => {
            let (b, d) = (beta.eval(n), delta.eval(n));
            let denom = b + d;
            if denom == 0.0 {
                return Err(degenerate(n, "beta_n + delta_n"));
            }
            x.lerp(&v_seq.term(space, n), d / denom)
        }
        FamilySpec::ThreeTermFamily { u, alpha, beta } => {
            let (a, b) = (alpha.eval(n), beta.eval(n));
            let denom = a + b;
            if denom == 0.0 {
                return Err(degenerate(n, "alpha_n + beta_n"));
            }
            Vector::from_raw(space, u.clone()).lerp(x, b / denom)
        }
        FamilySpec::IdentityFamily => Ok(x.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2() -> SpaceSpec {
        SpaceSpec::euclidean(2)
    }

    fn v(c: &[f64]) -> Vector {
        e2().vector(c.to_vec()).unwrap()
    }

    fn harmonic() -> ScheduleSpec {
        ScheduleSpec::power(1.0, 1.0, 1).unwrap()
    }

    #[test]
    fn constant_family_is_f() {
        let f = OperatorSpec::homothety(0.5, vec![0.5, 0.5]);
        let fam = FamilySpec::ConstantFamily { f: f.clone() };
        for n in [0, 7, 1000] {
            assert_eq!(fam.eval(n, &v(&[0.2, -3.0])).unwrap(), f.apply(&v(&[0.2, -3.0])).unwrap());
        }
    }

    #[test]
    fn errors_family_without_errors_is_anchor_bitwise() {
        let u = vec![0.1, 0.7];
        let fam = FamilySpec::ErrorsFamily {
            u: u.clone(),
            u_seq: BoundedSequence::SeededBall { center: vec![0.3, 0.3], radius: 0.2, seed: 4 },
            alpha: harmonic(),
            gamma: ScheduleSpec::zero(),
        };
        for n in 0..200 {
            assert_eq!(fam.eval(n, &v(&[9.0, 9.0])).unwrap().coords(), &u[..]);
        }
    }

    #[test]
    fn decaying_perturbation_example() {
        let fam = FamilySpec::DecayingPerturbation {
            base: OperatorSpec::constant(vec![1.0, 1.0]),
            direction: OperatorSpec::constant(vec![1.0, 0.0]),
            rate: harmonic(),
        };
        assert_eq!(fam.eval(0, &v(&[5.0, 5.0])).unwrap().coords(), &[2.0, 1.0]);
        assert_eq!(fam.eval(1, &v(&[5.0, 5.0])).unwrap().coords(), &[1.5, 1.0]);
    }

    #[test]
    fn degenerate_index_is_reported() {
        let fam = FamilySpec::ErrorsFamily {
            u: vec![0.0, 0.0],
            u_seq: BoundedSequence::Constant { v: vec![1.0, 1.0] },
            alpha: ScheduleSpec::zero(),
            gamma: ScheduleSpec::zero(),
        };
        let err = fam.eval(3, &v(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateIndex { n: 3, .. }));
        assert!(fam.validate(e2(), &DomainSpec::WholeSpace).is_err());
    }

    #[test]
    fn seeded_sequence_is_reproducible_and_bounded() {
        let s = BoundedSequence::SeededBall { center: vec![1.0, -1.0], radius: 0.25, seed: 99 };
        let bound = s.norm_bound(e2());
        for n in [0u64, 1, 2, 1000, u64::MAX] {
            let a = s.term(e2(), n);
            assert_eq!(a, s.term(e2(), n));
            assert!(a.norm() <= bound + 1e-15);
            assert!(a.distance(&v(&[1.0, -1.0])).unwrap() <= 0.25 + 1e-15);
        }
        assert_ne!(s.term(e2(), 0), s.term(e2(), 1));
    }

    #[test]
    fn three_term_family_limits() {
        let fam = FamilySpec::ThreeTermFamily {
            u: vec![1.0, 0.0],
            alpha: ScheduleSpec::power(0.5, 1.0, 1).unwrap(),
            beta: ScheduleSpec::power(0.5, 1.0, 2).unwrap(),
        };
        let l = fam.uniform_lipschitz(e2()).unwrap();
        assert!((l - 0.5).abs() < 1e-12 && l <= 0.5);
        let lim = fam.uniform_limit(e2()).unwrap();
        assert_eq!(lim.lipschitz_claim(e2()), Some(0.5));
        let x = v(&[0.3, 0.4]);
        let far = fam.eval(1_000_000, &x).unwrap();
        assert!(far.distance(&lim.apply(&x).unwrap()).unwrap() < 1e-6);
        let none = FamilySpec::ThreeTermFamily {
            u: vec![1.0, 0.0],
            alpha: harmonic(),
            beta: ScheduleSpec::zero(),
        };
        assert_eq!(none.eval(4, &x).unwrap().coords(), &[1.0, 0.0]);
    }

    #[test]
    fn identity_family_is_not_a_contraction() {
        assert_eq!(FamilySpec::IdentityFamily.uniform_lipschitz(e2()), Some(1.0));
    }
}
