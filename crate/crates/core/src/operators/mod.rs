//! Catalog of maps on `ℓ_p^d`: nonexpansive `T`, contractions `f`, the indexed
//! families `{f_n}`, `{g_n}` of the extended process, and sampled falsifiers
//! for their defining properties.
//!
//! Each operator carries a *claimed* Lipschitz bound. A claim is made only where
//! it holds analytically in the given space (a rotation is an isometry only in
//! `ℓ_2`, a coordinate clamp is 1-Lipschitz in every `ℓ_p`, an affine map is
//! trusted to its caller-supplied certificate).

mod checks;
mod domain;
mod family;
mod fixed;

pub use checks::{
    affine_norm_estimate, check_contraction, check_nonexpansive, check_perturbation_bound,
    check_uniform_convergence, lipschitz_ratio, CertificateCheck, LipschitzReport,
    PerturbationReport, UniformConvergenceReport,
};
pub use domain::{DomainSpec, WHOLE_SPACE_SAMPLING_RADIUS};
pub use family::{BoundedSequence, FamilySpec};
pub use fixed::{fixed_set, FixedSetDescriptor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{SpaceSpec, Vector};

use domain::check_len;

fn default_plane() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `x ↦ c + R_θ (x − c)` in coordinate plane `plane`, identity elsewhere.
    Rotation2d {
        theta: f64,
        center: Vec<f64>,
        #[serde(default = "default_plane")]
        plane: [usize; 2],
    },
    BoxClamp {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Euclidean projection onto the segment `[a, b]`.
    SegmentProjection {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `x ↦ M x + offset`, with `norm_certificate ≥ ‖M‖_{p→p}` supplied by the caller.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        norm_certificate: f64,
    },
    /// `weight · first(x) + (1 − weight) · second(x)`.
    ConvexCombination {
        weight: f64,
        first: Box<OperatorSpec>,
        second: Box<OperatorSpec>,
    },
    /// `outer(inner(x))`.
    Composition {
        outer: Box<OperatorSpec>,
        inner: Box<OperatorSpec>,
    },
    Constant {
        u: Vec<f64>,
    },
    Identity,
}

impl OperatorSpec {
    pub fn rotation(theta: f64, center: Vec<f64>) -> Self {
        OperatorSpec::Rotation2d {
            theta,
            center,
            plane: default_plane(),
        }
    }

    pub fn box_clamp(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        OperatorSpec::BoxClamp { lo, hi }
    }

    pub fn segment_projection(a: Vec<f64>, b: Vec<f64>) -> Self {
        OperatorSpec::SegmentProjection { a, b }
    }

    pub fn constant(u: Vec<f64>) -> Self {
        OperatorSpec::Constant { u }
    }

    /// `x ↦ s·x + offset`; its `ℓ_p` operator norm is `|s|` for every `p`.
    pub fn homothety(scale: f64, offset: Vec<f64>) -> Self {
        let d = offset.len();
        let matrix = (0..d)
            .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect();
        OperatorSpec::Affine {
            matrix,
            offset,
            norm_certificate: scale.abs(),
        }
    }

    pub fn compose(outer: OperatorSpec, inner: OperatorSpec) -> Self {
        OperatorSpec::Composition {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    pub fn convex(weight: f64, first: OperatorSpec, second: OperatorSpec) -> Self {
        OperatorSpec::ConvexCombination {
            weight,
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OperatorSpec::Rotation2d { .. } => "rotation2d",
            OperatorSpec::BoxClamp { .. } => "box_clamp",
            OperatorSpec::SegmentProjection { .. } => "segment_projection",
            OperatorSpec::Affine { .. } => "affine",
            OperatorSpec::ConvexCombination { .. } => "convex_combination",
            OperatorSpec::Composition { .. } => "composition",
            OperatorSpec::Constant { .. } => "constant",
            OperatorSpec::Identity => "identity",
        }
    }

    /// Structural validation against a space.
    pub fn validate(&self, space: SpaceSpec) -> Result<()> {
        match self {
            OperatorSpec::Rotation2d { theta, center, plane } => {
                check_len(space, center, "rotation center")?;
                if !theta.is_finite() {
                    return Err(Error::InvalidOperator("rotation angle must be finite".into()));
                }
                let [i, j] = *plane;
                if i == j || i >= space.dim() || j >= space.dim() {
                    return Err(Error::InvalidOperator(format!(
                        "rotation plane {plane:?} is not a pair of distinct axes below {}",
                        space.dim()
                    )));
                }
            }
            OperatorSpec::BoxClamp { lo, hi } => {
                check_len(space, lo, "clamp lo")?;
                check_len(space, hi, "clamp hi")?;
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidOperator("clamp requires lo_i <= hi_i".into()));
                }
            }
            OperatorSpec::SegmentProjection { a, b } => {
                check_len(space, a, "segment a")?;
                check_len(space, b, "segment b")?;
            }
            OperatorSpec::Affine {
                matrix,
                offset,
                norm_certificate,
            } => {
                check_len(space, offset, "affine offset")?;
                if matrix.len() != space.dim() {
                    return Err(Error::InvalidOperator(format!(
                        "affine matrix has {} rows, expected {}",
                        matrix.len(),
                        space.dim()
                    )));
                }
                for row in matrix {
                    check_len(space, row, "affine matrix row")?;
                }
                if !(norm_certificate.is_finite() && *norm_certificate >= 0.0) {
                    return Err(Error::InvalidOperator(
                        "affine norm_certificate must be a finite nonnegative number".into(),
                    ));
                }
            }
            OperatorSpec::ConvexCombination { weight, first, second } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::InvalidOperator(format!(
                        "convex combination weight {weight} outside [0,1]"
                    )));
                }
                first.validate(space)?;
                second.validate(space)?;
            }
            OperatorSpec::Composition { outer, inner } => {
                outer.validate(space)?;
                inner.validate(space)?;
            }
            OperatorSpec::Constant { u } => check_len(space, u, "constant value")?,
            OperatorSpec::Identity => {}
        }
        Ok(())
    }

    /// Lipschitz bound that holds analytically in `space`, if one is known.
    pub fn lipschitz_claim(&self, space: SpaceSpec) -> Option<f64> {
        match self {
            OperatorSpec::Rotation2d { .. } => space.is_hilbert().then_some(1.0),
            OperatorSpec::BoxClamp { .. } => Some(1.0),
            OperatorSpec::SegmentProjection { a, b } => {
                if a == b {
                    Some(0.0)
                } else {
                    space.is_hilbert().then_some(1.0)
                }
            }
            OperatorSpec::Affine { norm_certificate, .. } => Some(*norm_certificate),
            OperatorSpec::ConvexCombination { weight, first, second } => {
                let (l1, l2) = (first.lipschitz_claim(space)?, second.lipschitz_claim(space)?);
                Some(weight * l1 + (1.0 - weight) * l2)
            }
            OperatorSpec::Composition { outer, inner } => {
                Some(outer.lipschitz_claim(space)? * inner.lipschitz_claim(space)?)
            }
            OperatorSpec::Constant { .. } => Some(0.0),
            OperatorSpec::Identity => Some(1.0),
        }
    }

    pub fn claims_nonexpansive(&self, space: SpaceSpec) -> bool {
        self.lipschitz_claim(space).is_some_and(|l| l <= 1.0)
    }

    pub fn claims_contraction(&self, space: SpaceSpec) -> bool {
        self.lipschitz_claim(space).is_some_and(|l| l < 1.0)
    }

    /// `sup_{x∈D} ‖op(x)‖` where a bound is available.
    pub fn range_norm_bound(&self, space: SpaceSpec, domain: &DomainSpec) -> Option<f64> {
        match self {
            OperatorSpec::Constant { u } => Some(space.norm_of(u)),
            OperatorSpec::BoxClamp { lo, hi } => {
                let corner: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l.abs().max(h.abs())).collect();
                Some(space.norm_of(&corner))
            }
            OperatorSpec::SegmentProjection { a, b } => Some(space.norm_of(a).max(space.norm_of(b))),
            OperatorSpec::Composition { outer, .. } => match **outer {
                OperatorSpec::Constant { .. }
                | OperatorSpec::BoxClamp { .. }
                | OperatorSpec::SegmentProjection { .. } => outer.range_norm_bound(space, domain),
                _ => self.lipschitz_range_bound(space, domain),
            },
            OperatorSpec::ConvexCombination { weight, first, second } => {
                match (first.range_norm_bound(space, domain), second.range_norm_bound(space, domain)) {
                    (Some(a), Some(b)) => Some(weight * a + (1.0 - weight) * b),
                    _ => None,
                }
            }
            _ => self.lipschitz_range_bound(space, domain),
        }
    }

    fn lipschitz_range_bound(&self, space: SpaceSpec, domain: &DomainSpec) -> Option<f64> {
        let (center, radius) = domain.center_and_radius(space)?;
        let lip = self.lipschitz_claim(space)?;
        let at_center = self.apply(&Vector::new(space, center).ok()?).ok()?;
        Some(at_center.norm() + lip * radius)
    }

    /// Evaluates the map.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        apply_op(self, x)
    }

    /// Names of affine pieces whose certificate looks inconsistent with the matrix.
    pub fn certificate_issues(&self, space: SpaceSpec, seed: u64) -> Vec<CertificateCheck> {
        let mut out = Vec::new();
        self.collect_certificates(space, seed, &mut out);
        out
    }

    fn collect_certificates(&self, space: SpaceSpec, seed: u64, out: &mut Vec<CertificateCheck>) {
        match self {
            OperatorSpec::Affine {
                matrix,
                norm_certificate,
                ..
            } => out.push(checks::check_affine_certificate(matrix, *norm_certificate, space, seed)),
            OperatorSpec::ConvexCombination { first, second, .. } => {
                first.collect_certificates(space, seed, out);
                second.collect_certificates(space, seed, out);
            }
            OperatorSpec::Composition { outer, inner } => {
                outer.collect_certificates(space, seed, out);
                inner.collect_certificates(space, seed, out);
            }
            _ => {}
        }
    }
}

fn expect_len(x: &Vector, v: &[f64]) -> Result<()> {
    if v.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Evaluates `op` at `x`.
pub fn apply_op(op: &OperatorSpec, x: &Vector) -> Result<Vector> {
    let space = x.space();
    let c = x.coords();
    let coords = match op {
        OperatorSpec::Rotation2d { theta, center, plane } => {
            expect_len(x, center)?;
            let [i, j] = *plane;
            if i >= c.len() || j >= c.len() {
                return Err(Error::InvalidOperator(format!("rotation plane {plane:?} out of range")));
            }
            let (s, co) = theta.sin_cos();
            let (di, dj) = (c[i] - center[i], c[j] - center[j]);
            let mut out = c.to_vec();
            out[i] = center[i] + (co * di - s * dj);
            out[j] = center[j] + (s * di + co * dj);
            out
        }
        OperatorSpec::BoxClamp { lo, hi } => {
            expect_len(x, lo)?;
            expect_len(x, hi)?;
            c.iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.max(*l).min(*h))
                .collect()
        }
        OperatorSpec::SegmentProjection { a, b } => {
            expect_len(x, a)?;
            expect_len(x, b)?;
            let dir: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
            let len2: f64 = dir.iter().map(|d| d * d).sum();
            if len2 == 0.0 {
                a.clone()
            } else {
                let dot: f64 = c.iter().zip(a).zip(&dir).map(|((v, q), d)| (v - q) * d).sum();
                let s = (dot / len2).clamp(0.0, 1.0);
                a.iter().zip(&dir).map(|(q, d)| q + s * d).collect()
            }
        }
        OperatorSpec::Affine { matrix, offset, .. } => {
            expect_len(x, offset)?;
            if matrix.len() != c.len() {
                return Err(Error::DimensionMismatch {
                    expected: matrix.len(),
                    found: c.len(),
                });
            }
            matrix
                .iter()
                .zip(offset)
                .map(|(row, o)| row.iter().zip(c).map(|(m, v)| m * v).sum::<f64>() + o)
                .collect()
        }
        OperatorSpec::ConvexCombination { weight, first, second } => {
            let (a, b) = (apply_op(first, x)?, apply_op(second, x)?);
            return b.lerp(&a, *weight);
        }
        OperatorSpec::Composition { outer, inner } => {
            return apply_op(outer, &apply_op(inner, x)?);
        }
        OperatorSpec::Constant { u } => {
            expect_len(x, u)?;
            u.clone()
        }
        OperatorSpec::Identity => return Ok(x.clone()),
    };
    Ok(Vector::from_raw(space, coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn v(space: SpaceSpec, c: &[f64]) -> Vector {
        space.vector(c.to_vec()).unwrap()
    }

    #[test]
    fn apply_examples() {
        let e = SpaceSpec::euclidean(2);
        let clamp = OperatorSpec::box_clamp(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(clamp.apply(&v(e, &[2.0, -1.0])).unwrap().coords(), &[1.0, 0.0]);

        let rot = OperatorSpec::rotation(FRAC_PI_2, vec![0.0, 0.0]);
        let r = rot.apply(&v(e, &[1.0, 0.0])).unwrap();
        assert!(r.coords()[0].abs() < 1e-15 && (r.coords()[1] - 1.0).abs() < 1e-15);

        let seg = OperatorSpec::segment_projection(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(seg.apply(&v(e, &[0.3, 0.7])).unwrap().coords(), &[0.3, 0.0]);
        assert_eq!(seg.apply(&v(e, &[-2.0, 0.7])).unwrap().coords(), &[0.0, 0.0]);
    }

    #[test]
    fn rotation_in_higher_dimension_keeps_other_axes() {
        let s = SpaceSpec::euclidean(3);
        let rot = OperatorSpec::Rotation2d {
            theta: FRAC_PI_4,
            center: vec![0.0, 1.0, 0.0],
            plane: [1, 2],
        };
        rot.validate(s).unwrap();
        let out = rot.apply(&v(s, &[5.0, 1.0, 0.0])).unwrap();
        assert_eq!(out.coords(), &[5.0, 1.0, 0.0]);
    }

    #[test]
    fn claims_depend_on_space() {
        let e = SpaceSpec::euclidean(2);
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        let rot = OperatorSpec::rotation(0.3, vec![0.0, 0.0]);
        assert!(rot.claims_nonexpansive(e));
        assert!(!rot.claims_nonexpansive(l3));
        let clamp = OperatorSpec::box_clamp(vec![0.0; 2], vec![1.0; 2]);
        assert!(clamp.claims_nonexpansive(l3));
        let f = OperatorSpec::homothety(0.5, vec![0.5, 0.5]);
        assert!(f.claims_contraction(l3));
        assert_eq!(OperatorSpec::compose(f.clone(), clamp.clone()).lipschitz_claim(l3), Some(0.5));
        assert_eq!(OperatorSpec::convex(0.25, f, clamp).lipschitz_claim(l3), Some(0.875));
    }

    #[test]
    fn validation_catches_bad_shapes() {
        let e = SpaceSpec::euclidean(2);
        assert!(OperatorSpec::box_clamp(vec![0.0], vec![1.0]).validate(e).is_err());
        assert!(OperatorSpec::convex(1.5, OperatorSpec::Identity, OperatorSpec::Identity)
            .validate(e)
            .is_err());
        let bad_plane = OperatorSpec::Rotation2d {
            theta: 1.0,
            center: vec![0.0, 0.0],
            plane: [0, 0],
        };
        assert!(bad_plane.validate(e).is_err());
    }

    #[test]
    fn json_shape_is_tagged_and_strict() {
        let op: OperatorSpec = serde_json::from_str(
            r#"{"kind":"composition",
                "outer":{"kind":"segment_projection","a":[0,0],"b":[1,0]},
                "inner":{"kind":"box_clamp","lo":[0,0],"hi":[1,1]}}"#,
        )
        .unwrap();
        assert_eq!(op.kind_name(), "composition");
        assert!(serde_json::from_str::<OperatorSpec>(r#"{"kind":"rotation2d","theta":1,"center":[0,0],"bogus":2}"#).is_err());
    }

    #[test]
    fn range_bounds() {
        let e = SpaceSpec::euclidean(2);
        let dom = DomainSpec::WholeSpace;
        assert_eq!(OperatorSpec::constant(vec![3.0, 4.0]).range_norm_bound(e, &dom), Some(5.0));
        assert_eq!(OperatorSpec::Identity.range_norm_bound(e, &dom), None);
        let ball = DomainSpec::Ball { center: vec![0.0, 0.0], radius: 2.0 };
        assert_eq!(OperatorSpec::Identity.range_norm_bound(e, &ball), Some(2.0));
    }
}
