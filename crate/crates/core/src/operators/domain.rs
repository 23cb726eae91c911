use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{random_in_ball, SpaceSpec, Vector};

/// Radius used when sampling an unbounded domain.
pub const WHOLE_SPACE_SAMPLING_RADIUS: f64 = 10.0;

/// Closed convex domain `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    WholeSpace,
}

impl DomainSpec {
    pub fn validate(&self, space: SpaceSpec) -> Result<()> {
        match self {
            DomainSpec::Box { lo, hi } => {
                check_len(space, lo, "box lo")?;
                check_len(space, hi, "box hi")?;
                if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite()) || l > h) {
                    return Err(Error::InvalidDomain("box requires finite lo_i <= hi_i".into()));
                }
            }
            DomainSpec::Ball { center, radius } => {
                check_len(space, center, "ball center")?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("ball radius must be > 0, got {radius}")));
                }
            }
            DomainSpec::WholeSpace => {}
        }
        Ok(())
    }

    /// Membership with absolute slack `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let c = x.coords();
        match self {
            DomainSpec::Box { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            DomainSpec::Ball { center, radius } => {
                let d: Vec<f64> = c.iter().zip(center).map(|(a, b)| a - b).collect();
                x.space().norm_of(&d) <= radius + tol
            }
            DomainSpec::WholeSpace => true,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, DomainSpec::WholeSpace)
    }

    /// A center point and `sup_{x∈D} ‖x − center‖`, for bounded domains.
    pub fn center_and_radius(&self, space: SpaceSpec) -> Option<(Vec<f64>, f64)> {
        match self {
            DomainSpec::Box { lo, hi } => {
                let center: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
                let half: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).collect();
                Some((center, space.norm_of(&half)))
            }
            DomainSpec::Ball { center, radius } => Some((center.clone(), *radius)),
            DomainSpec::WholeSpace => None,
        }
    }

    /// `sup_{x∈D} ‖x‖`.
    pub fn norm_bound(&self, space: SpaceSpec) -> Option<f64> {
        match self {
            DomainSpec::Box { lo, hi } => {
                let corner: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l.abs().max(h.abs())).collect();
                Some(space.norm_of(&corner))
            }
            DomainSpec::Ball { center, radius } => Some(space.norm_of(center) + radius),
            DomainSpec::WholeSpace => None,
        }
    }

    pub fn diameter(&self, space: SpaceSpec) -> Option<f64> {
        match self {
            DomainSpec::Box { lo, hi } => {
                let d: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
                Some(space.norm_of(&d))
            }
            DomainSpec::Ball { radius, .. } => Some(2.0 * radius),
            DomainSpec::WholeSpace => None,
        }
    }

    /// `sup_{x∈D} ‖x − u‖`.
    pub fn distance_bound_from(&self, space: SpaceSpec, u: &[f64]) -> Option<f64> {
        match self {
            DomainSpec::Box { lo, hi } => {
                let far: Vec<f64> = u
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(c, (l, h))| (c - l).abs().max((h - c).abs()))
                    .collect();
                Some(space.norm_of(&far))
            }
            DomainSpec::Ball { center, radius } => {
                let d: Vec<f64> = u.iter().zip(center).map(|(a, b)| a - b).collect();
                Some(space.norm_of(&d) + radius)
            }
            DomainSpec::WholeSpace => None,
        }
    }

    /// Whether the closed `ℓ_p` ball `B(center, radius)` lies in `D`.
    pub fn contains_ball(&self, space: SpaceSpec, center: &[f64], radius: f64) -> bool {
        match self {
            // Coordinates of an l_p ball deviate from the center by at most the radius.
            DomainSpec::Box { lo, hi } => center
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (l, h))| c - radius >= *l && c + radius <= *h),
            DomainSpec::Ball { center: dc, radius: dr } => {
                let d: Vec<f64> = center.iter().zip(dc).map(|(a, b)| a - b).collect();
                space.norm_of(&d) + radius <= *dr
            }
            DomainSpec::WholeSpace => true,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, space: SpaceSpec) -> Vector {
        let coords = match self {
            DomainSpec::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| if l == h { *l } else { rng.gen_range(*l..=*h) })
                .collect(),
            DomainSpec::Ball { center, radius } => random_in_ball(rng, space, *radius)
                .into_iter()
                .zip(center)
                .map(|(d, c)| c + d)
                .collect(),
            DomainSpec::WholeSpace => random_in_ball(rng, space, WHOLE_SPACE_SAMPLING_RADIUS),
        };
        Vector::from_raw(space, coords)
    }
}

pub(crate) fn check_len(space: SpaceSpec, v: &[f64], what: &str) -> Result<()> {
    if v.len() != space.dim() {
        return Err(Error::InvalidArgument(format!(
            "{what}: expected {} coordinates, found {}",
            space.dim(),
            v.len()
        )));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("{what} has a non-finite entry")));
    }
    Ok(())
}
