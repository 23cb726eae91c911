use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::space::{SpaceSpec, Vector};

/// Analytic description of `F(T)`. Every point it generates is a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FixedSetDescriptor {
    Point { p: Vec<f64> },
    Segment { a: Vec<f64>, b: Vec<f64> },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `origin + span(basis)`.
    Subspace { origin: Vec<f64>, basis: Vec<Vec<f64>> },
    Unknown,
}

impl FixedSetDescriptor {
    pub fn is_known(&self) -> bool {
        !matches!(self, FixedSetDescriptor::Unknown)
    }

    /// Membership with absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            FixedSetDescriptor::Point { p } => p.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol),
            FixedSetDescriptor::Segment { a, b } => {
                let dir: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
                let len2: f64 = dir.iter().map(|d| d * d).sum();
                let s = if len2 == 0.0 {
                    0.0
                } else {
                    let dot: f64 = x.iter().zip(a).zip(&dir).map(|((v, q), d)| (v - q) * d).sum();
                    (dot / len2).clamp(0.0, 1.0)
                };
                a.iter()
                    .zip(&dir)
                    .zip(x)
                    .all(|((q, d), v)| (q + s * d - v).abs() <= tol)
            }
            FixedSetDescriptor::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            FixedSetDescriptor::Subspace { origin, basis } => {
                // Only axis-aligned bases are produced by the catalog.
                let free: Vec<bool> = (0..origin.len())
                    .map(|k| basis.iter().any(|b| b[k] != 0.0))
                    .collect();
                x.iter()
                    .zip(origin)
                    .zip(free)
                    .all(|((v, o), f)| f || (v - o).abs() <= tol)
            }
            FixedSetDescriptor::Unknown => false,
        }
    }

    /// Vertices spanning the set (all descriptors are convex).
    fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            FixedSetDescriptor::Point { p } => Some(vec![p.clone()]),
            FixedSetDescriptor::Segment { a, b } => Some(vec![a.clone(), b.clone()]),
            FixedSetDescriptor::Box { lo, hi } if lo.len() <= 12 => {
                let d = lo.len();
                Some(
                    (0..(1usize << d))
                        .map(|mask| {
                            (0..d)
                                .map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                                .collect()
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// `self ⊆ other`, decided exactly for the bounded kinds.
    pub fn is_subset_of(&self, other: &FixedSetDescriptor) -> bool {
        match (self, other) {
            (_, FixedSetDescriptor::Unknown) | (FixedSetDescriptor::Unknown, _) => false,
            (a, b) if a == b => true,
            (FixedSetDescriptor::Box { lo, hi }, FixedSetDescriptor::Box { lo: l2, hi: h2 }) => lo
                .iter()
                .zip(hi)
                .zip(l2.iter().zip(h2))
                .all(|((a, b), (c, d))| a >= c && b <= d),
            (a, b) => match a.vertices() {
                Some(vs) => vs.iter().all(|v| b.contains(v, 0.0)),
                None => false,
            },
        }
    }

    /// Sample points of the set: `n` evenly spaced points on a segment, a
    /// tensor grid for boxes, a grid over `[-1,1]` along each basis direction for
    /// subspaces.
    pub fn grid(&self, space: SpaceSpec, n: usize) -> Vec<Vector> {
        let n = n.max(2);
        let raw: Vec<Vec<f64>> = match self {
            FixedSetDescriptor::Point { p } => vec![p.clone()],
            FixedSetDescriptor::Segment { a, b } => (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
                })
                .collect(),
            FixedSetDescriptor::Box { lo, hi } => {
                let d = lo.len();
                let per_axis = ((n as f64).powf(1.0 / d as f64).floor() as usize).max(2);
                let total = per_axis.pow(d as u32);
                (0..total)
                    .map(|mut idx| {
                        (0..d)
                            .map(|k| {
                                let i = idx % per_axis;
                                idx /= per_axis;
                                let s = i as f64 / (per_axis - 1) as f64;
                                lo[k] + s * (hi[k] - lo[k])
                            })
                            .collect()
                    })
                    .collect()
            }
            FixedSetDescriptor::Subspace { origin, basis } => {
                let mut pts = vec![origin.clone()];
                for b in basis {
                    for i in 0..n {
                        let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                        pts.push(origin.iter().zip(b).map(|(o, v)| o + s * v).collect());
                    }
                }
                pts
            }
            FixedSetDescriptor::Unknown => Vec::new(),
        };
        raw.into_iter().filter_map(|c| Vector::new(space, c).ok()).collect()
    }
}

/// Analytic `F(op)` where the catalog knows it, `Unknown` otherwise.
pub fn fixed_set(op: &OperatorSpec, space: SpaceSpec) -> FixedSetDescriptor {
    let d = space.dim();
    let whole = || FixedSetDescriptor::Subspace {
        origin: vec![0.0; d],
        basis: (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    };
    match op {
        OperatorSpec::Rotation2d { theta, center, plane } => {
            let turns = theta / std::f64::consts::TAU;
            if turns == turns.round() {
                return whole();
            }
            if d == 2 {
                return FixedSetDescriptor::Point { p: center.clone() };
            }
            let basis = (0..d)
                .filter(|k| !plane.contains(k))
                .map(|k| (0..d).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
                .collect();
            let mut origin = vec![0.0; d];
            origin[plane[0]] = center[plane[0]];
            origin[plane[1]] = center[plane[1]];
            FixedSetDescriptor::Subspace { origin, basis }
        }
        OperatorSpec::BoxClamp { lo, hi } => FixedSetDescriptor::Box {
            lo: lo.clone(),
            hi: hi.clone(),
        },
        OperatorSpec::SegmentProjection { a, b } => {
            if a == b {
                FixedSetDescriptor::Point { p: a.clone() }
            } else {
                FixedSetDescriptor::Segment {
                    a: a.clone(),
                    b: b.clone(),
                }
            }
        }
        OperatorSpec::Constant { u } => FixedSetDescriptor::Point { p: u.clone() },
        OperatorSpec::Identity => whole(),
        OperatorSpec::Composition { outer, inner } => {
            // For a retraction `outer` (fixed set == range) whose fixed set is
            // fixed by `inner`, F(outer ∘ inner) = F(outer).
            let is_retraction = matches!(
                **outer,
                OperatorSpec::BoxClamp { .. }
                    | OperatorSpec::SegmentProjection { .. }
                    | OperatorSpec::Constant { .. }
            );
            if matches!(**inner, OperatorSpec::Identity) {
                return fixed_set(outer, space);
            }
            if matches!(**outer, OperatorSpec::Identity) {
                return fixed_set(inner, space);
            }
            let fo = fixed_set(outer, space);
            if is_retraction && fo.is_subset_of(&fixed_set(inner, space)) {
                fo
            } else {
                FixedSetDescriptor::Unknown
            }
        }
        OperatorSpec::ConvexCombination { weight, first, second } => {
            if *weight == 1.0 {
                fixed_set(first, space)
            } else if *weight == 0.0 {
                fixed_set(second, space)
            } else {
                FixedSetDescriptor::Unknown
            }
        }
        OperatorSpec::Affine { .. } => FixedSetDescriptor::Unknown,
    }
}
