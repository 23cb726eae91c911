//! Finite-dimensional real `ℓ_p` spaces.
//!
//! Only `1 < p < ∞` is admitted: these are exactly the uniformly smooth members
//! of the family, so the normalized duality map is single-valued and has the
//! closed form implemented in [`duality_map`]. Dual vectors are stored in the
//! same coordinate basis and paired with the Euclidean dot product; their norm
//! is the conjugate `q`-norm.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag for `ℓ_p^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawSpace")]
pub struct SpaceSpec {
    dim: usize,
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    dim: usize,
    p: f64,
}

impl TryFrom<RawSpace> for SpaceSpec {
    type Error = Error;
    fn try_from(raw: RawSpace) -> Result<Self> {
        SpaceSpec::new(raw.dim, raw.p)
    }
}

impl SpaceSpec {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidSpace(format!(
                "exponent p = {p} rejected: only 1 < p < inf is admitted \
                 (l_1 and l_inf are not uniformly smooth)"
            )));
        }
        Ok(Self { dim, p })
    }

    /// Euclidean `ℓ_2^d`.
    pub fn euclidean(dim: usize) -> Self {
        Self { dim, p: 2.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent `q = p / (p - 1)`.
    pub fn dual_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    pub fn zero(&self) -> Vector {
        Vector {
            coords: vec![0.0; self.dim],
            space: *self,
        }
    }

    /// Builds a vector, checking length and finiteness.
    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        Vector::new(*self, coords)
    }

    /// `‖x‖_p` of raw coordinates.
    pub fn norm_of(&self, coords: &[f64]) -> f64 {
        lp_norm(coords, self.p)
    }

    /// `‖f‖_q` of raw dual coordinates.
    pub fn dual_norm_of(&self, coords: &[f64]) -> f64 {
        lp_norm(coords, self.dual_exponent())
    }
}

/// Scaled evaluation of `(Σ|x_i|^p)^(1/p)`; avoids overflow for large entries.
pub(crate) fn lp_norm(coords: &[f64], p: f64) -> f64 {
    let scale = coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    if p == 2.0 {
        let s: f64 = coords.iter().map(|c| (c / scale) * (c / scale)).sum();
        return scale * s.sqrt();
    }
    let s: f64 = coords.iter().map(|c| (c.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// A point of `ℓ_p^d` (or a functional in its dual, in the same basis).
/// Serializes as its coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    coords: Vec<f64>,
    space: SpaceSpec,
}

impl Vector {
    pub fn new(space: SpaceSpec, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                found: coords.len(),
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {i} is {}", coords[i])));
        }
        Ok(Self { coords, space })
    }

    /// Skips the finiteness check; used for intermediate arithmetic whose
    /// finiteness is checked by the caller (e.g. the divergence guard).
    pub(crate) fn from_raw(space: SpaceSpec, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), space.dim);
        Self { coords, space }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    pub(crate) fn ensure_same_space(&self, other: &Vector) -> Result<()> {
        if self.space != other.space {
            if self.space.dim != other.space.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.space.dim,
                    found: other.space.dim,
                });
            }
            return Err(Error::SpaceMismatch {
                left: self.space.p,
                right: other.space.p,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Vector, op: impl Fn(f64, f64) -> f64) -> Result<Vector> {
        self.ensure_same_space(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| op(*a, *b))
            .collect();
        Ok(Vector::from_raw(self.space, coords))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::from_raw(self.space, self.coords.iter().map(|c| s * c).collect())
    }

    /// `self + s·(other − self)`, the single convex-combination form used by
    /// every scheme so that reductions agree bitwise.
    pub fn lerp(&self, other: &Vector, s: f64) -> Result<Vector> {
        self.zip_with(other, |a, b| a + s * (b - a))
    }

    pub fn distance(&self, other: &Vector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

impl Serialize for Vector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.serialize(serializer)
    }
}

/// `‖x‖_p`.
pub fn norm(x: &Vector) -> f64 {
    x.space.norm_of(&x.coords)
}

/// Dual pairing `⟨x, f⟩ = Σ x_i f_i`.
pub fn pairing(x: &Vector, f: &Vector) -> Result<f64> {
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: f.dim(),
        });
    }
    Ok(x.coords.iter().zip(&f.coords).map(|(a, b)| a * b).sum())
}

/// Norm of a dual vector, `‖f‖_q`.
pub fn dual_norm(f: &Vector) -> f64 {
    f.space.dual_norm_of(&f.coords)
}

/// Normalized duality map `J(x)`, the unique functional with
/// `⟨x, J(x)⟩ = ‖x‖²` and `‖J(x)‖_q = ‖x‖`. `J(0) = 0`.
pub fn duality_map(x: &Vector) -> Vector {
    gauge_duality(x, 2.0)
}

/// Duality map with gauge `t^(π−1)`: `⟨x, J_π(x)⟩ = ‖x‖^π`,
/// `‖J_π(x)‖_q = ‖x‖^(π−1)`. Coincides bitwise with [`duality_map`] at `π = 2`.
pub fn generalized_duality_map(x: &Vector, gauge: f64) -> Result<Vector> {
    if !(gauge.is_finite() && gauge > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "duality gauge exponent must exceed 1, got {gauge}"
        )));
    }
    Ok(gauge_duality(x, gauge))
}

fn gauge_duality(x: &Vector, gauge: f64) -> Vector {
    let p = x.space.p;
    let n = norm(x);
    if n == 0.0 {
        return x.space.zero();
    }
    let lead = n.powf(gauge - p);
    let coords = x
        .coords
        .iter()
        .map(|&c| {
            let mag = lead * c.abs().powf(p - 1.0);
            if c < 0.0 {
                -mag
            } else if c > 0.0 {
                mag
            } else {
                0.0
            }
        })
        .collect();
    Vector::from_raw(x.space, coords)
}

/// Uniform draw from `[-1, 1]^d`, rescaled to the given `ℓ_p` norm.
pub(crate) fn random_direction<R: Rng>(rng: &mut R, space: SpaceSpec) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..space.dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = space.norm_of(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Random point of the centered `ℓ_p` ball of the given radius.
pub(crate) fn random_in_ball<R: Rng>(rng: &mut R, space: SpaceSpec, radius: f64) -> Vec<f64> {
    let dir = random_direction(rng, space);
    let r = radius * rng.gen::<f64>();
    dir.into_iter().map(|c| r * c).collect()
}

/// Empirical modulus of continuity of `J` on the ball of radius `radius`:
/// `max ‖J(x) − J(y)‖_q` over sampled pairs with `‖x‖, ‖y‖ ≤ radius` and
/// `‖x − y‖ ≤ delta`.
///
/// The candidate pairs do not depend on `delta` (offsets are drawn log-uniformly
/// between `1e-12·radius` and `2·radius`), so for a fixed seed the result is
/// non-decreasing in `delta`.
pub fn continuity_probe(space: SpaceSpec, radius: f64, delta: f64, samples: usize, seed: u64) -> f64 {
    if delta <= 0.0 || samples == 0 || radius <= 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((1e-12 * radius).ln(), (2.0 * radius).ln());
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = random_in_ball(&mut rng, space, radius);
        let dir = random_direction(&mut rng, space);
        let len = rng.gen_range(lo..=hi).exp();
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + len * d).collect();
        if space.norm_of(&y) > radius {
            continue;
        }
        let (xv, yv) = (Vector::from_raw(space, x), Vector::from_raw(space, y));
        let gap = space.norm_of(&sub_raw(&xv.coords, &yv.coords));
        if gap > delta {
            continue;
        }
        let jdiff = sub_raw(&duality_map(&xv).coords, &duality_map(&yv).coords);
        worst = worst.max(space.dual_norm_of(&jdiff));
    }
    worst
}

fn sub_raw(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(space: SpaceSpec, c: &[f64]) -> Vector {
        space.vector(c.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_smooth_exponents() {
        assert!(SpaceSpec::new(2, 1.0).is_err());
        assert!(SpaceSpec::new(2, f64::INFINITY).is_err());
        assert!(SpaceSpec::new(0, 2.0).is_err());
        let msg = SpaceSpec::new(2, 1.0).unwrap_err().to_string();
        assert!(msg.contains("uniformly smooth"), "{msg}");
    }

    #[test]
    fn dual_exponent_is_conjugate() {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let s = SpaceSpec::new(3, p).unwrap();
            let q = s.dual_exponent();
            assert!((1.0 / p + 1.0 / q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_examples() {
        let e = SpaceSpec::euclidean(2);
        assert_eq!(norm(&v(e, &[3.0, 4.0])), 5.0);
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        assert_eq!(norm(&l3.zero()), 0.0);
        assert!((norm(&v(l3, &[1.0, 1.0])) - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((norm(&v(l3, &[1.0, 1.0])) - 1.2599210).abs() < 1e-7);
    }

    #[test]
    fn pairing_examples() {
        let e = SpaceSpec::euclidean(2);
        assert_eq!(pairing(&v(e, &[1.0, 2.0]), &v(e, &[3.0, 4.0])).unwrap(), 11.0);
        assert_eq!(pairing(&e.zero(), &v(e, &[3.0, 4.0])).unwrap(), 0.0);
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        let x = v(l3, &[1.0, 1.0]);
        let got = pairing(&x, &duality_map(&x)).unwrap();
        assert!((got - 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
        let other = SpaceSpec::euclidean(3).zero();
        assert!(matches!(pairing(&x, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duality_map_examples() {
        let e = SpaceSpec::euclidean(2);
        assert_eq!(duality_map(&v(e, &[3.0, 4.0])).coords(), &[3.0, 4.0]);
        assert_eq!(duality_map(&e.zero()).coords(), &[0.0, 0.0]);

        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        let x = v(l3, &[1.0, 1.0]);
        let j = duality_map(&x);
        let expect = 2f64.powf(-1.0 / 3.0);
        for c in j.coords() {
            assert!((c - expect).abs() < 1e-15);
            assert!((c - 0.7937005).abs() < 1e-7);
        }
        assert!((dual_norm(&j) - norm(&x)).abs() < 1e-12);
    }

    #[test]
    fn generalized_duality_examples() {
        let e = SpaceSpec::euclidean(2);
        let x = v(e, &[3.0, 4.0]);
        let j3 = generalized_duality_map(&x, 3.0).unwrap();
        assert_eq!(j3.coords(), &[15.0, 20.0]);
        assert_eq!(pairing(&x, &j3).unwrap(), 125.0);
        assert_eq!(generalized_duality_map(&e.zero(), 4.5).unwrap(), e.zero());
        assert!(generalized_duality_map(&x, 1.0).is_err());
        let l4 = SpaceSpec::new(3, 4.0).unwrap();
        let y = v(l4, &[0.3, -1.7, 2.2]);
        assert_eq!(generalized_duality_map(&y, 2.0).unwrap(), duality_map(&y));
    }

    #[test]
    fn duality_is_odd_exactly() {
        let l = SpaceSpec::new(3, 1.5).unwrap();
        let x = v(l, &[0.25, -3.0, 7.5]);
        let neg = x.scale(-1.0);
        assert_eq!(duality_map(&neg), duality_map(&x).scale(-1.0));
    }

    #[test]
    fn continuity_probe_examples() {
        let e = SpaceSpec::euclidean(3);
        for delta in [1e-3, 0.1, 1.0] {
            assert!(continuity_probe(e, 5.0, delta, 2000, 11) <= delta + 1e-12);
        }
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        assert_eq!(continuity_probe(l3, 1.0, 0.0, 100, 3), 0.0);
        let small = continuity_probe(l3, 1.0, 0.01, 4000, 3);
        let large = continuity_probe(l3, 1.0, 0.1, 4000, 3);
        assert!(small <= large);
        assert!(small > 0.0);
    }

    #[test]
    fn vector_rejects_bad_input() {
        let e = SpaceSpec::euclidean(2);
        assert!(e.vector(vec![1.0]).is_err());
        assert!(e.vector(vec![1.0, f64::NAN]).is_err());
        let l3 = SpaceSpec::new(2, 3.0).unwrap();
        assert!(matches!(
            e.zero().add(&l3.zero()),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn lerp_endpoints() {
        let e = SpaceSpec::euclidean(2);
        let a = v(e, &[0.1, 0.7]);
        let b = v(e, &[0.3, -2.0]);
        assert_eq!(a.lerp(&b, 0.0).unwrap(), a);
        assert_eq!(a.lerp(&a, 0.37).unwrap(), a);
    }
}
