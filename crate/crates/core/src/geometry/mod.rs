//! Tube geometry: curvature and twist profiles, the relatively parallel
//! frame, the curvilinear metric, and the non-overlap hypothesis.

mod frame;
mod metric;
mod profile;

pub use frame::{integrate_frame, FrameField};
pub use metric::{evaluate_metric, jacobian_and_shear, MetricSample};
pub use profile::{product_integral, Profile};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cross_section::CrossSectionShape;
use crate::error::{input, Error, Result};

/// Curvature components `κ_1 … κ_{d−1}` of the reference curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    components: Vec<Profile>,
}

impl CurvatureProfile {
    pub fn new(components: Vec<Profile>) -> Result<Self> {
        if components.is_empty() {
            return input("a curvature profile needs at least one component (d ≥ 2)");
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    /// The straight reference curve in dimension `d`.
    pub fn straight(d: usize) -> Self {
        assert!(d >= 2);
        Self {
            components: vec![Profile::Zero; d - 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len() + 1
    }

    pub fn components(&self) -> &[Profile] {
        &self.components
    }

    pub fn values(&self, s: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.value(s)).collect()
    }

    /// `κ(s) = |(κ_1, …, κ_{d−1})(s)|`.
    pub fn magnitude(&self, s: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.value(s).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖κ‖∞`. Exact when at most one component is non-zero; otherwise the
    /// bound `(Σ_j ‖κ_j‖∞²)^{1/2}`, which only makes the embedding check
    /// stricter.
    pub fn sup_norm(&self) -> f64 {
        self.combine(|c| c.sup_norm())
    }

    /// `‖κ‖_{L∞(ℝ∖[−l, l])}` with the same convention as [`Self::sup_norm`].
    pub fn tail_sup(&self, l: f64) -> f64 {
        self.combine(|c| c.tail_sup(l))
    }

    fn combine(&self, f: impl Fn(&Profile) -> f64) -> f64 {
        let nonzero: Vec<f64> = self
            .components
            .iter()
            .filter(|c| !c.is_zero())
            .map(f)
            .collect();
        match nonzero.len() {
            0 => 0.0,
            1 => nonzero[0],
            _ => nonzero.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Profile::is_zero)
    }

    pub fn decays(&self) -> bool {
        self.components.iter().all(Profile::decays)
    }
}

/// One planar rotation factor of the twist: rotation in the coordinate plane
/// `(first, second)` of `ℝ^{d−1}` by the angle `θ(s) = ∫_0^s rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneRotation {
    pub first: usize,
    pub second: usize,
    pub rate: Profile,
}

/// The rotation family `R(s) ∈ SO(d−1)` built as an ordered product of
/// planar rotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistProfile {
    dim: usize,
    rotations: Vec<PlaneRotation>,
}

impl TwistProfile {
    pub fn none(d: usize) -> Self {
        assert!(d >= 2);
        Self {
            dim: d,
            rotations: Vec::new(),
        }
    }

    /// The three-dimensional twist with angular velocity `θ′ = rate`.
    pub fn planar(rate: Profile) -> Self {
        Self {
            dim: 3,
            rotations: vec![PlaneRotation {
                first: 0,
                second: 1,
                rate,
            }],
        }
    }

    pub fn new(d: usize, rotations: Vec<PlaneRotation>) -> Result<Self> {
        if d < 2 {
            return input("twist dimension must be at least 2");
        }
        for r in &rotations {
            if r.first == r.second || r.first >= d - 1 || r.second >= d - 1 {
                return Err(Error::Input(format!(
                    "rotation plane ({}, {}) is not a coordinate plane of R^{}",
                    r.first,
                    r.second,
                    d - 1
                )));
            }
            r.rate.validate()?;
        }
        Ok(Self { dim: d, rotations })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rotations(&self) -> &[PlaneRotation] {
        &self.rotations
    }

    pub fn is_untwisted(&self) -> bool {
        self.rotations.iter().all(|r| r.rate.is_zero())
    }

    pub fn decays(&self) -> bool {
        self.rotations.iter().all(|r| r.rate.decays())
    }

    fn factor(&self, r: &PlaneRotation, angle: f64, derivative: Option<f64>) -> DMatrix<f64> {
        let m = self.dim - 1;
        let (c, s) = (angle.cos(), angle.sin());
        let mut g = match derivative {
            None => DMatrix::identity(m, m),
            Some(_) => DMatrix::zeros(m, m),
        };
        let w = derivative.unwrap_or(1.0);
        let (i, j) = (r.first, r.second);
        match derivative {
            None => {
                g[(i, i)] = c;
                g[(i, j)] = -s;
                g[(j, i)] = s;
                g[(j, j)] = c;
            }
            Some(_) => {
                g[(i, i)] = -s * w;
                g[(i, j)] = -c * w;
                g[(j, i)] = c * w;
                g[(j, j)] = -s * w;
            }
        }
        g
    }

    /// `R(s)`.
    pub fn rotation(&self, s: f64) -> DMatrix<f64> {
        let m = self.dim - 1;
        let mut out = DMatrix::identity(m, m);
        for r in &self.rotations {
            out *= self.factor(r, r.rate.antiderivative(s), None);
        }
        out
    }

    /// `R′(s)` by the product rule.
    pub fn rotation_derivative(&self, s: f64) -> DMatrix<f64> {
        let m = self.dim - 1;
        let angles: Vec<f64> = self
            .rotations
            .iter()
            .map(|r| r.rate.antiderivative(s))
            .collect();
        let mut total = DMatrix::zeros(m, m);
        for k in 0..self.rotations.len() {
            let mut term = DMatrix::identity(m, m);
            for (i, r) in self.rotations.iter().enumerate() {
                let d = if i == k { Some(r.rate.value(s)) } else { None };
                term *= self.factor(r, angles[i], d);
            }
            total += term;
        }
        total
    }
}

/// Full geometric input of a bent twisted tube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub curvature: CurvatureProfile,
    pub twist: TwistProfile,
    pub cross_section: CrossSectionShape,
    /// `a = sup_{t∈ω} |t|`.
    pub radius_bound: f64,
    /// Truncation half-length `L`.
    pub half_length: f64,
    /// Number of longitudinal cells `M` on `[−L, L]`.
    pub slices: usize,
}

impl TubeSpec {
    pub fn new(
        curvature: CurvatureProfile,
        twist: TwistProfile,
        cross_section: CrossSectionShape,
        half_length: f64,
        slices: usize,
    ) -> Result<Self> {
        let d = curvature.dim();
        if twist.dim() != d {
            return Err(Error::Input(format!(
                "twist dimension {} does not match curvature dimension {d}",
                twist.dim()
            )));
        }
        if cross_section.dim() + 1 != d {
            return Err(Error::Input(format!(
                "cross-section of dimension {} cannot be swept along a curve in R^{d}",
                cross_section.dim()
            )));
        }
        if !(half_length > 0.0) || slices == 0 {
            return input("tube needs a positive half-length and at least one slice");
        }
        cross_section.validate()?;
        let radius_bound = cross_section.radius_bound();
        let check = check_embedding(&curvature, radius_bound);
        if !check.holds {
            return Err(Error::Embedding {
                product: radius_bound * curvature.sup_norm(),
            });
        }
        Ok(Self {
            curvature,
            twist,
            cross_section,
            radius_bound,
            half_length,
            slices,
        })
    }

    pub fn dim(&self) -> usize {
        self.curvature.dim()
    }

    pub fn check_embedding(&self) -> EmbeddingCheck {
        check_embedding(&self.curvature, self.radius_bound)
    }

    pub fn jacobian_bounds(&self, tail: Option<f64>) -> (f64, f64) {
        jacobian_bounds(&self.curvature, self.radius_bound, tail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub holds: bool,
    /// `1 − a‖κ‖∞`.
    pub margin: f64,
}

/// The local non-overlap condition `a‖κ‖∞ < 1`. Global injectivity of the
/// tube map is not examined.
pub fn check_embedding(curvature: &CurvatureProfile, radius_bound: f64) -> EmbeddingCheck {
    embedding_from_norm(curvature.sup_norm(), radius_bound)
}

pub(crate) fn embedding_from_norm(sup_norm: f64, radius_bound: f64) -> EmbeddingCheck {
    let margin = 1.0 - radius_bound * sup_norm;
    EmbeddingCheck {
        holds: margin > 0.0,
        margin,
    }
}

/// Bounds `(1 − a‖κ‖, 1 + a‖κ‖)` on the Jacobian `f`; with `tail = Some(l)`
/// the norm is taken over `|s| ≥ l`.
pub fn jacobian_bounds(
    curvature: &CurvatureProfile,
    radius_bound: f64,
    tail: Option<f64>,
) -> (f64, f64) {
    let k = match tail {
        Some(l) => curvature.tail_sup(l),
        None => curvature.sup_norm(),
    };
    (1.0 - radius_bound * k, 1.0 + radius_bound * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_examples() {
        let c = embedding_from_norm(1.9, 0.5);
        assert!(c.holds);
        assert!((c.margin - 0.05).abs() < 1e-12);
        assert!(!embedding_from_norm(1.0, 1.0).holds);
        let straight = check_embedding(&CurvatureProfile::straight(3), 7.0);
        assert!(straight.holds);
        assert_eq!(straight.margin, 1.0);
    }

    #[test]
    fn jacobian_bound_examples() {
        assert_eq!(
            jacobian_bounds(&CurvatureProfile::straight(2), 0.5, None),
            (1.0, 1.0)
        );
        let k = CurvatureProfile::new(vec![Profile::Constant { value: 1.0 }]).unwrap();
        assert_eq!(jacobian_bounds(&k, 0.5, None), (0.5, 1.5));
        let bump = CurvatureProfile::new(vec![Profile::bump(0.0, 2.0, 0.8)]).unwrap();
        assert_eq!(jacobian_bounds(&bump, 0.5, Some(2.0)), (1.0, 1.0));
    }

    #[test]
    fn spec_rejects_overlapping_tube() {
        let k = CurvatureProfile::new(vec![Profile::Constant { value: 2.5 }]).unwrap();
        let err = TubeSpec::new(
            k,
            TwistProfile::none(2),
            CrossSectionShape::Interval {
                length: 1.0,
                offset: 0.0,
            },
            5.0,
            10,
        );
        assert!(matches!(err, Err(Error::Embedding { .. })));
    }

    #[test]
    fn rotations_are_special_orthogonal() {
        let twist = TwistProfile::new(
            4,
            vec![
                PlaneRotation {
                    first: 0,
                    second: 1,
                    rate: Profile::bump(0.0, 3.0, 1.2),
                },
                PlaneRotation {
                    first: 1,
                    second: 2,
                    rate: Profile::Decaying { amplitude: 0.7 },
                },
            ],
        )
        .unwrap();
        for k in -30..=30 {
            let s = k as f64 * 0.11;
            let r = twist.rotation(s);
            let err = (&r * r.transpose() - DMatrix::identity(3, 3)).abs().max();
            assert!(err < 1e-10);
            assert!((r.determinant() - 1.0).abs() < 1e-10);
            let h = 1e-5;
            let fd = (twist.rotation(s + h) - twist.rotation(s - h)) / (2.0 * h);
            assert!((fd - twist.rotation_derivative(s)).abs().max() < 1e-8);
        }
    }

    #[test]
    fn planar_twist_derivative_matches_angle() {
        let twist = TwistProfile::planar(Profile::Constant { value: 1.0 });
        let s = 0.7_f64;
        let rp = twist.rotation_derivative(s);
        assert!((rp[(0, 0)] + s.sin()).abs() < 1e-12);
        assert!((rp[(0, 1)] + s.cos()).abs() < 1e-12);
        assert!((rp[(1, 0)] - s.cos()).abs() < 1e-12);
    }
}
