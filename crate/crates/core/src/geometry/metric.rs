use nalgebra::DMatrix;
use serde::Serialize;

use super::{CurvatureProfile, TwistProfile};
use crate::error::{Error, Result};

/// The curvilinear metric at one point `(s, t)` of the straight tube.
#[derive(Clone, Debug, Serialize)]
pub struct MetricSample {
    pub s: f64,
    pub t: Vec<f64>,
    /// Jacobian `f = 1 − t_α R_{αβ} κ_β`.
    pub f: f64,
    /// Shear components `f_μ = t_α R′_{αβ} R_{μβ}`.
    pub shear: Vec<f64>,
    #[serde(skip)]
    pub g: DMatrix<f64>,
    #[serde(skip)]
    pub g_inv: DMatrix<f64>,
}

/// `f` and `(f_μ)` from precomputed `κ(s)`, `R(s)` and `R′(s)`.
pub fn jacobian_and_shear(
    kappa: &[f64],
    r: &DMatrix<f64>,
    r_prime: &DMatrix<f64>,
    t: &[f64],
) -> (f64, Vec<f64>) {
    let m = t.len();
    let mut f = 1.0;
    for alpha in 0..m {
        for beta in 0..m {
            f -= t[alpha] * r[(alpha, beta)] * kappa[beta];
        }
    }
    let mut shear = vec![0.0; m];
    for (mu, fm) in shear.iter_mut().enumerate() {
        for alpha in 0..m {
            for beta in 0..m {
                *fm += t[alpha] * r_prime[(alpha, beta)] * r[(mu, beta)];
            }
        }
    }
    (f, shear)
}

pub fn evaluate_metric(
    curvature: &CurvatureProfile,
    twist: &TwistProfile,
    s: f64,
    t: &[f64],
) -> Result<MetricSample> {
    let d = curvature.dim();
    if t.len() != d - 1 {
        return Err(Error::Input(format!(
            "transverse point has {} coordinates, expected {}",
            t.len(),
            d - 1
        )));
    }
    let kappa = curvature.values(s);
    let r = twist.rotation(s);
    let rp = twist.rotation_derivative(s);
    let (f, shear) = jacobian_and_shear(&kappa, &r, &rp, t);
    if !(f > 0.0) {
        return Err(Error::DegenerateMetric { s, f });
    }
    let sq: f64 = shear.iter().map(|v| v * v).sum();

    let mut g = DMatrix::identity(d, d);
    g[(0, 0)] = f * f + sq;
    let mut g_inv = DMatrix::identity(d, d);
    for mu in 0..d - 1 {
        g[(0, mu + 1)] = shear[mu];
        g[(mu + 1, 0)] = shear[mu];
        g_inv[(0, mu + 1)] = -shear[mu];
        g_inv[(mu + 1, 0)] = -shear[mu];
        for nu in 0..d - 1 {
            g_inv[(mu + 1, nu + 1)] += shear[mu] * shear[nu];
        }
    }
    // The displayed inverse is the inverse for f = 1; in general every entry
    // carries the factor 1/f².
    g_inv /= f * f;
    for mu in 0..d - 1 {
        for nu in 0..d - 1 {
            if mu == nu {
                g_inv[(mu + 1, nu + 1)] += 1.0 - 1.0 / (f * f);
            }
        }
    }
    Ok(MetricSample {
        s,
        t: t.to_vec(),
        f,
        shear,
        g,
        g_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;

    #[test]
    fn straight_untwisted_metric_is_identity() {
        let m = evaluate_metric(
            &CurvatureProfile::straight(3),
            &TwistProfile::none(3),
            0.3,
            &[0.2, -0.1],
        )
        .unwrap();
        assert_eq!(m.f, 1.0);
        assert!(m.shear.iter().all(|v| *v == 0.0));
        assert!((m.g.clone() - DMatrix::identity(3, 3)).abs().max() < 1e-15);
    }

    #[test]
    fn jacobian_by_substitution() {
        let k =
            CurvatureProfile::new(vec![Profile::Constant { value: 0.5 }, Profile::Zero]).unwrap();
        let m = evaluate_metric(&k, &TwistProfile::none(3), 0.0, &[1.0, 0.0]).unwrap();
        assert!((m.f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn planar_twist_shear_is_angular_derivative() {
        let twist = TwistProfile::planar(Profile::Constant { value: 1.0 });
        let t = [0.3, -0.7];
        let m = evaluate_metric(&CurvatureProfile::straight(3), &twist, 1.1, &t).unwrap();
        // f_μ ∂_μ = θ′ (t_2 ∂_1 − t_1 ∂_2)
        assert!((m.shear[0] - t[1]).abs() < 1e-14);
        assert!((m.shear[1] + t[0]).abs() < 1e-14);
        assert!((m.shear[0] * t[0] + m.shear[1] * t[1]).abs() < 1e-15);
    }

    #[test]
    fn degenerate_point_is_reported() {
        let k = CurvatureProfile::new(vec![Profile::Constant { value: 2.0 }]).unwrap();
        assert!(matches!(
            evaluate_metric(&k, &TwistProfile::none(2), 0.0, &[0.6]),
            Err(Error::DegenerateMetric { .. })
        ));
    }
}
