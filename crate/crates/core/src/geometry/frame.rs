use nalgebra::{DMatrix, DVector};

use super::{CurvatureProfile, TwistProfile};
use crate::error::{Error, Result};

const DRIFT_LIMIT: f64 = 1e-6;

/// Sampled relatively parallel adapted frame. Row 0 of each matrix is the
/// tangent `T`, rows `1..d` are the normals `N_1 … N_{d−1}`.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub s: Vec<f64>,
    pub frames: Vec<DMatrix<f64>>,
    /// Reference curve `Γ(s)` reconstructed from `T` by the trapezoid rule,
    /// starting from the origin.
    pub curve: Vec<DVector<f64>>,
}

impl FrameField {
    pub fn step(&self) -> f64 {
        if self.s.len() < 2 {
            0.0
        } else {
            self.s[1] - self.s[0]
        }
    }

    pub fn tangent(&self, i: usize) -> DVector<f64> {
        self.frames[i].row(0).transpose()
    }

    /// Largest entry of `F Fᵀ − I` over all samples.
    pub fn orthonormality_defect(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| {
                let d = f.nrows();
                (f * f.transpose() - DMatrix::identity(d, d)).abs().max()
            })
            .fold(0.0, f64::max)
    }

    /// The tube map `Γ(s_i) + t_μ R_{μν}(s_i) N_ν(s_i)`.
    pub fn tube_point(&self, i: usize, twist: &TwistProfile, t: &[f64]) -> DVector<f64> {
        let r = twist.rotation(self.s[i]);
        let frame = &self.frames[i];
        let mut x = self.curve[i].clone();
        for (mu, &tm) in t.iter().enumerate() {
            for nu in 0..t.len() {
                x += tm * r[(mu, nu)] * frame.row(nu + 1).transpose();
            }
        }
        x
    }
}

fn generator(curvature: &CurvatureProfile, s: f64) -> DMatrix<f64> {
    let d = curvature.dim();
    let kappa = curvature.values(s);
    let mut k = DMatrix::zeros(d, d);
    for (j, kj) in kappa.iter().enumerate() {
        k[(0, j + 1)] = *kj;
        k[(j + 1, 0)] = -*kj;
    }
    k
}

/// Nearest orthogonal matrix by the Newton iteration for the polar factor.
fn project_orthogonal(mut x: DMatrix<f64>) -> DMatrix<f64> {
    for _ in 0..30 {
        let inv_t = match x.clone().try_inverse() {
            Some(inv) => inv.transpose(),
            None => return x,
        };
        let next = (&x + inv_t) * 0.5;
        let change = (&next - &x).abs().max();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

fn defect(x: &DMatrix<f64>) -> f64 {
    let d = x.nrows();
    (x * x.transpose() - DMatrix::identity(d, d)).abs().max()
}

/// Integrates the frame system `(T, N)′ = K(s) (T, N)` on `[s_min, s_max]`
/// with classical RK4 and a polar projection after every step.
///
/// The step is adjusted so that an integer number of steps covers the range.
pub fn integrate_frame(
    curvature: &CurvatureProfile,
    initial: &DMatrix<f64>,
    s_min: f64,
    s_max: f64,
    h: f64,
) -> Result<FrameField> {
    let d = curvature.dim();
    if initial.nrows() != d || initial.ncols() != d {
        return Err(Error::Input(format!(
            "initial frame must be {d}×{d}, got {}×{}",
            initial.nrows(),
            initial.ncols()
        )));
    }
    if defect(initial) > 1e-12 {
        return Err(Error::Input(format!(
            "initial frame is not orthogonal (defect {:e})",
            defect(initial)
        )));
    }
    if !(h > 0.0) || !(s_max > s_min) {
        return Err(Error::Input(
            "frame integration needs h > 0 and s_max > s_min".into(),
        ));
    }
    let steps = ((s_max - s_min) / h).round().max(1.0) as usize;
    let h = (s_max - s_min) / steps as f64;

    let mut s = Vec::with_capacity(steps + 1);
    let mut frames = Vec::with_capacity(steps + 1);
    let mut curve = Vec::with_capacity(steps + 1);
    let mut x = initial.clone();
    s.push(s_min);
    frames.push(x.clone());
    curve.push(DVector::zeros(d));

    for i in 0..steps {
        let s0 = s_min + i as f64 * h;
        let k_a = generator(curvature, s0);
        let k_m = generator(curvature, s0 + 0.5 * h);
        let k_b = generator(curvature, s0 + h);
        let k1 = &k_a * &x;
        let k2 = &k_m * (&x + &k1 * (0.5 * h));
        let k3 = &k_m * (&x + &k2 * (0.5 * h));
        let k4 = &k_b * (&x + &k3 * h);
        let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let drift = defect(&next);
        if drift > DRIFT_LIMIT {
            return Err(Error::FrameInstability { s: s0 + h, drift });
        }
        let next = project_orthogonal(next);
        let prev_t = x.row(0).transpose();
        let next_t = next.row(0).transpose();
        let gamma = curve.last().unwrap() + (prev_t + next_t) * (0.5 * h);
        x = next;
        s.push(s_min + (i + 1) as f64 * h);
        frames.push(x.clone());
        curve.push(gamma);
    }
    Ok(FrameField { s, frames, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use std::f64::consts::PI;

    #[test]
    fn zero_curvature_keeps_identity() {
        let k = CurvatureProfile::straight(3);
        let f = integrate_frame(&k, &DMatrix::identity(3, 3), -1.0, 1.0, 0.01).unwrap();
        for m in &f.frames {
            assert!((m - DMatrix::identity(3, 3)).abs().max() < 1e-15);
        }
    }

    #[test]
    fn constant_curvature_traces_unit_circle() {
        let k =
            CurvatureProfile::new(vec![Profile::Constant { value: 1.0 }, Profile::Zero]).unwrap();
        let f = integrate_frame(&k, &DMatrix::identity(3, 3), 0.0, 2.0 * PI, 1e-3).unwrap();
        for (i, &s) in f.s.iter().enumerate() {
            let t = f.tangent(i);
            assert!((t[0] - s.cos()).abs() < 1e-6);
            assert!((t[1] - s.sin()).abs() < 1e-6);
            assert!(t[2].abs() < 1e-12);
        }
        // Γ(s) = (sin s, 1 − cos s, 0)
        let last = f.curve.last().unwrap();
        assert!(last.norm() < 1e-5);
    }

    #[test]
    fn non_orthogonal_initial_frame_is_rejected() {
        let k = CurvatureProfile::straight(2);
        let mut init = DMatrix::identity(2, 2);
        init[(0, 1)] = 1e-3;
        assert!(matches!(
            integrate_frame(&k, &init, 0.0, 1.0, 0.1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn oversized_step_reports_instability() {
        let k = CurvatureProfile::new(vec![Profile::Constant { value: 50.0 }]).unwrap();
        assert!(matches!(
            integrate_frame(&k, &DMatrix::identity(2, 2), 0.0, 1.0, 0.1),
            Err(Error::FrameInstability { .. })
        ));
    }

    #[test]
    fn tube_point_offsets_along_normals() {
        let k = CurvatureProfile::straight(3);
        let twist = TwistProfile::planar(Profile::Constant { value: 1.0 });
        let f = integrate_frame(&k, &DMatrix::identity(3, 3), 0.0, PI / 2.0, 1e-2).unwrap();
        let last = f.s.len() - 1;
        let x = f.tube_point(last, &twist, &[1.0, 0.0]);
        // t_μ R_{μν} N_ν = cos θ N_1 − sin θ N_2 for t = (1, 0)
        assert!((x[0] - PI / 2.0).abs() < 1e-9);
        assert!(x[1].abs() < 1e-9);
        assert!((x[2] + 1.0).abs() < 1e-9);
    }
}
