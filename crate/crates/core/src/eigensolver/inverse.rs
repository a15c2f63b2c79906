//! Block inverse iteration for the linear case `p = 2`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::form::CellForm;
use super::{SolverConfig, SolverResult, SolverStatus};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, BandMatrix};

/// Lowest Ritz values and vectors of the pencil `(K + V, M)`.
#[derive(Clone, Debug)]
pub struct RitzPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Subspace iteration `X ← (K − σM)⁻¹ M X` with Rayleigh–Ritz projection,
/// where `K` is the stiffness plus potential matrix and `M` the one-point
/// mass matrix. Returns the lowest pair as a [`SolverResult`] (field
/// normalized to unit mass) together with all Ritz pairs of the block.
pub fn inverse_iteration_p2(
    form: &CellForm,
    config: &SolverConfig,
) -> Result<(SolverResult, RitzPairs)> {
    config.validate()?;
    let n = form.n_free();
    if n == 0 {
        return Err(Error::Input("no free degrees of freedom".into()));
    }
    let mut k = form.stiffness(None);
    if form.has_potential() {
        k.add_scaled(&form.mass_matrix(true), 1.0);
    }
    let m = form.mass_matrix(false);
    let mut shifted = k.clone();
    if config.shift != 0.0 {
        shifted.add_scaled(&m, -config.shift);
    }
    // A failed factorization means the shift is not below the lowest
    // eigenvalue (or the pencil is singular); callers may retry lower.
    let factor = shifted.cholesky()?;

    let b = config.block_size.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Vec<f64>> = (0..b)
        .map(|j| {
            if j == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
        })
        .collect();

    let mut ritz = RitzPairs {
        values: vec![f64::INFINITY; b],
        vectors: x.clone(),
    };
    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut mx = vec![0.0; n];
    let mut kx = vec![0.0; n];
    while iterations < config.max_iterations {
        iterations += 1;
        let mut y: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| {
                m.matvec(xi, &mut mx);
                factor.solve(&mx)
            })
            .collect();
        gram_schmidt(&mut y);
        let next = rayleigh_ritz(&k, &m, &y)?;

        let v0 = &next.vectors[0];
        k.matvec(v0, &mut kx);
        m.matvec(v0, &mut mx);
        let theta = next.values[0];
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - theta * b).collect();
        residual = norm2(&r) / norm2(&kx).max(f64::MIN_POSITIVE);
        let change = (theta - ritz.values[0]).abs();
        x = next.vectors.clone();
        ritz = next;
        if residual < config.gradient_tol.min(1e-9) || change == 0.0 {
            status = SolverStatus::Converged;
            break;
        }
    }

    let mut field = ritz.vectors[0].clone();
    let mass: f64 = form.evaluate(&field, 2.0, 0.0).mass;
    let scale = mass.sqrt()
        * if field.iter().sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
    for v in field.iter_mut() {
        *v /= scale;
    }
    let eigenvalue = form.evaluate(&field, 2.0, 0.0).quotient();
    let result = SolverResult {
        eigenvalue,
        field,
        iterations,
        gradient_norm: residual,
        epsilon: 0.0,
        converged: status == SolverStatus::Converged,
        status,
        history: Vec::new(),
        stage_starts: vec![0],
    };
    Ok((result, ritz))
}

/// Modified Gram–Schmidt in the Euclidean inner product, applied twice.
fn gram_schmidt(vs: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..vs.len() {
            let (done, rest) = vs.split_at_mut(i);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = dot(v, u);
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= c * b;
                }
            }
            let nv = norm2(v);
            if nv > 0.0 {
                for a in v.iter_mut() {
                    *a /= nv;
                }
            }
        }
    }
}

fn rayleigh_ritz(k: &BandMatrix, m: &BandMatrix, y: &[Vec<f64>]) -> Result<RitzPairs> {
    let b = y.len();
    let n = y[0].len();
    let mut kp = DMatrix::zeros(b, b);
    let mut mp = DMatrix::zeros(b, b);
    let mut buf = vec![0.0; n];
    for j in 0..b {
        k.matvec(&y[j], &mut buf);
        for i in 0..b {
            kp[(i, j)] = dot(&y[i], &buf);
        }
        m.matvec(&y[j], &mut buf);
        for i in 0..b {
            mp[(i, j)] = dot(&y[i], &buf);
        }
    }
    kp = (&kp + kp.transpose()) * 0.5;
    mp = (&mp + mp.transpose()) * 0.5;
    let chol = mp
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Input("projected mass matrix is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Input("projected mass matrix is singular".into()))?;
    let c = &l_inv * &kp * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&a, &bb| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[bb]));
    let coeffs = l_inv.transpose() * &eig.eigenvectors;
    let mut values = Vec::with_capacity(b);
    let mut vectors = Vec::with_capacity(b);
    for &j in &order {
        values.push(eig.eigenvalues[j]);
        let mut v = vec![0.0; n];
        for i in 0..b {
            let c = coeffs[(i, j)];
            for (a, yi) in v.iter_mut().zip(&y[i]) {
                *a += c * yi;
            }
        }
        vectors.push(v);
    }
    Ok(RitzPairs { values, vectors })
}
