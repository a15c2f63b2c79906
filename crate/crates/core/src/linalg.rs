//! Symmetric banded matrices with a band Cholesky factorization.
//!
//! Every discrete operator in this crate couples a degree of freedom only to
//! neighbours within the same or adjacent longitudinal slices, so a banded
//! layout with the natural slice-major ordering is compact and factorizes in
//! `O(n · bw²)`.

use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower band. Row `i` keeps columns
/// `i - bw ..= i` at offsets `0 ..= bw`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        let k = self.offset(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.offset(i, i)]).collect()
    }

    /// `self += alpha * other`; both must share size and bandwidth.
    pub fn add_scaled(&mut self, other: &BandMatrix, alpha: f64) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bw, other.bw);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let k = self.offset(i, i);
            self.data[k] += shift;
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut acc = 0.0;
            for j in j0..i {
                let a = row[j + self.bw - i];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            acc += row[self.bw] * x[i];
            y[i] += acc;
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; self.n];
        self.matvec(y, &mut ay);
        dot(x, &ay)
    }

    pub fn cholesky(&self) -> Result<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = l[i * w + (j + bw - i)];
                for k in k0..j {
                    sum -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = sum / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

/// Lower band Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let w = self.bw + 1;
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            let mut sum = b[i];
            for k in j0..i {
                sum -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = sum / self.l[i * w + bw];
        }
        for i in (0..self.n).rev() {
            let k1 = (i + bw).min(self.n - 1);
            let mut sum = b[i];
            for k in i + 1..=k1 {
                sum -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = sum / self.l[i * w + bw];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = laplacian_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; 50];
        a.matvec(&x, &mut b);
        let chol = a.cholesky().unwrap();
        let y = chol.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_band_matches_dense() {
        let n = 30;
        let bw = 4;
        let mut a = BandMatrix::zeros(n, bw);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let v = if i == j {
                    10.0 + i as f64 * 0.1
                } else {
                    ((i * 7 + j * 3) % 5) as f64 * 0.2 - 0.4
                };
                a.add(i, j, v);
                dense[(i, j)] += v;
                if i != j {
                    dense[(j, i)] += v;
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let x = a.cholesky().unwrap().solve(&b);
        let xd = dense
            .cholesky()
            .unwrap()
            .solve(&nalgebra::DVector::from_vec(b.clone()));
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = laplacian_1d(5);
        a.add_diagonal(-3.0);
        assert!(matches!(
            a.cholesky(),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
