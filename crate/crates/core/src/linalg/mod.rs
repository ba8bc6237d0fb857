//! Dense complex linear algebra for the small matrices (dimension ≤ 32) that
//! appear in monodromy computations.

mod eig;
mod expm;
mod hermitian;
mod lu;

pub use eig::{eigen, eigenvalues, Eigen};
pub use expm::mat_exp;
pub use hermitian::hermitian_eigen;
pub use lu::{det, det_inv, DetInv, Lu};

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        CMatrix { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Assembles `[[a, b], [c, d]]` from four blocks.
    pub fn blocks(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> Self {
        assert_eq!(a.rows, b.rows);
        assert_eq!(c.rows, d.rows);
        assert_eq!(a.cols, c.cols);
        assert_eq!(b.cols, d.cols);
        let (r1, c1) = (a.rows, a.cols);
        Self::from_fn(a.rows + c.rows, a.cols + b.cols, |i, j| match (i < r1, j < c1) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - c1)],
            (false, true) => c[(i - r1, j)],
            (false, false) => d[(i - r1, j - c1)],
        })
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn norm_spectral(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let (values, _) = hermitian_eigen(&gram);
        values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    pub fn add_identity(&self, s: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += s;
        }
        m
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|k| self[(i, k)] * v[k]).sum())
            .collect()
    }

    pub fn powi(&self, k: u32) -> CMatrix {
        let mut acc = CMatrix::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Largest entrywise distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// `J₁ = diag(I_N, -I_N)`.
pub fn j1(n: usize) -> CMatrix {
    let mut d = vec![ONE; n];
    d.extend(std::iter::repeat(-ONE).take(n));
    CMatrix::diag(&d)
}

/// The symplectic unit `J = [[0, I_N], [-I_N, 0]]`.
pub fn symplectic_unit(n: usize) -> CMatrix {
    let z = CMatrix::zeros(n, n);
    let i = CMatrix::identity(n);
    CMatrix::blocks(&z, &i, &i.scale_real(-1.0), &z)
}

/// `J₂ = [[0, I_N], [I_N, 0]]`.
pub fn j2(n: usize) -> CMatrix {
    let z = CMatrix::zeros(n, n);
    let i = CMatrix::identity(n);
    CMatrix::blocks(&z, &i, &i, &z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_assembly_round_trips() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = a.scale_real(2.0);
        let m = CMatrix::blocks(&a, &b, &b, &a);
        assert_eq!(m.block(0, 2, 2, 2), b);
        assert_eq!(m.block(2, 2, 2, 2), a);
    }

    #[test]
    fn unit_matrices_relations() {
        let n = 3;
        let j = symplectic_unit(n);
        let jj = &j * &j;
        assert!(jj.max_abs_diff(&CMatrix::identity(2 * n).scale_real(-1.0)) == 0.0);
        let j1m = j1(n);
        // J₁ and J anticommute
        let ac = &(&j1m * &j) + &(&j * &j1m);
        assert_eq!(ac.norm_max(), 0.0);
        let j2m = j2(n);
        assert_eq!((&j2m * &j2m).max_abs_diff(&CMatrix::identity(2 * n)), 0.0);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = CMatrix::diag(&[C64::new(0.0, -3.0), C64::new(2.0, 0.0)]);
        assert!((m.norm_spectral() - 3.0).abs() < 1e-12);
    }
}
