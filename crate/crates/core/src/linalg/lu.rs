use super::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    /// Packed factors; the unit diagonal of L is implicit.
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            if pivot == ZERO {
                continue;
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Lu { n, lu, perm, sign })
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for k in 0..self.n {
            d *= self.lu[k * self.n + k];
        }
        d
    }

    /// Smallest |pivot| divided by the largest.
    pub fn pivot_ratio(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for k in 0..self.n {
            let v = self.lu[k * self.n + k].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    pub fn is_singular(&self) -> bool {
        (0..self.n).any(|k| self.lu[k * self.n + k] == ZERO)
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        if self.is_singular() {
            return Err(Error::Singular);
        }
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.n;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = ZERO);
            e[j] = ONE;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

#[derive(Clone, Debug)]
pub struct DetInv {
    pub det: C64,
    /// `None` when a pivot vanished exactly.
    pub inverse: Option<CMatrix>,
    pub pivot_ratio: f64,
}

pub fn det(a: &CMatrix) -> Result<C64> {
    Ok(Lu::new(a)?.det())
}

pub fn det_inv(a: &CMatrix) -> Result<DetInv> {
    let lu = Lu::new(a)?;
    let inverse = if lu.is_singular() {
        None
    } else {
        Some(lu.inverse()?)
    };
    Ok(DetInv {
        det: lu.det(),
        inverse,
        pivot_ratio: lu.pivot_ratio(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| {
            C64::new((i as f64 + 1.0) * 0.3 - j as f64, ((i * j) as f64).sin())
        })
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = sample();
        let di = det_inv(&a).unwrap();
        let inv = di.inverse.unwrap();
        let err = (&a * &inv).max_abs_diff(&CMatrix::identity(4));
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn determinant_of_triangular_is_diagonal_product() {
        let a = CMatrix::from_fn(3, 3, |i, j| {
            if j >= i {
                C64::new(1.0 + i as f64, j as f64)
            } else {
                ZERO
            }
        });
        let expected = C64::new(1.0, 0.0) * C64::new(2.0, 1.0) * C64::new(3.0, 2.0);
        assert!((det(&a).unwrap() - expected).norm() < 1e-13);
    }

    #[test]
    fn permutation_sign_is_tracked() {
        let p = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(det(&p).unwrap(), C64::new(-1.0, 0.0));
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let di = det_inv(&a).unwrap();
        assert!(di.det.norm() < 1e-15);
        assert!(di.inverse.is_none() || di.pivot_ratio < 1e-15);
    }
}
