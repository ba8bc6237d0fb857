use super::CMatrix;
use crate::error::{Error, Result};

const NORM_LIMIT: f64 = 700.0;

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn mat_exp(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension("mat_exp needs a square matrix".into()));
    }
    let norm = a.norm_one();
    if !norm.is_finite() || norm > NORM_LIMIT {
        return Err(Error::ExpOverflow {
            norm,
            limit: NORM_LIMIT,
        });
    }
    let n = a.rows();
    let mut squarings = 0u32;
    let mut s = norm;
    while s > 0.25 {
        s *= 0.5;
        squarings += 1;
    }
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));
    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=30 {
        term = (&term * &scaled).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.norm_max() <= 1e-18 * sum.norm_max() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn exponential_of_diagonal() {
        let d = [C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
        let e = mat_exp(&CMatrix::diag(&d)).unwrap();
        for (i, v) in d.iter().enumerate() {
            assert!(((e[(i, i)] - v.exp()) / v.exp()).norm() < 1e-14);
        }
        assert!(e[(0, 1)].norm() == 0.0);
    }

    #[test]
    fn two_by_two_dirac_block() {
        // e^{-A₀} = cos k - (A₀/k) sin k with A₀ = j(z - a j₂), k² = z² - a²
        let (z, a) = (2.0f64, 1.0f64);
        let j = CMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let j2 = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let a0 = &j * &(&CMatrix::identity(2).scale_real(z) - &j2.scale_real(a));
        let k = (z * z - a * a).sqrt();
        let want = &CMatrix::identity(2).scale_real(k.cos()) - &a0.scale_real(k.sin() / k);
        let got = mat_exp(&a0.scale_real(-1.0)).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-14, "{}", got.max_abs_diff(&want));
    }

    #[test]
    fn overflow_is_refused() {
        let a = CMatrix::identity(2).scale_real(1e4);
        assert!(matches!(mat_exp(&a), Err(Error::ExpOverflow { .. })));
    }
}
