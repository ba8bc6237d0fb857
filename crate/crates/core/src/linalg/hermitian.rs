use super::{CMatrix, C64};

/// Cyclic Jacobi for a Hermitian matrix.
///
/// Returns ascending real eigenvalues and a unitary matrix whose columns are
/// the matching eigenvectors, so that `A = V diag(λ) V*`.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(a.is_square(), "hermitian_eigen needs a square matrix");
    let n = a.rows();
    // symmetrize to suppress rounding asymmetry in the input
    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on columns p, q
                let ph_c = phase.conj();
                for i in 0..n {
                    let x = m[(i, p)];
                    let y = m[(i, q)];
                    m[(i, p)] = x * c - y * ph_c * s;
                    m[(i, q)] = x * s + y * ph_c * c;
                }
                for j in 0..n {
                    let x = m[(p, j)];
                    let y = m[(q, j)];
                    m[(p, j)] = x * c - y * phase * s;
                    m[(q, j)] = x * s + y * phase * c;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = x * c - y * ph_c * s;
                    v[(i, q)] = x * s + y * ph_c * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vecs = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    (values, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_complex_hermitian() {
        let n = 5;
        let b = CMatrix::from_fn(n, n, |i, j| C64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64).sin()));
        let a = &b + &b.adjoint();
        let (vals, vecs) = hermitian_eigen(&a);
        let d = CMatrix::diag(&vals.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
        let rec = &(&vecs * &d) * &vecs.adjoint();
        assert!(rec.max_abs_diff(&a) < 1e-12);
        let gram = &vecs.adjoint() * &vecs;
        assert!(gram.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_spectrum_gives_orthonormal_basis() {
        let a = CMatrix::diag(&[C64::new(2.0, 0.0); 3]);
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vals.iter().all(|&x| (x - 2.0).abs() < 1e-15));
        assert!((&vecs.adjoint() * &vecs).max_abs_diff(&CMatrix::identity(3)) < 1e-15);
    }
}
