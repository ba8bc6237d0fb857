use super::{CMatrix, Lu, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues of a general complex matrix with per-eigenvalue residuals.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Unit eigenvector estimates from inverse iteration, one per value.
    pub vectors: Vec<Vec<C64>>,
    /// `‖(A - λ)x‖ / ‖A‖` for the vector above.
    pub residuals: Vec<f64>,
}

const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Eigenvalues only; Hessenberg reduction followed by shifted QR, each value
/// polished by one guarded Newton step on the characteristic polynomial.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.as_slice().to_vec();
    hessenberg(&mut h, n);
    let mut values = qr_iterate(&mut h, n)?;
    polish(a, &mut values);
    Ok(values)
}

/// Eigenvalues, unit eigenvectors and residuals.
pub fn eigen(a: &CMatrix) -> Result<Eigen> {
    let values = eigenvalues(a)?;
    let n = a.rows();
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    let mut vectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for &lam in &values {
        let x = inverse_iteration(a, lam, scale);
        let ax = a.mul_vec(&x);
        let r = ax
            .iter()
            .zip(&x)
            .map(|(p, q)| (p - lam * q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residuals.push(r / scale);
        vectors.push(x);
    }
    Ok(Eigen {
        values,
        vectors,
        residuals,
    })
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut [C64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let alpha: f64 = (k + 1..n).map(|i| h[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        // v = x + phase·α e₁ avoids cancellation
        for i in 0..n {
            v[i] = ZERO;
        }
        for i in k + 1..n {
            v[i] = h[i * n + k];
        }
        v[k + 1] += phase * alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H ← (I - β v v*) H
        for j in 0..n {
            let s: C64 = (k + 1..n).map(|i| v[i].conj() * h[i * n + j]).sum();
            let s = s * beta;
            for i in k + 1..n {
                h[i * n + j] -= v[i] * s;
            }
        }
        // H ← H (I - β v v*)
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| h[i * n + j] * v[j]).sum();
            let s = s * beta;
            for j in k + 1..n {
                h[i * n + j] -= s * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Single-shift QR on the active window of a Hessenberg matrix.
fn qr_iterate(h: &mut [C64], n: usize) -> Result<Vec<C64>> {
    let mut values = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter_since_deflation = 0usize;
    let mut total = 0usize;
    let mut deflated = 0usize;
    let mut rot: Vec<(C64, C64)> = vec![(ZERO, ZERO); n];
    loop {
        if hi == 0 {
            values[0] = h[0];
            break;
        }
        // find the start of the unreduced block ending at hi
        let mut lo = hi;
        while lo > 0 {
            let sub = h[lo * n + lo - 1].norm();
            let diag = h[lo * n + lo].norm() + h[(lo - 1) * n + lo - 1].norm();
            let floor = if diag == 0.0 { f64::MIN_POSITIVE } else { diag * f64::EPSILON };
            if sub <= floor {
                h[lo * n + lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values[hi] = h[hi * n + hi];
            deflated += 1;
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        iter_since_deflation += 1;
        total += 1;
        if iter_since_deflation > MAX_SWEEPS_PER_VALUE {
            let partial = values[hi + 1..].to_vec();
            return Err(Error::EigenNoConvergence {
                iterations: total,
                deflated,
                dim: n,
                partial,
            });
        }
        let mu = if iter_since_deflation % 11 == 10 {
            // exceptional shift breaks rare cycles
            h[hi * n + hi] + C64::new(0.75 * h[hi * n + hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };
        for k in lo..=hi {
            h[k * n + k] -= mu;
        }
        // QR by Givens rotations on rows k, k+1
        for k in lo..hi {
            let a = h[k * n + k];
            let b = h[(k + 1) * n + k];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (a / r, b / r) };
            rot[k] = (c, s);
            for j in k..=hi {
                let x = h[k * n + j];
                let y = h[(k + 1) * n + j];
                h[k * n + j] = c.conj() * x + s.conj() * y;
                h[(k + 1) * n + j] = -s * x + c * y;
            }
        }
        // RQ: apply the adjoint rotations from the right
        for k in lo..hi {
            let (c, s) = rot[k];
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let x = h[i * n + k];
                let y = h[i * n + k + 1];
                h[i * n + k] = x * c + y * s;
                h[i * n + k + 1] = -x * s.conj() + y * c.conj();
            }
        }
        for k in lo..=hi {
            h[k * n + k] += mu;
        }
    }
    Ok(values)
}

/// One Newton step on det(A - λ), accepted only when it shrinks the
/// determinant and stays well inside the gap to the other eigenvalues.
fn polish(a: &CMatrix, values: &mut [C64]) {
    let n = values.len();
    for idx in 0..n {
        let lam = values[idx];
        let sep = values
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx)
            .map(|(_, v)| (v - lam).norm())
            .fold(f64::INFINITY, f64::min);
        let shifted = a.add_identity(-lam);
        let Ok(lu) = Lu::new(&shifted) else { continue };
        if lu.is_singular() {
            continue;
        }
        let Ok(inv) = lu.inverse() else { continue };
        let tr = inv.trace();
        if tr == ZERO || !tr.re.is_finite() || !tr.im.is_finite() {
            continue;
        }
        let step = ONE / tr;
        if step.norm() > 0.25 * sep || step.norm() > 1e-6 * (1.0 + lam.norm()) {
            continue;
        }
        let cand = lam + step;
        let Ok(lu2) = Lu::new(&a.add_identity(-cand)) else { continue };
        if lu2.det().norm() < lu.det().norm() {
            values[idx] = cand;
        }
    }
}

fn inverse_iteration(a: &CMatrix, lam: C64, scale: f64) -> Vec<C64> {
    let n = a.rows();
    let mut shift = lam;
    let mut lu = Lu::new(&a.add_identity(-shift)).expect("square");
    if lu.is_singular() || lu.pivot_ratio() < 1e-300 {
        shift = lam + C64::new(scale * 1e-14, scale * 1e-14);
        lu = Lu::new(&a.add_identity(-shift)).expect("square");
    }
    let mut x: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64))
        .collect();
    for _ in 0..3 {
        match lu.solve(&x) {
            Ok(y) => {
                let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if !(norm.is_finite()) || norm == 0.0 {
                    break;
                }
                x = y.into_iter().map(|v| v / norm).collect();
            }
            Err(_) => break,
        }
    }
    let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    x.into_iter().map(|v| v / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn diagonal_matrix() {
        let d = [C64::new(3.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.5, -2.0)];
        let vals = sorted(eigenvalues(&CMatrix::diag(&d)).unwrap());
        let want = sorted(d.to_vec());
        for (a, b) in vals.iter().zip(&want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_generator_has_imaginary_pair() {
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let vals = sorted(eigenvalues(&a).unwrap());
        assert!((vals[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((vals[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x-1)(x-2)(x-3)(x-4) = x⁴ - 10x³ + 35x² - 50x + 24
        let c = [24.0, -50.0, 35.0, -10.0];
        let a = CMatrix::from_fn(4, 4, |i, j| {
            if j == 3 {
                C64::new(-c[i], 0.0)
            } else if i == j + 1 {
                ONE
            } else {
                ZERO
            }
        });
        let vals = sorted(eigenvalues(&a).unwrap());
        for (k, v) in vals.iter().enumerate() {
            assert!((v - C64::new(k as f64 + 1.0, 0.0)).norm() < 1e-11, "{v}");
        }
    }

    #[test]
    fn residuals_are_small_for_random_matrix() {
        let a = CMatrix::from_fn(7, 7, |i, j| {
            C64::new(((3 * i + 5 * j) as f64).sin(), ((i * j + 1) as f64).cos())
        });
        let e = eigen(&a).unwrap();
        assert_eq!(e.values.len(), 7);
        for r in &e.residuals {
            assert!(*r < 1e-12, "residual {r}");
        }
        let tr: C64 = e.values.iter().sum();
        assert!((tr - a.trace()).norm() < 1e-12);
    }

    #[test]
    fn jordan_block_is_handled() {
        let a = CMatrix::from_real_rows(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 2.0]]);
        let vals = eigenvalues(&a).unwrap();
        for v in vals {
            assert!((v - C64::new(2.0, 0.0)).norm() < 1e-4);
        }
    }
}
