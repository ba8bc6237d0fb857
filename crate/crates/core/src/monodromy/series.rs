//! Iterated-integral expansion `ψ(1, z) = Σ ψ_n(1, z)`.
//!
//! In the interaction picture `ψ_n(t) = e^{izJ₁t} φ_n(t)` with
//! `φ_n(t) = ∫₀ᵗ W(s) φ_{n−1}(s) ds`, `W(s) = −iJ₁ e^{−izJ₁s} V_s e^{izJ₁s}`.
//! Each Volterra step is a cumulative trapezoid rule on a uniform grid; two
//! grids (h and 2h) are combined by Richardson extrapolation.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I};
use crate::potential::Potential;
use crate::tolerances::SERIES_NODES;

pub const MAX_SERIES_ORDER: usize = 12;

#[derive(Clone, Debug)]
pub struct SeriesResult {
    /// `ψ_0(1), …, ψ_order(1)`.
    pub terms: Vec<CMatrix>,
    pub sum: CMatrix,
    /// Bound on `|ψ(1, z) − sum|`:
    /// `‖V‖^{n}/n! · e^{|Im z| + ∫₀¹|V_s| ds}` with `n = order + 1`.
    pub remainder_bound: f64,
}

pub fn series_psi(p: &Potential, z: C64, order: usize) -> Result<SeriesResult> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::argument(
            "order",
            format!("{order} exceeds the supported maximum {MAX_SERIES_ORDER}"),
        ));
    }
    let fine = iterates(p, z, order, SERIES_NODES);
    let coarse = iterates(p, z, order, SERIES_NODES / 2);
    let d = p.dim();
    let n = p.n();
    let free = free_phase(n, z, 1.0);
    let mut terms = Vec::with_capacity(order + 1);
    let mut sum = CMatrix::zeros(d, d);
    for (f, c) in fine.iter().zip(&coarse) {
        let phi = (&f.scale_real(4.0) - c).scale_real(1.0 / 3.0);
        let psi = &free * &phi;
        sum = &sum + &psi;
        terms.push(psi);
    }
    Ok(SeriesResult {
        terms,
        sum,
        remainder_bound: remainder_bound(p, z, order + 1),
    })
}

/// `e^{izJ₁t}`.
fn free_phase(n: usize, z: C64, t: f64) -> CMatrix {
    let up = (I * z * t).exp();
    let down = (-I * z * t).exp();
    let mut diag = vec![up; n];
    diag.extend(std::iter::repeat(down).take(n));
    CMatrix::diag(&diag)
}

/// `φ_0(1), …, φ_order(1)` on a grid with `nodes` intervals.
fn iterates(p: &Potential, z: C64, order: usize, nodes: usize) -> Vec<CMatrix> {
    let n = p.n();
    let d = 2 * n;
    let h = 1.0 / nodes as f64;
    // W(s) = [[0, −i e^{−2izs} v], [i e^{2izs} v*, 0]]
    let kernel: Vec<CMatrix> = (0..=nodes)
        .map(|k| {
            let s = k as f64 * h;
            let v = p.v_at(s);
            let up = -I * (-2.0 * I * z * s).exp();
            let down = I * (2.0 * I * z * s).exp();
            let zero = CMatrix::zeros(n, n);
            CMatrix::blocks(&zero, &v.scale(up), &v.adjoint().scale(down), &zero)
        })
        .collect();
    let mut current: Vec<CMatrix> = vec![CMatrix::identity(d); nodes + 1];
    let mut out = vec![CMatrix::identity(d)];
    for _ in 0..order {
        let integrand: Vec<CMatrix> = kernel.iter().zip(&current).map(|(w, f)| w * f).collect();
        let mut next = Vec::with_capacity(nodes + 1);
        let mut acc = CMatrix::zeros(d, d);
        next.push(acc.clone());
        for k in 0..nodes {
            acc = &acc + &(&integrand[k] + &integrand[k + 1]).scale_real(0.5 * h);
            next.push(acc.clone());
        }
        out.push(acc);
        current = next;
    }
    out
}

fn remainder_bound(p: &Potential, z: C64, n: usize) -> f64 {
    let norm = p.moments().h0.sqrt();
    let mut factorial = 1.0;
    for k in 2..=n {
        factorial *= k as f64;
    }
    // ∫₀¹ |V_s| ds with the Frobenius norm as an upper bound for |V_s|
    let nodes = SERIES_NODES;
    let integral: f64 = (0..nodes)
        .map(|k| p.v_at((k as f64 + 0.5) / nodes as f64).norm_fro())
        .sum::<f64>()
        / nodes as f64;
    norm.powi(n as i32) / factorial * (z.im.abs() + integral).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::{integrate, IntegratorOptions};
    use crate::trig::TrigPoly;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small() -> Potential {
        let a = TrigPoly::from_terms(&[(0, c(0.03, 0.0)), (1, c(0.02, -0.01)), (-1, c(0.0, 0.015))]);
        let b = TrigPoly::cosine(0.02, 2);
        let d = TrigPoly::from_terms(&[(2, c(0.01, 0.01))]);
        Potential::new(2, vec![a, b.clone(), b, d]).unwrap()
    }

    #[test]
    fn order_zero_is_the_free_solution() {
        let z = c(1.2, -0.4);
        let r = series_psi(&small(), z, 0).unwrap();
        assert!(r.sum.max_abs_diff(&free_phase(2, z, 1.0)) < 1e-15);
    }

    #[test]
    fn partial_sum_lies_in_the_envelope() {
        let p = small();
        for &z in &[c(1.0, 0.0), c(-2.5, 0.8), c(4.0, -1.5)] {
            let s = series_psi(&p, z, 6).unwrap();
            let exact = integrate(&p, z, &IntegratorOptions::default()).unwrap().psi;
            let err = (&exact - &s.sum).norm_spectral();
            assert!(err <= s.remainder_bound, "{z}: {err:e} > {:e}", s.remainder_bound);
        }
    }

    #[test]
    fn odd_terms_are_traceless() {
        let s = series_psi(&small(), c(0.7, 0.3), 5).unwrap();
        for n in [1, 3, 5] {
            assert!(s.terms[n].trace().norm() < 1e-14);
        }
    }

    #[test]
    fn terms_decay_like_the_iterate_bound() {
        let p = small();
        let z = c(2.0, 0.5);
        let s = series_psi(&p, z, 8).unwrap();
        let norm = p.moments().h0.sqrt();
        let mut fact = 1.0;
        for (n, t) in s.terms.iter().enumerate().skip(1) {
            fact *= n as f64;
            let bound = norm.powi(n as i32) / fact * (z.im.abs() + 1.0).exp();
            assert!(t.norm_spectral() <= bound, "n={n}");
        }
    }

    #[test]
    fn order_above_limit_is_rejected() {
        assert!(series_psi(&small(), c(1.0, 0.0), 13).is_err());
    }
}
