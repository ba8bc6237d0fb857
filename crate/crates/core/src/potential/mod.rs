//! Periodic potentials `V = [[0, v], [v*, 0]]` with `v = vᵀ` built from
//! trigonometric-polynomial entries.

mod normalize;
mod spec;

pub use normalize::{normal_form, normalize, unitary_u, JFormPotential, Normalized};
pub use spec::{BuiltinSpec, EntrySpec, PotentialSpec};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, j1, CMatrix, C64};
use crate::trig::{eval_dense, TrigPoly};
use std::f64::consts::PI;

/// Relative ℓ¹ tail dropped when evaluating entries inside the integrator.
const EVAL_TAIL: f64 = 1e-18;
/// Relative tolerance for the symmetry check `v = vᵀ`.
const SYMMETRY_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    n: usize,
    /// Row-major N×N entries of v.
    entries: Vec<TrigPoly>,
}

impl Potential {
    /// Validates symmetry and finiteness of the entries of v.
    pub fn new(n: usize, entries: Vec<TrigPoly>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPotential("N must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidPotential(format!(
                "expected {} entries for N = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for (idx, e) in entries.iter().enumerate() {
            if e.dense().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "entry ({}, {}) has a non-finite coefficient",
                    idx / n + 1,
                    idx % n + 1
                )));
            }
        }
        let scale = entries.iter().map(|e| e.norm_sq()).sum::<f64>().sqrt();
        for j in 0..n {
            for k in j + 1..n {
                let a = &entries[j * n + k];
                let b = &entries[k * n + j];
                if a.sub(b).norm_sq().sqrt() > SYMMETRY_TOL * scale {
                    return Err(Error::Asymmetric { row: j + 1, col: k + 1 });
                }
            }
        }
        Ok(Potential { n, entries })
    }

    pub fn zero(n: usize) -> Self {
        Potential {
            n,
            entries: vec![TrigPoly::zero(); n * n],
        }
    }

    /// Constant symmetric v.
    pub fn constant(v0: &CMatrix) -> Result<Self> {
        if !v0.is_square() {
            return Err(Error::InvalidPotential("constant v must be square".into()));
        }
        let n = v0.rows();
        let entries = (0..n * n)
            .map(|idx| TrigPoly::constant(v0[(idx / n, idx % n)]))
            .collect();
        Self::new(n, entries)
    }

    /// Constant `v = diag(values)`.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::constant(&CMatrix::diag(&d))
    }

    /// N = 1 with `v(t) = f(t)`.
    pub fn scalar(f: TrigPoly) -> Result<Self> {
        Self::new(1, vec![f])
    }

    /// `v = −[[a, τ b_ν], [τ b_ν, 0]]`, where `b_ν` is the unit-mass periodized
    /// Gaussian centred at t = 1/2 with standard deviation ν, truncated at
    /// degree ⌈6/ν⌉.
    pub fn example_4x4(a: f64, tau: f64, nu: f64) -> Result<Self> {
        if !(a.is_finite() && tau.is_finite() && nu.is_finite()) || nu <= 0.0 {
            return Err(Error::InvalidPotential(format!(
                "example_4x4 needs finite a, tau and positive nu (got a={a}, tau={tau}, nu={nu})"
            )));
        }
        let bump = gaussian_bump(nu);
        let off = if tau == 0.0 {
            TrigPoly::zero()
        } else {
            bump.scale(C64::new(-tau, 0.0))
        };
        Self::new(
            2,
            vec![
                TrigPoly::constant(C64::new(-a, 0.0)),
                off.clone(),
                off,
                TrigPoly::zero(),
            ],
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of the first-order system, 2N.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Entry `v_{jk}` with zero-based indices.
    pub fn entry(&self, j: usize, k: usize) -> &TrigPoly {
        &self.entries[j * self.n + k]
    }

    pub fn entries(&self) -> &[TrigPoly] {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.entries.iter().map(|e| e.degree()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|e| e.terms().all(|(m, _)| m == 0))
    }

    /// Upper bound for `sup_t ‖v(t)‖` from the coefficient ℓ¹ norms.
    pub fn sup_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.terms().map(|(_, c)| c.norm()).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Entrywise derivative `v'`.
    pub fn derivative(&self) -> Potential {
        Potential {
            n: self.n,
            entries: self.entries.iter().map(|e| e.derivative()).collect(),
        }
    }

    /// The N×N block v(t).
    pub fn v_at(&self, t: f64) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |j, k| self.entry(j, k).eval(t))
    }

    /// The full 2N×2N matrix V(t).
    pub fn operator_at(&self, t: f64) -> CMatrix {
        let v = self.v_at(t);
        let z = CMatrix::zeros(self.n, self.n);
        CMatrix::blocks(&z, &v, &v.adjoint(), &z)
    }

    pub(crate) fn evaluator(&self) -> PotentialEval {
        let n = self.n;
        let mut slots = Vec::new();
        let mut index = vec![usize::MAX; n * n];
        for j in 0..n {
            for k in j..n {
                let e = &self.entries[j * n + k];
                if e.is_zero() {
                    continue;
                }
                let d = e.effective_degree(EVAL_TAIL);
                let full = e.degree();
                let coeffs = e.dense()[full - d..=full + d].to_vec();
                index[j * n + k] = slots.len();
                index[k * n + j] = slots.len();
                slots.push((d, coeffs));
            }
        }
        PotentialEval { slots, index }
    }

    /// Exact second moments and trace invariants.
    pub fn moments(&self) -> Moments {
        let n = self.n;
        let conj: Vec<TrigPoly> = self.entries.iter().map(|e| e.conj_fn()).collect();
        // ∫ v v* and ∫ v* v by Parseval
        let vvs = CMatrix::from_fn(n, n, |j, l| {
            (0..n).map(|k| self.entry(j, k).inner(self.entry(l, k))).sum()
        });
        let vsv = CMatrix::from_fn(n, n, |j, l| {
            (0..n).map(|k| conj[k * n + j].inner(&conj[k * n + l])).sum()
        });
        let zero = CMatrix::zeros(n, n);
        let second = CMatrix::blocks(&vvs, &zero, &zero, &vsv);
        let (nu, _) = hermitian_eigen(&vvs);

        let mut h0 = 0.0;
        let mut h1 = 0.0;
        let mut h2_deriv = 0.0;
        for e in &self.entries {
            for (m, c) in e.terms() {
                let w = 2.0 * PI * m as f64;
                h0 += 2.0 * c.norm_sqr();
                h1 += 2.0 * w * c.norm_sqr();
                h2_deriv += 2.0 * w * w * c.norm_sqr();
            }
        }
        // Tr ∫ V⁴ = 2 ∫ Tr (v v*)²
        let w: Vec<TrigPoly> = (0..n * n)
            .map(|idx| {
                let (j, l) = (idx / n, idx % n);
                (0..n).fold(TrigPoly::zero(), |acc, k| {
                    acc.add(&self.entry(j, k).mul(&conj[l * n + k]))
                })
            })
            .collect();
        let mut quartic = C64::new(0.0, 0.0);
        for j in 0..n {
            for l in 0..n {
                quartic += w[j * n + l].inner(&w[l * n + j].conj_fn());
            }
        }
        Moments {
            second,
            nu: nu.into_iter().map(|x| x.max(0.0)).collect(),
            norm_sq: h0,
            h0,
            h1,
            h2: h2_deriv + 2.0 * quartic.re,
        }
    }

    /// Fourier data of V' at frequency n.
    pub fn fourier_data(&self, n: i64) -> FourierData {
        let size = self.n;
        let w = C64::new(0.0, 2.0 * PI * n as f64);
        let vhat = CMatrix::from_fn(size, size, |j, k| w * self.entry(j, k).coefficient(n));
        let zero = CMatrix::zeros(size, size);
        let full = CMatrix::blocks(&zero, &vhat, &vhat.adjoint(), &zero);
        FourierData {
            n,
            vhat_prime: vhat,
            full,
        }
    }
}

/// Unit-mass periodized Gaussian at t = 1/2: `b̂(m) = (−1)^m e^{−2π²ν²m²}`.
pub fn gaussian_bump(nu: f64) -> TrigPoly {
    let degree = (6.0 / nu).ceil() as i64;
    let terms: Vec<(i64, C64)> = (-degree..=degree)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let decay = (-2.0 * PI * PI * nu * nu * (m * m) as f64).exp();
            (m, C64::new(sign * decay, 0.0))
        })
        .collect();
    TrigPoly::from_terms(&terms)
}

#[derive(Clone, Debug)]
pub struct Moments {
    /// `∫₀¹ V² dt`, block diagonal `∫vv* ⊕ ∫v*v`.
    pub second: CMatrix,
    /// Eigenvalues of `∫ v v*`, ascending.
    pub nu: Vec<f64>,
    pub norm_sq: f64,
    /// `Tr ∫ V²`.
    pub h0: f64,
    /// `Tr ∫ (−iJ₁ V' V)`.
    pub h1: f64,
    /// `Tr ∫ (V'² + V⁴)`.
    pub h2: f64,
}

impl Moments {
    /// Leading coefficient of the quasimomentum expansion.
    pub fn q0(&self) -> f64 {
        self.h0 / (4.0 * self.nu.len() as f64)
    }
    pub fn q1(&self) -> f64 {
        self.h1 / (8.0 * self.nu.len() as f64)
    }
    pub fn q2(&self) -> f64 {
        self.h2 / (16.0 * self.nu.len() as f64)
    }
}

#[derive(Clone, Debug)]
pub struct FourierData {
    pub n: i64,
    /// `v̂'_n = ∫ v' e^{−i2πnt} dt`, entrywise.
    pub vhat_prime: CMatrix,
    /// `V̂'_n = ∫ V' e^{i2πntJ₁} dt`.
    pub full: CMatrix,
}

impl FourierData {
    /// The self-adjoint matrix `𝒱 − iJ₁V̂'_n` whose spectrum gives the
    /// leading correction to the periodic eigenvalues near πn.
    pub fn shifted_moment(&self, second: &CMatrix) -> CMatrix {
        let n = self.vhat_prime.rows();
        let corr = (&j1(n) * &self.full).scale(C64::new(0.0, -1.0));
        second + &corr
    }
}

/// Fast evaluation of v(t) with shared symmetric entries.
#[derive(Clone, Debug)]
pub(crate) struct PotentialEval {
    slots: Vec<(usize, Vec<C64>)>,
    index: Vec<usize>,
}

impl PotentialEval {
    /// Writes v(t) row-major into `out`.
    #[inline]
    pub(crate) fn eval_into(&self, t: f64, vals: &mut [C64], out: &mut [C64]) {
        for (s, (d, c)) in self.slots.iter().enumerate() {
            vals[s] = eval_dense(c, *d, t);
        }
        for (o, &i) in out.iter_mut().zip(&self.index) {
            *o = if i == usize::MAX { C64::new(0.0, 0.0) } else { vals[i] };
        }
    }

    pub(crate) fn slot_count(&self) -> usize {
        self.slots.len()
    }
}
