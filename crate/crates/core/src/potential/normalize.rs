use super::Potential;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, symplectic_unit, CMatrix, C64};
use crate::trig::TrigPoly;

/// A potential in the form `Ω = [[Ω₁, Ω₂], [Ω₂, −Ω₁]]` with real symmetric
/// blocks, acting in `J M' + Ω M = z M`.
#[derive(Clone, Debug)]
pub struct JFormPotential {
    pub n: usize,
    pub omega1: Vec<TrigPoly>,
    pub omega2: Vec<TrigPoly>,
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub potential: Potential,
    /// Unitary E diagonalizing `∫ ω ω*`.
    pub e: CMatrix,
    /// `ℰ = E ⊕ Ē`.
    pub frame: CMatrix,
    /// Ascending eigenvalues of `∫ ω ω*`.
    pub nu: Vec<f64>,
    /// Groups of indices with equal ν; the basis inside a group is arbitrary.
    pub tie_blocks: Vec<Vec<usize>>,
}

impl JFormPotential {
    pub fn new(n: usize, omega1: Vec<TrigPoly>, omega2: Vec<TrigPoly>) -> Result<Self> {
        if omega1.len() != n * n || omega2.len() != n * n {
            return Err(Error::InvalidPotential(format!(
                "J-form blocks need {} entries each",
                n * n
            )));
        }
        for (name, block) in [("Omega1", &omega1), ("Omega2", &omega2)] {
            for j in 0..n {
                for k in 0..n {
                    let e = &block[j * n + k];
                    if !e.is_real_valued(1e-14) {
                        return Err(Error::NotSelfAdjoint(format!(
                            "{name} entry ({}, {}) is not real valued",
                            j + 1,
                            k + 1
                        )));
                    }
                    if e.sub(&block[k * n + j]).norm_sq().sqrt() > 1e-14 {
                        return Err(Error::NotSelfAdjoint(format!(
                            "{name} entries ({}, {}) and ({}, {}) differ",
                            j + 1,
                            k + 1,
                            k + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(JFormPotential { n, omega1, omega2 })
    }

    /// Ω(t) as a 2N×2N matrix.
    pub fn at(&self, t: f64) -> CMatrix {
        let n = self.n;
        let o1 = CMatrix::from_fn(n, n, |j, k| self.omega1[j * n + k].eval(t));
        let o2 = CMatrix::from_fn(n, n, |j, k| self.omega2[j * n + k].eval(t));
        CMatrix::blocks(&o1, &o2, &o2, &o1.scale_real(-1.0))
    }

    /// `ω = −Ω₂ + iΩ₁`, the off-diagonal block of `𝒰 Ω 𝒰`.
    pub fn omega(&self) -> Vec<TrigPoly> {
        self.omega1
            .iter()
            .zip(&self.omega2)
            .map(|(a, b)| a.scale(C64::new(0.0, 1.0)).sub(b))
            .collect()
    }
}

/// `𝒰 = (J₁ + iJ)/√2`.
pub fn unitary_u(n: usize) -> CMatrix {
    let j1m = crate::linalg::j1(n);
    let j = symplectic_unit(n);
    (&j1m + &j.scale(C64::new(0.0, 1.0))).scale_real(std::f64::consts::FRAC_1_SQRT_2)
}

/// Rotates a J-form potential into the Dirac frame with diagonal second moment.
pub fn normalize(raw: &JFormPotential) -> Result<Normalized> {
    rotate(raw.n, &raw.omega())
}

/// Conjugates `v ↦ E* v Ē` so that `∫ v v*` becomes diagonal with ascending
/// entries; the operator changes by the constant unitary `E ⊕ Ē`.
pub fn normal_form(p: &Potential) -> Result<Normalized> {
    rotate(p.n(), p.entries())
}

fn rotate(n: usize, omega: &[TrigPoly]) -> Result<Normalized> {
    let w = |j: usize, k: usize| &omega[j * n + k];
    let v1 = CMatrix::from_fn(n, n, |j, l| (0..n).map(|k| w(j, k).inner(w(l, k))).sum());
    let (nu, e) = hermitian_eigen(&v1);
    let scale = nu.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if let Some(&lo) = nu.first() {
        if lo < -1e-10 * scale {
            return Err(Error::NotPositive(lo));
        }
    }
    // v_{jk} = Σ_ab conj(E_aj) ω_ab conj(E_bk)
    let mut entries = vec![TrigPoly::zero(); n * n];
    for j in 0..n {
        for k in j..n {
            let mut acc = TrigPoly::zero();
            for a in 0..n {
                for b in 0..n {
                    let coef = e[(a, j)].conj() * e[(b, k)].conj();
                    if coef.norm() == 0.0 {
                        continue;
                    }
                    acc = acc.add(&w(a, b).scale(coef));
                }
            }
            entries[j * n + k] = acc.clone();
            entries[k * n + j] = acc;
        }
    }
    let potential = Potential::new(n, entries)?;
    let frame = CMatrix::blocks(&e, &CMatrix::zeros(n, n), &CMatrix::zeros(n, n), &e.conj());
    let mut tie_blocks: Vec<Vec<usize>> = Vec::new();
    for (i, &x) in nu.iter().enumerate() {
        match tie_blocks.last_mut() {
            Some(block) if (nu[*block.last().unwrap()] - x).abs() <= 1e-12 * scale => block.push(i),
            _ => tie_blocks.push(vec![i]),
        }
    }
    Ok(Normalized {
        potential,
        e,
        frame,
        nu: nu.into_iter().map(|x| x.max(0.0)).collect(),
        tie_blocks,
    })
}
