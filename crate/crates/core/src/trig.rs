//! 1-periodic trigonometric polynomials `f(t) = Σ_{|m| ≤ d} c_m e^{i2πmt}`.

use crate::linalg::C64;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigPoly {
    degree: usize,
    /// `coeffs[m + degree]` is the coefficient of `e^{i2πmt}`.
    coeffs: Vec<C64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly {
            degree: 0,
            coeffs: vec![C64::new(0.0, 0.0)],
        }
    }

    pub fn constant(c: C64) -> Self {
        TrigPoly {
            degree: 0,
            coeffs: vec![c],
        }
    }

    /// Builds from `(m, c_m)` pairs; repeated frequencies are summed.
    pub fn from_terms(terms: &[(i64, C64)]) -> Self {
        let degree = terms.iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * degree + 1];
        let mut filled = vec![false; 2 * degree + 1];
        for &(m, c) in terms {
            let i = (m + degree as i64) as usize;
            // assign first so that signed zeros survive a round trip
            if filled[i] {
                coeffs[i] += c;
            } else {
                coeffs[i] = c;
                filled[i] = true;
            }
        }
        TrigPoly { degree, coeffs }
    }

    /// Dense constructor from coefficients of `m = -d..=d`.
    pub fn from_dense(coeffs: Vec<C64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "dense coefficients need odd length");
        TrigPoly {
            degree: coeffs.len() / 2,
            coeffs,
        }
    }

    /// `amplitude · cos(2π·freq·t)`.
    pub fn cosine(amplitude: f64, freq: i64) -> Self {
        let h = C64::new(amplitude / 2.0, 0.0);
        if freq == 0 {
            return Self::constant(C64::new(amplitude, 0.0));
        }
        Self::from_terms(&[(freq, h), (-freq, h)])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient(&self, m: i64) -> C64 {
        if m.unsigned_abs() as usize > self.degree {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + self.degree as i64) as usize]
        }
    }

    pub fn dense(&self) -> &[C64] {
        &self.coeffs
    }

    /// Nonzero `(m, c_m)` pairs in increasing `m`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let d = self.degree as i64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(move |(i, c)| (i as i64 - d, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn mean(&self) -> C64 {
        self.coefficient(0)
    }

    pub fn eval(&self, t: f64) -> C64 {
        eval_dense(&self.coeffs, self.degree, t)
    }

    pub fn derivative(&self) -> Self {
        let d = self.degree as i64;
        TrigPoly {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * C64::new(0.0, 2.0 * PI * (i as i64 - d) as f64))
                .collect(),
        }
    }

    /// The function `t ↦ conj(f(t))`.
    pub fn conj_fn(&self) -> Self {
        TrigPoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        TrigPoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &TrigPoly) -> Self {
        let degree = self.degree.max(other.degree);
        let d = degree as i64;
        TrigPoly {
            degree,
            coeffs: (-d..=d).map(|m| self.coefficient(m) + other.coefficient(m)).collect(),
        }
    }

    pub fn sub(&self, other: &TrigPoly) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Pointwise product (coefficient convolution).
    pub fn mul(&self, other: &TrigPoly) -> Self {
        let degree = self.degree + other.degree;
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        TrigPoly { degree, coeffs }
    }

    /// `∫₀¹ f(t) conj(g(t)) dt` by Parseval.
    pub fn inner(&self, other: &TrigPoly) -> C64 {
        let d = self.degree.min(other.degree) as i64;
        (-d..=d).map(|m| self.coefficient(m) * other.coefficient(m).conj()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Drops vanishing outer coefficients.
    pub fn trimmed(&self) -> Self {
        let d = self.effective_degree(0.0);
        let lo = self.degree - d;
        TrigPoly {
            degree: d,
            coeffs: self.coeffs[lo..lo + 2 * d + 1].to_vec(),
        }
    }

    /// Smallest degree whose discarded tail has ℓ¹ mass at most
    /// `rel · Σ|c_m|`.
    pub fn effective_degree(&self, rel: f64) -> usize {
        let total: f64 = self.coeffs.iter().map(|c| c.norm()).sum();
        let budget = rel * total;
        let mut tail = 0.0;
        let mut d = self.degree;
        while d > 0 {
            let m = d as i64;
            let outer = self.coefficient(m).norm() + self.coefficient(-m).norm();
            if tail + outer > budget {
                break;
            }
            tail += outer;
            d -= 1;
        }
        d
    }

    /// True when `f(t)` is real for all t up to a coefficient tolerance.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        let d = self.degree as i64;
        (0..=d).all(|m| (self.coefficient(m) - self.coefficient(-m).conj()).norm() <= tol)
    }
}

/// Evaluates `Σ c[m + d] e^{i2πmt}` with a power recurrence.
#[inline]
pub(crate) fn eval_dense(coeffs: &[C64], d: usize, t: f64) -> C64 {
    if d == 0 {
        return coeffs[0];
    }
    let w = C64::from_polar(1.0, 2.0 * PI * t);
    let wi = w.conj();
    let mut acc = coeffs[d];
    let mut p = C64::new(1.0, 0.0);
    let mut q = C64::new(1.0, 0.0);
    for m in 1..=d {
        p *= w;
        q *= wi;
        acc += coeffs[d + m] * p + coeffs[d - m] * q;
    }
    acc
}
