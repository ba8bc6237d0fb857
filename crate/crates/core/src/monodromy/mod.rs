//! Fundamental solution of `−iJ₁ψ' + V_t ψ = zψ`, `ψ(0) = I`, and the
//! monodromy matrix `ψ(1, z)`.

mod rk;
mod series;
mod tableau;

pub use rk::StepStats;
pub use series::{series_psi, SeriesResult, MAX_SERIES_ORDER};

use crate::error::{Error, Result};
use crate::linalg::{det, symplectic_unit, CMatrix, C64, I};
use crate::potential::{Potential, PotentialEval};
use crate::tolerances::{DEFAULT_RTOL, MAX_IMAG, RTOL_RANGE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: DEFAULT_RTOL,
            max_steps: 100_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_rtol(rtol: f64) -> Result<Self> {
        validate_rtol(rtol)?;
        Ok(IntegratorOptions {
            rtol,
            ..Default::default()
        })
    }
}

pub fn validate_rtol(rtol: f64) -> Result<()> {
    let (lo, hi) = RTOL_RANGE;
    if !(rtol >= lo && rtol <= hi) {
        return Err(Error::config(
            "rtol",
            format!("{rtol:e} is outside the accepted range [{lo:e}, {hi:e}]"),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub z: C64,
    /// ψ(1, z).
    pub psi: CMatrix,
    /// ∂ψ(1, z)/∂z when requested.
    pub dpsi: Option<CMatrix>,
    pub steps: usize,
    pub rejected: usize,
    /// `|det ψ − 1|`.
    pub det_defect: f64,
    /// `max |(−JψᵀJ)ψ − I|`, the residual form of `ψ⁻¹ = −JψᵀJ`.
    pub symplectic_defect: f64,
}

impl MonodromyResult {
    /// Both defects lie inside their `e^{|Im z|}` envelopes.
    pub fn is_valid(&self) -> bool {
        let g = self.z.im.abs();
        self.det_defect <= 1e-9 * g.exp() && self.symplectic_defect <= 1e-8 * (2.0 * g).exp()
    }

    /// `ψ⁻¹` through the symplectic identity; exact up to the integration
    /// error and free of the conditioning of a numerical inverse.
    pub fn inverse(&self) -> CMatrix {
        symplectic_inverse(&self.psi)
    }

    /// `T₁ = Tr ψ(1)`, `T₂ = Tr ψ(1)²`.
    pub fn traces(&self) -> Traces {
        let psi2 = self.psi.matmul(&self.psi);
        Traces {
            z: self.z,
            t1: self.psi.trace(),
            t2: psi2.trace(),
        }
    }

    pub fn dim(&self) -> usize {
        self.psi.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traces {
    pub z: C64,
    pub t1: C64,
    pub t2: C64,
}

/// `−JψᵀJ`.
pub fn symplectic_inverse(psi: &CMatrix) -> CMatrix {
    let n = psi.rows() / 2;
    let j = symplectic_unit(n);
    (&(&j * &psi.transpose()) * &j).scale_real(-1.0)
}

pub fn symplectic_defect(psi: &CMatrix) -> f64 {
    let prod = &symplectic_inverse(psi) * psi;
    prod.max_abs_diff(&CMatrix::identity(psi.rows()))
}

/// `Tr ψᵐ` for `m = 1..=count`.
pub fn power_traces(psi: &CMatrix, count: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(count);
    let mut p = psi.clone();
    for m in 1..=count {
        out.push(p.trace());
        if m < count {
            p = p.matmul(psi);
        }
    }
    out
}

/// ψ(1, z).
pub fn integrate(p: &Potential, z: C64, opts: &IntegratorOptions) -> Result<MonodromyResult> {
    run(p, z, 1.0, false, opts)
}

/// ψ(1, z) together with ∂ψ/∂z from the variational equation.
pub fn integrate_with_derivative(
    p: &Potential,
    z: C64,
    opts: &IntegratorOptions,
) -> Result<MonodromyResult> {
    run(p, z, 1.0, true, opts)
}

/// ψ(t, z) for any `t ≥ 0`.
pub fn fundamental(p: &Potential, z: C64, t: f64, opts: &IntegratorOptions) -> Result<CMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::argument("t", format!("{t} is not a finite nonnegative time")));
    }
    Ok(run(p, z, t, false, opts)?.psi)
}

pub fn traces(p: &Potential, z: C64, opts: &IntegratorOptions) -> Result<Traces> {
    Ok(integrate(p, z, opts)?.traces())
}

fn run(
    p: &Potential,
    z: C64,
    t_end: f64,
    with_derivative: bool,
    opts: &IntegratorOptions,
) -> Result<MonodromyResult> {
    validate_rtol(opts.rtol)?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::argument("z", format!("{z} is not finite")));
    }
    if z.im.abs() > MAX_IMAG {
        return Err(Error::ImagTooLarge {
            im: z.im,
            limit: MAX_IMAG,
        });
    }
    let d = p.dim();
    let block = d * d;
    let mut y = vec![C64::new(0.0, 0.0); if with_derivative { 2 * block } else { block }];
    for i in 0..d {
        y[i * d + i] = C64::new(1.0, 0.0);
    }
    let mut rhs = DiracRhs::new(p, z);
    if p.is_constant() {
        rhs.freeze();
    }
    let stats = rk::integrate(
        |t, y, out| rhs.apply(t, y, out),
        &mut y,
        0.0,
        t_end,
        opts.rtol,
        opts.max_steps,
    )
    .map_err(|f| match f {
        rk::RkFailure::Underflow { t } => Error::StepUnderflow { t, z },
        rk::RkFailure::Budget { t } => Error::StepBudget {
            t,
            z,
            max_steps: opts.max_steps,
        },
    })?;
    let psi = CMatrix::from_vec(d, d, y[..block].to_vec());
    let dpsi = with_derivative.then(|| CMatrix::from_vec(d, d, y[block..].to_vec()));
    let det_defect = (det(&psi)? - C64::new(1.0, 0.0)).norm();
    let symplectic_defect = symplectic_defect(&psi);
    Ok(MonodromyResult {
        z,
        psi,
        dpsi,
        steps: stats.accepted,
        rejected: stats.rejected,
        det_defect,
        symplectic_defect,
    })
}

/// Right-hand side `ψ' = iJ₁(z − V_t)ψ` on the row-major state, optionally
/// followed by the derivative block `D' = iJ₁ψ + iJ₁(z − V_t)D`.
struct DiracRhs {
    eval: PotentialEval,
    n: usize,
    z: C64,
    vals: Vec<C64>,
    v: Vec<C64>,
    frozen: bool,
}

impl DiracRhs {
    fn new(p: &Potential, z: C64) -> Self {
        let eval = p.evaluator();
        let n = p.n();
        DiracRhs {
            vals: vec![C64::new(0.0, 0.0); eval.slot_count()],
            v: vec![C64::new(0.0, 0.0); n * n],
            eval,
            n,
            z,
            frozen: false,
        }
    }

    /// Evaluates v once for a t-independent potential.
    fn freeze(&mut self) {
        self.eval.eval_into(0.0, &mut self.vals, &mut self.v);
        self.frozen = true;
    }

    #[inline]
    fn apply(&mut self, t: f64, y: &[C64], out: &mut [C64]) {
        if !self.frozen {
            self.eval.eval_into(t, &mut self.vals, &mut self.v);
        }
        let n = self.n;
        let d = 2 * n;
        let block = d * d;
        let (psi, dpsi) = y.split_at(block);
        let (out_psi, out_d) = out.split_at_mut(block);
        self.block(psi, out_psi);
        if !dpsi.is_empty() {
            self.block(dpsi, out_d);
            for r in 0..d {
                let s = if r < n { I } else { -I };
                for c in 0..d {
                    out_d[r * d + c] += s * psi[r * d + c];
                }
            }
        }
    }

    #[inline]
    fn block(&self, y: &[C64], out: &mut [C64]) {
        let n = self.n;
        let d = 2 * n;
        let z = self.z;
        let v = &self.v;
        for j in 0..n {
            for c in 0..d {
                // top row j: i(z y_j − Σ_k v_jk y_{n+k})
                let mut top = z * y[j * d + c];
                // bottom row n+j: −i(z y_{n+j} − Σ_k conj(v_jk) y_k)
                let mut bot = z * y[(n + j) * d + c];
                for k in 0..n {
                    let vjk = v[j * n + k];
                    top -= vjk * y[(n + k) * d + c];
                    bot -= vjk.conj() * y[k * d + c];
                }
                out[j * d + c] = I * top;
                out[(n + j) * d + c] = -I * bot;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, j1, mat_exp};
    use crate::trig::TrigPoly;

    fn opts() -> IntegratorOptions {
        IntegratorOptions::default()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn wiggly() -> Potential {
        let a = TrigPoly::from_terms(&[(0, c(0.4, 0.0)), (1, c(0.2, -0.1)), (-2, c(0.0, 0.3))]);
        let b = TrigPoly::from_terms(&[(1, c(-0.3, 0.2)), (-1, c(0.1, 0.0))]);
        let d = TrigPoly::cosine(0.7, 3);
        Potential::new(2, vec![a, b.clone(), b, d]).unwrap()
    }

    #[test]
    fn free_equation_is_a_phase() {
        let p = Potential::zero(2);
        for &z in &[c(1.3, 0.0), c(-4.0, 0.7), c(10.0, -3.0)] {
            let r = integrate(&p, z, &opts()).unwrap();
            let want = CMatrix::diag(&[
                (I * z).exp(),
                (I * z).exp(),
                (-I * z).exp(),
                (-I * z).exp(),
            ]);
            let scale = z.im.abs().exp();
            assert!(r.psi.max_abs_diff(&want) < 1e-11 * scale, "{z}: {}", r.psi.max_abs_diff(&want));
        }
    }

    #[test]
    fn constant_potential_matches_exponential() {
        let v0 = CMatrix::from_fn(2, 2, |j, k| match (j, k) {
            (0, 0) => c(1.0, 0.5),
            (1, 1) => c(-0.7, 0.0),
            _ => c(0.3, -0.2),
        });
        let p = Potential::constant(&v0).unwrap();
        let z = c(2.0, 0.0);
        let r = integrate(&p, z, &opts()).unwrap();
        let gen = (&j1(2) * &p.operator_at(0.0).scale_real(-1.0).add_identity(z)).scale(I);
        let want = mat_exp(&gen).unwrap();
        assert!(r.psi.max_abs_diff(&want) < 1e-10, "{}", r.psi.max_abs_diff(&want));
    }

    #[test]
    fn unperturbed_traces_match_closed_form() {
        let p = Potential::example_4x4(1.0, 0.0, 0.05).unwrap();
        for &(z, m) in &[(3.0f64, 1usize), (2.5, 2)] {
            let r = integrate(&p, c(z, 0.0), &opts()).unwrap();
            let k = (z * z - 1.0).sqrt();
            let t = r.traces();
            let got = if m == 1 { t.t1 } else { t.t2 };
            let want = 2.0 * ((m as f64 * k).cos() + (m as f64 * z).cos());
            assert!((got - c(want, 0.0)).norm() < 1e-10, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn structural_identities_hold() {
        let p = wiggly();
        for &z in &[c(0.3, 0.0), c(5.0, 1.5), c(-7.0, -4.0)] {
            let r = integrate(&p, z, &opts()).unwrap();
            assert!(r.is_valid(), "{z}: det {} sympl {}", r.det_defect, r.symplectic_defect);
            let inv = crate::linalg::det_inv(&r.psi).unwrap().inverse.unwrap();
            let scale = (2.0 * z.im.abs()).exp();
            assert!(inv.max_abs_diff(&r.inverse()) < 1e-8 * scale);
        }
    }

    #[test]
    fn real_z_gives_real_trace_and_palindromic_multipliers() {
        let p = wiggly();
        let r = integrate(&p, c(2.7, 0.0), &opts()).unwrap();
        assert!(r.traces().t1.im.abs() < 1e-9);
        let ev = eigenvalues(&r.psi).unwrap();
        for t in &ev {
            let best = ev.iter().map(|s| (t * s - 1.0).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7);
            let refl = ev.iter().map(|s| (s - 1.0 / t.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(refl < 1e-7);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = wiggly();
        let z = c(3.1, 0.4);
        let r = integrate_with_derivative(&p, z, &opts()).unwrap();
        let h = 1e-5;
        let plus = integrate(&p, z + h, &opts()).unwrap().psi;
        let minus = integrate(&p, z - h, &opts()).unwrap().psi;
        let fd = (&plus - &minus).scale_real(0.5 / h);
        assert!(r.dpsi.unwrap().max_abs_diff(&fd) < 1e-7);
    }

    #[test]
    fn two_periods_equal_the_square() {
        let p = wiggly();
        let z = c(1.7, 0.2);
        let psi2 = fundamental(&p, z, 2.0, &opts()).unwrap();
        let psi1 = integrate(&p, z, &opts()).unwrap().psi;
        assert!(psi2.max_abs_diff(&psi1.matmul(&psi1)) < 1e-10);
    }

    #[test]
    fn guards_reject_bad_input() {
        let p = Potential::zero(1);
        assert!(matches!(
            integrate(&p, c(0.0, 61.0), &opts()),
            Err(Error::ImagTooLarge { .. })
        ));
        let bad = IntegratorOptions {
            rtol: 1.0,
            ..opts()
        };
        match integrate(&p, c(1.0, 0.0), &bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "rtol"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn power_traces_of_free_monodromy() {
        let r = integrate(&Potential::zero(1), c(0.9, 0.0), &opts()).unwrap();
        let t = power_traces(&r.psi, 3);
        for (m, tm) in t.iter().enumerate() {
            assert!((tm - c(2.0 * ((m + 1) as f64 * 0.9).cos(), 0.0)).norm() < 1e-11);
        }
    }
}
