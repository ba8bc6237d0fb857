//! Multipliers, Lyapunov values `Δ_j(z)`, the discriminant `ρ(z)` and the
//! determinants `det(ψ ∓ I)` built from one monodromy matrix.

mod track;

pub use track::{track, BranchTrack};

use crate::error::{Error, Result};
use crate::linalg::{det, eigenvalues, symplectic_unit, CMatrix, C64};
use crate::monodromy::{integrate, integrate_with_derivative, IntegratorOptions, MonodromyResult, Traces};
use crate::potential::Potential;
use crate::tolerances::{COLLISION_TOL, PAIRING_TOL};

#[derive(Clone, Debug)]
pub struct LyapunovSample {
    pub z: C64,
    /// `(τ, τ⁻¹)` pairs aligned with `deltas`, `|τ| ≥ |τ⁻¹|`.
    pub multipliers: Vec<(C64, C64)>,
    /// Largest `|ττ' − 1|` over the pairs.
    pub pairing_residual: f64,
    /// False when some pair missed the pairing tolerance; `raw_multipliers`
    /// then holds the unpaired spectrum.
    pub pairing_ok: bool,
    pub raw_multipliers: Vec<C64>,
    /// N values, each a doubled eigenvalue of `L = ½(ψ + ψ⁻¹)`.
    pub deltas: Vec<C64>,
    /// Largest `|Δ_j − ½(τ_j + τ_j⁻¹)|`.
    pub delta_residual: f64,
    /// Largest distance inside a merged pair of L-eigenvalues.
    pub cluster_spread: f64,
    /// Smallest distance from a merged pair to any eigenvalue outside it.
    pub cluster_margin: f64,
    pub near_branch_point: bool,
    /// `∏_{i<j} (Δ_i − Δ_j)²`.
    pub rho: C64,
    pub monodromy_valid: bool,
}

impl LyapunovSample {
    pub fn n(&self) -> usize {
        self.deltas.len()
    }
}

pub fn sample(p: &Potential, z: C64, opts: &IntegratorOptions) -> Result<LyapunovSample> {
    sample_from(&integrate(p, z, opts)?)
}

/// `L = ½(ψ + ψ⁻¹)` with the symplectic inverse.
pub fn lyapunov_matrix(psi: &CMatrix) -> CMatrix {
    let inv = crate::monodromy::symplectic_inverse(psi);
    (psi + &inv).scale_real(0.5)
}

pub fn sample_from(m: &MonodromyResult) -> Result<LyapunovSample> {
    let d = m.dim();
    let n = d / 2;
    let raw = eigenvalues(&m.psi)?;
    let (pairs, pairing_residual) = pair_multipliers(&raw);
    let tol = PAIRING_TOL * (2.0 * m.z.im.abs()).exp();
    let pairing_ok = pairing_residual <= tol;

    let l_values = eigenvalues(&lyapunov_matrix(&m.psi))?;
    let clusters = merge_pairs(&l_values);
    let mut deltas: Vec<C64> = clusters.iter().map(|&(a, b)| (l_values[a] + l_values[b]) * 0.5).collect();
    deltas.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let cluster_spread = clusters
        .iter()
        .map(|&(a, b)| (l_values[a] - l_values[b]).norm())
        .fold(0.0, f64::max);
    let mut cluster_margin = f64::INFINITY;
    for &(a, b) in &clusters {
        for (k, v) in l_values.iter().enumerate() {
            if k != a && k != b {
                let dist = (v - l_values[a]).norm().min((v - l_values[b]).norm());
                cluster_margin = cluster_margin.min(dist);
            }
        }
    }
    let scale = deltas.iter().fold(1.0f64, |s, x| s.max(x.norm()));
    let near_branch_point = n > 1 && cluster_margin < COLLISION_TOL * scale;

    // align multiplier pairs with the sorted Δ
    let mut used = vec![false; pairs.len()];
    let mut multipliers = Vec::with_capacity(n);
    let mut delta_residual = 0.0f64;
    for dlt in &deltas {
        let (best, dist) = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, &(t, s))| (i, ((t + s) * 0.5 - dlt).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("one pair per Δ");
        used[best] = true;
        multipliers.push(pairs[best]);
        delta_residual = delta_residual.max(dist);
    }

    Ok(LyapunovSample {
        z: m.z,
        rho: rho_from_deltas(&deltas),
        multipliers,
        pairing_residual,
        pairing_ok,
        raw_multipliers: raw,
        deltas,
        delta_residual,
        cluster_spread,
        cluster_margin,
        near_branch_point,
        monodromy_valid: m.is_valid(),
    })
}

/// Greedy pairing by smallest `|ττ' − 1|`.
fn pair_multipliers(values: &[C64]) -> (Vec<(C64, C64)>, f64) {
    let mut used = vec![false; values.len()];
    let mut pairs = Vec::with_capacity(values.len() / 2);
    let mut worst = 0.0f64;
    for _ in 0..values.len() / 2 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..values.len() {
            if used[i] {
                continue;
            }
            for j in i + 1..values.len() {
                if used[j] {
                    continue;
                }
                let r = (values[i] * values[j] - 1.0).norm();
                if r < best.2 {
                    best = (i, j, r);
                }
            }
        }
        let (i, j, r) = best;
        used[i] = true;
        used[j] = true;
        worst = worst.max(r);
        let (a, b) = (values[i], values[j]);
        pairs.push(if a.norm() >= b.norm() { (a, b) } else { (b, a) });
    }
    (pairs, worst)
}

/// Greedy nearest-neighbour merging of 2N values into N pairs.
fn merge_pairs(values: &[C64]) -> Vec<(usize, usize)> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            cand.push(((values[i] - values[j]).norm(), i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = vec![false; values.len()];
    let mut out = Vec::with_capacity(values.len() / 2);
    for (_, i, j) in cand {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            out.push((i, j));
        }
    }
    out
}

pub fn rho_from_deltas(deltas: &[C64]) -> C64 {
    let mut r = C64::new(1.0, 0.0);
    for i in 0..deltas.len() {
        for j in i + 1..deltas.len() {
            let d = deltas[i] - deltas[j];
            r *= d * d;
        }
    }
    r
}

/// `ρ = (T₂ + 4)/2 − T₁²/4` for N = 2.
pub fn rho_from_traces(t: &Traces) -> C64 {
    (t.t2 + 4.0) * 0.5 - t.t1 * t.t1 * 0.25
}

pub fn rho_n2(p: &Potential, z: C64, opts: &IntegratorOptions) -> Result<C64> {
    if p.n() != 2 {
        return Err(Error::WrongSize {
            expected: 2,
            got: p.n(),
        });
    }
    Ok(rho_from_traces(&integrate(p, z, opts)?.traces()))
}

/// Value of an entire function of z with optional derivative and a
/// magnitude scale for residual tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub z: C64,
    pub value: C64,
    pub derivative: Option<C64>,
    pub scale: f64,
}

/// Which entire function of the monodromy to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpectralFunction {
    /// `det(ψ(1, z) − I)`.
    Periodic,
    /// `det(ψ(1, z) + I)`.
    Antiperiodic,
    /// `ρ(z)`.
    Discriminant,
}

impl SpectralFunction {
    pub fn name(self) -> &'static str {
        match self {
            SpectralFunction::Periodic => "periodic",
            SpectralFunction::Antiperiodic => "antiperiodic",
            SpectralFunction::Discriminant => "resonance",
        }
    }

    pub fn evaluate(self, m: &MonodromyResult) -> Result<Evaluation> {
        match self {
            SpectralFunction::Periodic => det_shift(m, -1.0),
            SpectralFunction::Antiperiodic => det_shift(m, 1.0),
            SpectralFunction::Discriminant => discriminant(m),
        }
    }

    pub fn evaluate_at(
        self,
        p: &Potential,
        z: C64,
        opts: &IntegratorOptions,
        with_derivative: bool,
    ) -> Result<Evaluation> {
        let m = if with_derivative {
            integrate_with_derivative(p, z, opts)?
        } else {
            integrate(p, z, opts)?
        };
        self.evaluate(&m)
    }
}

/// `det(ψ + shift·I)`; the derivative uses row replacement, which stays
/// accurate at singular ψ + shift·I.
pub fn det_shift(m: &MonodromyResult, shift: f64) -> Result<Evaluation> {
    let a = m.psi.add_identity(C64::new(shift, 0.0));
    let value = det(&a)?;
    let derivative = match &m.dpsi {
        Some(da) => Some(det_derivative(&a, da)?),
        None => None,
    };
    let l = lyapunov_matrix(&m.psi);
    // each factor 2(1 ± Δ_j) is bounded by 2(1 + |Δ_j|)
    let delta_bound = l.norm_spectral();
    let scale = (2.0 * (1.0 + delta_bound)).powi((m.dim() / 2) as i32);
    Ok(Evaluation {
        z: m.z,
        value,
        derivative,
        scale,
    })
}

/// `ρ(z)`: the trace form `(T₂ + 4)/2 − T₁²/4` when N = 2, the Hankel
/// determinant otherwise.
pub fn discriminant(m: &MonodromyResult) -> Result<Evaluation> {
    if m.dim() == 4 {
        return Ok(discriminant_traces(m));
    }
    discriminant_hankel(m)
}

fn discriminant_traces(m: &MonodromyResult) -> Evaluation {
    let t = m.traces();
    let derivative = m.dpsi.as_ref().map(|dp| {
        let dt1 = dp.trace();
        let dt2 = m.psi.matmul(dp).trace() * 2.0;
        dt2 * 0.5 - t.t1 * dt1 * 0.5
    });
    let l = lyapunov_matrix(&m.psi);
    Evaluation {
        z: m.z,
        value: rho_from_traces(&t),
        derivative,
        scale: (2.0 * (1.0 + l.norm_spectral())).powi(2),
    }
}

/// `ρ` as the Hankel determinant `det[p_{a+b}]`, `p_k = ½ Tr L^k`.
pub fn discriminant_hankel(m: &MonodromyResult) -> Result<Evaluation> {
    let d = m.dim();
    let n = d / 2;
    let l = lyapunov_matrix(&m.psi);
    let dl = m.dpsi.as_ref().map(|dp| {
        let j = symplectic_unit(n);
        let dinv = (&(&j * &dp.transpose()) * &j).scale_real(-1.0);
        (dp + &dinv).scale_real(0.5)
    });
    let kmax = 2 * n - 2;
    let mut powers = vec![CMatrix::identity(d)];
    for k in 1..=kmax {
        let next = powers[k - 1].matmul(&l);
        powers.push(next);
    }
    let pk: Vec<C64> = powers.iter().map(|p| p.trace() * 0.5).collect();
    let hankel = CMatrix::from_fn(n, n, |a, b| pk[a + b]);
    let value = det(&hankel)?;
    let derivative = match dl {
        Some(dl) => {
            let dpk: Vec<C64> = (0..=kmax)
                .map(|k| {
                    if k == 0 {
                        C64::new(0.0, 0.0)
                    } else {
                        powers[k - 1].matmul(&dl).trace() * (0.5 * k as f64)
                    }
                })
                .collect();
            let dh = CMatrix::from_fn(n, n, |a, b| dpk[a + b]);
            Some(det_derivative(&hankel, &dh)?)
        }
        None => None,
    };
    let delta_bound = 1.0 + l.norm_spectral();
    let pairs = (n * (n.saturating_sub(1)) / 2) as i32;
    let scale = (2.0 * delta_bound).powi(2 * pairs);
    Ok(Evaluation {
        z: m.z,
        value,
        derivative,
        scale,
    })
}

/// `d/dz det A = Σ_r det(A with row r replaced by row r of A')`.
fn det_derivative(a: &CMatrix, da: &CMatrix) -> Result<C64> {
    let n = a.rows();
    let mut total = C64::new(0.0, 0.0);
    for r in 0..n {
        let mut b = a.clone();
        for c in 0..n {
            b[(r, c)] = da[(r, c)];
        }
        total += det(&b)?;
    }
    Ok(total)
}
