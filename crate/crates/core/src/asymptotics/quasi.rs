use super::SOURCE;
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::linalg::{hermitian_eigen, CMatrix, Lu, C64};
use crate::lyapunov::{sample, track};
use crate::monodromy::IntegratorOptions;
use crate::potential::Potential;
use crate::spectrum::SpectralReport;
use crate::tolerances::REAL_DELTA_TOL;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest column-normalized condition number accepted by the trace fit.
const FIT_CONDITION_LIMIT: f64 = 1e12;
/// On the unit circle both `η` and `1/η` are admissible.
const UNIT_CIRCLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct QuasimomentumSample {
    pub z: C64,
    /// Averaged quasimomentum.
    pub k: C64,
    pub p: f64,
    /// Lyapunov exponent.
    pub q: f64,
    /// Per-branch `k_j`, continued along the contour.
    pub branches: Vec<C64>,
    /// Continuation crossed a collision cell or a branch point.
    pub flagged: bool,
}

/// Root of `η² − 2Δη + 1` with `|η| ≥ 1`.
fn eta(delta: C64) -> C64 {
    let r = (delta * delta - 1.0).sqrt();
    let (a, b) = (delta + r, delta - r);
    if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

/// The determination of `arccos Δ = i log η` closest to `target`.
pub fn select_branch(delta: C64, target: C64) -> C64 {
    let e = eta(delta);
    let k0 = C64::i() * e.ln();
    let signs: &[f64] = if e.norm().ln().abs() <= UNIT_CIRCLE_TOL {
        &[1.0, -1.0]
    } else {
        &[1.0]
    };
    let mut best = k0;
    let mut dist = f64::INFINITY;
    for &s in signs {
        let base = k0 * s;
        let m = ((target.re - base.re) / (2.0 * PI)).round();
        let cand = base + 2.0 * PI * m;
        let d = (cand - target).norm();
        if d < dist {
            dist = d;
            best = cand;
        }
    }
    best
}

/// Δ on the real axis is real; roundoff in Im Δ is dropped there.
fn realified(z: C64, delta: C64) -> C64 {
    if z.im == 0.0 && delta.im.abs() <= REAL_DELTA_TOL {
        C64::new(delta.re, 0.0)
    } else {
        delta
    }
}

/// Quasimomentum along `contour`. The first node anchors `k_j ≈ z`; later
/// nodes continue each branch from its recent values.
pub fn quasimomentum(p: &Potential, contour: &[C64], opts: &IntegratorOptions) -> Result<Vec<QuasimomentumSample>> {
    let tr = track(p, contour, opts)?;
    let n = tr.n();
    let mut out: Vec<QuasimomentumSample> = Vec::with_capacity(contour.len());
    for (i, &z) in contour.iter().enumerate() {
        let branches: Vec<C64> = (0..n)
            .map(|j| {
                // linear extrapolation keeps reflections at Δ = ±1 continuous
                let target = match i {
                    0 => z,
                    1 => out[0].branches[j] + (z - contour[0]),
                    _ => out[i - 1].branches[j] * 2.0 - out[i - 2].branches[j],
                };
                select_branch(realified(z, tr.value(j, i)), target)
            })
            .collect();
        let k = branches.iter().sum::<C64>() / n as f64;
        let flagged = (i > 0 && tr.is_collision_cell(i)) || tr.samples[i].near_branch_point;
        out.push(QuasimomentumSample {
            z,
            k,
            p: k.re,
            q: k.im,
            branches,
            flagged,
        });
    }
    Ok(out)
}

/// Averaged `Im k` from a set of branch values, independent of continuation.
fn exponent(z: C64, deltas: &[C64]) -> f64 {
    deltas.iter().map(|&d| eta(realified(z, d)).norm().ln()).sum::<f64>() / deltas.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub y: f64,
    pub k: C64,
    /// `k(iy) − iy`.
    pub shift: C64,
    /// `Σ_j 2 log Δ_j(iy)`.
    pub log_det_l: C64,
    pub predicted: C64,
    /// Distance between the two, imaginary part taken modulo 2π.
    pub detl_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceReport {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    /// `(Q0, Q1, Q2)` from the least-squares fit; absent when the fit is
    /// ill-conditioned.
    pub fitted: Option<(f64, f64, f64)>,
    pub fit_condition: f64,
    pub samples: Vec<TraceSample>,
    pub flags: Vec<Flag>,
}

impl TraceReport {
    pub fn detl_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.detl_defect).fold(0.0, f64::max)
    }

    pub fn fitted_q0(&self) -> Option<f64> {
        self.fitted.map(|f| f.0)
    }
}

fn wrap_imag(w: C64) -> C64 {
    let im = w.im - 2.0 * PI * (w.im / (2.0 * PI)).round();
    C64::new(w.re, im)
}

/// Samples `k` and `det L` on the imaginary axis and compares them with the
/// large-z expansion built from the trace invariants.
pub fn trace_check(p: &Potential, heights: &[f64], opts: &IntegratorOptions) -> Result<TraceReport> {
    if heights.len() < 4 {
        return Err(Error::argument("heights", format!("{} values given, at least 4 needed", heights.len())));
    }
    if let Some(y) = heights.iter().find(|y| !(10.0..=50.0).contains(*y)) {
        return Err(Error::argument("heights", format!("{y} lies outside [10, 50]")));
    }
    let mo = p.moments();
    let n = p.n() as f64;
    let samples: Vec<TraceSample> = heights
        .par_iter()
        .map(|&y| {
            let z = C64::new(0.0, y);
            let s = sample(p, z, opts)?;
            let k = s.deltas.iter().map(|&d| select_branch(d, z)).sum::<C64>() / n;
            let log_det_l: C64 = s.deltas.iter().map(|d| d.ln() * 2.0).sum();
            let w = z * 2.0;
            let predicted = -C64::i() * (z * 2.0 * n - mo.h0 / w - mo.h1 / (w * w) - mo.h2 / (w * w * w))
                - 2.0 * n * std::f64::consts::LN_2;
            Ok(TraceSample {
                y,
                k,
                shift: k - z,
                log_det_l,
                predicted,
                detl_defect: wrap_imag(log_det_l - predicted).norm(),
            })
        })
        .collect::<Result<_>>()?;

    let mut flags = Vec::new();
    let (fitted, fit_condition) = fit(&samples)?;
    if fitted.is_none() {
        flags.push(Flag::notice(
            SOURCE,
            format!("trace fit condition number {fit_condition:.3e} exceeds {FIT_CONDITION_LIMIT:.0e}; fit skipped"),
        ));
    }
    Ok(TraceReport {
        q0: mo.q0(),
        q1: mo.q1(),
        q2: mo.q2(),
        fitted,
        fit_condition,
        samples,
        flags,
    })
}

/// Real least squares of `k(iy) − iy = −Q0/z − Q1/z² − Q2/z³`, split into
/// `Re = Q1/y²` and `Im = Q0/y − Q2/y³`.
fn fit(samples: &[TraceSample]) -> Result<(Option<(f64, f64, f64)>, f64)> {
    let mut rows: Vec<([f64; 3], f64)> = Vec::new();
    for s in samples {
        let y = s.y;
        rows.push(([0.0, 1.0 / (y * y), 0.0], s.shift.re));
        rows.push(([1.0 / y, 0.0, -1.0 / (y * y * y)], s.shift.im));
    }
    let norms: Vec<f64> = (0..3)
        .map(|c| rows.iter().map(|(a, _)| a[c] * a[c]).sum::<f64>().sqrt())
        .collect();
    let gram = CMatrix::from_fn(3, 3, |i, j| {
        C64::new(rows.iter().map(|(a, _)| a[i] * a[j]).sum::<f64>() / (norms[i] * norms[j]), 0.0)
    });
    let rhs: Vec<C64> = (0..3)
        .map(|i| C64::new(rows.iter().map(|(a, b)| a[i] * b).sum::<f64>() / norms[i], 0.0))
        .collect();
    let (ev, _) = hermitian_eigen(&gram);
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(0.0, f64::max);
    let condition = if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY };
    if condition > FIT_CONDITION_LIMIT {
        return Ok((None, condition));
    }
    let x = Lu::new(&gram)?.solve(&rhs)?;
    Ok((Some((x[0].re / norms[0], x[1].re / norms[1], x[2].re / norms[2])), condition))
}

/// Lyapunov-exponent inequalities over the nodes of a band scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentCheck {
    pub q0: f64,
    /// Largest q on nodes where every branch is in band.
    pub max_q_full: f64,
    /// Largest q² on nodes with some branch out of band.
    pub max_q2_partial: f64,
    pub min_q: f64,
    pub full_nodes: usize,
    pub partial_nodes: usize,
    pub pass: bool,
}

pub fn exponent_check(report: &SpectralReport, p: &Potential) -> ExponentCheck {
    let q0 = p.moments().q0();
    let size = p.n();
    let mut check = ExponentCheck {
        q0,
        max_q_full: 0.0,
        max_q2_partial: 0.0,
        min_q: f64::INFINITY,
        full_nodes: 0,
        partial_nodes: 0,
        pass: true,
    };
    for node in &report.nodes {
        let z = C64::new(node.z, 0.0);
        let q = exponent(z, &node.deltas);
        check.min_q = check.min_q.min(q);
        if node.in_band == size {
            check.full_nodes += 1;
            check.max_q_full = check.max_q_full.max(q);
        } else {
            check.partial_nodes += 1;
            check.max_q2_partial = check.max_q2_partial.max(q * q);
        }
    }
    check.pass = check.max_q_full <= 1e-7 && check.max_q2_partial <= 2.0 * q0 + 1e-6 && check.min_q >= -1e-9;
    check
}
