//! Large-n predictions for eigenvalues and resonances, their numeric
//! validation, the finite-gap criterion, quasimomentum and trace
//! invariants.

mod quasi;

pub use quasi::{
    exponent_check, quasimomentum, select_branch, trace_check, ExponentCheck, QuasimomentumSample, TraceReport,
    TraceSample,
};

use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::linalg::{eigenvalues, C64};
use crate::monodromy::IntegratorOptions;
use crate::potential::{normal_form, Potential};
use crate::roots::Disk;
use crate::spectrum::{find_eigenvalues, find_resonances, EigenKind, ResonanceLabel, ResonanceList, ResonanceTarget};
use rayon::prelude::*;
use std::f64::consts::PI;

const SOURCE: &str = "asymptotics";
/// Relative tolerance for calling two ν equal.
const TIE_TOL: f64 = 1e-10;

/// Predicted pair of resonances for the entry pair `alpha = (j, j')`, j < j'.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonancePrediction {
    pub alpha: (usize, usize),
    /// `πn + (ν_j + ν_j')/(4πn)`.
    pub center: f64,
    /// `|v̂'_{n,α}|` in the normal frame.
    pub vhat_abs: f64,
    /// `πn + ((ν_j + ν_j')/2 ∓ |v̂'_{n,α}|)/(2πn)`.
    pub minus: f64,
    pub plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub n: i64,
    pub kind: EigenKind,
    /// Ascending ν of the normal form.
    pub nu: Vec<f64>,
    /// Ascending spectrum of `𝒱 − iJ₁V̂'_n`.
    pub zeta: Vec<f64>,
    /// Largest `|Im ζ|` returned by the eigensolver.
    pub zeta_imag: f64,
    /// `πn + ζ/(2πn)`.
    pub eigenvalues: Vec<f64>,
    pub resonances: Vec<ResonancePrediction>,
    /// Resonance centers are emitted only for pairs with distinct ν.
    pub centers_omitted: Vec<String>,
    /// Split resonance predictions need strictly increasing ν.
    pub split_omitted: Option<String>,
}

impl Prediction {
    /// Leading branch shape `cos(z − ν_j/2z)` near large z.
    pub fn branch_shape(&self, j: usize, z: C64) -> C64 {
        (z - self.nu[j] / (z * 2.0)).cos()
    }
}

fn kind_of(n: i64) -> EigenKind {
    if n.rem_euclid(2) == 0 {
        EigenKind::Periodic
    } else {
        EigenKind::Antiperiodic
    }
}

fn ties(nu: &[f64]) -> f64 {
    TIE_TOL * nu.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

pub fn predict(p: &Potential, n: i64) -> Result<Prediction> {
    if n == 0 {
        return Err(Error::argument("n", "predictions need |n| ≥ 1"));
    }
    let normal = normal_form(p)?;
    let q = &normal.potential;
    let size = q.n();
    let moments = q.moments();
    let fourier = q.fourier_data(n);
    let shifted = fourier.shifted_moment(&moments.second);
    let raw = eigenvalues(&shifted)?;
    let zeta_imag = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut zeta: Vec<f64> = raw.iter().map(|z| z.re).collect();
    zeta.sort_by(f64::total_cmp);
    let pin = PI * n as f64;
    let eigenvalues = zeta.iter().map(|z| pin + z / (2.0 * pin)).collect();

    let nu = normal.nu.clone();
    let tol = ties(&nu);
    let strictly_increasing = nu.windows(2).all(|w| w[1] - w[0] > tol);
    let split_omitted = (!strictly_increasing && size > 1).then(|| {
        "ν is not strictly increasing; split resonance predictions need distinct ν".to_string()
    });
    let mut resonances = Vec::new();
    let mut centers_omitted = Vec::new();
    for j in 0..size {
        for k in j + 1..size {
            if (nu[j] - nu[k]).abs() <= tol {
                centers_omitted.push(format!("ν_{} = ν_{}", j + 1, k + 1));
                continue;
            }
            let vhat_abs = fourier.vhat_prime[(j, k)].norm();
            let mean = 0.5 * (nu[j] + nu[k]);
            let (minus, plus) = if strictly_increasing {
                (pin + (mean - vhat_abs) / (2.0 * pin), pin + (mean + vhat_abs) / (2.0 * pin))
            } else {
                (f64::NAN, f64::NAN)
            };
            resonances.push(ResonancePrediction {
                alpha: (j + 1, k + 1),
                center: pin + (nu[j] + nu[k]) / (4.0 * pin),
                vhat_abs,
                minus,
                plus,
            });
        }
    }
    Ok(Prediction {
        n,
        kind: kind_of(n),
        nu,
        zeta,
        zeta_imag,
        eigenvalues,
        resonances,
        centers_omitted,
        split_omitted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Periodic or antiperiodic eigenvalues against `πn + ζ/(2πn)`.
    Eigenvalue,
    /// Resonances against the pair center.
    ResonanceCenter,
    /// Resonances against the split pair.
    Resonance,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Eigenvalue => "eigenvalue",
            Family::ResonanceCenter => "resonance-center",
            Family::Resonance => "resonance",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    pub n: i64,
    pub family: Family,
    pub alpha: Option<(usize, usize)>,
    pub predicted: C64,
    pub numeric: C64,
    pub residual: f64,
    /// `residual · n²`.
    pub scaled: f64,
}

/// A value left over after matching: a numeric root with no prediction or
/// the other way round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unmatched {
    pub n: i64,
    pub family: Family,
    pub value: C64,
    pub numeric: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationTable {
    pub rows: Vec<ResidualRow>,
    pub unmatched: Vec<Unmatched>,
    pub flags: Vec<Flag>,
}

impl ValidationTable {
    pub fn max_scaled(&self, family: Family) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.scaled)
            .fold(0.0, f64::max)
    }

    /// Largest scaled residual over the first and the last third of the
    /// n-range.
    pub fn thirds(&self, family: Family) -> (f64, f64) {
        let ns: Vec<i64> = self.rows.iter().filter(|r| r.family == family).map(|r| r.n).collect();
        let (Some(&lo), Some(&hi)) = (ns.iter().min(), ns.iter().max()) else {
            return (0.0, 0.0);
        };
        let span = (hi - lo + 1) as f64 / 3.0;
        let third = |r: &&ResidualRow| ((r.n - lo) as f64 / span).floor() as i64;
        let max_in = |t: i64| {
            self.rows
                .iter()
                .filter(|r| r.family == family)
                .filter(|r| third(r) == t)
                .map(|r| r.scaled)
                .fold(0.0, f64::max)
        };
        (max_in(0), max_in(2))
    }
}

struct CellResult {
    rows: Vec<ResidualRow>,
    unmatched: Vec<Unmatched>,
    flags: Vec<Flag>,
}

/// Compares numeric eigenvalues and resonances with [`predict`] on every
/// cell of `n_range`.
pub fn validate(p: &Potential, n_range: (i64, i64), opts: &IntegratorOptions) -> Result<ValidationTable> {
    let (lo, hi) = n_range;
    if lo > hi || lo < 1 {
        return Err(Error::argument("n_range", format!("[{lo}, {hi}] must be an increasing range of n ≥ 1")));
    }
    let cells: Vec<CellResult> = (lo..=hi)
        .into_par_iter()
        .map(|n| validate_cell(p, n, opts))
        .collect::<Result<_>>()?;
    let mut table = ValidationTable::default();
    for c in cells {
        table.rows.extend(c.rows);
        table.unmatched.extend(c.unmatched);
        table.flags.extend(c.flags);
    }
    if !table.unmatched.is_empty() {
        table.flags.push(Flag::notice(
            SOURCE,
            format!("{} values could not be matched to a prediction", table.unmatched.len()),
        ));
    }
    Ok(table)
}

fn validate_cell(p: &Potential, n: i64, opts: &IntegratorOptions) -> Result<CellResult> {
    let pred = predict(p, n)?;
    let scale = (n * n) as f64;
    let mut out = CellResult {
        rows: Vec::new(),
        unmatched: Vec::new(),
        flags: Vec::new(),
    };
    let eig = find_eigenvalues(p, pred.kind, (n, n), opts)?;
    out.flags.extend(eig.flags);
    let numeric: Vec<C64> = eig
        .roots
        .iter()
        .flat_map(|r| std::iter::repeat(C64::new(r.z, 0.0)).take(r.multiplicity))
        .collect();
    let predicted: Vec<(C64, Option<(usize, usize)>)> =
        pred.eigenvalues.iter().map(|&z| (C64::new(z, 0.0), None)).collect();
    match_values(n, Family::Eigenvalue, &predicted, &numeric, scale, &mut out);

    if pred.resonances.is_empty() {
        return Ok(out);
    }
    let pin = PI * n as f64;
    let offset = pred.resonances.iter().map(|r| r.center - pin).sum::<f64>() / pred.resonances.len() as f64;
    let disk = Disk::new(C64::new(pin + offset.clamp(-1.0, 1.0), 0.0), 1.2);
    let res = find_resonances(p, ResonanceTarget::Disk(disk), opts)?;
    out.flags.extend(res.flags.iter().cloned());
    let numeric: Vec<C64> = res
        .real_roots
        .iter()
        .chain(&res.complex_roots)
        .flat_map(|r| std::iter::repeat(r.z).take(r.multiplicity))
        .collect();
    let centers: Vec<(C64, Option<(usize, usize)>)> = pred
        .resonances
        .iter()
        .flat_map(|r| [(C64::new(r.center, 0.0), Some(r.alpha)); 2])
        .collect();
    match_values(n, Family::ResonanceCenter, &centers, &numeric, scale, &mut out);
    if pred.split_omitted.is_none() {
        let split: Vec<(C64, Option<(usize, usize)>)> = pred
            .resonances
            .iter()
            .flat_map(|r| [(C64::new(r.minus, 0.0), Some(r.alpha)), (C64::new(r.plus, 0.0), Some(r.alpha))])
            .collect();
        match_values(n, Family::Resonance, &split, &numeric, scale, &mut out);
    }
    Ok(out)
}

/// Greedy global nearest-neighbour matching.
fn match_values(
    n: i64,
    family: Family,
    predicted: &[(C64, Option<(usize, usize)>)],
    numeric: &[C64],
    scale: f64,
    out: &mut CellResult,
) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, (p, _)) in predicted.iter().enumerate() {
        for (j, z) in numeric.iter().enumerate() {
            pairs.push(((p - z).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_n = vec![false; numeric.len()];
    let mut rows = Vec::new();
    for (d, i, j) in pairs {
        if used_p[i] || used_n[j] {
            continue;
        }
        used_p[i] = true;
        used_n[j] = true;
        rows.push(ResidualRow {
            n,
            family,
            alpha: predicted[i].1,
            predicted: predicted[i].0,
            numeric: numeric[j],
            residual: d,
            scaled: d * scale,
        });
    }
    rows.sort_by(|a, b| {
        a.predicted
            .re
            .total_cmp(&b.predicted.re)
            .then(a.numeric.re.total_cmp(&b.numeric.re))
            .then(a.numeric.im.total_cmp(&b.numeric.im))
    });
    out.rows.extend(rows);
    for (i, (p, _)) in predicted.iter().enumerate() {
        if !used_p[i] {
            out.unmatched.push(Unmatched {
                n,
                family,
                value: *p,
                numeric: false,
            });
        }
    }
    for (j, z) in numeric.iter().enumerate() {
        if !used_n[j] {
            out.unmatched.push(Unmatched {
                n,
                family,
                value: *z,
                numeric: true,
            });
        }
    }
}

/// Attaches `(n, α)` labels to resonances from the nearest split
/// prediction of their cell.
pub fn label_resonances(p: &Potential, list: &mut ResonanceList) -> Result<()> {
    let mut labels = Vec::new();
    for r in list.real_roots.iter().chain(&list.complex_roots) {
        let n = (r.z.re / PI).round() as i64;
        if n == 0 {
            continue;
        }
        let pred = predict(p, n)?;
        let best = pred
            .resonances
            .iter()
            .flat_map(|q| [(q.minus, q.alpha), (q.plus, q.alpha), (q.center, q.alpha)])
            .filter(|(z, _)| z.is_finite())
            .min_by(|a, b| (a.0 - r.z.re).abs().total_cmp(&(b.0 - r.z.re).abs()));
        if let Some((_, alpha)) = best {
            labels.push(ResonanceLabel { root: r.z, n, alpha });
        }
    }
    list.pairing = labels;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapVerdict {
    FinitelyManyGapsPredicted,
    InfiniteGapsPossible,
}

impl GapVerdict {
    pub fn name(self) -> &'static str {
        match self {
            GapVerdict::FinitelyManyGapsPredicted => "finitely-many-gaps-predicted",
            GapVerdict::InfiniteGapsPossible => "infinite-gaps-possible",
        }
    }
}

/// Fourier evidence for one anti-diagonal entry `α = (j, N+1−j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonDegeneracy {
    pub alpha: (usize, usize),
    /// `(n, |v̂'_{n,α}|, (|v̂'|² + 1/|n|)/|v̂'|)` for `1 ≤ |n| ≤ degree`.
    pub coefficients: Vec<(i64, f64, f64)>,
    /// Indices n with `v̂'_{n,α} ≠ 0`.
    pub nonzero: Vec<i64>,
}

impl NonDegeneracy {
    /// The entry carries Fourier weight at every index up to the degree.
    pub fn satisfied(&self) -> bool {
        !self.coefficients.is_empty() && self.nonzero.len() == self.coefficients.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapCriterion {
    pub nu: Vec<f64>,
    /// `ν_j + ν_{N+1−j}`.
    pub sums: Vec<f64>,
    pub verdict: GapVerdict,
    pub nondegeneracy: Vec<NonDegeneracy>,
}

/// Tests the anti-diagonal identity `ν₁ + ν_N = ν₂ + ν_{N−1} = …`. Refuses
/// potentials with tied ν.
pub fn gap_criterion(p: &Potential) -> Result<GapCriterion> {
    let normal = normal_form(p)?;
    let nu = normal.nu.clone();
    let size = nu.len();
    let tol = ties(&nu);
    for j in 0..size.saturating_sub(1) {
        if nu[j + 1] - nu[j] <= tol {
            return Err(Error::argument(
                "potential",
                format!(
                    "ν_{} = ν_{} = {}; the gap criterion needs strictly increasing ν",
                    j + 1,
                    j + 2,
                    nu[j]
                ),
            ));
        }
    }
    let sums: Vec<f64> = (0..size).map(|j| nu[j] + nu[size - 1 - j]).collect();
    let equal = sums.iter().all(|s| (s - sums[0]).abs() <= tol);
    let q = &normal.potential;
    let degree = q.degree() as i64;
    let mut nondegeneracy = Vec::new();
    for j in 0..size {
        let k = size - 1 - j;
        let mut coefficients = Vec::new();
        let mut nonzero = Vec::new();
        for n in (-degree..=degree).filter(|n| *n != 0) {
            let w = 2.0 * PI * n as f64;
            let v = (q.entry(j, k).coefficient(n) * w).norm();
            let ratio = if v > 0.0 {
                (v * v + 1.0 / n.abs() as f64) / v
            } else {
                f64::INFINITY
            };
            if v > 1e-14 {
                nonzero.push(n);
            }
            coefficients.push((n, v, ratio));
        }
        nondegeneracy.push(NonDegeneracy {
            alpha: (j + 1, k + 1),
            coefficients,
            nonzero,
        });
    }
    Ok(GapCriterion {
        nu,
        sums,
        verdict: if equal {
            GapVerdict::InfiniteGapsPossible
        } else {
            GapVerdict::FinitelyManyGapsPredicted
        },
        nondegeneracy,
    })
}
