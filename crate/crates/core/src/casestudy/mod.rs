//! The 4×4 family `v = −[[a, τb_ν], [τb_ν, 0]]`: closed forms at τ = 0,
//! resonance bifurcation under the perturbation and eigenvalue stability.

use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::linalg::C64;
use crate::lyapunov::SpectralFunction;
use crate::monodromy::IntegratorOptions;
use crate::potential::Potential;
use crate::roots::{count_in_disk, Disk, DiskOptions};
use crate::spectrum::{find_eigenvalues, find_resonances, scan_bands, EigenKind, ResonanceTarget};
use crate::tolerances::{REAL_GRID_STEP, REAL_ROOT_IMAG_TOL};
use rayon::prelude::*;
use std::f64::consts::PI;

const SOURCE: &str = "casestudy";
/// Gap endpoints must sit this close to the resonance pair.
const GAP_MATCH_TOL: f64 = 1e-6;
/// Largest cell index swept; keeps the resonance disks disjoint for a ≤ 10.
pub const MAX_CELL: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct CaseStudyConfig {
    pub a: f64,
    pub tau_values: Vec<f64>,
    pub nu: f64,
    pub n_max: usize,
}

impl CaseStudyConfig {
    pub fn validate(&self) -> Result<()> {
        let a = self.a;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config("a", format!("{a} must be positive")));
        }
        let ratio = a / (2.0 * PI);
        let nearest = ratio.round().max(1.0);
        if (ratio - nearest).abs() < 1e-3 {
            return Err(Error::config(
                "a",
                format!("a/2π = {ratio:.6} lies within 1e-3 of the integer {nearest}"),
            ));
        }
        if self.tau_values.is_empty() {
            return Err(Error::config("tau_values", "at least one τ is required"));
        }
        if let Some(t) = self.tau_values.iter().find(|t| !(t.is_finite() && t.abs() <= 0.2)) {
            return Err(Error::config("tau_values", format!("τ = {t} is outside [−0.2, 0.2]")));
        }
        if !self.tau_values.contains(&0.0) {
            return Err(Error::config("tau_values", "τ = 0 must be included as the anchor"));
        }
        if !(0.02..=0.2).contains(&self.nu) {
            return Err(Error::config("nu", format!("{} is outside [0.02, 0.2]", self.nu)));
        }
        if self.n_max == 0 || self.n_max > MAX_CELL {
            return Err(Error::config("n_max", format!("{} is outside [1, {MAX_CELL}]", self.n_max)));
        }
        Ok(())
    }

    pub fn potential(&self, tau: f64) -> Result<Potential> {
        Potential::example_4x4(self.a, tau, self.nu)
    }

    /// τ values sorted ascending and deduplicated.
    fn taus(&self) -> Vec<f64> {
        let mut t = self.tau_values.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Closed forms of the unperturbed operator with `v = diag(−a, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnperturbedReference {
    pub a: f64,
}

impl UnperturbedReference {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::argument("a", format!("{a} must be positive")));
        }
        Ok(UnperturbedReference { a })
    }

    /// `k(z) = √(z² − a²)`, with `k ~ z` for large |z|.
    pub fn k(&self, z: C64) -> C64 {
        let k = (z * z - self.a * self.a).sqrt();
        if (k - z).norm() <= (k + z).norm() {
            k
        } else {
            -k
        }
    }

    pub fn delta1(&self, z: C64) -> C64 {
        self.k(z).cos()
    }

    pub fn delta2(&self, z: C64) -> C64 {
        z.cos()
    }

    pub fn rho(&self, z: C64) -> C64 {
        let d = self.delta1(z) - self.delta2(z);
        d * d
    }

    /// `T_m = Tr ψ(1, z)^m = 2(cos mk + cos mz)`.
    pub fn trace(&self, m: u32, z: C64) -> C64 {
        let m = m as f64;
        ((self.k(z) * m).cos() + (z * m).cos()) * 2.0
    }

    /// `r_n⁰ = πn + a²/(4πn)`, a double zero of ρ.
    pub fn resonance(&self, n: i64) -> f64 {
        let pin = PI * n as f64;
        pin + self.a * self.a / (4.0 * pin)
    }

    /// Zeros of `det(ψ ∓ I) = 4(cos k ∓ 1)(cos z ∓ 1)` in `[lo, hi]`, with
    /// multiplicity, ascending.
    pub fn eigenvalues(&self, kind: EigenKind, lo: f64, hi: f64) -> Vec<(f64, usize)> {
        let parity = match kind {
            EigenKind::Periodic => 0,
            EigenKind::Antiperiodic => 1,
        };
        let mut out: Vec<(f64, usize)> = Vec::new();
        let reach = (lo.abs().max(hi.abs()) / PI).ceil() as i64 + 1;
        for n in (-reach..=reach).filter(|n| n.rem_euclid(2) == parity) {
            out.push((PI * n as f64, 2));
            if n == 0 {
                out.push((self.a, 1));
                out.push((-self.a, 1));
            } else if n > 0 {
                let z = (PI * PI * (n * n) as f64 + self.a * self.a).sqrt();
                out.push((z, 2));
                out.push((-z, 2));
            }
        }
        out.retain(|(z, _)| *z >= lo && *z <= hi);
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, usize)> = Vec::new();
        for (z, m) in out {
            match merged.last_mut() {
                Some(last) if (last.0 - z).abs() <= 1e-12 * (1.0 + z.abs()) => last.1 += m,
                _ => merged.push((z, m)),
            }
        }
        merged
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    RealGap,
    ComplexPair,
    /// A double real zero: the pair has not separated.
    Closed,
    /// The disk did not hold exactly two zeros.
    Unresolved,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::RealGap => "real-gap",
            Classification::ComplexPair => "complex-pair",
            Classification::Closed => "closed",
            Classification::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauRoots {
    pub tau: f64,
    /// `r⁻` and `r⁺`: ascending real parts, or `Im r⁻ < 0` for a complex pair.
    pub pair: Option<(C64, C64)>,
    pub winding: i64,
    pub classification: Classification,
    /// For a real gap: whether a band scan reports the gap `(r⁻, r⁺)`.
    pub gap_confirmed: Option<bool>,
}

impl TauRoots {
    pub fn separation(&self) -> Option<f64> {
        self.pair.map(|(m, p)| (p - m).norm())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationRecord {
    pub n: i64,
    pub r0: f64,
    pub kappa: f64,
    pub by_tau: Vec<TauRoots>,
    /// Least-squares `|r⁺ − r⁻|/(2|τ|)` over the two smallest nonzero |τ|.
    pub slope: Option<f64>,
    /// `±slope²`, negative for a complex pair.
    pub r_estimate: Option<f64>,
    pub flags: Vec<Flag>,
}

/// Tracks the split of each double resonance `r_n⁰`, `1 ≤ n ≤ n_max`, as τ
/// varies.
pub fn bifurcation_sweep(cfg: &CaseStudyConfig, opts: &IntegratorOptions) -> Result<Vec<BifurcationRecord>> {
    cfg.validate()?;
    let reference = UnperturbedReference::new(cfg.a)?;
    let taus = cfg.taus();
    let n_max = cfg.n_max as i64;
    let jobs: Vec<(i64, f64)> = (1..=n_max).flat_map(|n| taus.iter().map(move |&t| (n, t))).collect();
    let results: Vec<(TauRoots, Vec<Flag>)> = jobs
        .par_iter()
        .map(|&(n, tau)| {
            let kappa = kappa(&reference, n);
            sweep_cell(cfg, &reference, n, kappa, tau, opts)
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for (n, chunk) in (1..=n_max).zip(results.chunks(taus.len())) {
        let mut flags = Vec::new();
        let by_tau: Vec<TauRoots> = chunk
            .iter()
            .map(|(r, f)| {
                flags.extend(f.iter().cloned());
                r.clone()
            })
            .collect();
        let (slope, r_estimate) = fit_slope(&by_tau);
        records.push(BifurcationRecord {
            n,
            r0: reference.resonance(n),
            kappa: kappa(&reference, n),
            by_tau,
            slope,
            r_estimate,
            flags,
        });
    }
    Ok(records)
}

fn kappa(reference: &UnperturbedReference, n: i64) -> f64 {
    let r = reference.resonance(n);
    let below = if n > 1 {
        r - reference.resonance(n - 1)
    } else {
        // the mirror resonance r_{−1}⁰ = −r_1⁰
        2.0 * r.abs()
    };
    let above = reference.resonance(n + 1) - r;
    0.3f64.min(0.5 * below.abs()).min(0.5 * above.abs())
}

fn sweep_cell(
    cfg: &CaseStudyConfig,
    reference: &UnperturbedReference,
    n: i64,
    kappa: f64,
    tau: f64,
    opts: &IntegratorOptions,
) -> Result<(TauRoots, Vec<Flag>)> {
    let p = cfg.potential(tau)?;
    let r0 = reference.resonance(n);
    let source = format!("{SOURCE}/n={n}/tau={tau}");
    let list = find_resonances(&p, ResonanceTarget::Disk(Disk::new(C64::new(r0, 0.0), kappa)), opts)?;
    let mut flags = list.flags.clone();
    let winding = list.winding.map(|w| w.1).unwrap_or(0);
    let zeros: Vec<C64> = list
        .real_roots
        .iter()
        .chain(&list.complex_roots)
        .flat_map(|r| std::iter::repeat(r.z).take(r.multiplicity))
        .collect();
    let mut roots = TauRoots {
        tau,
        pair: None,
        winding,
        classification: Classification::Unresolved,
        gap_confirmed: None,
    };
    if zeros.len() != 2 {
        flags.push(Flag::failure(
            &source,
            format!("disk |z − {r0:.9}| < {kappa:.3} holds {} zeros (winding {winding}), expected 2", zeros.len()),
        ));
        return Ok((roots, flags));
    }
    let (mut lo, mut hi) = (zeros[0], zeros[1]);
    if (lo.re, lo.im) > (hi.re, hi.im) {
        std::mem::swap(&mut lo, &mut hi);
    }
    let real = lo.im.abs() <= REAL_ROOT_IMAG_TOL && hi.im.abs() <= REAL_ROOT_IMAG_TOL;
    if real {
        roots.classification = if list.real_roots.len() == 1 {
            Classification::Closed
        } else {
            Classification::RealGap
        };
        roots.pair = Some((lo, hi));
    } else {
        let (below, above) = if lo.im < hi.im { (lo, hi) } else { (hi, lo) };
        roots.pair = Some((below, above));
        if (below - above.conj()).norm() <= 1e-7 {
            roots.classification = Classification::ComplexPair;
        } else {
            flags.push(Flag::failure(
                &source,
                format!("zeros {below} and {above} are neither real nor a conjugate pair"),
            ));
        }
    }
    if roots.classification == Classification::RealGap {
        let (a, b) = (lo.re, hi.re);
        let pad = 0.02f64.max(b - a);
        let report = scan_bands(&p, (a - pad, b + pad), REAL_GRID_STEP, opts)?;
        let confirmed = report
            .gaps
            .iter()
            .any(|g| (g.lower.z - a).abs() <= GAP_MATCH_TOL && (g.upper.z - b).abs() <= GAP_MATCH_TOL);
        if !confirmed {
            flags.push(Flag::failure(
                &source,
                format!("no band gap matches the real resonance pair ({a:.9}, {b:.9})"),
            ));
        }
        flags.extend(report.flags);
        roots.gap_confirmed = Some(confirmed);
    }
    Ok((roots, flags))
}

fn fit_slope(by_tau: &[TauRoots]) -> (Option<f64>, Option<f64>) {
    let mut pts: Vec<(f64, f64, Classification)> = by_tau
        .iter()
        .filter(|r| r.tau != 0.0)
        .filter_map(|r| r.separation().map(|s| (r.tau.abs(), s, r.classification)))
        .collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.dedup_by(|x, y| x.0 == y.0);
    if pts.len() < 2 {
        return (None, None);
    }
    let use_pts = &pts[..2];
    let num: f64 = use_pts.iter().map(|(t, s, _)| t * s).sum();
    let den: f64 = use_pts.iter().map(|(t, _, _)| 2.0 * t * t).sum();
    let slope = num / den;
    let sign = if use_pts.iter().all(|p| p.2 == Classification::ComplexPair) {
        -1.0
    } else {
        1.0
    };
    (Some(slope), Some(sign * slope * slope))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRow {
    pub tau: f64,
    pub kind: EigenKind,
    pub reference: f64,
    pub numeric: f64,
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityTau {
    pub tau: f64,
    pub max_displacement: f64,
    /// Zeros of `det(ψ − I)·det(ψ + I)` in `|z| < πn_max + 1`.
    pub disk_count: i64,
    /// Zeros of ρ in the same disk.
    pub resonance_count: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    pub per_tau: Vec<StabilityTau>,
    /// `(τ, kind, value, numeric)`: a root left over after matching.
    pub unmatched: Vec<(f64, EigenKind, f64, bool)>,
    pub flags: Vec<Flag>,
}

impl StabilityTable {
    /// Max displacement never grows as |τ| shrinks.
    pub fn monotone(&self) -> bool {
        let mut v: Vec<(f64, f64)> = self.per_tau.iter().map(|t| (t.tau.abs(), t.max_displacement)).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12)
    }
}

/// Periodic and antiperiodic eigenvalues on `[−π/2, πn_max + π/2]` at each
/// τ against their unperturbed positions.
pub fn eigenvalue_stability(cfg: &CaseStudyConfig, opts: &IntegratorOptions) -> Result<StabilityTable> {
    cfg.validate()?;
    let reference = UnperturbedReference::new(cfg.a)?;
    let n_max = cfg.n_max as i64;
    let (lo, hi) = (-0.5 * PI, PI * n_max as f64 + 0.5 * PI);
    let taus = cfg.taus();
    let per: Vec<(Vec<StabilityRow>, Vec<(f64, EigenKind, f64, bool)>, StabilityTau, Vec<Flag>)> = taus
        .par_iter()
        .map(|&tau| {
            let p = cfg.potential(tau)?;
            let mut rows = Vec::new();
            let mut unmatched = Vec::new();
            let mut flags = Vec::new();
            for kind in [EigenKind::Periodic, EigenKind::Antiperiodic] {
                let list = find_eigenvalues(&p, kind, (0, n_max), opts)?;
                flags.extend(list.flags.iter().cloned());
                let numeric: Vec<f64> = list
                    .roots
                    .iter()
                    .flat_map(|r| std::iter::repeat(r.z).take(r.multiplicity))
                    .collect();
                let expected: Vec<f64> = reference
                    .eigenvalues(kind, lo, hi)
                    .into_iter()
                    .flat_map(|(z, m)| std::iter::repeat(z).take(m))
                    .collect();
                let (pairs, left_ref, left_num) = greedy_match(&expected, &numeric);
                rows.extend(pairs.into_iter().map(|(r, z)| StabilityRow {
                    tau,
                    kind,
                    reference: r,
                    numeric: z,
                    displacement: (z - r).abs(),
                }));
                unmatched.extend(left_ref.into_iter().map(|z| (tau, kind, z, false)));
                unmatched.extend(left_num.into_iter().map(|z| (tau, kind, z, true)));
            }
            let disk = Disk::new(C64::new(0.0, 0.0), PI * n_max as f64 + 1.0);
            let disk_opts = DiskOptions::default();
            let mut disk_count = 0;
            for f in [SpectralFunction::Periodic, SpectralFunction::Antiperiodic] {
                let eval = |z: C64, d: bool| f.evaluate_at(&p, z, opts, d);
                disk_count += count_in_disk(&eval, disk, &disk_opts)?.1;
            }
            let rho = |z: C64, d: bool| SpectralFunction::Discriminant.evaluate_at(&p, z, opts, d);
            let resonance_count = if tau == 0.0 { 0 } else { count_in_disk(&rho, disk, &disk_opts)?.1 };
            let max_displacement = rows.iter().map(|r| r.displacement).fold(0.0, f64::max);
            Ok((
                rows,
                unmatched,
                StabilityTau {
                    tau,
                    max_displacement,
                    disk_count,
                    resonance_count,
                },
                flags,
            ))
        })
        .collect::<Result<_>>()?;
    let mut table = StabilityTable {
        rows: Vec::new(),
        per_tau: Vec::new(),
        unmatched: Vec::new(),
        flags: Vec::new(),
    };
    for (rows, unmatched, t, flags) in per {
        table.rows.extend(rows);
        table.unmatched.extend(unmatched);
        table.per_tau.push(t);
        table.flags.extend(flags);
    }
    if !table.unmatched.is_empty() {
        table.flags.push(Flag::notice(
            SOURCE,
            format!("{} eigenvalues could not be matched to an unperturbed position", table.unmatched.len()),
        ));
    }
    Ok(table)
}

/// Zeros of ρ in `|z| < radius`, counted by the argument principle.
pub fn resonance_count(p: &Potential, radius: f64, opts: &IntegratorOptions) -> Result<i64> {
    let rho = |z: C64, d: bool| SpectralFunction::Discriminant.evaluate_at(p, z, opts, d);
    Ok(count_in_disk(&rho, Disk::new(C64::new(0.0, 0.0), radius), &DiskOptions::default())?.1)
}

fn greedy_match(expected: &[f64], numeric: &[f64]) -> (Vec<(f64, f64)>, Vec<f64>, Vec<f64>) {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, r) in expected.iter().enumerate() {
        for (j, z) in numeric.iter().enumerate() {
            cand.push(((r - z).abs(), i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; expected.len()];
    let mut used_n = vec![false; numeric.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cand {
        if !used_e[i] && !used_n[j] {
            used_e[i] = true;
            used_n[j] = true;
            pairs.push((expected[i], numeric[j]));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let left_e = expected.iter().zip(&used_e).filter(|(_, u)| !**u).map(|(z, _)| *z).collect();
    let left_n = numeric.iter().zip(&used_n).filter(|(_, u)| !**u).map(|(z, _)| *z).collect();
    (pairs, left_e, left_n)
}

#[cfg(test)]
mod tests;
