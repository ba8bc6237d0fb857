use super::{SpectralReport, SOURCE};
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::linalg::C64;
use crate::lyapunov::{Evaluation, SpectralFunction};
use crate::monodromy::IntegratorOptions;
use crate::potential::Potential;
use crate::roots::{merge_split_pairs, real_roots_sampled, roots_in_disk, uniform_grid, Disk, DiskOptions, RealScanOptions, Root};
use crate::tolerances::REAL_ROOT_IMAG_TOL;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest number of πn cells searched in one call.
const MAX_CELLS: i64 = 2000;
/// Residual bound `|f| / scale` for a reported root.
const ROOT_RESIDUAL_TOL: f64 = 1e-8;
/// Conjugate partners of complex resonances must agree this closely.
const CONJUGATE_TOL: f64 = 1e-7;
/// Below this `|ρ| / scale` everywhere, ρ is treated as identically zero.
const DEGENERATE_RHO: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EigenKind {
    Periodic,
    Antiperiodic,
}

impl EigenKind {
    pub fn function(self) -> SpectralFunction {
        match self {
            EigenKind::Periodic => SpectralFunction::Periodic,
            EigenKind::Antiperiodic => SpectralFunction::Antiperiodic,
        }
    }

    pub fn name(self) -> &'static str {
        self.function().name()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellRoot {
    /// Index of the cell `|z − πn| < π/2` holding the root.
    pub n: i64,
    pub z: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct EigenvalueList {
    pub kind: EigenKind,
    pub n_range: (i64, i64),
    /// Ascending.
    pub roots: Vec<CellRoot>,
    /// Roots per cell counted with multiplicity.
    pub cell_counts: Vec<(i64, usize)>,
    /// Off-axis zeros met while probing; none are expected.
    pub complex_roots: Vec<Root>,
    pub flags: Vec<Flag>,
    pub evaluations: usize,
}

impl EigenvalueList {
    pub fn in_cell(&self, n: i64) -> impl Iterator<Item = &CellRoot> {
        self.roots.iter().filter(move |r| r.n == n)
    }
}

fn check_range(n_range: (i64, i64)) -> Result<()> {
    let (lo, hi) = n_range;
    if lo > hi {
        return Err(Error::argument("n_range", format!("{lo} > {hi}")));
    }
    if hi - lo >= MAX_CELLS {
        return Err(Error::argument("n_range", format!("more than {MAX_CELLS} cells requested")));
    }
    Ok(())
}

/// Zeros of `det(ψ(1, z) ∓ I)` on the cells `|z − πn| < π/2`,
/// `n ∈ n_range`, with multiplicities.
pub fn find_eigenvalues(
    p: &Potential,
    kind: EigenKind,
    n_range: (i64, i64),
    opts: &IntegratorOptions,
) -> Result<EigenvalueList> {
    check_range(n_range)?;
    let (first, last) = n_range;
    let a = PI * first as f64 - 0.5 * PI;
    let b = PI * last as f64 + 0.5 * PI;
    let f = kind.function();
    let eval = |z: C64, d: bool| f.evaluate_at(p, z, opts, d);
    let scan_opts = RealScanOptions::default();
    let grid = uniform_grid(a, b, scan_opts.step);
    let values: Vec<Evaluation> = grid.par_iter().map(|&x| eval(C64::new(x, 0.0), false)).collect::<Result<_>>()?;
    let scan = real_roots_sampled(&eval, grid, values, &scan_opts)?;

    let source = format!("{SOURCE}/{}", kind.name());
    let mut flags = Vec::new();
    if scan.max_imag_ratio > 1e-8 {
        flags.push(Flag::failure(
            &source,
            format!("determinant has relative imaginary part {:.3e} on the real axis", scan.max_imag_ratio),
        ));
    }
    let roots: Vec<CellRoot> = scan
        .roots
        .iter()
        .map(|r| CellRoot {
            n: ((r.z.re / PI).round() as i64).clamp(first, last),
            z: r.z.re,
            multiplicity: r.multiplicity,
            residual: r.residual,
        })
        .collect();
    for r in roots.iter().filter(|r| r.residual > ROOT_RESIDUAL_TOL) {
        flags.push(Flag::failure(
            &source,
            format!("root {:.12} has residual {:.3e}", r.z, r.residual),
        ));
    }
    if !scan.complex_roots.is_empty() {
        flags.push(Flag::notice(
            &source,
            format!("{} zeros off the real axis near the window", scan.complex_roots.len()),
        ));
    }
    let limit = 2 * p.n();
    // localization is only asserted once |πn| clears the size of the potential
    let sup = p.sup_norm();
    let mut cell_counts = Vec::new();
    for n in first..=last {
        let count: usize = roots.iter().filter(|r| r.n == n).map(|r| r.multiplicity).sum();
        if count > limit {
            let message = format!("cell n = {n} holds {count} roots, more than 2N = {limit}");
            if PI * (n.abs() as f64) > 2.0 * (1.0 + sup) {
                flags.push(Flag::failure(&source, message));
            } else {
                flags.push(Flag::notice(&source, message));
            }
        }
        cell_counts.push((n, count));
    }
    Ok(EigenvalueList {
        kind,
        n_range,
        roots,
        cell_counts,
        complex_roots: scan.complex_roots,
        flags,
        evaluations: scan.evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResonanceTarget {
    Window(f64, f64),
    Disk(Disk),
}

/// A resonance matched to a predicted family: cell `n`, entry pair `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceLabel {
    pub root: C64,
    pub n: i64,
    pub alpha: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct ResonanceList {
    pub target: ResonanceTarget,
    pub real_roots: Vec<Root>,
    pub complex_roots: Vec<Root>,
    /// Argument-principle count on the disk actually used.
    pub winding: Option<(Disk, i64)>,
    /// ρ vanished identically on the target.
    pub degenerate: bool,
    pub pairing: Vec<ResonanceLabel>,
    pub flags: Vec<Flag>,
    pub evaluations: usize,
}

impl ResonanceList {
    pub fn count(&self) -> usize {
        self.real_roots
            .iter()
            .chain(&self.complex_roots)
            .map(|r| r.multiplicity)
            .sum()
    }
}

/// Zeros of ρ on a real window or inside a disk.
pub fn find_resonances(p: &Potential, target: ResonanceTarget, opts: &IntegratorOptions) -> Result<ResonanceList> {
    let f = SpectralFunction::Discriminant;
    let eval = |z: C64, d: bool| f.evaluate_at(p, z, opts, d);
    let source = format!("{SOURCE}/resonance");
    let mut list = ResonanceList {
        target,
        real_roots: Vec::new(),
        complex_roots: Vec::new(),
        winding: None,
        degenerate: false,
        pairing: Vec::new(),
        flags: Vec::new(),
        evaluations: 0,
    };
    let relative = |e: &Evaluation| e.value.norm() / e.scale.max(f64::MIN_POSITIVE);
    let symmetric = match target {
        ResonanceTarget::Window(a, b) => {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::argument("window", format!("[{a}, {b}] is not a finite interval")));
            }
            let scan_opts = RealScanOptions::default();
            let grid = uniform_grid(a, b, scan_opts.step);
            let values: Vec<Evaluation> =
                grid.par_iter().map(|&x| eval(C64::new(x, 0.0), false)).collect::<Result<_>>()?;
            list.evaluations += values.len();
            if values.iter().map(relative).fold(0.0, f64::max) <= DEGENERATE_RHO {
                list.degenerate = true;
            } else {
                let scan = real_roots_sampled(&eval, grid, values, &scan_opts)?;
                list.evaluations = scan.evaluations;
                list.real_roots = scan.roots;
                list.complex_roots = scan.complex_roots;
            }
            true
        }
        ResonanceTarget::Disk(disk) => {
            if !(disk.radius > 0.0 && disk.radius.is_finite()) {
                return Err(Error::argument("disk", format!("radius {} must be positive", disk.radius)));
            }
            let probes: Vec<Evaluation> = (0..8)
                .map(|k| eval(disk.center + C64::from_polar(disk.radius, PI * k as f64 / 4.0 + 0.3), false))
                .collect::<Result<_>>()?;
            list.evaluations += probes.len();
            if probes.iter().map(relative).fold(0.0, f64::max) <= DEGENERATE_RHO {
                list.degenerate = true;
            } else {
                let found = roots_in_disk(&eval, disk, &DiskOptions::default())?;
                list.evaluations += found.evaluations;
                list.winding = Some((found.disk, found.winding));
                for r in merge_split_pairs(&eval, found.roots, &mut list.evaluations)? {
                    if r.z.im.abs() <= REAL_ROOT_IMAG_TOL {
                        list.real_roots.push(Root {
                            z: C64::new(r.z.re, 0.0),
                            ..r
                        });
                    } else {
                        list.complex_roots.push(r);
                    }
                }
            }
            disk.center.im == 0.0
        }
    };
    if list.degenerate && p.n() > 1 {
        list.flags.push(Flag::notice(
            &source,
            "the discriminant vanishes identically; branches coincide and resonances are not isolated",
        ));
    }
    list.real_roots.sort_by(|a, b| a.z.re.total_cmp(&b.z.re));
    list.complex_roots
        .sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    for r in list.real_roots.iter().chain(&list.complex_roots) {
        if r.residual > ROOT_RESIDUAL_TOL {
            list.flags.push(Flag::failure(
                &source,
                format!("resonance {} has residual {:.3e}", r.z, r.residual),
            ));
        }
    }
    if symmetric {
        for r in &list.complex_roots {
            let partner = list.complex_roots.iter().any(|q| (q.z - r.z.conj()).norm() <= CONJUGATE_TOL);
            if !partner {
                list.flags.push(Flag::failure(
                    &source,
                    format!("complex resonance {} has no conjugate partner", r.z),
                ));
            }
        }
    }
    Ok(list)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSumCheck {
    /// `Σ |g|²` over the open gaps of the report.
    pub lhs: f64,
    /// `4‖V‖²/N`.
    pub rhs: f64,
    pub pass: bool,
    pub margin: f64,
}

pub fn gap_sum_check(report: &SpectralReport, p: &Potential) -> GapSumCheck {
    let lhs = report.gaps.iter().fold(0.0, |acc, g| acc + g.width() * g.width());
    let rhs = 4.0 * p.moments().norm_sq / p.n() as f64;
    GapSumCheck {
        lhs,
        rhs,
        pass: lhs <= rhs,
        margin: rhs - lhs,
    }
}
