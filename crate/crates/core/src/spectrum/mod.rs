//! Band/gap structure on a real window, periodic and antiperiodic
//! eigenvalues, resonances and the gap-length sum rule.

mod search;

pub use search::{
    find_eigenvalues, find_resonances, gap_sum_check, CellRoot, EigenKind, EigenvalueList, GapSumCheck,
    ResonanceLabel, ResonanceList, ResonanceTarget,
};

use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::linalg::C64;
use crate::lyapunov::{sample, sample_from, Evaluation, SpectralFunction};
use crate::monodromy::{integrate, IntegratorOptions};
use crate::potential::Potential;
use crate::roots::{
    real_roots_sampled, roots_in_disk, uniform_grid, Disk, DiskOptions, RealScan, RealScanOptions, Root,
};
use crate::tolerances::{
    BAND_EDGE_SLACK, EDGE_BISECTION_WIDTH, ENDPOINT_MATCH_TOL, MOMENT_POINTS, REAL_DELTA_TOL, REAL_GRID_STEP,
    REAL_ROOT_IMAG_TOL,
};
use rayon::prelude::*;

const SOURCE: &str = "spectrum";
/// Step of the central difference estimating Δ' at an edge.
const EDGE_SLOPE_STEP: f64 = 1e-6;
/// Largest slope-adjusted match tolerance.
const EDGE_TOL_CAP: f64 = 1e-4;

/// Number of Lyapunov values that are real and inside `[−1, 1]`.
pub fn branches_in_band(deltas: &[C64]) -> usize {
    deltas
        .iter()
        .filter(|d| d.im.abs() <= REAL_DELTA_TOL && d.re.abs() <= 1.0 + BAND_EDGE_SLACK)
        .count()
}

/// One grid node of a band scan.
#[derive(Clone, Debug)]
pub struct Node {
    pub z: f64,
    pub deltas: Vec<C64>,
    pub rho: C64,
    pub in_band: usize,
    pub near_branch_point: bool,
}

impl Node {
    pub fn spectral(&self) -> bool {
        self.in_band > 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EndpointKind {
    Periodic,
    Antiperiodic,
    Resonance,
}

impl EndpointKind {
    pub fn name(self) -> &'static str {
        self.function().name()
    }

    pub fn function(self) -> SpectralFunction {
        match self {
            EndpointKind::Periodic => SpectralFunction::Periodic,
            EndpointKind::Antiperiodic => SpectralFunction::Antiperiodic,
            EndpointKind::Resonance => SpectralFunction::Discriminant,
        }
    }

    const ALL: [EndpointKind; 3] = [EndpointKind::Periodic, EndpointKind::Antiperiodic, EndpointKind::Resonance];
}

/// A defining function that vanishes at an endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointLabel {
    pub kind: EndpointKind,
    pub root: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Endpoint {
    /// Matched root when labeled, bisected edge otherwise.
    pub z: f64,
    /// Indicator transition located by bisection.
    pub bisected: f64,
    /// True for a gap cut off by the window.
    pub window_edge: bool,
    pub labels: Vec<EndpointLabel>,
}

impl Endpoint {
    pub fn unclassified(&self) -> bool {
        !self.window_edge && self.labels.is_empty()
    }

    fn window(z: f64) -> Self {
        Endpoint {
            z,
            bisected: z,
            window_edge: true,
            labels: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub lower: Endpoint,
    pub upper: Endpoint,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.upper.z - self.lower.z
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lower.z < z && z < self.upper.z
    }
}

/// A multiple real root inside a band: a gap of zero length.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGap {
    pub z: f64,
    pub labels: Vec<EndpointLabel>,
}

/// Stretch of a band on which a fixed number of branches lies in `[−1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSegment {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Real roots of the three defining functions on the window.
#[derive(Clone, Debug, Default)]
pub struct RootTable {
    pub periodic: Vec<Root>,
    pub antiperiodic: Vec<Root>,
    pub resonance: Vec<Root>,
    /// Near-axis complex zeros of ρ met while probing.
    pub resonance_complex: Vec<Root>,
    /// ρ vanished on the whole grid, so its roots carry no information.
    pub resonance_degenerate: bool,
}

impl RootTable {
    pub fn get(&self, kind: EndpointKind) -> &[Root] {
        match kind {
            EndpointKind::Periodic => &self.periodic,
            EndpointKind::Antiperiodic => &self.antiperiodic,
            EndpointKind::Resonance => &self.resonance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub window: (f64, f64),
    pub grid_step: f64,
    pub n: usize,
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
    pub closed_gaps: Vec<ClosedGap>,
    pub profile: Vec<ProfileSegment>,
    pub nodes: Vec<Node>,
    pub roots: RootTable,
    pub flags: Vec<Flag>,
    pub evaluations: usize,
}

impl SpectralReport {
    /// Stretches where exactly `count` branches are in the band.
    pub fn segments_with(&self, count: usize) -> impl Iterator<Item = &ProfileSegment> {
        self.profile.iter().filter(move |s| s.count == count)
    }

    pub fn in_gap(&self, z: f64) -> bool {
        self.gaps.iter().any(|g| g.contains(z))
    }
}

struct NodeData {
    node: Node,
    values: [Evaluation; 3],
    valid: bool,
    pairing_ok: bool,
}

fn evaluate_node(p: &Potential, x: f64, opts: &IntegratorOptions) -> Result<NodeData> {
    let m = integrate(p, C64::new(x, 0.0), opts)?;
    let s = sample_from(&m)?;
    let values = [
        SpectralFunction::Periodic.evaluate(&m)?,
        SpectralFunction::Antiperiodic.evaluate(&m)?,
        SpectralFunction::Discriminant.evaluate(&m)?,
    ];
    Ok(NodeData {
        node: Node {
            z: x,
            in_band: branches_in_band(&s.deltas),
            deltas: s.deltas,
            rho: values[2].value,
            near_branch_point: s.near_branch_point,
        },
        values,
        valid: m.is_valid(),
        pairing_ok: s.pairing_ok,
    })
}

struct Counter<'a> {
    p: &'a Potential,
    opts: &'a IntegratorOptions,
    evaluations: usize,
}

impl Counter<'_> {
    fn count(&mut self, x: f64) -> Result<usize> {
        self.evaluations += 1;
        Ok(branches_in_band(&sample(self.p, C64::new(x, 0.0), self.opts)?.deltas))
    }

    /// Shrinks `[lo, hi]`, where `keep` holds at `lo` and fails at `hi`,
    /// to the bisection width and returns its midpoint.
    fn bisect(&mut self, mut lo: f64, mut hi: f64, keep: impl Fn(usize) -> bool) -> Result<f64> {
        while (hi - lo).abs() > EDGE_BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if keep(self.count(mid)?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Band/gap decomposition of `window` sampled with spacing at most
/// `grid_step`.
pub fn scan_bands(
    p: &Potential,
    window: (f64, f64),
    grid_step: f64,
    opts: &IntegratorOptions,
) -> Result<SpectralReport> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::argument("window", format!("[{a}, {b}] is not a finite interval")));
    }
    if !(grid_step > 0.0 && grid_step <= REAL_GRID_STEP * (1.0 + 1e-12)) {
        return Err(Error::argument(
            "grid_step",
            format!("{grid_step} must lie in (0, π/200]"),
        ));
    }
    let grid = uniform_grid(a, b, grid_step);
    let h = grid[1] - grid[0];
    let data: Vec<NodeData> = grid
        .par_iter()
        .map(|&x| evaluate_node(p, x, opts))
        .collect::<Result<_>>()?;
    let mut flags = Vec::new();
    let invalid = data.iter().filter(|d| !d.valid).count();
    if invalid > 0 {
        flags.push(Flag::failure(
            SOURCE,
            format!("monodromy defects exceed their bounds at {invalid} grid nodes"),
        ));
    }
    let unpaired = data.iter().filter(|d| !d.pairing_ok).count();
    if unpaired > 0 {
        flags.push(Flag::notice(
            SOURCE,
            format!("multipliers failed to pair at {unpaired} grid nodes"),
        ));
    }

    let mut evaluations = data.len();
    let roots = scan_roots(p, &grid, &data, opts, &mut flags, &mut evaluations)?;
    let nodes: Vec<Node> = data.into_iter().map(|d| d.node).collect();

    let mut counter = Counter {
        p,
        opts,
        evaluations: 0,
    };
    // indicator transitions between neighbouring nodes
    let mut toggles: Vec<f64> = Vec::new();
    for w in nodes.windows(2) {
        if w[0].spectral() != w[1].spectral() {
            let start = w[0].spectral();
            toggles.push(counter.bisect(w[0].z, w[1].z, |c| (c > 0) == start)?);
        }
    }
    // gaps narrower than a grid cell show up as close pairs of roots
    let mut merged: Vec<f64> = EndpointKind::ALL
        .iter()
        .filter(|k| **k != EndpointKind::Resonance || !roots.resonance_degenerate)
        .flat_map(|k| roots.get(*k).iter().map(|r| r.z.re))
        .collect();
    merged.sort_by(f64::total_cmp);
    let mut hidden_right: Option<f64> = None;
    for pair in merged.windows(2) {
        let (r1, r2) = (pair[0], pair[1]);
        if r2 - r1 > 2.0 * h || r2 - r1 < 2.0 * EDGE_BISECTION_WIDTH {
            continue;
        }
        let mid = 0.5 * (r1 + r2);
        let i = (((mid - a) / h).floor() as usize).min(nodes.len() - 2);
        if !(nodes[i].spectral() && nodes[i + 1].spectral()) {
            continue;
        }
        if hidden_right.is_some_and(|r| mid <= r) || counter.count(mid)? > 0 {
            continue;
        }
        let left = hidden_right.map_or(nodes[i].z, |r| r.max(nodes[i].z));
        let lo = counter.bisect(left, mid, |c| c > 0)?;
        let hi = counter.bisect(nodes[i + 1].z, mid, |c| c > 0)?;
        toggles.push(lo);
        toggles.push(hi);
        hidden_right = Some(hi);
    }
    toggles.sort_by(f64::total_cmp);

    // alternate bands and gaps across the window
    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    let mut state = nodes[0].spectral();
    let mut lo = a;
    let mut lo_end = Endpoint::window(a);
    for (k, &t) in toggles.iter().chain(std::iter::once(&b)).enumerate() {
        let last = k == toggles.len();
        let end = if last {
            Endpoint::window(b)
        } else {
            Endpoint {
                z: t,
                bisected: t,
                window_edge: false,
                labels: Vec::new(),
            }
        };
        if state {
            bands.push(Band { lo, hi: t });
        } else {
            gaps.push(Gap {
                lower: lo_end.clone(),
                upper: end.clone(),
            });
        }
        state = !state;
        lo = t;
        lo_end = end;
    }

    for gap in &mut gaps {
        for e in [&mut gap.lower, &mut gap.upper] {
            if !e.window_edge {
                classify(p, e, &roots, opts, &mut evaluations)?;
                if e.unclassified() {
                    flags.push(Flag::failure(
                        SOURCE,
                        format!("gap endpoint {:.12} matches no periodic, antiperiodic or resonance root", e.z),
                    ));
                }
            }
        }
    }
    realign_bands(&mut bands, &gaps);

    let closed_gaps = closed_gaps(&roots, &gaps, window);
    let profile = multiplicity_profile(&bands, &nodes, &mut counter)?;
    evaluations += counter.evaluations;

    Ok(SpectralReport {
        window,
        grid_step: h,
        n: p.n(),
        bands,
        gaps,
        closed_gaps,
        profile,
        nodes,
        roots,
        flags,
        evaluations,
    })
}

/// Moves band ends onto the snapped endpoints of adjacent gaps.
fn realign_bands(bands: &mut [Band], gaps: &[Gap]) {
    for band in bands.iter_mut() {
        for g in gaps {
            if g.lower.bisected == band.hi {
                band.hi = g.lower.z;
            }
            if g.upper.bisected == band.lo {
                band.lo = g.upper.z;
            }
        }
    }
}

fn scan_roots(
    p: &Potential,
    grid: &[f64],
    data: &[NodeData],
    opts: &IntegratorOptions,
    flags: &mut Vec<Flag>,
    evaluations: &mut usize,
) -> Result<RootTable> {
    let scan_opts = RealScanOptions::default();
    let mut table = RootTable::default();
    for (slot, kind) in EndpointKind::ALL.iter().enumerate() {
        let values: Vec<Evaluation> = data.iter().map(|d| d.values[slot]).collect();
        if *kind == EndpointKind::Resonance {
            let size = values
                .iter()
                .map(|e| e.value.norm() / e.scale.max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            if size <= 1e-11 {
                if p.n() > 1 {
                    flags.push(Flag::notice(
                        SOURCE,
                        "the discriminant vanishes on the whole window; branches coincide and resonances are not isolated",
                    ));
                }
                table.resonance_degenerate = true;
                continue;
            }
        }
        let f = kind.function();
        let eval = |z: C64, d: bool| f.evaluate_at(p, z, opts, d);
        let scan: RealScan = real_roots_sampled(&eval, grid.to_vec(), values, &scan_opts)?;
        *evaluations += scan.evaluations - grid.len();
        if scan.max_imag_ratio > 1e-8 {
            flags.push(Flag::failure(
                SOURCE,
                format!(
                    "{} function has relative imaginary part {:.3e} on the real axis",
                    kind.name(),
                    scan.max_imag_ratio
                ),
            ));
        }
        match kind {
            EndpointKind::Periodic => table.periodic = scan.roots,
            EndpointKind::Antiperiodic => table.antiperiodic = scan.roots,
            EndpointKind::Resonance => {
                table.resonance = scan.roots;
                table.resonance_complex = scan.complex_roots;
            }
        }
    }
    Ok(table)
}

/// Attaches every defining function whose root lies within the match
/// tolerance; an unmatched endpoint gets a local disk search first.
fn classify(
    p: &Potential,
    e: &mut Endpoint,
    roots: &RootTable,
    opts: &IntegratorOptions,
    evaluations: &mut usize,
) -> Result<()> {
    attach_labels(e, roots, ENDPOINT_MATCH_TOL);
    if e.labels.is_empty() {
        // a flat edge lets the band slack move the bisected point by slack/|Δ'|
        let tol = edge_tolerance(p, e.bisected, opts, evaluations)?;
        attach_labels(e, roots, tol);
        if e.labels.is_empty() {
            search_labels(p, e, roots, tol, opts, evaluations)?;
        }
    }
    if let Some(best) = e
        .labels
        .iter()
        .min_by(|x, y| (x.root - e.bisected).abs().total_cmp(&(y.root - e.bisected).abs()))
    {
        e.z = best.root;
    }
    Ok(())
}

fn attach_labels(e: &mut Endpoint, roots: &RootTable, tol: f64) {
    for kind in EndpointKind::ALL {
        if kind == EndpointKind::Resonance && roots.resonance_degenerate {
            continue;
        }
        if let Some(r) = nearest_root(roots.get(kind), e.bisected, tol) {
            e.labels.push(label(kind, &r));
        }
    }
}

fn search_labels(
    p: &Potential,
    e: &mut Endpoint,
    roots: &RootTable,
    tol: f64,
    opts: &IntegratorOptions,
    evaluations: &mut usize,
) -> Result<()> {
    let disk = Disk::new(C64::new(e.bisected, 0.0), 10.0 * tol);
    let disk_opts = DiskOptions {
        boundary_points: MOMENT_POINTS,
        ..DiskOptions::default()
    };
    for kind in EndpointKind::ALL {
        if kind == EndpointKind::Resonance && roots.resonance_degenerate {
            continue;
        }
        let f = kind.function();
        let eval = |z: C64, d: bool| f.evaluate_at(p, z, opts, d);
        let Ok(found) = roots_in_disk(&eval, disk, &disk_opts) else {
            continue;
        };
        *evaluations += found.evaluations;
        let real: Vec<Root> = found
            .roots
            .into_iter()
            .filter(|r| r.z.im.abs() <= REAL_ROOT_IMAG_TOL)
            .map(|r| Root {
                z: C64::new(r.z.re, 0.0),
                ..r
            })
            .collect();
        if let Some(r) = nearest_root(&real, e.bisected, tol) {
            e.labels.push(label(kind, &r));
        }
    }
    Ok(())
}

/// Match tolerance at an edge: the larger of the fixed tolerance and four
/// times the displacement `BAND_EDGE_SLACK / |Δ'|` of the branch at ±1,
/// capped at `EDGE_TOL_CAP`.
fn edge_tolerance(p: &Potential, x: f64, opts: &IntegratorOptions, evaluations: &mut usize) -> Result<f64> {
    let h = EDGE_SLOPE_STEP;
    let edge_branch = |z: f64| -> Result<C64> {
        let s = sample(p, C64::new(z, 0.0), opts)?;
        Ok(s.deltas
            .iter()
            .copied()
            .min_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs()))
            .expect("at least one branch"))
    };
    let slope = (edge_branch(x + h)? - edge_branch(x - h)?).norm() / (2.0 * h);
    *evaluations += 2;
    let shift = if slope > 0.0 { BAND_EDGE_SLACK / slope } else { f64::INFINITY };
    Ok(ENDPOINT_MATCH_TOL.max(4.0 * shift).min(EDGE_TOL_CAP))
}

fn nearest_root(roots: &[Root], x: f64, tol: f64) -> Option<Root> {
    roots
        .iter()
        .filter(|r| (r.z.re - x).abs() <= tol)
        .min_by(|p, q| (p.z.re - x).abs().total_cmp(&(q.z.re - x).abs()))
        .copied()
}

fn label(kind: EndpointKind, r: &Root) -> EndpointLabel {
    EndpointLabel {
        kind,
        root: r.z.re,
        multiplicity: r.multiplicity,
        residual: r.residual,
    }
}

fn closed_gaps(roots: &RootTable, gaps: &[Gap], window: (f64, f64)) -> Vec<ClosedGap> {
    let mut out: Vec<ClosedGap> = Vec::new();
    for kind in EndpointKind::ALL {
        if kind == EndpointKind::Resonance && roots.resonance_degenerate {
            continue;
        }
        for r in roots.get(kind).iter().filter(|r| r.multiplicity >= 2) {
            let x = r.z.re;
            if x < window.0 || x > window.1 {
                continue;
            }
            let touches_gap = gaps.iter().any(|g| {
                (g.lower.z - ENDPOINT_MATCH_TOL..=g.upper.z + ENDPOINT_MATCH_TOL).contains(&x)
            });
            if touches_gap {
                continue;
            }
            match out.iter_mut().find(|c| (c.z - x).abs() <= ENDPOINT_MATCH_TOL) {
                Some(c) => c.labels.push(label(kind, r)),
                None => out.push(ClosedGap {
                    z: x,
                    labels: vec![label(kind, r)],
                }),
            }
        }
    }
    out.sort_by(|p, q| p.z.total_cmp(&q.z));
    out
}

fn multiplicity_profile(bands: &[Band], nodes: &[Node], counter: &mut Counter) -> Result<Vec<ProfileSegment>> {
    let mut out = Vec::new();
    for band in bands {
        let inside: Vec<&Node> = nodes.iter().filter(|n| band.lo < n.z && n.z < band.hi).collect();
        if inside.is_empty() {
            let count = counter.count(0.5 * (band.lo + band.hi))?;
            out.push(ProfileSegment {
                lo: band.lo,
                hi: band.hi,
                count,
            });
            continue;
        }
        let mut lo = band.lo;
        let mut count = inside[0].in_band;
        for w in inside.windows(2) {
            if w[1].in_band != count {
                let c0 = count;
                let t = counter.bisect(w[0].z, w[1].z, |c| c == c0)?;
                out.push(ProfileSegment { lo, hi: t, count });
                lo = t;
                count = w[1].in_band;
            }
        }
        out.push(ProfileSegment {
            lo,
            hi: band.hi,
            count,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
