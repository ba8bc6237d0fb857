//! Zeros of analytic functions of z: argument-principle counting on disks,
//! contour moments for root clusters, Newton refinement, and a real-line
//! scanner for functions that are real on ℝ.

mod real;

pub use real::{real_roots, real_roots_sampled, uniform_grid, RealScan, RealScanOptions};
pub(crate) use real::merge_split_pairs;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix, C64};
use crate::lyapunov::Evaluation;
use crate::tolerances::WINDING_POINTS;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: C64, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub z: C64,
    pub multiplicity: usize,
    /// `|f(z)| / scale` at the reported location.
    pub residual: f64,
    /// False when the location comes from contour moments alone.
    pub newton_converged: bool,
}

#[derive(Clone, Debug)]
pub struct DiskResult {
    /// Disk actually used, after any radius nudges.
    pub disk: Disk,
    pub winding: i64,
    pub roots: Vec<Root>,
    pub evaluations: usize,
}

impl DiskResult {
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskOptions {
    pub boundary_points: usize,
    /// Reject contours passing closer than this to an estimated root.
    pub clearance: f64,
    pub nudges: usize,
    pub max_depth: usize,
    /// Largest cluster resolved from moments directly; bigger counts split the disk.
    pub max_cluster: usize,
}

impl Default for DiskOptions {
    fn default() -> Self {
        DiskOptions {
            boundary_points: WINDING_POINTS,
            clearance: 1e-4,
            nudges: 3,
            max_depth: 8,
            max_cluster: 4,
        }
    }
}

/// A function of z returning value, optional derivative and scale.
pub trait AnalyticFn: Sync {
    fn eval(&self, z: C64, with_derivative: bool) -> Result<Evaluation>;
}

impl<F> AnalyticFn for F
where
    F: Fn(C64, bool) -> Result<Evaluation> + Sync,
{
    fn eval(&self, z: C64, with_derivative: bool) -> Result<Evaluation> {
        self(z, with_derivative)
    }
}

struct Boundary {
    winding: i64,
    /// `s_k / r^k` for `k = 0..=kmax`.
    moments: Vec<C64>,
    evaluations: usize,
}

/// Winding number and normalized moments on a circle. `Ok(None)` signals a
/// root too close to the contour.
fn scan_boundary<F: AnalyticFn>(
    f: &F,
    disk: Disk,
    points: usize,
    clearance: f64,
    kmax: usize,
) -> Result<Option<Boundary>> {
    let angle = |k: f64| 2.0 * PI * k / points as f64;
    let at = |theta: f64| disk.center + C64::from_polar(disk.radius, theta);
    let samples: Vec<Evaluation> = (0..points)
        .into_par_iter()
        .map(|k| f.eval(at(angle(k as f64)), true))
        .collect::<Result<_>>()?;
    let mut evaluations = points;
    for s in &samples {
        let d = s.derivative.unwrap_or_default();
        if !(s.value.norm() > 0.0) || !s.value.re.is_finite() || !s.value.im.is_finite() {
            return Ok(None);
        }
        if d.norm() > 0.0 && (s.value / d).norm() < clearance {
            return Ok(None);
        }
    }
    // phase unwrap with bisection of large jumps
    let mut total = 0.0;
    for k in 0..points {
        let a = (angle(k as f64), samples[k].value);
        let b = (angle((k + 1) as f64), samples[(k + 1) % points].value);
        total += unwrap_arc(f, &at, a, b, 0, &mut evaluations)?;
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    if (turns - winding).abs() > 0.1 {
        return Ok(None);
    }
    let moments = (0..=kmax)
        .map(|k| {
            samples
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let w = C64::from_polar(1.0, angle(j as f64) * (k + 1) as f64);
                    w * disk.radius * s.derivative.unwrap_or_default() / s.value
                })
                .sum::<C64>()
                / points as f64
        })
        .collect();
    Ok(Some(Boundary {
        winding: winding as i64,
        moments,
        evaluations,
    }))
}

fn unwrap_arc<F: AnalyticFn>(
    f: &F,
    at: &impl Fn(f64) -> C64,
    a: (f64, C64),
    b: (f64, C64),
    depth: usize,
    evaluations: &mut usize,
) -> Result<f64> {
    let step = (b.1 / a.1).arg();
    if step.abs() < PI / 3.0 || depth >= 12 {
        return Ok(step);
    }
    let mid = 0.5 * (a.0 + b.0);
    let m = f.eval(at(mid), false)?.value;
    *evaluations += 1;
    Ok(unwrap_arc(f, at, a, (mid, m), depth + 1, evaluations)?
        + unwrap_arc(f, at, (mid, m), b, depth + 1, evaluations)?)
}

/// Roots of `Π (w − w_i)` from power sums `p_k = Σ w_i^k`, `k = 1..=m`.
fn roots_from_power_sums(p: &[C64], m: usize) -> Result<Vec<C64>> {
    let mut e = vec![C64::new(1.0, 0.0)];
    for k in 1..=m {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * p[i] * sign;
        }
        e.push(acc / k as f64);
    }
    if m == 1 {
        return Ok(vec![e[1]]);
    }
    // companion matrix of w^m − e1 w^{m−1} + e2 w^{m−2} − …
    let comp = CMatrix::from_fn(m, m, |i, j| {
        if i == 0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            e[j + 1] * sign
        } else if i == j + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    eigenvalues(&comp)
}

const NEWTON_ITERATIONS: usize = 12;
/// Boundary moments kept for the single-cluster test on large counts.
const MOMENT_ORDER: usize = 16;
/// Each cover multiplies the work by seven.
const MAX_COVER_DEPTH: usize = 4;

/// Plain Newton; `Some(root)` when the iteration settles within the budget.
fn newton<F: AnalyticFn>(f: &F, start: C64, disk: Disk, evaluations: &mut usize) -> Result<Option<C64>> {
    let mut z = start;
    for _ in 0..NEWTON_ITERATIONS {
        let e = f.eval(z, true)?;
        *evaluations += 1;
        let d = e.derivative.unwrap_or_default();
        if e.value.norm() == 0.0 {
            return Ok(Some(z));
        }
        if d.norm() == 0.0 {
            return Ok(None);
        }
        let step = e.value / d;
        z -= step;
        if !disk.contains(z) {
            return Ok(None);
        }
        if step.norm() <= 1e-12 * (1.0 + z.norm()) {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

fn residual<F: AnalyticFn>(f: &F, z: C64, evaluations: &mut usize) -> Result<f64> {
    let e = f.eval(z, false)?;
    *evaluations += 1;
    Ok(e.value.norm() / e.scale.max(f64::MIN_POSITIVE))
}

/// All zeros of `f` inside `disk`, with multiplicities.
pub fn roots_in_disk<F: AnalyticFn>(f: &F, disk: Disk, opts: &DiskOptions) -> Result<DiskResult> {
    let mut evaluations = 0;
    let (disk, boundary) = nudge_scan(f, disk, opts, &mut evaluations)?;
    let m = boundary.winding;
    if m < 0 {
        return Err(Error::RootCount {
            winding: m,
            refined: 0,
        });
    }
    let mut roots = resolve(f, disk, &boundary, opts, 0, &mut evaluations)?;
    roots.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let refined: usize = roots.iter().map(|r| r.multiplicity).sum();
    if refined as i64 != m {
        return Err(Error::RootCount { winding: m, refined });
    }
    Ok(DiskResult {
        disk,
        winding: m,
        roots,
        evaluations,
    })
}

/// Winding number only.
pub fn count_in_disk<F: AnalyticFn>(f: &F, disk: Disk, opts: &DiskOptions) -> Result<(Disk, i64)> {
    let mut evaluations = 0;
    let (disk, b) = nudge_scan(f, disk, opts, &mut evaluations)?;
    Ok((disk, b.winding))
}

fn nudge_scan<F: AnalyticFn>(
    f: &F,
    disk: Disk,
    opts: &DiskOptions,
    evaluations: &mut usize,
) -> Result<(Disk, Boundary)> {
    let factors = [1.0, 1.03, 0.97, 1.06, 0.94, 1.09, 0.91];
    let tries = (opts.nudges + 1).min(factors.len());
    for &fac in &factors[..tries] {
        let d = Disk::new(disk.center, disk.radius * fac);
        let clearance = opts.clearance.min(0.05 * d.radius);
        if let Some(b) = scan_boundary(f, d, opts.boundary_points, clearance, opts.max_cluster.max(MOMENT_ORDER))? {
            *evaluations += b.evaluations;
            return Ok((d, b));
        }
        *evaluations += opts.boundary_points;
    }
    Err(Error::ContourHitsZero {
        z: disk.center,
        distance: disk.radius,
    })
}

fn resolve<F: AnalyticFn>(
    f: &F,
    disk: Disk,
    boundary: &Boundary,
    opts: &DiskOptions,
    depth: usize,
    evaluations: &mut usize,
) -> Result<Vec<Root>> {
    let m = boundary.winding as usize;
    if m == 0 {
        return Ok(Vec::new());
    }
    if m > opts.max_cluster {
        if let Some(c) = single_cluster(&boundary.moments, m) {
            let z = disk.center + c * disk.radius;
            return Ok(vec![Root {
                z,
                multiplicity: m,
                residual: residual(f, z, evaluations)?,
                newton_converged: false,
            }]);
        }
        return cover(f, disk, m, opts, depth, evaluations);
    }
    let estimates: Vec<C64> = roots_from_power_sums(&boundary.moments, m)?
        .into_iter()
        .map(|w| disk.center + w * disk.radius)
        .collect();

    let mut simple: Vec<C64> = Vec::new();
    for &s in &estimates {
        if let Some(z) = newton(f, s, disk, evaluations)? {
            let tol = 1e-9 * (1.0 + z.norm());
            if simple.iter().all(|q| (q - z).norm() > tol) {
                simple.push(z);
            }
        }
    }
    if simple.len() == m && well_separated(&simple, disk.radius) {
        return simple
            .into_iter()
            .map(|z| {
                Ok(Root {
                    z,
                    multiplicity: 1,
                    residual: residual(f, z, evaluations)?,
                    newton_converged: true,
                })
            })
            .collect();
    }

    let centroid = disk.center + boundary.moments[1] * disk.radius / m as f64;
    let spread = estimates.iter().map(|e| (e - centroid).norm()).fold(0.0, f64::max);
    if m == 1 || spread < 1e-3 * disk.radius || depth >= opts.max_depth {
        return Ok(vec![Root {
            z: centroid,
            multiplicity: m,
            residual: residual(f, centroid, evaluations)?,
            newton_converged: false,
        }]);
    }

    // split into clusters and analyse each on its own disk
    let clusters = single_linkage(&estimates, 0.1 * disk.radius);
    let centers: Vec<C64> = clusters
        .iter()
        .map(|c| c.iter().map(|&i| estimates[i]).sum::<C64>() / c.len() as f64)
        .collect();
    let mut out = Vec::new();
    let mut found = 0usize;
    for (ci, c) in clusters.iter().enumerate() {
        let own = c.iter().map(|&i| (estimates[i] - centers[ci]).norm()).fold(0.0, f64::max);
        let nearest = centers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != ci)
            .map(|(_, o)| (o - centers[ci]).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = if clusters.len() == 1 {
            (4.0 * own).max(disk.radius / 16.0)
        } else {
            (0.45 * nearest).min(disk.radius).max(4.0 * own)
        };
        let sub = Disk::new(centers[ci], radius.min(disk.radius));
        let (sub, b) = match nudge_scan(f, sub, opts, evaluations) {
            Ok(v) => v,
            Err(_) => return cover(f, disk, m, opts, depth, evaluations),
        };
        found += b.winding.max(0) as usize;
        out.extend(resolve(f, sub, &b, opts, depth + 1, evaluations)?);
    }
    if found != m {
        return cover(f, disk, m, opts, depth, evaluations);
    }
    Ok(out)
}

/// Normalized center `c` when the power sums match `m` roots all at `c`.
fn single_cluster(moments: &[C64], m: usize) -> Option<C64> {
    if m >= moments.len() {
        return None;
    }
    let c = moments[1] / m as f64;
    let dev = (2..=m)
        .map(|k| (moments[k] / m as f64 - c.powu(k as u32)).norm())
        .fold(0.0, f64::max);
    (dev <= 1e-8).then_some(c)
}

/// Covers the disk by seven disks of 0.55 times the radius and merges.
fn cover<F: AnalyticFn>(
    f: &F,
    disk: Disk,
    m: usize,
    opts: &DiskOptions,
    depth: usize,
    evaluations: &mut usize,
) -> Result<Vec<Root>> {
    if depth >= opts.max_depth.min(MAX_COVER_DEPTH) {
        return Err(Error::RootCount {
            winding: m as i64,
            refined: 0,
        });
    }
    let r = disk.radius;
    let mut centers = vec![disk.center];
    for k in 0..6 {
        centers.push(disk.center + C64::from_polar(r * 3f64.sqrt() / 2.0, PI / 3.0 * k as f64 + 0.1));
    }
    let mut all: Vec<Root> = Vec::new();
    for c in centers {
        let sub = Disk::new(c, 0.55 * r);
        let (sub, b) = nudge_scan(f, sub, opts, evaluations)?;
        for root in resolve(f, sub, &b, opts, depth + 1, evaluations)? {
            if !disk.contains(root.z) {
                continue;
            }
            let tol = 1e-7 * (1.0 + root.z.norm());
            match all.iter_mut().find(|q| (q.z - root.z).norm() < tol) {
                Some(q) => {
                    if root.multiplicity > q.multiplicity {
                        *q = root;
                    }
                }
                None => all.push(root),
            }
        }
    }
    Ok(all)
}

/// Distinct simple roots must be resolvable at the disk scale: for each
/// root, `∏_{i≠k} |z_k − z_i| / r` (which is `|f'(z_k)| r` over the boundary
/// mean of |f|) stays above the noise floor of a multiple root.
fn well_separated(roots: &[C64], radius: f64) -> bool {
    roots.iter().enumerate().all(|(k, zk)| {
        let prod: f64 = roots
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, zi)| (zk - zi).norm() / radius)
            .product();
        prod >= 1e-5
    })
}

fn single_linkage(points: &[C64], threshold: f64) -> Vec<Vec<usize>> {
    let mut label: Vec<usize> = (0..points.len()).collect();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() < threshold {
                let (a, b) = (label[i], label[j]);
                if a != b {
                    for l in label.iter_mut() {
                        if *l == b {
                            *l = a;
                        }
                    }
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &l) in label.iter().enumerate() {
        match groups.iter_mut().find(|(k, _)| *k == l) {
            Some((_, g)) => g.push(i),
            None => groups.push((l, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(roots: Vec<(C64, usize)>) -> impl Fn(C64, bool) -> Result<Evaluation> + Sync {
        move |z: C64, _| {
            let mut v = C64::new(1.0, 0.0);
            let mut dlog = C64::new(0.0, 0.0);
            for &(r, m) in &roots {
                v *= (z - r).powu(m as u32);
                dlog += m as f64 / (z - r);
            }
            Ok(Evaluation {
                z,
                value: v,
                derivative: Some(v * dlog),
                scale: 1.0,
            })
        }
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn power_sums_recover_roots() {
        let w = [c(0.1, 0.2), c(-0.3, 0.0), c(0.25, -0.1)];
        let p: Vec<C64> = (0..=3).map(|k| w.iter().map(|x| x.powu(k)).sum()).collect();
        let mut r = roots_from_power_sums(&p, 3).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] - w[1]).norm() < 1e-12 && (r[2] - w[2]).norm() < 1e-12);
    }

    #[test]
    fn simple_roots_in_a_disk() {
        let f = poly(vec![(c(0.2, 0.1), 1), (c(-0.4, 0.3), 1), (c(3.0, 0.0), 1)]);
        let r = roots_in_disk(&f, Disk::new(c(0.0, 0.0), 1.0), &DiskOptions::default()).unwrap();
        assert_eq!(r.winding, 2);
        assert_eq!(r.roots.len(), 2);
        assert!((r.roots[0].z - c(-0.4, 0.3)).norm() < 1e-12);
        assert!((r.roots[1].z - c(0.2, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn exact_double_root_is_one_entry() {
        let f = poly(vec![(c(1.0, 0.0), 2), (c(1.5, 0.5), 1)]);
        let r = roots_in_disk(&f, Disk::new(c(1.1, 0.0), 0.3), &DiskOptions::default()).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.roots[0].multiplicity, 2);
        assert!((r.roots[0].z - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn close_pair_is_resolved() {
        let f = poly(vec![(c(2.0, 1e-4), 1), (c(2.0, -1e-4), 1)]);
        let r = roots_in_disk(&f, Disk::new(c(2.05, 0.0), 0.3), &DiskOptions::default()).unwrap();
        assert_eq!(r.roots.len(), 2);
        assert!((r.roots[0].z - c(2.0, -1e-4)).norm() < 1e-10);
    }

    #[test]
    fn many_roots_are_split_over_subdisks() {
        let roots: Vec<(C64, usize)> = (0..7).map(|k| (C64::from_polar(0.6, k as f64), 1)).chain([(c(0.0, 0.0), 2)]).collect();
        let f = poly(roots);
        let r = roots_in_disk(&f, Disk::new(c(0.01, 0.02), 1.0), &DiskOptions::default()).unwrap();
        assert_eq!(r.winding, 9);
        assert_eq!(r.count(), 9);
    }

    #[test]
    fn six_fold_root_is_one_entry() {
        let f = poly(vec![(c(0.3, 0.0), 6), (c(5.0, 0.0), 1)]);
        let r = roots_in_disk(&f, Disk::new(c(0.25, 0.05), 0.5), &DiskOptions::default()).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.roots[0].multiplicity, 6);
        assert!((r.roots[0].z - c(0.3, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn root_on_contour_is_nudged_away() {
        let f = poly(vec![(c(1.0, 0.0), 1)]);
        let r = roots_in_disk(&f, Disk::new(c(0.0, 0.0), 1.0), &DiskOptions::default()).unwrap();
        assert!((r.disk.radius - 1.0).abs() > 0.01);
        assert_eq!(r.winding as usize, r.count());
    }
}
