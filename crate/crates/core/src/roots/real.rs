use super::{roots_in_disk, AnalyticFn, Disk, DiskOptions, Root};
use crate::error::Result;
use crate::linalg::C64;
use crate::lyapunov::Evaluation;
use crate::tolerances::{MOMENT_POINTS, REAL_GRID_STEP, REAL_ROOT_IMAG_TOL};
use rayon::prelude::*;

/// Relative |f| below which a real point counts as a zero at roundoff level.
const SPLIT_PAIR_RESIDUAL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealScanOptions {
    pub step: f64,
    /// Boundary samples of the small disks probing a minimum of |f|.
    pub probe_points: usize,
    /// Probe a minimum when the local quadratic model has a zero within this
    /// many grid steps of the axis.
    pub probe_reach: f64,
}

impl Default for RealScanOptions {
    fn default() -> Self {
        RealScanOptions {
            step: REAL_GRID_STEP,
            probe_points: MOMENT_POINTS,
            probe_reach: 2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RealScan {
    pub grid: Vec<f64>,
    pub values: Vec<Evaluation>,
    /// Real zeros, ascending, with multiplicity.
    pub roots: Vec<Root>,
    /// Zeros off the axis picked up while probing minima.
    pub complex_roots: Vec<Root>,
    /// Largest `|Im f| / scale` on the grid; f should be real on ℝ.
    pub max_imag_ratio: f64,
    pub evaluations: usize,
}

/// Zeros of a function that is real on ℝ inside `[a, b]`: sign changes are
/// refined by Brent's method, near-touching minima of |f| are resolved on
/// small disks, which also reports multiplicities.
pub fn real_roots<F: AnalyticFn>(f: &F, a: f64, b: f64, opts: &RealScanOptions) -> Result<RealScan> {
    let grid = uniform_grid(a, b, opts.step);
    let values: Vec<Evaluation> = grid
        .par_iter()
        .map(|&x| f.eval(C64::new(x, 0.0), false))
        .collect::<Result<_>>()?;
    real_roots_sampled(f, grid, values, opts)
}

/// Uniform grid on `[a, b]` with spacing at most `step`.
pub fn uniform_grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let cells = ((b - a) / step).ceil().max(1.0) as usize;
    let h = (b - a) / cells as f64;
    (0..=cells).map(|i| if i == cells { b } else { a + h * i as f64 }).collect()
}

/// As [`real_roots`], reusing values already computed on a uniform grid.
pub fn real_roots_sampled<F: AnalyticFn>(
    f: &F,
    grid: Vec<f64>,
    values: Vec<Evaluation>,
    opts: &RealScanOptions,
) -> Result<RealScan> {
    let cells = grid.len() - 1;
    let (a, b) = (grid[0], grid[cells]);
    let h = (b - a) / cells as f64;
    let mut evaluations = values.len();
    let max_imag_ratio = values
        .iter()
        .map(|e| e.value.im.abs() / e.scale.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let g: Vec<f64> = values.iter().map(|e| e.value.re).collect();

    let mut found: Vec<Root> = Vec::new();
    let mut probes: Vec<f64> = Vec::new();
    for i in 0..cells {
        let (x0, x1, g0, g1) = (grid[i], grid[i + 1], g[i], g[i + 1]);
        if g0 == 0.0 {
            probes.push(x0);
            continue;
        }
        if g0.signum() != g1.signum() && g1 != 0.0 {
            let x = brent(|x| Ok(f.eval(C64::new(x, 0.0), false)?.value.re), x0, x1, g0, g1, &mut evaluations)?;
            let e = f.eval(C64::new(x, 0.0), true)?;
            evaluations += 1;
            let slope = e.derivative.unwrap_or_default().norm() * h;
            if slope < 0.01 * g0.abs().max(g1.abs()) {
                probes.push(x);
            } else {
                found.push(Root {
                    z: C64::new(x, 0.0),
                    multiplicity: 1,
                    residual: e.value.norm() / e.scale.max(f64::MIN_POSITIVE),
                    newton_converged: true,
                });
            }
        }
    }
    if g[cells] == 0.0 {
        probes.push(grid[cells]);
    }
    for i in 1..cells {
        let (gm, g0, gp) = (g[i - 1], g[i], g[i + 1]);
        if gm.signum() != g0.signum() || gp.signum() != g0.signum() {
            continue;
        }
        if !(g0.abs() <= gm.abs() && g0.abs() <= gp.abs()) {
            continue;
        }
        // quadratic model g ≈ A + B s + C s², s = (x − x_i)/h
        let aa = g0;
        let bb = 0.5 * (gp - gm);
        let cc = 0.5 * (gp + gm) - g0;
        if cc == 0.0 {
            continue;
        }
        let vertex = -bb / (2.0 * cc);
        let disc = bb * bb - 4.0 * aa * cc;
        let imag_reach = if disc >= 0.0 { 0.0 } else { (-disc).sqrt() / (2.0 * cc.abs()) };
        if imag_reach <= opts.probe_reach {
            probes.push(grid[i] + vertex.clamp(-1.0, 1.0) * h);
        }
    }
    probes.sort_by(f64::total_cmp);
    probes.dedup_by(|x, y| (*x - *y).abs() < 0.5 * h);

    let disk_opts = DiskOptions {
        boundary_points: opts.probe_points,
        ..DiskOptions::default()
    };
    let mut complex_roots = Vec::new();
    for x in probes {
        let r = roots_in_disk(f, Disk::new(C64::new(x, 0.0), 1.5 * h), &disk_opts)?;
        evaluations += r.evaluations;
        let mut real_here: Vec<Root> = Vec::new();
        for root in merge_split_pairs(f, r.roots, &mut evaluations)? {
            if root.z.re < a - 1e-12 || root.z.re > b + 1e-12 {
                continue;
            }
            if root.z.im.abs() <= REAL_ROOT_IMAG_TOL {
                real_here.push(Root {
                    z: C64::new(root.z.re, 0.0),
                    ..root
                });
            } else {
                let tol = 1e-8 * (1.0 + root.z.norm());
                if complex_roots.iter().all(|q: &Root| (q.z - root.z).norm() > tol) {
                    complex_roots.push(root);
                }
            }
        }
        // a probe supersedes earlier reports of the same zeros
        found.retain(|q| {
            real_here
                .iter()
                .all(|p| (q.z - p.z).norm() > 1e-8 * (1.0 + p.z.norm()))
        });
        found.extend(real_here);
    }
    found.sort_by(|p, q| p.z.re.total_cmp(&q.z.re));
    complex_roots.sort_by(|p, q| p.z.re.total_cmp(&q.z.re).then(p.z.im.total_cmp(&q.z.im)));
    Ok(RealScan {
        grid,
        values,
        roots: found,
        complex_roots,
        max_imag_ratio,
        evaluations,
    })
}

/// A real multiple root perturbed by roundoff shows up as a near-conjugate
/// pair at distance about √(noise). Such a pair is merged back onto the axis
/// when f at the real midpoint is as small as f at the pair itself.
pub(crate) fn merge_split_pairs<F: AnalyticFn>(f: &F, roots: Vec<Root>, evaluations: &mut usize) -> Result<Vec<Root>> {
    let mut out = Vec::with_capacity(roots.len());
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let r = roots[i];
        if r.z.im.abs() <= REAL_ROOT_IMAG_TOL {
            out.push(r);
            continue;
        }
        let partner = (0..roots.len()).find(|&j| {
            !used[j] && (roots[j].z - r.z.conj()).norm() <= 0.1 * r.z.im.abs() && r.z.im * roots[j].z.im < 0.0
        });
        if let Some(j) = partner {
            let x = 0.5 * (r.z.re + roots[j].z.re);
            let e = f.eval(C64::new(x, 0.0), false)?;
            *evaluations += 1;
            let residual = e.value.norm() / e.scale.max(f64::MIN_POSITIVE);
            if residual <= SPLIT_PAIR_RESIDUAL {
                used[j] = true;
                out.push(Root {
                    z: C64::new(x, 0.0),
                    multiplicity: r.multiplicity + roots[j].multiplicity,
                    residual,
                    newton_converged: false,
                });
                continue;
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Brent's method on a sign-changing bracket.
fn brent(
    mut g: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    evaluations: &mut usize,
) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-14 * (1.0 + b.abs());
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = g(b)?;
        *evaluations += 1;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trig(z: C64, _: bool) -> Result<Evaluation> {
        // (2 − 2cos z)(z − 1)  : double zeros at 2πk, a simple zero at 1
        let v = (C64::new(2.0, 0.0) - z.cos() * 2.0) * (z - 1.0);
        let d = z.sin() * 2.0 * (z - 1.0) + (C64::new(2.0, 0.0) - z.cos() * 2.0);
        Ok(Evaluation {
            z,
            value: v,
            derivative: Some(d),
            scale: 1.0 + z.norm(),
        })
    }

    fn shifted_square(eps: f64) -> impl Fn(C64, bool) -> Result<Evaluation> {
        move |z: C64, _| {
            Ok(Evaluation {
                z,
                value: (z - 3.0) * (z - 3.0) + eps,
                derivative: Some((z - 3.0) * 2.0),
                scale: 1.0,
            })
        }
    }

    #[test]
    fn noise_split_double_root_is_merged() {
        let s = real_roots(&shifted_square(1e-14), 2.0, 4.0, &RealScanOptions::default()).unwrap();
        assert!(s.complex_roots.is_empty(), "{:?}", s.complex_roots);
        assert_eq!(s.roots.len(), 1);
        assert!((s.roots[0].z.re - 3.0).abs() < 1e-9 && s.roots[0].multiplicity == 2);

        // a genuine pair at ±0.01i stays complex
        let s = real_roots(&shifted_square(1e-4), 2.0, 4.0, &RealScanOptions::default()).unwrap();
        assert!(s.roots.is_empty(), "{:?}", s.roots);
        assert_eq!(s.complex_roots.len(), 2);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let mut n = 0;
        let x = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, -2.0, 6.0, &mut n).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn finds_simple_and_double_zeros() {
        let s = real_roots(&trig, -1.0, 7.0, &RealScanOptions::default()).unwrap();
        let got: Vec<(f64, usize)> = s.roots.iter().map(|r| (r.z.re, r.multiplicity)).collect();
        assert_eq!(got.len(), 3, "{got:?}");
        assert!(got[0].0.abs() < 1e-10 && got[0].1 == 2, "{got:?}");
        assert!((got[1].0 - 1.0).abs() < 1e-12 && got[1].1 == 1);
        assert!((got[2].0 - 2.0 * std::f64::consts::PI).abs() < 1e-10 && got[2].1 == 2);
    }

    #[test]
    fn close_real_pair_inside_one_cell() {
        let f = |z: C64, _: bool| {
            let v = (z - 0.5001) * (z - 0.5003) * (z + 3.0);
            let d = (z - 0.5003) * (z + 3.0) + (z - 0.5001) * (z + 3.0) + (z - 0.5001) * (z - 0.5003);
            Ok(Evaluation {
                z,
                value: v,
                derivative: Some(d),
                scale: 1.0,
            })
        };
        let s = real_roots(&f, 0.0, 1.0, &RealScanOptions::default()).unwrap();
        assert_eq!(s.roots.len(), 2);
        assert!((s.roots[0].z.re - 0.5001).abs() < 1e-12);
    }

    #[test]
    fn near_axis_complex_pair_is_reported_separately() {
        let f = |z: C64, _: bool| {
            let v = (z - 0.5) * (z - 0.5) + 1e-6;
            Ok(Evaluation {
                z,
                value: v,
                derivative: Some((z - 0.5) * 2.0),
                scale: 1.0,
            })
        };
        let s = real_roots(&f, 0.0, 1.0, &RealScanOptions::default()).unwrap();
        assert!(s.roots.is_empty(), "{:?}", s.roots);
        assert_eq!(s.complex_roots.len(), 2);
        assert!((s.complex_roots[1].z - C64::new(0.5, 1e-3)).norm() < 1e-10);
    }
}
