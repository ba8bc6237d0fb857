use super::{sample, LyapunovSample};
use crate::error::Result;
use crate::linalg::C64;
use crate::monodromy::IntegratorOptions;
use crate::potential::Potential;
use crate::tolerances::{COLLISION_TOL, MAX_TRACK_SUBDIVISIONS};
use rayon::prelude::*;

/// Lyapunov branches continued along a contour.
#[derive(Clone, Debug)]
pub struct BranchTrack {
    pub grid: Vec<C64>,
    /// `branches[j][i]` is branch j at `grid[i]`.
    pub branches: Vec<Vec<C64>>,
    /// Indices i of cells `[grid[i−1], grid[i]]` where the assignment stayed
    /// ambiguous or two branches collided.
    pub collision_marks: Vec<usize>,
    /// Samples at the grid nodes, in grid order.
    pub samples: Vec<LyapunovSample>,
    /// Extra samples spent on subdivision.
    pub refinements: usize,
}

impl BranchTrack {
    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn value(&self, branch: usize, node: usize) -> C64 {
        self.branches[branch][node]
    }

    pub fn is_collision_cell(&self, cell: usize) -> bool {
        self.collision_marks.binary_search(&cell).is_ok()
    }
}

/// Samples every contour node (in parallel) and links the Δ values into
/// continuous branches by minimal-distance assignment against a linear
/// prediction.
pub fn track(p: &Potential, contour: &[C64], opts: &IntegratorOptions) -> Result<BranchTrack> {
    let samples: Vec<LyapunovSample> = contour
        .par_iter()
        .map(|&z| sample(p, z, opts))
        .collect::<Result<_>>()?;
    let n = p.n();
    let mut branches: Vec<Vec<C64>> = vec![Vec::with_capacity(contour.len()); n];
    let mut marks = Vec::new();
    let mut refinements = 0;
    if samples.is_empty() {
        return Ok(BranchTrack {
            grid: Vec::new(),
            branches,
            collision_marks: marks,
            samples,
            refinements,
        });
    }
    for (j, d) in samples[0].deltas.iter().enumerate() {
        branches[j].push(*d);
    }
    let mut prev: Option<(C64, Vec<C64>)> = None;
    for i in 1..samples.len() {
        let last: Vec<C64> = branches.iter().map(|b| b[i - 1]).collect();
        let mut walker = Walker {
            p,
            opts,
            refinements: 0,
            ambiguous: false,
        };
        let assigned = walker.step(
            prev.as_ref().map(|(z, v)| (*z, v.as_slice())),
            (contour[i - 1], &last),
            (contour[i], &samples[i].deltas),
            0,
        )?;
        refinements += walker.refinements;
        if walker.ambiguous {
            marks.push(i);
        }
        for (j, v) in assigned.iter().enumerate() {
            branches[j].push(*v);
        }
        prev = Some((contour[i - 1], last));
    }
    Ok(BranchTrack {
        grid: contour.to_vec(),
        branches,
        collision_marks: marks,
        samples,
        refinements,
    })
}

struct Walker<'a> {
    p: &'a Potential,
    opts: &'a IntegratorOptions,
    refinements: usize,
    ambiguous: bool,
}

impl Walker<'_> {
    /// Orders `target.1` to continue the branches known at `from`.
    fn step(
        &mut self,
        before: Option<(C64, &[C64])>,
        from: (C64, &[C64]),
        target: (C64, &[C64]),
        depth: usize,
    ) -> Result<Vec<C64>> {
        let (z0, v0) = from;
        let (z1, raw) = target;
        let predicted: Vec<C64> = match before {
            Some((zb, vb)) if (z0 - zb).norm() > 0.0 => {
                let ratio = (z1 - z0) / (z0 - zb);
                v0.iter().zip(vb).map(|(a, b)| a + (a - b) * ratio).collect()
            }
            _ => v0.to_vec(),
        };
        let scale = raw.iter().chain(v0).fold(1.0f64, |s, x| s.max(x.norm()));
        if min_separation(raw) < COLLISION_TOL * scale || min_separation(v0) < COLLISION_TOL * scale {
            // a collision cannot be resolved by sampling closer to it
            self.ambiguous = true;
            return Ok(assign(&predicted, raw).0);
        }
        let (order, best, second) = assign(&predicted, raw);
        let confident = second > 4.0 * best + 1e-14 * scale;
        if confident {
            return Ok(order);
        }
        if depth >= MAX_TRACK_SUBDIVISIONS {
            self.ambiguous = true;
            return Ok(order);
        }
        let mid = (z0 + z1) * 0.5;
        let mid_sample = sample(self.p, mid, self.opts)?;
        self.refinements += 1;
        let mid_vals = self.step(before, from, (mid, &mid_sample.deltas), depth + 1)?;
        let end = self.step(Some((z0, v0)), (mid, &mid_vals), target, depth + 1)?;
        Ok(end)
    }
}

fn min_separation(v: &[C64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            m = m.min((v[i] - v[j]).norm());
        }
    }
    m
}

/// Best matching of `raw` onto `predicted`, returning the reordered values,
/// the best total cost and the runner-up cost.
fn assign(predicted: &[C64], raw: &[C64]) -> (Vec<C64>, f64, f64) {
    let n = raw.len();
    if n == 1 {
        return (raw.to_vec(), (raw[0] - predicted[0]).norm(), f64::INFINITY);
    }
    if n <= 7 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = (f64::INFINITY, perm.clone());
        let mut second = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let cost: f64 = p.iter().enumerate().map(|(j, &k)| (raw[k] - predicted[j]).norm()).sum();
            if cost < best.0 {
                second = best.0;
                best = (cost, p.to_vec());
            } else if cost < second {
                second = cost;
            }
        });
        return (best.1.iter().map(|&k| raw[k]).collect(), best.0, second);
    }
    // greedy fallback for many branches
    let mut used = vec![false; n];
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut cost = 0.0;
    let mut margin = f64::INFINITY;
    for (j, pr) in predicted.iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = (0..n).filter(|k| !used[*k]).map(|k| ((raw[k] - pr).norm(), k)).collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        used[dists[0].1] = true;
        out[j] = raw[dists[0].1];
        cost += dists[0].0;
        if dists.len() > 1 {
            margin = margin.min(dists[1].0 - dists[0].0);
        }
    }
    (out, cost, cost + margin)
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}
