//! Blind-policy lower bounds and the QMDP, FIB and fixed-grid upper bounds.

use super::reduced::{ReducedModel, Scratch};
use super::SolverError;

const RESIDUAL: f64 = 1e-10;
/// Sparse entries of fixed-grid backup rows kept in memory; rows past this
/// are recomputed on every sweep.
const ROW_BUDGET: usize = 40_000_000;
/// Rough cap on the floating point work spent in one bound iteration loop.
const WORK_BUDGET: f64 = 4e9;

fn iteration_cap(per_iteration: usize, max: usize) -> usize {
    ((WORK_BUDGET / per_iteration.max(1) as f64) as usize).clamp(50, max)
}

/// Values of the blind policies "always take `a`", iterated up from 0.
/// Every iterate is a valid lower bound.
pub(crate) fn blind_alphas(m: &ReducedModel) -> Vec<(usize, Vec<f64>)> {
    let n = m.len();
    let work = m.rows.iter().map(Vec::len).sum::<usize>() + n * m.na;
    let cap = iteration_cap(work, 100_000);
    (0..m.na)
        .map(|a| {
            let mut v = vec![0.0; n];
            for _ in 0..cap {
                let mut delta: f64 = 0.0;
                for s in 0..n {
                    let new = (m.goal(s, a)
                        + m.row(s, a).iter().map(|&(sp, p)| p * v[sp]).sum::<f64>())
                    .min(1.0);
                    delta = delta.max(new - v[s]);
                    v[s] = new;
                }
                if delta < 1e-12 {
                    break;
                }
            }
            (a, v)
        })
        .collect()
}

/// QMDP alphas `α_a(s) = goal(s,a) + Σ T(s,a,s') V_MDP(s')`.
pub(crate) fn qmdp_alphas(m: &ReducedModel, mdp_values: &[f64]) -> Vec<(usize, Vec<f64>)> {
    (0..m.na)
        .map(|a| {
            let v = (0..m.len())
                .map(|s| {
                    (m.goal(s, a)
                        + m.row(s, a)
                            .iter()
                            .map(|&(sp, p)| p * mdp_values[sp])
                            .sum::<f64>())
                    .min(1.0)
                })
                .collect();
            (a, v)
        })
        .collect()
}

/// Fast informed bound, iterated down from the QMDP alphas.
pub(crate) fn fib_alphas(
    m: &ReducedModel,
    start: Vec<(usize, Vec<f64>)>,
) -> Vec<(usize, Vec<f64>)> {
    let n = m.len();
    let na = m.na;
    let mut alphas: Vec<Vec<f64>> = start.into_iter().map(|(_, v)| v).collect();
    let nnz: usize = m.rows.iter().map(Vec::len).sum();
    let cap = iteration_cap(nnz * m.no.min(16) * na, 10_000);
    let mut acc = vec![0.0; m.no * na];
    let mut seen = vec![false; m.no];
    let mut touched: Vec<usize> = Vec::new();
    for _ in 0..cap {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            for a in 0..na {
                for &(sp, p) in m.row(s, a) {
                    for (o, &po) in m.obs_row(a, sp).iter().enumerate() {
                        if po == 0.0 {
                            continue;
                        }
                        if !seen[o] {
                            seen[o] = true;
                            touched.push(o);
                        }
                        let w = po * p;
                        for (ap, alpha) in alphas.iter().enumerate() {
                            acc[o * na + ap] += w * alpha[sp];
                        }
                    }
                }
                let mut new = m.goal(s, a);
                for &o in &touched {
                    let slice = &mut acc[o * na..(o + 1) * na];
                    new += slice.iter().copied().fold(0.0, f64::max);
                    slice.iter_mut().for_each(|x| *x = 0.0);
                    seen[o] = false;
                }
                touched.clear();
                let old = alphas[a][s];
                if new < old {
                    delta = delta.max(old - new);
                    alphas[a][s] = new;
                }
            }
        }
        if delta < RESIDUAL {
            break;
        }
    }
    alphas.into_iter().enumerate().collect()
}

/// Number of compositions of `m` into `n` parts, saturating.
pub fn grid_size(n: usize, m: usize) -> u128 {
    // C(m + n - 1, m)
    let mut c: u128 = 1;
    for i in 1..=m as u128 {
        c = c.saturating_mul(n as u128 - 1 + i) / i;
    }
    c
}

fn compositions(n: usize, m: usize) -> Vec<Vec<u16>> {
    fn rec(rest: usize, i: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = rest as u16;
            out.push(cur.clone());
            return;
        }
        for k in (0..=rest).rev() {
            cur[i] = k as u16;
            rec(rest - k, i + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0u16; n];
    rec(m, 0, &mut cur, &mut out);
    out
}

/// Regular simplex grid of resolution `m` with Freudenthal interpolation.
pub(crate) struct FreudenthalGrid {
    m: usize,
    points: Vec<Vec<u16>>,
    /// `ways[p][t]`: compositions of `t` into `p` parts, for ranking.
    ways: Vec<Vec<u64>>,
}

impl FreudenthalGrid {
    pub fn new(n: usize, m: usize, cap: u128) -> Result<Self, SolverError> {
        let count = grid_size(n, m);
        if count > cap {
            return Err(SolverError::GridTooLarge { points: count, cap });
        }
        let points = compositions(n, m);
        let ways = (0..n)
            .map(|p| {
                (0..=m)
                    .map(|t| if p == 0 { 0 } else { grid_size(p, t) as u64 })
                    .collect()
            })
            .collect();
        Ok(Self { m, points, ways })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn point_belief(&self, i: usize) -> Vec<(usize, f64)> {
        self.points[i]
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(s, &c)| (s, c as f64 / self.m as f64))
            .collect()
    }

    /// Vertices and barycentric weights of the sub-simplex containing `b`.
    pub fn interpolation(&self, b: &[f64]) -> Vec<(usize, f64)> {
        let n = b.len();
        let m = self.m as f64;
        let mut x = vec![0.0; n];
        let total: f64 = b.iter().sum();
        let mut acc = 0.0;
        for i in (0..n).rev() {
            acc += b[i];
            x[i] = m * acc / total;
        }
        x[0] = m;
        // rounding noise must not break integrality or monotonicity
        for i in 1..n {
            let r = x[i].round();
            if (x[i] - r).abs() < 1e-9 {
                x[i] = r;
            }
            x[i] = x[i].clamp(0.0, x[i - 1]);
        }
        let mut u: Vec<i64> = x.iter().map(|v| v.floor() as i64).collect();
        let d: Vec<f64> = x.iter().zip(&u).map(|(v, &f)| v - f as f64).collect();
        let mut order: Vec<usize> = (1..n).collect();
        order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
        let mut out = Vec::with_capacity(n);
        let first = 1.0 - order.first().map_or(0.0, |&i| d[i]);
        if first > 0.0 {
            out.push((self.lookup(&u), first));
        }
        for k in 0..order.len() {
            u[order[k]] += 1;
            let w = d[order[k]] - order.get(k + 1).map_or(0.0, |&i| d[i]);
            if w > 0.0 {
                out.push((self.lookup(&u), w));
            }
        }
        out
    }

    /// Position of the composition `u[i] - u[i+1]` in enumeration order,
    /// where larger leading parts come first.
    fn lookup(&self, u: &[i64]) -> usize {
        let n = u.len();
        let mut rest = self.m;
        let mut idx = 0u64;
        for i in 0..n - 1 {
            let c = (u[i] - u[i + 1]) as usize;
            let parts = n - i - 1;
            idx += (c + 1..=rest)
                .map(|k| self.ways[parts][rest - k])
                .sum::<u64>();
            rest -= c;
        }
        idx as usize
    }
}

/// Fixed-grid upper bound at the normalized belief `b0`: values on the grid
/// are initialized from the MDP corner values and lowered by Bellman backups
/// whose successor values are interpolated on the grid.
pub(crate) fn lovejoy_value(
    m: &ReducedModel,
    corners: &[f64],
    b0: &[(usize, f64)],
    resolution: usize,
    cap: u128,
) -> Result<f64, SolverError> {
    let n = m.len();
    if n == 0 {
        return Ok(0.0);
    }
    let grid = FreudenthalGrid::new(n, resolution, cap)?;
    let mut values: Vec<f64> = (0..grid.len())
        .map(|i| {
            grid.point_belief(i)
                .iter()
                .map(|&(s, p)| corners[s] * p)
                .sum()
        })
        .collect();
    let mut scratch = Scratch::new(n, m.no);
    let mut dense = vec![0.0; n];
    let mut merged: Vec<f64> = vec![0.0; grid.len()];
    let mut touched: Vec<usize> = Vec::new();
    // interpolation is linear in the grid values, so the backup of point `i`
    // under `a` is a fixed sparse row over grid points
    let mut backup_row = |i: usize, a: usize| -> (f64, Vec<(u32, f64)>) {
        let step = m.step(&grid.point_belief(i), a, &mut scratch);
        for (_, p, c) in &step.branches {
            for &(s, q) in c {
                dense[s] = q;
            }
            for (j, w) in grid.interpolation(&dense) {
                if merged[j] == 0.0 {
                    touched.push(j);
                }
                merged[j] += p * w;
            }
            for &(s, _) in c {
                dense[s] = 0.0;
            }
        }
        touched.sort_unstable();
        let row = touched
            .iter()
            .map(|&j| (j as u32, std::mem::take(&mut merged[j])))
            .collect();
        touched.clear();
        (step.goal, row)
    };
    let mut cached: Vec<Vec<(f64, Vec<(u32, f64)>)>> = Vec::new();
    let mut entries = 0usize;
    while cached.len() < grid.len() && entries < ROW_BUDGET {
        let per_action: Vec<_> = (0..m.na).map(|a| backup_row(cached.len(), a)).collect();
        entries += per_action.iter().map(|r| r.1.len()).sum::<usize>();
        cached.push(per_action);
    }
    let q = |values: &[f64], (goal, row): &(f64, Vec<(u32, f64)>)| -> f64 {
        goal + row
            .iter()
            .map(|&(j, w)| w * values[j as usize])
            .sum::<f64>()
    };
    for _ in 0..10_000 {
        let mut delta: f64 = 0.0;
        for i in 0..grid.len() {
            let best = match cached.get(i) {
                Some(rows) => rows.iter().map(|r| q(&values, r)).fold(0.0, f64::max),
                None => (0..m.na)
                    .map(|a| q(&values, &backup_row(i, a)))
                    .fold(0.0, f64::max),
            };
            if best < values[i] {
                delta = delta.max(values[i] - best);
                values[i] = best;
            }
        }
        if delta < 1e-6 {
            break;
        }
    }
    let mut dense = vec![0.0; n];
    for &(s, p) in b0 {
        dense[s] = p;
    }
    Ok(grid
        .interpolation(&dense)
        .iter()
        .map(|&(i, w)| w * values[i])
        .sum())
}
