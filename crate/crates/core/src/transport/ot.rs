//! Lower bound on `W₂²(1_D, 1_B)` from a cell decomposition.
//!
//! Cell masses sit at cell centres. Log-domain Sinkhorn with ε-scaling on a
//! neighbour-restricted support produces a target potential `g`; two exact
//! c-transforms over all pairs then give a feasible dual pair `(f, g)`, so
//! `Σ μ f + Σ ν g` is a lower bound on the discrete transport cost however
//! well Sinkhorn converged. Moving each cell's mass back to its region costs
//! at most `δ` in `W₂`, which gives a bound for the continuous problem too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PolarPatch;
use crate::real::{cst, from_usize, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OtConfig {
    /// Cells per side of the square `[−L, L]²`, `L = max(1, r_max)`.
    pub cells: usize,
    /// Sub-samples per cell side for the cell masses.
    pub subsamples: usize,
    /// Transport support radius for the Sinkhorn phase.
    pub neighbor_radius: f64,
    pub eps_start: f64,
    /// Sweeps per ε stage; ε halves between stages down to `h²/8`.
    pub iterations_per_stage: usize,
}

impl Default for OtConfig {
    fn default() -> Self {
        Self { cells: 64, subsamples: 16, neighbor_radius: 0.25, eps_start: 0.05, iterations_per_stage: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOtBound<T> {
    /// Dual lower bound on the cell-centre transport cost.
    pub discrete_lower_bound: T,
    /// `W₂` distance bound between each density and its cell-centre masses.
    pub delta_patch: T,
    pub delta_disk: T,
    /// `(√LB − δ_D − δ_B)₊²`, a lower bound on the continuous `W₂²`.
    pub certified_lower_bound: T,
    pub sources: usize,
    pub targets: usize,
}

struct Cells<T> {
    idx: Vec<usize>,
    mass: Vec<T>,
    delta_sq: T,
}

fn cell_masses<T: Real>(cells: usize, sub: usize, l: T, inside: impl Fn([T; 2]) -> bool) -> Cells<T> {
    let h = l * cst(2.0) / from_usize(cells);
    let hs = h / from_usize(sub);
    let full = sub * sub;
    let (mut idx, mut mass) = (Vec::new(), Vec::new());
    let mut delta_sq = T::zero();
    for i in 0..cells {
        for j in 0..cells {
            let x0 = -l + h * from_usize(i);
            let y0 = -l + h * from_usize(j);
            let mut count = 0;
            for a in 0..sub {
                for b in 0..sub {
                    let p = [x0 + hs * (from_usize::<T>(a) + cst(0.5)), y0 + hs * (from_usize::<T>(b) + cst(0.5))];
                    if inside(p) {
                        count += 1;
                    }
                }
            }
            if count > 0 {
                let mm = hs * hs * from_usize(count);
                idx.push(i * cells + j);
                mass.push(mm);
                // Full cells: ∫|x − c|² = h⁴/6; partial cells: at most mass · h²/2.
                delta_sq += if count == full { h.powi(4) / cst(6.0) } else { mm * h * h * cst(0.5) };
            }
        }
    }
    Cells { idx, mass, delta_sq }
}

fn log_sum_exp<T: Real>(vals: impl Iterator<Item = T> + Clone) -> T {
    let mx = vals.clone().fold(T::min_value().unwrap_or(cst(-1e300)), |a, b| a.max(b));
    if !mx.is_finite() {
        return mx;
    }
    mx + vals.fold(T::zero(), |s, v| s + (v - mx).exp()).ln()
}

/// Certified lower bound on `W₂²(1_D dx, 1_B dx)` for an area-π patch.
pub fn discrete_ot_lower_bound<T: Real>(patch: &PolarPatch<T>, cfg: &OtConfig) -> Result<DiscreteOtBound<T>> {
    if cfg.cells < 4 || cfg.subsamples == 0 || !(cfg.neighbor_radius > 0.0) || !(cfg.eps_start > 0.0) {
        return Err(Error::InvalidParameter("invalid discrete OT configuration".into()));
    }
    let n = cfg.cells;
    let l = patch.r_max().max(T::one()) * cst(1.0 + 1e-9);
    let h = l * cst(2.0) / from_usize(n);
    let src = cell_masses(n, cfg.subsamples, l, |p| patch.contains(p));
    let tgt = cell_masses(n, cfg.subsamples, l, |p| p[0] * p[0] + p[1] * p[1] < T::one());
    // Balance the sampled masses to π each.
    let norm = |v: &[T]| {
        let s = v.iter().fold(T::zero(), |a, &b| a + b);
        v.iter().map(|&x| x * T::pi() / s).collect::<Vec<T>>()
    };
    let (mu, nu) = (norm(&src.mass), norm(&tgt.mass));
    let centre = |k: usize| {
        let (i, j) = (k / n, k % n);
        [-l + h * (from_usize::<T>(i) + cst(0.5)), -l + h * (from_usize::<T>(j) + cst(0.5))]
    };
    let xs: Vec<[T; 2]> = src.idx.iter().map(|&k| centre(k)).collect();
    let ys: Vec<[T; 2]> = tgt.idx.iter().map(|&k| centre(k)).collect();
    let cost = |a: [T; 2], b: [T; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);

    // Neighbour lists on the shared cell lattice.
    let mut tpos = vec![usize::MAX; n * n];
    for (t, &k) in tgt.idx.iter().enumerate() {
        tpos[k] = t;
    }
    let reach = (cst::<T>(cfg.neighbor_radius) / h).ceil().to_usize().unwrap_or(1) as isize;
    let r2 = cst::<T>(cfg.neighbor_radius).powi(2);
    let mut rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(xs.len());
    let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); ys.len()];
    for (s, &k) in src.idx.iter().enumerate() {
        let (i, j) = ((k / n) as isize, (k % n) as isize);
        let mut row = Vec::new();
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                    continue;
                }
                let t = tpos[(a as usize) * n + b as usize];
                if t == usize::MAX {
                    continue;
                }
                let c = cost(xs[s], ys[t]);
                if c <= r2 {
                    row.push((t, c));
                    cols[t].push((s, c));
                }
            }
        }
        rows.push(row);
    }

    let mut f = vec![T::zero(); xs.len()];
    let mut g = vec![T::zero(); ys.len()];
    let eps_end = h * h / cst(8.0);
    let mut eps: T = cst(cfg.eps_start);
    loop {
        for _ in 0..cfg.iterations_per_stage {
            for (s, row) in rows.iter().enumerate() {
                if !row.is_empty() {
                    f[s] = eps * mu[s].ln() - eps * log_sum_exp(row.iter().map(|&(t, c)| (g[t] - c) / eps));
                }
            }
            for (t, col) in cols.iter().enumerate() {
                if !col.is_empty() {
                    g[t] = eps * nu[t].ln() - eps * log_sum_exp(col.iter().map(|&(s, c)| (f[s] - c) / eps));
                }
            }
        }
        if eps <= eps_end {
            break;
        }
        eps = (eps * cst(0.5)).max(eps_end);
    }

    // Exact c-transforms make (f, g) feasible: f_s + g_t ≤ c_st for all pairs.
    for (s, x) in xs.iter().enumerate() {
        f[s] = ys.iter().zip(&g).fold(T::max_value().unwrap_or(cst(1e300)), |m, (y, &gt)| m.min(cost(*x, *y) - gt));
    }
    for (t, y) in ys.iter().enumerate() {
        g[t] = xs.iter().zip(&f).fold(T::max_value().unwrap_or(cst(1e300)), |m, (x, &fs)| m.min(cost(*x, *y) - fs));
    }
    let lb = mu.iter().zip(&f).fold(T::zero(), |a, (&m, &v)| a + m * v)
        + nu.iter().zip(&g).fold(T::zero(), |a, (&m, &v)| a + m * v);
    let (dd, db) = (src.delta_sq.sqrt(), tgt.delta_sq.sqrt());
    let root = (lb.max(T::zero()).sqrt() - dd - db).max(T::zero());
    Ok(DiscreteOtBound {
        discrete_lower_bound: lb,
        delta_patch: dd,
        delta_disk: db,
        certified_lower_bound: root * root,
        sources: xs.len(),
        targets: ys.len(),
    })
}
