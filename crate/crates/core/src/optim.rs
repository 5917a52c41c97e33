//! Derivative-free minimisation in the plane.

use crate::real::{cst, Real};

/// Outcome of a Nelder–Mead run.
#[derive(Clone, Copy, Debug)]
pub struct SimplexResult<T> {
    pub point: [T; 2],
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead on `f: R² → R` from `start` with initial edge `step`.
/// Converges when both the simplex diameter and the spread of values fall
/// below `xtol` and `ftol`.
pub fn nelder_mead<T: Real, F: FnMut([T; 2]) -> T>(
    mut f: F,
    start: [T; 2],
    step: T,
    xtol: T,
    ftol: T,
    max_iter: usize,
) -> SimplexResult<T> {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = [f(simplex[0]), f(simplex[1]), f(simplex[2])];
    let half: T = cst(0.5);
    let two: T = cst(2.0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = [simplex[idx[0]], simplex[idx[1]], simplex[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];
        let diam = dist(simplex[0], simplex[1]).max(dist(simplex[0], simplex[2]));
        if diam <= xtol && (vals[2] - vals[0]).abs() <= ftol {
            converged = true;
            break;
        }
        iterations += 1;
        let c = [(simplex[0][0] + simplex[1][0]) * half, (simplex[0][1] + simplex[1][1]) * half];
        let along = |t: T| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = along(-T::one());
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-two);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = if fr < vals[2] { along(-half) } else { along(half) };
            let fc = f(xc);
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + (simplex[k][0] - simplex[0][0]) * half,
                        simplex[0][1] + (simplex[k][1] - simplex[0][1]) * half,
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    SimplexResult { point: simplex[best], value: vals[best], iterations, converged }
}

fn dist<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
