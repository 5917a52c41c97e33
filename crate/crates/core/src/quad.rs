//! Quadrature building blocks: Gauss–Legendre panels, geometric grading,
//! periodic breakpoint integration and the Kress rule for log kernels.

use crate::real::{cst, from_usize, Real};

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        if n == 1 {
            return Self { nodes: vec![T::zero()], weights: vec![cst(2.0)] };
        }
        let mut pairs = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            pairs.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| cst(p.0)).collect(),
            weights: pairs.iter().map(|p| cst(p.1)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half: T = (b - a) * cst(0.5);
        let mid: T = (a + b) * cst(0.5);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }

    /// Sum of the rule over a list of panels.
    pub fn integrate_panels<F: FnMut(T) -> T>(&self, panels: &[(T, T)], mut f: F) -> T {
        panels.iter().fold(T::zero(), |acc, &(a, b)| acc + self.integrate(a, b, &mut f))
    }
}

/// Panels on `[a, b]` whose widths halve geometrically towards `a`.
pub fn graded_left<T: Real>(a: T, b: T, depth: usize) -> Vec<(T, T)> {
    let len = b - a;
    let mut cuts = vec![a];
    for k in (1..=depth).rev() {
        cuts.push(a + len * cst::<T>(0.5f64.powi(k as i32)));
    }
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Panels on `[a, b]` whose widths halve geometrically towards `b`.
pub fn graded_right<T: Real>(a: T, b: T, depth: usize) -> Vec<(T, T)> {
    let len = b - a;
    let mut cuts = vec![a];
    for k in 1..=depth {
        cuts.push(b - len * cst::<T>(0.5f64.powi(k as i32)));
    }
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Panels graded towards both endpoints.
pub fn graded_both<T: Real>(a: T, b: T, depth: usize) -> Vec<(T, T)> {
    let mid = (a + b) * cst(0.5);
    let mut out = graded_left(a, mid, depth);
    out.extend(graded_right(mid, b, depth));
    out
}

/// `n` equal panels on `[a, b]`.
pub fn uniform<T: Real>(a: T, b: T, n: usize) -> Vec<(T, T)> {
    let n = n.max(1);
    let h = (b - a) / from_usize(n);
    (0..n).map(|i| (a + h * from_usize(i), if i + 1 == n { b } else { a + h * from_usize(i + 1) })).collect()
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, tol: T) -> T {
    let mut flo = f(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = (lo + hi) * cst(0.5);
        let fm = f(mid);
        if (fm >= T::zero()) == (flo >= T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * cst(0.5)
}

/// Roots of `f` on `[0, period)` located from sign changes on `samples`
/// uniform nodes and refined by bisection. `f` is assumed `period`-periodic.
pub fn periodic_roots<T: Real, F: Fn(T) -> T>(f: F, period: T, samples: usize, tol: T) -> Vec<T> {
    let h = period / from_usize(samples);
    let vals: Vec<T> = (0..samples).map(|j| f(h * from_usize(j))).collect();
    let mut roots = Vec::new();
    for j in 0..samples {
        let (f0, f1) = (vals[j], vals[(j + 1) % samples]);
        if (f0 >= T::zero()) != (f1 >= T::zero()) {
            let lo = h * from_usize(j);
            roots.push(bisect(&f, lo, lo + h, tol));
        }
    }
    roots
}

/// Integral over `[0, period]` of a function that is smooth between the
/// given breakpoints, with `base` uniform cuts added for resolution.
pub fn integrate_piecewise<T: Real, F: FnMut(T) -> T>(
    rule: &GaussLegendre<T>,
    period: T,
    breakpoints: &[T],
    base: usize,
    f: F,
) -> T {
    let cuts = merged_cuts(period, breakpoints, base);
    let panels: Vec<(T, T)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    rule.integrate_panels(&panels, f)
}

/// Sorted, deduplicated cut points on `[0, period]`.
pub fn merged_cuts<T: Real>(period: T, breakpoints: &[T], base: usize) -> Vec<T> {
    let mut cuts: Vec<T> = (0..=base).map(|k| period * from_usize(k) / from_usize(base)).collect();
    for &b in breakpoints {
        if b > T::zero() && b < period {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let tiny = period * T::default_epsilon() * cst(16.0);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= tiny);
    cuts
}

/// Adaptive Gauss–Legendre for `K` integrands at once: each panel's rule is
/// compared with the sum over its halves and split until the difference is
/// below `tol` scaled by the panel's share of `[a, b]`. Returns the integrals
/// and the summed difference estimate.
pub fn adaptive<T: Real, const K: usize, F: FnMut(T) -> [T; K]>(
    mut f: F,
    a: T,
    b: T,
    initial_panels: usize,
    tol: T,
    max_depth: usize,
) -> ([T; K], T) {
    let rule = GaussLegendre::<T>::new(8);
    let mut eval = |lo: T, hi: T| {
        let mut acc = [T::zero(); K];
        for (x, w) in rule.mapped(lo, hi) {
            let v = f(x);
            for i in 0..K {
                acc[i] += w * v[i];
            }
        }
        acc
    };
    let total = b - a;
    let mut out = [T::zero(); K];
    let mut err = T::zero();
    let mut stack: Vec<(T, T, [T; K], usize)> = Vec::new();
    for (lo, hi) in uniform(a, b, initial_panels) {
        let whole = eval(lo, hi);
        stack.push((lo, hi, whole, 0));
    }
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = (lo + hi) * cst(0.5);
        let left = eval(lo, mid);
        let right = eval(mid, hi);
        let diff = (0..K).fold(T::zero(), |d, i| d.max((left[i] + right[i] - whole[i]).abs()));
        if diff <= tol * (hi - lo) / total || depth >= max_depth {
            for i in 0..K {
                out[i] += left[i] + right[i];
            }
            err += diff;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    (out, err)
}

/// Kress (Martensen–Kussmaul) weights for
/// `∫_0^{2π} log(4 sin²(t/2)) f(t) dt ≈ Σ_j R_j f(t_j)` on `t_j = 2πj/N`,
/// `N` even, singularity at `t = 0`.
#[derive(Clone, Debug)]
pub struct KressRule<T> {
    weights: Vec<T>,
}

impl<T: Real> KressRule<T> {
    pub fn new(total: usize) -> Self {
        assert!(total >= 4 && total % 2 == 0, "Kress rule needs an even node count");
        let n = total / 2;
        let nf = n as f64;
        let pi = std::f64::consts::PI;
        let weights = (0..total)
            .map(|j| {
                let phase = pi * j as f64 / nf;
                let mut s = 0.0;
                for k in 1..n {
                    s += (k as f64 * phase).cos() / k as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                cst(-2.0 * pi / nf * s - pi / (nf * nf) * sign)
            })
            .collect();
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::<f64>::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_both(1.0f64, 3.0, 5);
        assert_eq!(p.first().unwrap().0, 1.0);
        assert_eq!(p.last().unwrap().1, 3.0);
        for w in p.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_handles_kink() {
        let (v, e) = adaptive(|x: f64| [(x - 0.3).abs(), x * x], 0.0, 1.0, 4, 1e-12, 40);
        assert!((v[0] - 0.29).abs() < 1e-11, "{v:?}");
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-13 && e < 1e-10);
    }

    #[test]
    fn kress_integrates_log_kernel() {
        // ∫ log(4 sin²(t/2)) cos(t) dt = -2π
        let n = 32;
        let rule = KressRule::<f64>::new(n);
        let s: f64 = (0..n)
            .map(|j| rule.weights()[j] * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
            .sum();
        assert!((s + 2.0 * std::f64::consts::PI).abs() < 1e-12, "{s}");
    }
}
