//! Bracketing root finders and a grid-plus-refinement maximizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Plain bisection on a bracket with a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot { lo, hi });
    }
    let mut iterations = 0;
    while iterations < max_iter && (b - a) > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        iterations += 1;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    Ok(Root { x, residual: f(x), iterations, bracket: (lo, hi) })
}

/// Bracket-preserving secant iteration (Illinois variant of regula falsi),
/// falling back to a bisection step whenever the secant stalls.
pub fn secant_bisect<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot { lo, hi });
    }
    let mut side = 0i8;
    let mut iterations = 0;
    let mut x = 0.5 * (a + b);
    while iterations < max_iter {
        iterations += 1;
        let width = b - a;
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a || c >= b {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        x = c;
        if fc == 0.0 || width <= tol {
            break;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= tol {
            x = 0.5 * (a + b);
            break;
        }
        // every fourth step is a forced bisection so the bracket always shrinks
        if iterations % 4 == 0 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm == 0.0 {
                x = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
            side = 0;
        }
    }
    Ok(Root { x, residual: f(x), iterations, bracket: (lo, hi) })
}

/// Scans `n` equispaced points on [lo, hi] and returns the first bracket on
/// which `f` goes from strictly negative to nonnegative.
pub fn first_upcrossing<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut prev_x = lo;
    let mut prev = f(lo);
    for i in 1..n {
        let x = if i == n - 1 { hi } else { lo + step * i as f64 };
        let v = f(x);
        if prev < 0.0 && v >= 0.0 {
            return Some((prev_x, x));
        }
        prev_x = x;
        prev = v;
    }
    None
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Global maximizer of `f` on [lo, hi]: an `n`-point grid locates the best
/// cell, then golden-section search refines inside the neighbouring cells.
///
/// Values within `tie_rel` (relative) of the grid maximum count as ties and
/// the smallest such point wins. Three or more consecutive tied grid points
/// form a plateau, whose left end is returned unrefined.
pub fn grid_argmax<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize, tie_rel: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = n.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = tie_rel * best.abs().max(1e-300);
    let i = vs.iter().position(|&v| v >= best - tie).unwrap_or(0);
    let mut j = i;
    while j + 1 < n && vs[j + 1] >= best - tie {
        j += 1;
    }
    if j >= i + 2 {
        return (xs[i], vs[i]);
    }
    let a = xs[i.saturating_sub(1)];
    let b = xs[(j + 1).min(n - 1)];
    let (xr, vr) = golden_max(f, a, b, 1e-10 * (hi - lo).max(1.0));
    if vr > vs[i] + tie {
        (xr, vr)
    } else {
        (xs[i], vs[i])
    }
}

/// Sharpens a grid maximizer `x` of `obj` by bisecting the sign change of its
/// derivative `slope` within one grid step. Returns `x` unchanged when there
/// is no interior sign change or the polished point is worse.
pub fn polish_peak<F, D>(obj: &F, slope: D, x: f64, step: f64, lo: f64, hi: f64, tie_rel: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (a, b) = ((x - step).max(lo), (x + step).min(hi));
    if !(a < x && x < b && slope(a) > 0.0 && slope(b) < 0.0) {
        return x;
    }
    match bisect(slope, a, b, 1e-14 * hi.abs().max(1.0), 200) {
        Ok(root) if obj(root.x) >= obj(x) - tie_rel * obj(x).abs() => root.x,
        _ => x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn secant_bisect_matches_bisection() {
        let f = |x: f64| (1.0 - x) - (-2.0 * x).exp();
        let a = bisect(f, 0.5, 0.99, 1e-14, 200).unwrap();
        let b = secant_bisect(f, 0.5, 0.99, 1e-14, 200).unwrap();
        assert!((a.x - b.x).abs() < 1e-12);
        assert!(b.iterations < a.iterations);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100), Err(Error::NoRoot { .. })));
        assert!(secant_bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn upcrossing_scan() {
        let f = |x: f64| (x - 0.3) * (x - 0.7);
        // positive, then negative after 0.3, upcrossing at 0.7
        let (a, b) = first_upcrossing(&f, 0.0, 1.0, 101).unwrap();
        assert!(a < 0.7 && b >= 0.7);
        assert!(first_upcrossing(&|x: f64| x + 1.0, 0.0, 1.0, 10).is_none());
    }

    #[test]
    fn grid_argmax_peak_and_plateau() {
        let (x, v) = grid_argmax(&|r: f64| r * (1.0 - r), 0.0, 1.0, 4096, 1e-10);
        assert!((x - 0.5).abs() < 1e-7);
        assert!((v - 0.25).abs() < 1e-14);
        // flat on [0.2, 0.6], decreasing after
        let plateau = |x: f64| if x < 0.6 { 1.0 } else { 1.0 - (x - 0.6) };
        let (x, _) = grid_argmax(&plateau, 0.2, 1.0, 4096, 1e-10);
        assert_eq!(x, 0.2);
        // maximum at the left endpoint
        let (x, _) = grid_argmax(&|r: f64| r * (2.0 - r), 1.0, 2.0, 4096, 1e-10);
        assert_eq!(x, 1.0);
    }
}
