use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Bisection on a bracketing interval.
///
/// Stops once the bracket is narrower than `tol` or an exact zero is hit.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(Root { x: a, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, iterations: 0 });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut iterations = 0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        iterations += 1;
        let fm = f(m);
        if fm == 0.0 {
            return Ok(Root { x: m, iterations });
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Root { x: 0.5 * (a + b), iterations })
}

/// Grid search followed by golden-section refinement around the best cell.
///
/// Ties go to the smaller argument. The returned value is never worse than
/// the best grid sample.
pub fn maximize_1d<F>(f: F, lo: f64, hi: f64, grid_n: usize, refine_iters: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(lo < hi, "maximize_1d needs lo < hi");
    let n = grid_n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let grid = |i: usize| if i == n - 1 { hi } else { lo + step * i as f64 };

    let mut best_i = 0;
    let mut best_v = f(lo);
    for i in 1..n {
        let v = f(grid(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut best_x = grid(best_i);

    let mut a = grid(best_i.saturating_sub(1));
    let mut b = grid((best_i + 1).min(n - 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..refine_iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best_v || (v == best_v && x < best_x) {
            best_v = v;
            best_x = x;
        }
    }
    (best_x, best_v)
}
