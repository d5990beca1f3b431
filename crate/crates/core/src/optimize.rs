//! Scalar root finding and one-dimensional minimization.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Result of a scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Non-finite objective values are treated as `+inf`, so the search simply
/// steers away from infeasible points.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Minimum
where
    F: Fn(f64) -> f64,
{
    let eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    let mut evaluations = 2;
    let mut iter = 0;
    while (b - a).abs() > x_tol * (1.0 + a.abs().max(b.abs())) && iter < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
        evaluations += 1;
        iter += 1;
    }
    if fc <= fd {
        Minimum {
            x: c,
            value: fc,
            evaluations,
        }
    } else {
        Minimum {
            x: d,
            value: fd,
            evaluations,
        }
    }
}

/// Maximize `f` over a sorted grid and polish the best grid point with a
/// golden-section search between its neighbours.
pub fn grid_then_golden_max<F>(f: F, grid: &[f64], x_tol: f64) -> Minimum
where
    F: Fn(f64) -> f64,
{
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let polished = golden_section(|x| -f(x), lo, hi, x_tol, 200);
    let mut out = Minimum {
        x: grid[best],
        value: values[best],
        evaluations: grid.len() + polished.evaluations,
    };
    if -polished.value > out.value {
        out.x = polished.x;
        out.value = -polished.value;
    }
    out
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket is below `rel_tol` relative to its magnitude (or
/// below `abs_floor`), returning the midpoint.
pub fn bisect<F>(f: F, lo: f64, hi: f64, rel_tol: f64, abs_floor: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo}, {hi}] (f = {fa:e}, {fb:e})"
        )));
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= (rel_tol * m.abs()).max(abs_floor) || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
