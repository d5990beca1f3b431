//! One-dimensional potentials `∫ K(x − y) f(y) dy` and maximal operators.
//!
//! Evaluation points are carried as [`Abscissa`] (sign and `ln|x|`), so a
//! potential can be evaluated at `x = e^{±3000}` when the norm of the
//! potential needs it. Against a log piece of `f` the integral is taken in
//! the piece parameter `s`; `ln|x − y|` is formed from `ln|x|` and `ln|y|`
//! with `ln1p`/`expm1`, and next to the kernel singularity `y = x` from the
//! exact node offsets of the quadrature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::norms::{mass, Direction, FlatPiece, LogPiece, Piece, TestFunction, UserPiece};
use crate::optimize::grid_then_golden_max;
use crate::par::{self, Execution};
use crate::psi::{check_keys, get, get_or, parse_kv, parse_number, split_family, SlowlyVarying};
use crate::quad::{integrate_ln, ln_one_minus_exp_neg, Estimate, Interval, LnVal, Node, QuadratureSpec};
use crate::special::ln_gamma_fn;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Convolution kernel (d = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `|y|^{α−1}`.
    Riesz { alpha: f64 },
    /// `|y|^{α−1}|ln|y||^β S(|ln|y||)` with `S = (1 + ln(1+z))^κ`.
    LogRiesz { alpha: f64, beta: f64, kappa: f64 },
    /// `LogRiesz` restricted to `|y| < radius`.
    Truncated { alpha: f64, beta: f64, kappa: f64, radius: f64 },
    /// `|y|^{−ν} K_ν(|y|)`, `ν = (1 − α)/2`.
    Bessel { alpha: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let a = self.alpha();
        if !(a > 0.0 && a < 1.0) {
            return Err(param(format!("kernel alpha = {a} must lie in (0, 1)")));
        }
        match *self {
            KernelSpec::LogRiesz { beta, kappa, .. } => check_log(beta, kappa),
            KernelSpec::Truncated { beta, kappa, radius, .. } => {
                check_log(beta, kappa)?;
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(param(format!("radius = {radius} must be positive")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            KernelSpec::Riesz { alpha }
            | KernelSpec::LogRiesz { alpha, .. }
            | KernelSpec::Truncated { alpha, .. }
            | KernelSpec::Bessel { alpha } => alpha,
        }
    }

    fn radius(&self) -> Option<f64> {
        match *self {
            KernelSpec::Truncated { radius, .. } => Some(radius),
            _ => None,
        }
    }

    fn log_factors(&self) -> Option<(f64, SlowlyVarying)> {
        match *self {
            KernelSpec::LogRiesz { beta, kappa, .. } | KernelSpec::Truncated { beta, kappa, .. } => {
                if beta == 0.0 && kappa == 0.0 {
                    None
                } else {
                    Some((beta, SlowlyVarying::log_power(kappa).unwrap_or(SlowlyVarying::One)))
                }
            }
            _ => None,
        }
    }

    /// Power of `|y|` at infinity, `None` when the kernel has bounded support
    /// or decays exponentially.
    fn tail_power(&self) -> Option<f64> {
        match self {
            KernelSpec::Riesz { .. } | KernelSpec::LogRiesz { .. } => Some(self.alpha() - 1.0),
            _ => None,
        }
    }

    /// `ln K(r)` from `ln r`.
    pub fn ln_value(&self, ln_r: f64) -> f64 {
        let a = self.alpha();
        match self {
            KernelSpec::Riesz { .. } => (a - 1.0) * ln_r,
            KernelSpec::LogRiesz { .. } | KernelSpec::Truncated { .. } => {
                if let Some(rad) = self.radius() {
                    if ln_r >= rad.ln() {
                        return f64::NEG_INFINITY;
                    }
                }
                let mut v = (a - 1.0) * ln_r;
                if let Some((beta, s)) = self.log_factors() {
                    let z = ln_r.abs();
                    if beta != 0.0 {
                        v += beta * z.ln();
                    }
                    v += s.ln_eval(z);
                }
                v
            }
            KernelSpec::Bessel { .. } => {
                let nu = 0.5 * (1.0 - a);
                -nu * ln_r + ln_macdonald_k_from_ln(nu, ln_r)
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.ln_value(r.abs().ln()).exp()
    }
}

fn check_log(beta: f64, kappa: f64) -> Result<()> {
    if !(beta >= 0.0) {
        return Err(param(format!("beta = {beta} must be non-negative")));
    }
    SlowlyVarying::log_power(kappa).map(|_| ())
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Riesz { alpha } => write!(f, "riesz:alpha={alpha}"),
            KernelSpec::LogRiesz { alpha, beta, kappa } => {
                write!(f, "log_riesz:alpha={alpha},beta={beta},kappa={kappa}")
            }
            KernelSpec::Truncated { alpha, beta, kappa, radius } => write!(
                f,
                "truncated:alpha={alpha},beta={beta},kappa={kappa},radius={radius}"
            ),
            KernelSpec::Bessel { alpha } => write!(f, "bessel:alpha={alpha}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = split_family(s);
        let kv = parse_kv(rest)?;
        let k = match family {
            "riesz" => {
                check_keys(&kv, &["alpha"])?;
                KernelSpec::Riesz { alpha: get(&kv, "alpha")? }
            }
            "log_riesz" => {
                check_keys(&kv, &["alpha", "beta", "kappa"])?;
                KernelSpec::LogRiesz {
                    alpha: get(&kv, "alpha")?,
                    beta: get_or(&kv, "beta", 0.0)?,
                    kappa: get_or(&kv, "kappa", 0.0)?,
                }
            }
            "truncated" => {
                check_keys(&kv, &["alpha", "beta", "kappa", "radius"])?;
                KernelSpec::Truncated {
                    alpha: get(&kv, "alpha")?,
                    beta: get_or(&kv, "beta", 0.0)?,
                    kappa: get_or(&kv, "kappa", 0.0)?,
                    radius: get_or(&kv, "radius", 1.0)?,
                }
            }
            "bessel" => {
                check_keys(&kv, &["alpha"])?;
                KernelSpec::Bessel { alpha: get(&kv, "alpha")? }
            }
            other => return Err(Error::Parse(format!("unknown kernel '{other}'"))),
        };
        k.validate()?;
        Ok(k)
    }
}

/// Ordered evaluation points with the rule that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<f64>,
    rule: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Geometric,
    Explicit,
}

impl EvalGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        Self::with_rule(points, Spacing::Explicit)
    }

    fn with_rule(points: Vec<f64>, rule: Spacing) -> Result<Self> {
        if points.is_empty() {
            return Err(param("empty grid"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(param("grid points must be finite"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(param("grid points must be strictly increasing"));
        }
        Ok(EvalGrid { points, rule })
    }

    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Self::with_rule(vec![a], Spacing::Uniform);
        }
        let pts = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        Self::with_rule(pts, Spacing::Uniform)
    }

    /// `n` points from `a` to `b` with constant ratio; both ends same sign.
    pub fn geometric(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a * b > 0.0) {
            return Err(param(format!("geometric grid needs a, b of one sign, got {a}, {b}")));
        }
        if n < 2 {
            return Self::with_rule(vec![a], Spacing::Geometric);
        }
        let (la, lb) = (a.abs().ln(), b.abs().ln());
        let pts: Vec<f64> = (0..n)
            .map(|i| {
                let v = (la + (lb - la) * i as f64 / (n - 1) as f64).exp();
                if i == 0 {
                    a
                } else if i == n - 1 {
                    b
                } else {
                    a.signum() * v
                }
            })
            .collect();
        Self::with_rule(pts, Spacing::Geometric)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn rule(&self) -> Spacing {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl FromStr for EvalGrid {
    type Err = Error;
    /// `uniform:a:b:n` or `geometric:a:b:n`.
    fn from_str(s: &str) -> Result<Self> {
        let (rule, rest) = split_family(s);
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid '{s}' must look like {rule}:a:b:n")));
        }
        let a = parse_number(parts[0])?;
        let b = parse_number(parts[1])?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad point count '{}'", parts[2])))?;
        match rule {
            "uniform" => EvalGrid::uniform(a, b, n),
            "geometric" => EvalGrid::geometric(a, b, n),
            other => Err(Error::Parse(format!("unknown grid rule '{other}'"))),
        }
    }
}

/// A real number stored as sign and `ln|x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abscissa {
    pub sign: f64,
    pub ln_abs: f64,
}

impl Abscissa {
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Abscissa {
                sign: 0.0,
                ln_abs: f64::NEG_INFINITY,
            }
        } else {
            Abscissa {
                sign: x.signum(),
                ln_abs: x.abs().ln(),
            }
        }
    }

    pub fn new(sign: f64, ln_abs: f64) -> Self {
        Abscissa { sign, ln_abs }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    fn representable(&self) -> bool {
        self.sign == 0.0 || self.ln_abs.abs() < 700.0
    }
}

/// `ln(e^a + e^b)`.
fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `ln(e^a − e^b)` for `a > b`.
fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = a - b;
    if !(d > 0.0) {
        return f64::NEG_INFINITY;
    }
    a + ln_one_minus_exp_neg(d, d.ln())
}

/// `ln|x − y|` for an abscissa outside the `f64` range.
fn ln_distance(x: &Abscissa, y: f64) -> f64 {
    if y == 0.0 {
        return x.ln_abs;
    }
    let ly = y.abs().ln();
    let s = x.sign * y.signum();
    if ly >= x.ln_abs {
        ly + (-s * (x.ln_abs - ly).exp()).ln_1p()
    } else {
        x.ln_abs + (-s * (ly - x.ln_abs).exp()).ln_1p()
    }
}

/// Open `ln|y|` window of points on the side `side_same` (relative to `x`)
/// with `|x − y| < c`.
fn ln_window(x: &Abscissa, same_side: bool, ln_c: f64) -> Option<(f64, f64)> {
    if x.sign == 0.0 {
        return Some((f64::NEG_INFINITY, ln_c));
    }
    let lx = x.ln_abs;
    if same_side {
        let lo = if lx > ln_c { ln_sub(lx, ln_c) } else { f64::NEG_INFINITY };
        Some((lo, ln_add(lx, ln_c)))
    } else if lx < ln_c {
        Some((f64::NEG_INFINITY, ln_sub(ln_c, lx)))
    } else {
        None
    }
}

/// `ln|y|` values where `|x − y| = 1` on the given side.
fn ln_unit_points(x: &Abscissa, same_side: bool) -> Vec<f64> {
    let mut out = Vec::new();
    if x.sign == 0.0 {
        out.push(0.0);
    } else if same_side {
        out.push(ln_add(x.ln_abs, 0.0));
        if x.ln_abs > 0.0 {
            out.push(ln_sub(x.ln_abs, 0.0));
        }
    } else if x.ln_abs < 0.0 {
        out.push(ln_sub(0.0, x.ln_abs));
    }
    out
}

/// Potential of one log piece at `x`.
fn log_piece_potential(
    l: &LogPiece,
    x: &Abscissa,
    kernel: &KernelSpec,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let ds = l.dir.sign();
    let same = x.sign == l.side;
    let to_s = |ln_y: f64| ds * ln_y;
    let (mut lo, mut hi) = (l.t0, f64::INFINITY);
    if let Some(rad) = kernel.radius() {
        let Some((w1, w2)) = ln_window(x, same, rad.ln()) else {
            return Ok(zero_estimate());
        };
        let (a, b) = if ds > 0.0 { (to_s(w1), to_s(w2)) } else { (to_s(w2), to_s(w1)) };
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(hi > lo) {
        return Ok(zero_estimate());
    }
    let s_star = if same && x.sign != 0.0 { Some(to_s(x.ln_abs)) } else { None };
    let mut cuts: Vec<(f64, bool)> = Vec::new();
    if let Some(s) = s_star {
        if s > lo && s < hi {
            cuts.push((s, true));
        }
    }
    if kernel.log_factors().is_some() {
        for ly in ln_unit_points(x, same) {
            let s = to_s(ly);
            if s > lo && s < hi {
                cuts.push((s, true));
            }
        }
    }
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pts = vec![(lo, s_star == Some(lo) || (lo == 0.0 && l.power > 0.0))];
    pts.extend(cuts);
    pts.push((hi, s_star == Some(hi)));

    // Decay of the integrand as s → ∞ (only when hi is infinite).
    let decay = if hi == f64::INFINITY {
        match l.dir {
            Direction::Inward => {
                if x.sign == 0.0 {
                    -(l.rate - 1.0 + (1.0 - kernel.alpha()))
                } else {
                    1.0 - l.rate
                }
            }
            Direction::Outward => match kernel.tail_power() {
                Some(tp) => -(l.rate + 1.0 + tp),
                None => 1.0,
            },
        }
    } else {
        f64::INFINITY
    };
    if !(decay > 0.0) {
        return Err(Error::Divergence(format!(
            "potential integral diverges (tail rate {decay}) for kernel {kernel}"
        )));
    }

    let sign = l.scale.signum();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for w in pts.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let a_is_star = s_star == Some(a);
        let b_is_star = s_star == Some(b);
        let integrand = |n: &Node| {
            let s = n.x;
            let ln_y = ds * s;
            let ln_r = if x.sign == 0.0 {
                ln_y
            } else if !same {
                ln_add(x.ln_abs, ln_y)
            } else {
                let (d, ln_d) = if a_is_star {
                    (n.lo, n.ln_lo)
                } else if b_is_star {
                    (n.hi, n.ln_hi)
                } else {
                    let d = (s - s_star.unwrap_or(f64::NAN)).abs();
                    (d, d.ln())
                };
                x.ln_abs.max(ln_y) + ln_one_minus_exp_neg(d, ln_d)
            };
            let v = l.ln_abs(s) + ln_y + kernel.ln_value(ln_r);
            LnVal {
                sign,
                ln: v,
            }
            .pipe_zero()
        };
        let mut iv = Interval::new(a, b).singular(sa, sb);
        if b == f64::INFINITY {
            iv = iv.with_decay(decay);
        }
        let est = integrate_ln(integrand, &[iv], &quad.relative_only())?;
        values.push(est.value);
        errors.push(LnVal::positive(est.ln_error));
    }
    Ok(Estimate {
        value: LnVal::sum(values),
        ln_error: LnVal::sum(errors).ln,
        evaluations: 0,
    })
}

trait PipeZero {
    fn pipe_zero(self) -> Self;
}

impl PipeZero for LnVal {
    fn pipe_zero(self) -> Self {
        if self.ln == f64::NEG_INFINITY || self.ln.is_nan() {
            LnVal::ZERO
        } else {
            self
        }
    }
}

fn zero_estimate() -> Estimate {
    Estimate {
        value: LnVal::ZERO,
        ln_error: f64::NEG_INFINITY,
        evaluations: 0,
    }
}

/// Potential of a piece given on linear `y` coordinates (flat or user).
#[allow(clippy::too_many_arguments)]
fn linear_potential<F>(
    value: F,
    lo: f64,
    hi: f64,
    singular: &[f64],
    decay: Option<f64>,
    x: &Abscissa,
    kernel: &KernelSpec,
    quad: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    // Abscissae below the f64 range act as the origin.
    let xr = x.representable() || x.ln_abs < 0.0;
    let xf = if x.representable() { x.to_f64() } else { 0.0 };
    if let Some(rad) = kernel.radius() {
        if !xr {
            return Ok(zero_estimate());
        }
        a = a.max(xf - rad);
        b = b.min(xf + rad);
    }
    if !(b > a) {
        return Ok(zero_estimate());
    }
    if (a.is_infinite() || b.is_infinite()) && kernel.tail_power().is_some() {
        let tp = kernel.tail_power().unwrap_or(0.0);
        if decay.is_none_or(|d| d - tp <= 1.0) {
            return Err(Error::Divergence(format!(
                "potential integral diverges at infinity for kernel {kernel}"
            )));
        }
    }
    let mut cuts: Vec<(f64, bool)> = singular
        .iter()
        .filter(|&&s| s > a && s < b)
        .map(|&s| (s, true))
        .collect();
    let x_inside = xr && xf > a && xf < b;
    if x_inside {
        cuts.push((xf, true));
    }
    if xr && kernel.log_factors().is_some() {
        for c in [xf - 1.0, xf + 1.0] {
            if c > a && c < b {
                cuts.push((c, true));
            }
        }
    }
    cuts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let is_sing = |v: f64| singular.contains(&v);
    let mut pts = vec![(a, is_sing(a))];
    pts.extend(cuts);
    pts.push((b, is_sing(b)));

    let mut values = Vec::new();
    let mut errors = Vec::new();
    for w in pts.windows(2) {
        let ((p, mut sp), (q, mut sq)) = (w[0], w[1]);
        if !(q > p) {
            continue;
        }
        // An endpoint at (or just beyond) x: measure |x − y| from it.
        let near = |e: f64| xr && e.is_finite() && (e - xf).abs() <= 1e-3 * (q - p).min(1.0);
        let p_gap = (near(p) && xf <= p).then(|| (p - xf).ln());
        let q_gap = (near(q) && xf >= q).then(|| (xf - q).ln());
        sp |= p_gap.is_some();
        sq |= q_gap.is_some();
        let integrand = |n: &Node| {
            let fy = value(n.x);
            if fy == 0.0 {
                return LnVal::ZERO;
            }
            let ln_r = if let Some(g) = p_gap {
                ln_add(n.ln_lo, g)
            } else if let Some(g) = q_gap {
                ln_add(n.ln_hi, g)
            } else if xr {
                (xf - n.x).abs().ln()
            } else {
                ln_distance(x, n.x)
            };
            LnVal {
                sign: fy.signum(),
                ln: fy.abs().ln() + kernel.ln_value(ln_r),
            }
            .pipe_zero()
        };
        let mut iv = Interval::new(p, q).singular(sp, sq);
        if let Some(d) = decay {
            iv = iv.with_decay(d);
        }
        let est = integrate_ln(integrand, &[iv], &quad.relative_only())?;
        values.push(est.value);
        errors.push(LnVal::positive(est.ln_error));
    }
    Ok(Estimate {
        value: LnVal::sum(values),
        ln_error: LnVal::sum(errors).ln,
        evaluations: 0,
    })
}

/// `∫ K(x − y) f(y) dy` at an abscissa in log form.
pub fn apply_kernel_at(
    f: &TestFunction,
    x: Abscissa,
    kernel: &KernelSpec,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    kernel.validate()?;
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for piece in f.pieces() {
        let est = match piece {
            Piece::Log(l) => log_piece_potential(l, &x, kernel, quad)?,
            Piece::Flat(FlatPiece { lo, hi, value }) => {
                let (lo, hi, c) = (*lo, *hi, *value);
                linear_potential(|_| c, lo, hi, &[], None, &x, kernel, quad)?
            }
            Piece::User(u) => user_potential(u, &x, kernel, quad)?,
        };
        values.push(est.value);
        errors.push(LnVal::positive(est.ln_error));
    }
    Ok(Estimate {
        value: LnVal::sum(values),
        ln_error: LnVal::sum(errors).ln,
        evaluations: 0,
    })
}

fn user_potential(
    u: &UserPiece,
    x: &Abscissa,
    kernel: &KernelSpec,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let sing: Vec<f64> = u.singular.iter().map(|s| s.location).collect();
    let eval = u.eval.clone();
    let (lo, hi, scale) = (u.lo, u.hi, u.scale);
    linear_potential(
        move |y| if y > lo && y < hi { scale * eval(y) } else { 0.0 },
        lo,
        hi,
        &sing,
        u.decay,
        x,
        kernel,
        quad,
    )
}

/// Potential value with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    pub abs_error: f64,
}

/// `∫ K(x − y) f(y) dy`.
pub fn apply_kernel(
    f: &TestFunction,
    x: f64,
    kernel: &KernelSpec,
    quad: &QuadratureSpec,
) -> Result<PotentialValue> {
    let est = apply_kernel_at(f, Abscissa::from_f64(x), kernel, quad)?;
    Ok(PotentialValue {
        value: est.value(),
        abs_error: est.abs_error(),
    })
}

/// Bessel potential `(G_α ∗ f)(x)`.
pub fn bessel_potential(
    f: &TestFunction,
    x: f64,
    alpha: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialValue> {
    apply_kernel(f, x, &KernelSpec::Bessel { alpha }, quad)
}

/// Potential at every grid point, in grid order.
pub fn potential_on_grid(
    f: &TestFunction,
    kernel: &KernelSpec,
    grid: &EvalGrid,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<Vec<PotentialValue>> {
    par::try_map_with(exec, grid.points(), |&x| apply_kernel(f, x, kernel, quad))
}

/// `K_ν(x)` with an underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacdonaldValue {
    pub value: f64,
    pub ln_value: f64,
    /// `value` underflowed to zero (`x > 700`); `ln_value` is still valid.
    pub underflow: bool,
}

fn ln_macdonald_small(nu: f64, z: f64) -> f64 {
    let ln_half = (0.5 * z).ln();
    if nu == 0.0 {
        return (-ln_half - EULER_GAMMA).ln();
    }
    let frac = nu - nu.floor();
    if frac != 0.0 && nu < 1.0 {
        // π/(2 sin νπ) [(z/2)^{−ν}/Γ(1−ν) − (z/2)^{ν}/Γ(1+ν)]
        let t1 = -nu * ln_half - ln_gamma_fn(1.0 - nu);
        let t2 = nu * ln_half - ln_gamma_fn(1.0 + nu);
        let pre = (std::f64::consts::PI / (2.0 * (nu * std::f64::consts::PI).sin())).ln();
        return pre + t1 + (-(t2 - t1).exp()).ln_1p();
    }
    ln_gamma_fn(nu) - std::f64::consts::LN_2 - nu * ln_half
}

/// `ln K_ν(x)` for `ν ≥ 0`, `x > 0`, from
/// `e^x K_ν(x) = ∫_0^∞ e^{−x(cosh t − 1)} cosh(νt) dt`.
pub fn ln_macdonald_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("K_nu needs x > 0, got {x}")));
    }
    if !(nu >= 0.0) {
        return Err(domain(format!("K_nu needs nu >= 0, got {nu}")));
    }
    if x < 1e-6 {
        return Ok(ln_macdonald_small(nu, x));
    }
    let spec = QuadratureSpec {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_depth: 50,
        max_subdivisions: 2000,
        tail_cut: Default::default(),
    };
    let integrand = |n: &Node| {
        let t = n.x;
        let sh = (0.5 * t).sinh();
        let ln_cosh_nu = if nu == 0.0 {
            0.0
        } else {
            let a = nu * t;
            a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
        };
        LnVal::positive(-2.0 * x * sh * sh + ln_cosh_nu)
    };
    let est = integrate_ln(integrand, &[Interval::new(0.0, f64::INFINITY).with_decay(1.0)], &spec)?;
    Ok(est.value.ln - x)
}

fn ln_macdonald_k_from_ln(nu: f64, ln_x: f64) -> f64 {
    if ln_x < (1e-6f64).ln() {
        return ln_macdonald_small(nu, ln_x.exp().max(f64::MIN_POSITIVE));
    }
    if ln_x > 700f64.ln() {
        let x = ln_x.exp();
        // Leading large-argument term; the correction is O(1/x).
        return 0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x
            + ((4.0 * nu * nu - 1.0) / (8.0 * x)).ln_1p();
    }
    ln_macdonald_k(nu, ln_x.exp()).unwrap_or(f64::NAN)
}

/// `K_ν(x)`.
pub fn macdonald_k(nu: f64, x: f64) -> Result<MacdonaldValue> {
    let ln_value = if x > 700.0 {
        if !(nu >= 0.0) {
            return Err(domain(format!("K_nu needs nu >= 0, got {nu}")));
        }
        ln_macdonald_k_from_ln(nu, x.ln())
    } else {
        ln_macdonald_k(nu, x)?
    };
    let value = ln_value.exp();
    Ok(MacdonaldValue {
        value,
        ln_value,
        underflow: value == 0.0,
    })
}

/// Maximal average around `x`: `sup_r r^{w} ∫_{|y−x|≤r} |f|` for a weight
/// exponent `w` (`−1` for Hardy–Littlewood, `α − 1` for the fractional one).
fn weighted_ball_sup(f: &TestFunction, x: f64, w: f64, quad: &QuadratureSpec) -> Result<f64> {
    let scale = f.support_scale();
    let lo = (1e-6 * scale).ln();
    let mut far = 1e6 * scale;
    for (a, b) in f.support() {
        for v in [a, b] {
            if v.is_finite() {
                far = far.max(10.0 * (x - v).abs());
            }
        }
    }
    let hi = far.ln();
    let n = 200;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    // Surface non-integrability through the widest ball.
    mass(f, x - far, x + far, quad)?;
    let objective = |lr: f64| -> f64 {
        let r = lr.exp();
        match mass(f, x - r, x + r, quad) {
            Ok(m) if m > 0.0 => m.ln() + w * lr,
            Ok(_) => f64::NEG_INFINITY,
            Err(_) => f64::NAN,
        }
    };
    let best = grid_then_golden_max(objective, &grid, 1e-10);
    if best.value.is_nan() {
        return Err(Error::Divergence(format!("{} is not locally integrable near {x}", f.label())));
    }
    Ok(best.value.exp())
}

/// `M f(x) = sup_r r^{−1} ∫_{|y−x|≤r} |f(y)| dy`.
pub fn hl_maximal(f: &TestFunction, x: f64, quad: &QuadratureSpec) -> Result<f64> {
    weighted_ball_sup(f, x, -1.0, quad)
}

/// `M_α f(x) = sup_ρ ρ^{α−1} ∫_{|y−x|≤ρ} |f(y)| dy`.
pub fn fractional_maximal(f: &TestFunction, x: f64, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    weighted_ball_sup(f, x, alpha - 1.0, quad)
}

/// `max` of a pointwise operator over a grid (the sup over `x`).
pub fn fold_max<F>(grid: &EvalGrid, exec: Execution, op: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let vals = par::try_map_with(exec, grid.points(), |&x| op(x))?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}
