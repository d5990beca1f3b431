//! Grand Lebesgue norms `sup_p |f|_p / ψ(p)`, the sharpness functional `V`
//! and log–log exponent fits.

use serde::Serialize;

use crate::error::{domain, param, Error, Result};
use crate::exponents::{sobolev_q, PotentialParams};
use crate::norms::{lp_norm, TestFunction};
use crate::par::{self, Execution};
use crate::potential::{apply_kernel_at, Abscissa, KernelSpec};
use crate::psi::PsiFunction;
use crate::quad::{ln_exp_linear_integral, LnVal, QuadratureSpec};

/// Number of interior base points of the p-grid.
pub const BASE_POINTS: usize = 64;
/// Deepest endpoint refinement `2^{−k}`.
pub const MAX_REFINEMENT: u32 = 30;
/// Relative growth between the last two refinement levels that marks a
/// supremum as still climbing.
pub const CLIMB_THRESHOLD: f64 = 0.01;

/// One evaluated exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrandPoint {
    pub p: f64,
    /// `None` when `|f|_p = ∞`.
    pub norm: Option<f64>,
    pub psi: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EndpointFlags {
    /// Ratio still increasing at the deepest offset toward `a`.
    pub lower_climbing: bool,
    /// Ratio still increasing at the deepest offset toward `b`.
    pub upper_climbing: bool,
    /// Some grid points were dropped because `|f|_p` diverged.
    pub divergent_points: bool,
}

impl EndpointFlags {
    pub fn suspected_infinite(&self) -> bool {
        self.lower_climbing || self.upper_climbing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrandNormReport {
    pub value: f64,
    pub argmax_p: f64,
    pub grid: Vec<GrandPoint>,
    pub endpoint_flags: EndpointFlags,
}

/// Base grid and the two refinement ladders (ordered from coarse to fine).
fn p_grid(a: f64, b: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let width = if b.is_finite() { b - a } else { 1.0 };
    let base_hi = if b.is_finite() { b } else { a + 8.0 };
    let base = (0..BASE_POINTS)
        .map(|i| a + (base_hi - a) * (i as f64 + 0.5) / BASE_POINTS as f64)
        .collect();
    let lower = (1..=MAX_REFINEMENT).map(|k| a + width * 0.5f64.powi(k as i32)).collect();
    let upper = (1..=MAX_REFINEMENT)
        .map(|k| {
            if b.is_finite() {
                b - width * 0.5f64.powi(k as i32)
            } else {
                a + 2f64.powi(k as i32)
            }
        })
        .filter(|&p| p > a && p < b)
        .collect();
    (base, lower, upper)
}

fn climbing(ladder: &[GrandPoint]) -> bool {
    let ratios: Vec<f64> = ladder.iter().filter_map(|g| g.ratio).collect();
    match ratios.as_slice() {
        [.., prev, last] => *last > prev * (1.0 + CLIMB_THRESHOLD),
        _ => false,
    }
}

/// `||f||G(ψ) = sup_{p ∈ (a,b)} |f|_p / ψ(p)` on the sampled grid.
pub fn grand_norm(f: &TestFunction, psi: &PsiFunction, quad: &QuadratureSpec) -> Result<GrandNormReport> {
    grand_norm_with(f, psi, quad, Execution::default())
}

pub fn grand_norm_with(
    f: &TestFunction,
    psi: &PsiFunction,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<GrandNormReport> {
    let (base, lower, upper) = p_grid(psi.a(), psi.b());
    let eval = |&p: &f64| -> Result<GrandPoint> {
        let psi_v = psi.evaluate(p)?;
        match lp_norm(f, p, quad) {
            Ok(n) => Ok(GrandPoint {
                p,
                norm: Some(n.value),
                psi: psi_v,
                ratio: Some(n.value / psi_v),
            }),
            Err(Error::Divergence(_)) => Ok(GrandPoint {
                p,
                norm: None,
                psi: psi_v,
                ratio: None,
            }),
            Err(e) => Err(e),
        }
    };
    let base_pts = par::try_map_with(exec, &base, eval)?;
    let lower_pts = par::try_map_with(exec, &lower, eval)?;
    let upper_pts = par::try_map_with(exec, &upper, eval)?;

    let flags = EndpointFlags {
        lower_climbing: climbing(&lower_pts),
        upper_climbing: climbing(&upper_pts),
        divergent_points: base_pts
            .iter()
            .chain(&lower_pts)
            .chain(&upper_pts)
            .any(|g| g.ratio.is_none()),
    };
    let mut grid: Vec<GrandPoint> = base_pts.into_iter().chain(lower_pts).chain(upper_pts).collect();
    grid.sort_by(|x, y| x.p.total_cmp(&y.p));
    grid.dedup_by(|x, y| x.p == y.p);
    let best = grid
        .iter()
        .filter_map(|g| g.ratio.map(|r| (r, g.p)))
        .fold(None::<(f64, f64)>, |acc, (r, p)| match acc {
            Some((br, _)) if br >= r => acc,
            _ => Some((r, p)),
        });
    let Some((value, argmax_p)) = best else {
        return Err(Error::Divergence(format!(
            "|{}|_p diverges at every sampled p",
            f.label()
        )));
    };
    Ok(GrandNormReport {
        value,
        argmax_p,
        grid,
        endpoint_flags: flags,
    })
}

/// Relative size of the refinement correction at which tabulation stops.
pub const TABULATION_TOL: f64 = 1e-3;
/// Cap on potential evaluations per tabulated norm.
pub const TABULATION_MAX_POINTS: usize = 6000;
/// Drop in `ln` integrand below its peak that ends range extension.
const TAIL_DROP: f64 = 40.0;
/// Furthest `|τ − τ_c|` the range may be extended to.
const MAX_LOG_SPAN: f64 = 131_072.0;

/// `|K ∗ f|_q` obtained by tabulating the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TabulatedNorm {
    pub value: f64,
    pub ln_value: f64,
    /// Relative size of the last refinement correction of `∫|u|^q`.
    pub rel_change: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    tau: f64,
    phi: f64,
}

/// Segment of one side's τ-table with its refinement state.
#[derive(Debug, Clone, Copy)]
struct Segment {
    side: f64,
    a: Sample,
    b: Sample,
    mid: Option<Sample>,
}

fn ln_segment(a: Sample, b: Sample) -> f64 {
    match (a.phi.is_finite(), b.phi.is_finite()) {
        (true, true) => ln_exp_linear_integral(a.tau, b.tau, a.phi, b.phi),
        (true, false) => a.phi + (0.5 * (b.tau - a.tau)).ln(),
        (false, true) => b.phi + (0.5 * (b.tau - a.tau)).ln(),
        (false, false) => f64::NEG_INFINITY,
    }
}

impl Segment {
    fn coarse(&self) -> LnVal {
        LnVal::positive(ln_segment(self.a, self.b))
    }

    fn fine(&self) -> LnVal {
        match self.mid {
            Some(m) => LnVal::positive(ln_segment(self.a, m)).add(LnVal::positive(ln_segment(m, self.b))),
            None => self.coarse(),
        }
    }

    fn error(&self) -> LnVal {
        self.fine().add(self.coarse().scale(-1.0)).abs()
    }
}

/// `|u|_q` for `u = K ∗ f`, `∫|u|^q = Σ_± ∫ e^{φ(τ)} dτ` with
/// `φ(τ) = q ln|u(±e^τ)| + τ`, integrated exactly on the piecewise-linear
/// interpolant of `φ` and refined at segment midpoints.
pub fn potential_lq_norm(
    f: &TestFunction,
    kernel: &KernelSpec,
    q: f64,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<TabulatedNorm> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(domain(format!("q = {q} must be a finite exponent >= 1")));
    }
    kernel.validate()?;
    let centre = f.support_scale().ln();
    let phi = |side: f64, tau: f64| -> Result<f64> {
        let est = apply_kernel_at(f, Abscissa::new(side, tau), kernel, quad)?;
        Ok(if est.value.is_zero() {
            f64::NEG_INFINITY
        } else {
            q * est.value.ln + tau
        })
    };

    // Extent of the potential when the kernel has bounded support.
    let hull = potential_hull(f, kernel);
    let mut sides = Vec::new();
    for side in [1.0, -1.0] {
        let fixed_top = match hull {
            Some((lo, hi)) => {
                let reach = if side > 0.0 { hi } else { -lo };
                if !(reach > 0.0) {
                    continue;
                }
                Some(reach.ln())
            }
            None => None,
        };
        sides.push((side, fixed_top));
    }

    let mut evaluations = 0usize;
    let mut segments = Vec::new();
    for &(side, fixed_top) in &sides {
        let mut taus: Vec<f64> = (0..=32).map(|i| centre - 8.0 + 0.5 * i as f64).collect();
        for v in kinks(f, kernel) {
            if v != 0.0 && v.signum() == side {
                taus.push(v.abs().ln());
            }
        }
        if let Some(top) = fixed_top {
            taus.retain(|&t| t < top);
            taus.push(top);
        }
        let mut table = tabulate(&taus, side, &phi, exec)?;
        evaluations += table.len();
        // Extend until both ends are far below the peak.
        loop {
            let peak = table.iter().map(|s| s.phi).fold(f64::NEG_INFINITY, f64::max);
            if peak == f64::NEG_INFINITY {
                break;
            }
            let first = table[0];
            let last = table[table.len() - 1];
            let mut new_taus = Vec::new();
            if first.phi > peak - TAIL_DROP {
                let span = (centre - first.tau).max(8.0);
                if span > MAX_LOG_SPAN {
                    return Err(not_in_lq(f, kernel, q));
                }
                new_taus.extend((1..=16).map(|i| first.tau - span * i as f64 / 16.0));
            }
            if fixed_top.is_none() && last.phi > peak - TAIL_DROP {
                let span = (last.tau - centre).max(8.0);
                if span > MAX_LOG_SPAN {
                    return Err(not_in_lq(f, kernel, q));
                }
                new_taus.extend((1..=16).map(|i| last.tau + span * i as f64 / 16.0));
            }
            if new_taus.is_empty() {
                break;
            }
            let extra = tabulate(&new_taus, side, &phi, exec)?;
            evaluations += extra.len();
            table.extend(extra);
            table.sort_by(|x, y| x.tau.total_cmp(&y.tau));
        }
        table.dedup_by(|x, y| x.tau == y.tau);
        segments.extend(table.windows(2).map(|w| Segment {
            side,
            a: w[0],
            b: w[1],
            mid: None,
        }));
    }

    loop {
        let pending: Vec<(usize, f64, f64)> = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.mid.is_none())
            .map(|(i, s)| (i, s.side, 0.5 * (s.a.tau + s.b.tau)))
            .collect();
        let mids = par::try_map_with(exec, &pending, |&(_, side, tau)| phi(side, tau))?;
        evaluations += mids.len();
        for (&(i, _, tau), ph) in pending.iter().zip(mids) {
            segments[i].mid = Some(Sample { tau, phi: ph });
        }
        let total = LnVal::sum(segments.iter().map(Segment::fine));
        if total.is_zero() {
            return Ok(TabulatedNorm {
                value: 0.0,
                ln_value: f64::NEG_INFINITY,
                rel_change: 0.0,
                points: evaluations,
            });
        }
        let errors: Vec<LnVal> = segments.iter().map(Segment::error).collect();
        let err_total = LnVal::sum(errors.iter().copied());
        let rel = if err_total.is_zero() {
            0.0
        } else {
            (err_total.ln - total.ln).exp()
        };
        if rel <= TABULATION_TOL {
            let ln_value = total.ln / q;
            return Ok(TabulatedNorm {
                value: ln_value.exp(),
                ln_value,
                rel_change: rel,
                points: evaluations,
            });
        }
        if evaluations >= TABULATION_MAX_POINTS {
            return Err(Error::RefinementExhausted {
                estimate: (total.ln / q).exp(),
                change: rel,
                points: evaluations,
            });
        }
        // Split the largest-error segments covering half the error.
        let mut order: Vec<usize> = (0..segments.len()).collect();
        order.sort_by(|&i, &j| errors[j].ln.total_cmp(&errors[i].ln));
        let mut covered = LnVal::ZERO;
        let half = err_total.ln + 0.5f64.ln();
        let mut split = Vec::new();
        for i in order {
            split.push(i);
            covered = covered.add(errors[i]);
            if covered.ln >= half {
                break;
            }
        }
        split.sort_unstable();
        let mut next = Vec::with_capacity(segments.len() + split.len());
        let mut k = 0;
        for (i, s) in segments.iter().enumerate() {
            if k < split.len() && split[k] == i {
                k += 1;
                let m = s.mid.expect("midpoint evaluated");
                next.push(Segment { side: s.side, a: s.a, b: m, mid: None });
                next.push(Segment { side: s.side, a: m, b: s.b, mid: None });
            } else {
                next.push(*s);
            }
        }
        segments = next;
    }
}

fn tabulate<F>(taus: &[f64], side: f64, phi: &F, exec: Execution) -> Result<Vec<Sample>>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let mut out = par::try_map_with(exec, taus, |&tau| phi(side, tau).map(|ph| Sample { tau, phi: ph }))?;
    out.sort_by(|x, y| x.tau.total_cmp(&y.tau));
    Ok(out)
}

fn not_in_lq(f: &TestFunction, kernel: &KernelSpec, q: f64) -> Error {
    Error::Divergence(format!(
        "{kernel} applied to {} is not in L_{q}: |u|^q does not decay",
        f.label()
    ))
}

fn potential_hull(f: &TestFunction, kernel: &KernelSpec) -> Option<(f64, f64)> {
    let KernelSpec::Truncated { radius, .. } = *kernel else {
        return None;
    };
    let sup = f.support();
    let lo = sup.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = sup.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() {
        Some((lo - radius, hi + radius))
    } else {
        None
    }
}

/// Points where the potential has reduced smoothness.
fn kinks(f: &TestFunction, kernel: &KernelSpec) -> Vec<f64> {
    let mut out: Vec<f64> = f
        .support()
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(f.singularities().iter().map(|s| s.location))
        .filter(|v| v.is_finite())
        .collect();
    if let KernelSpec::Truncated { radius, .. } = *kernel {
        let base = out.clone();
        out.extend(base.iter().flat_map(|&v| [v - radius, v + radius]));
    }
    out
}

/// Breakdown of one `V` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VReport {
    pub p: f64,
    pub q: f64,
    pub value: f64,
    pub potential_norm: f64,
    pub function_norm: f64,
    pub points: usize,
}

/// `V(f, p) = |I_α f|_q · [(p−1)(1/α−p)]^{1−α} / |f|_p` on the line.
pub fn v_functional(f: &TestFunction, p: f64, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(v_functional_report(f, p, alpha, quad, Execution::default())?.value)
}

pub fn v_functional_report(
    f: &TestFunction,
    p: f64,
    alpha: f64,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<VReport> {
    let params = PotentialParams::line(alpha)?;
    if !(p > 1.0 && p < params.p_max()) {
        return Err(domain(format!("p = {p} must lie in (1, {})", params.p_max())));
    }
    let q = sobolev_q(p, &params)?;
    let fnorm = lp_norm(f, p, quad)?;
    if !(fnorm.value > 0.0) {
        return Err(domain("V needs |f|_p > 0"));
    }
    let u = potential_lq_norm(f, &KernelSpec::Riesz { alpha }, q, quad, exec)?;
    let ln_v = u.ln_value + (1.0 - alpha) * ((p - 1.0) * (1.0 / alpha - p)).ln() - fnorm.ln_value;
    Ok(VReport {
        p,
        q,
        value: ln_v.exp(),
        potential_norm: u.value,
        function_norm: fnorm.value,
        points: u.points,
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

pub fn fit_growth_exponent(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(param(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(domain("growth fit needs finite positive data"));
    }
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Degenerate(format!(
            "growth fit needs 3 distinct abscissae, got {}",
            distinct.len()
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(FitResult {
        slope,
        intercept,
        max_residual,
    })
}
