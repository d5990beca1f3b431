//! Generating weights `ψ` of Grand Lebesgue spaces and their transforms.
//!
//! A [`PsiFunction`] is an evaluator on an open exponent interval `(a, b)`.
//! Transforms wrap the source evaluator in a new closure; nothing is sampled
//! at construction time.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{domain, param, Error, Result};
use crate::exponents::{sobolev_p, MultiIndex, PotentialParams};
use crate::optimize::{bisect, golden_section};

type Evaluator = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Positive continuous weight `p ↦ ψ(p)` on an open interval `(a, b)`.
#[derive(Clone)]
pub struct PsiFunction {
    a: f64,
    b: f64,
    eval: Evaluator,
    limit_a: Option<f64>,
    limit_b: Option<f64>,
    label: String,
}

impl fmt::Debug for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiFunction")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("limit_a", &self.limit_a)
            .field("limit_b", &self.limit_b)
            .field("label", &self.label)
            .finish()
    }
}

/// Summary of a sampled validity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiCheck {
    pub min_value: f64,
    pub max_value: f64,
    pub points: usize,
}

impl PsiFunction {
    /// Weight on `(a, b)` with `1 ≤ a < b ≤ ∞`.
    pub fn new<F>(a: f64, b: f64, label: impl Into<String>, eval: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Self::on_interval(a, b, label, eval, 1.0)
    }

    /// Like [`PsiFunction::new`] but for transformed weights whose variable
    /// (`q`, `m`) may start below 1.
    fn on_interval<F>(a: f64, b: f64, label: impl Into<String>, eval: F, floor: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        if a.is_nan() || b.is_nan() || !(a >= floor) || !(a < b) {
            return Err(param(format!("invalid weight interval ({a}, {b})")));
        }
        Ok(PsiFunction {
            a,
            b,
            eval: Arc::new(eval),
            limit_a: None,
            limit_b: None,
            label: label.into(),
        })
    }

    pub fn from_fn<F>(a: f64, b: f64, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(a, b, label, move |p| Ok(f(p)))
    }

    /// `ψ ≡ value` on `(a, b)`.
    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(param(format!("constant weight {value} must be positive")));
        }
        let mut psi = Self::from_fn(a, b, format!("const:a={a},b={b},value={value}"), move |_| value)?;
        psi.limit_a = Some(value);
        psi.limit_b = Some(value);
        Ok(psi)
    }

    pub fn with_limits(mut self, at_a: Option<f64>, at_b: Option<f64>) -> Self {
        self.limit_a = at_a;
        self.limit_b = at_b;
        self
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn limits(&self) -> (Option<f64>, Option<f64>) {
        (self.limit_a, self.limit_b)
    }

    pub fn contains(&self, p: f64) -> bool {
        p > self.a && p < self.b
    }

    /// `ψ(p)`; errors outside the open interval or on a non-positive value.
    pub fn evaluate(&self, p: f64) -> Result<f64> {
        if !self.contains(p) {
            return Err(domain(format!(
                "{} evaluated at {p} outside ({}, {})",
                self.label, self.a, self.b
            )));
        }
        let v = (self.eval)(p)?;
        if !(v > 0.0) {
            return Err(domain(format!("{} is not positive at {p}: {v}", self.label)));
        }
        Ok(v)
    }

    /// Sample points in the interior, denser toward the ends.
    pub fn sample_grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let (a, b) = (self.a, if self.b.is_finite() { self.b } else { self.a + 1e3 });
        (1..=n)
            .map(|i| {
                let t = i as f64 / (n + 1) as f64;
                let s = 0.5 - 0.5 * (std::f64::consts::PI * t).cos();
                a + (b - a) * s
            })
            .filter(|&p| self.contains(p))
            .collect()
    }

    /// Checks positivity and continuity on `n` sample points.
    ///
    /// An adjacent pair whose relative jump exceeds ten times its relative
    /// spacing is bisected; if the jump does not shrink under 40 halvings the
    /// weight is reported as discontinuous.
    pub fn check_on_grid(&self, n: usize) -> Result<PsiCheck> {
        let grid = self.sample_grid(n);
        let vals: Vec<f64> = grid.iter().map(|&p| self.evaluate(p)).collect::<Result<_>>()?;
        for i in 0..grid.len().saturating_sub(1) {
            let (x0, x1) = (grid[i], grid[i + 1]);
            let (v0, v1) = (vals[i], vals[i + 1]);
            let jump = (v1 - v0).abs() / v0.min(v1);
            let spacing = (x1 - x0) / x0.abs().max(1.0);
            if jump > 10.0 * spacing {
                self.refine_jump(x0, x1)?;
            }
        }
        let min_value = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_value = vals.iter().cloned().fold(0.0, f64::max);
        Ok(PsiCheck {
            min_value,
            max_value,
            points: grid.len(),
        })
    }

    fn refine_jump(&self, mut lo: f64, mut hi: f64) -> Result<()> {
        let mut vlo = self.evaluate(lo)?;
        let mut vhi = self.evaluate(hi)?;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let vm = self.evaluate(mid)?;
            if (vm - vlo).abs() / vm.min(vlo) >= (vhi - vm).abs() / vm.min(vhi) {
                hi = mid;
                vhi = vm;
            } else {
                lo = mid;
                vlo = vm;
            }
        }
        let jump = (vhi - vlo).abs() / vlo.min(vhi);
        if jump > 1e-3 {
            return Err(domain(format!(
                "{} appears discontinuous near {lo} (relative jump {jump:e})",
                self.label
            )));
        }
        Ok(())
    }
}

/// Parameters of the two-sided power weight `(p − a)^{−β}(b − p)^{−γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPsiSpec {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Power weight. For `b = ∞` the weight is `(p − a)^{−β}` up to the
/// continuity point `h` and `p^{−γ}` after it.
pub fn make_power_psi(spec: PowerPsiSpec) -> Result<PsiFunction> {
    let PowerPsiSpec { a, b, beta, gamma } = spec;
    if b.is_finite() {
        if !(beta >= 0.0) || !(gamma >= 0.0) {
            return Err(param("power weight needs beta, gamma >= 0 when b is finite"));
        }
        let label = format!("power:a={a},b={b},beta={beta},gamma={gamma}");
        let psi = PsiFunction::from_fn(a, b, label, move |p| {
            (p - a).powf(-beta) * (b - p).powf(-gamma)
        })?;
        let at_a = (beta == 0.0).then(|| (b - a).powf(-gamma));
        let at_b = (gamma == 0.0).then(|| (b - a).powf(-beta));
        return Ok(psi.with_limits(
            Some(at_a.unwrap_or(f64::INFINITY)),
            Some(at_b.unwrap_or(f64::INFINITY)),
        ));
    }
    if !(beta > 0.0) || !(gamma < 0.0) {
        return Err(param("power weight on (a, inf) needs beta > 0 and gamma < 0"));
    }
    let h = continuity_point(a, beta, gamma)?;
    let label = format!("power:a={a},b=inf,beta={beta},gamma={gamma}");
    let psi = PsiFunction::from_fn(a, b, label, move |p| {
        if p < h {
            (p - a).powf(-beta)
        } else {
            p.powf(-gamma)
        }
    })?;
    Ok(psi.with_limits(Some(f64::INFINITY), Some(f64::INFINITY)))
}

/// Root `h > a` of `(h − a)^{−β} = h^{−γ}`.
pub fn continuity_point(a: f64, beta: f64, gamma: f64) -> Result<f64> {
    let g = |h: f64| -beta * (h - a).ln() + gamma * h.ln();
    let lo = a + 1e-12 * a.abs().max(1.0);
    let hi = a + 1e6;
    bisect(g, lo, hi, 1e-15, 0.0)
        .map_err(|_| Error::NoRoot(format!("continuity equation has no root on ({lo}, {hi})")))
}

/// Slowly varying factor `S(z)`.
#[derive(Clone)]
pub enum SlowlyVarying {
    One,
    /// `(1 + ln(1 + z))^κ`.
    LogPower(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>, String),
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlowlyVarying({self})")
    }
}

impl fmt::Display for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlowlyVarying::One => write!(f, "one"),
            SlowlyVarying::LogPower(k) => write!(f, "log_power:kappa={k}"),
            SlowlyVarying::Custom(_, label) => write!(f, "{label}"),
        }
    }
}

impl SlowlyVarying {
    pub fn log_power(kappa: f64) -> Result<Self> {
        if !(kappa.abs() <= 2.0) {
            return Err(param(format!("kappa = {kappa} outside [-2, 2]")));
        }
        Ok(if kappa == 0.0 {
            SlowlyVarying::One
        } else {
            SlowlyVarying::LogPower(kappa)
        })
    }

    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SlowlyVarying::Custom(Arc::new(f), label.into())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, SlowlyVarying::One)
    }

    pub fn evaluate(&self, z: f64) -> f64 {
        match self {
            SlowlyVarying::One => 1.0,
            SlowlyVarying::LogPower(k) => (1.0 + z.ln_1p()).powf(*k),
            SlowlyVarying::Custom(f, _) => f(z),
        }
    }

    /// `ln S(z)`.
    pub fn ln_eval(&self, z: f64) -> f64 {
        match self {
            SlowlyVarying::One => 0.0,
            SlowlyVarying::LogPower(k) => k * (1.0 + z.ln_1p()).ln(),
            SlowlyVarying::Custom(f, _) => f(z).ln(),
        }
    }
}

impl FromStr for SlowlyVarying {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (family, kv) = split_family(s);
        match family {
            "one" | "" => Ok(SlowlyVarying::One),
            "log_power" => {
                let kv = parse_kv(kv)?;
                SlowlyVarying::log_power(get(&kv, "kappa")?)
            }
            other => Err(Error::Parse(format!("unknown slowly varying family '{other}'"))),
        }
    }
}

/// `max_λ |S(λ z_max)/S(z_max) − 1|`.
pub fn check_slowly_varying(s: &SlowlyVarying, lambdas: &[f64], z_max: f64) -> Result<f64> {
    if !(z_max >= 1e3) {
        return Err(domain(format!("z_max = {z_max} must be at least 1e3")));
    }
    let base = s.evaluate(z_max);
    Ok(lambdas
        .iter()
        .map(|&l| (s.evaluate(l * z_max) / base - 1.0).abs())
        .fold(0.0, f64::max))
}

fn check_inside_riesz_range(psi: &PsiFunction, p_max: f64) -> Result<()> {
    if psi.a() < 1.0 || psi.b() > p_max * (1.0 + 1e-15) {
        return Err(domain(format!(
            "weight interval ({}, {}) not inside [1, {p_max}]",
            psi.a(),
            psi.b()
        )));
    }
    Ok(())
}

/// `q`-interval that `(a, b)` maps onto under `q = pd/(d − α_ξ p)`.
fn q_image(a: f64, b: f64, d: f64, alpha: f64) -> (f64, f64) {
    let q = |p: f64| p * d / (d - alpha * p);
    let lo = q(a);
    let hi = if b >= d / alpha { f64::INFINITY } else { q(b) };
    (lo, hi)
}

/// `ζ(q) = [q²/(q − d/(d−α))]^{1−α/d} ψ(p(q))`.
pub fn riesz_zeta(psi: &PsiFunction, params: &PotentialParams) -> Result<PsiFunction> {
    check_inside_riesz_range(psi, params.p_max())?;
    let (lo, hi) = q_image(psi.a(), psi.b(), params.d(), params.alpha());
    let (src, pp) = (psi.clone(), *params);
    let expo = 1.0 - pp.ratio();
    PsiFunction::on_interval(
        lo,
        hi,
        format!("riesz_zeta[{}]", psi.label()),
        move |q| {
            let p = sobolev_p(q, &pp)?;
            let shape = (q * q / (q - pp.q_min())).powf(expo);
            Ok(shape * src.evaluate(p)?)
        },
        0.0,
    )
}

/// `q ↦ [q(d − α + |ξ|)/d]^{1−α(ξ)/d} ψ(dq/(d + α(ξ)q))`.
pub fn derivative_zeta(
    psi: &PsiFunction,
    params: &PotentialParams,
    xi: &MultiIndex,
) -> Result<PsiFunction> {
    let ax = xi.reduced_alpha(params)?;
    let d = params.d();
    check_inside_riesz_range(psi, d / ax)?;
    let (lo, hi) = q_image(psi.a(), psi.b(), d, ax);
    let src = psi.clone();
    let base = (d - ax) / d;
    let expo = 1.0 - ax / d;
    PsiFunction::on_interval(
        lo,
        hi,
        format!("derivative_zeta[|xi|={}][{}]", xi.order(), psi.label()),
        move |q| {
            let p = d * q / (d + ax * q);
            Ok((q * base).powf(expo) * src.evaluate(p)?)
        },
        0.0,
    )
}

/// Weight of the Bessel-potential derivative estimate,
/// `θ(m) = [2m|ξ|/(2m|ξ| − α)] ψ(2m|ξ|/α)^{|ξ|/(2α)} ψ(2m(1 − |ξ|/α))^{(α−|ξ|)/(2α)}`.
///
/// The interval is `(max(2α/|ξ|, 1), ∞)` narrowed to the `m` whose two
/// `ψ`-arguments fall inside the source interval.
pub fn bessel_theta(
    psi: &PsiFunction,
    params: &PotentialParams,
    xi: &MultiIndex,
) -> Result<PsiFunction> {
    let n = xi.order() as f64;
    if xi.order() == 0 {
        return Err(domain("bessel_theta needs |xi| >= 1"));
    }
    xi.reduced_alpha(params)?;
    let alpha = params.alpha();
    let c1 = 2.0 * n / alpha;
    let c2 = 2.0 * (1.0 - n / alpha);
    let mut lo = (2.0 * alpha / n).max(1.0);
    let mut hi = f64::INFINITY;
    for c in [c1, c2] {
        lo = lo.max(psi.a() / c);
        hi = hi.min(psi.b() / c);
    }
    if !(lo < hi) {
        return Err(domain(format!(
            "no m with both weight arguments inside ({}, {})",
            psi.a(),
            psi.b()
        )));
    }
    let src = psi.clone();
    let e1 = n / (2.0 * alpha);
    let e2 = (alpha - n) / (2.0 * alpha);
    PsiFunction::on_interval(
        lo,
        hi,
        format!("bessel_theta[|xi|={}][{}]", xi.order(), psi.label()),
        move |m| {
            let pre = 2.0 * m * n / (2.0 * m * n - alpha);
            Ok(pre * src.evaluate(c1 * m)?.powf(e1) * src.evaluate(c2 * m)?.powf(e2))
        },
        0.0,
    )
}

/// `ψ^{(1)}(p) = p²/(p − 1) ψ(p)`.
pub fn singular_psi1(psi: &PsiFunction) -> Result<PsiFunction> {
    if psi.a() < 1.0 {
        return Err(domain("singular_psi1 needs a >= 1"));
    }
    let src = psi.clone();
    Ok(PsiFunction::new(psi.a(), psi.b(), format!("psi1[{}]", psi.label()), move |p| {
        Ok(p * p / (p - 1.0) * src.evaluate(p)?)
    })?
    .with_limits(Some(f64::INFINITY), psi.limit_b.map(|_| f64::INFINITY)))
}

/// `ζ^{(S)}(q) = ψ(p) S(1/(p−1)) S(1/(q(d−α)−d)) / [(p−1)(d/α−p)]^{1+β−α/d}`
/// with `p = p(q)`.
pub fn zeta_s(
    psi: &PsiFunction,
    params: &PotentialParams,
    beta: f64,
    s: &SlowlyVarying,
) -> Result<PsiFunction> {
    if !(beta >= 0.0) {
        return Err(param(format!("beta = {beta} must be non-negative")));
    }
    check_inside_riesz_range(psi, params.p_max())?;
    let (lo, hi) = q_image(psi.a(), psi.b(), params.d(), params.alpha());
    let (src, pp, sv) = (psi.clone(), *params, s.clone());
    let expo = 1.0 + beta - pp.ratio();
    PsiFunction::on_interval(
        lo,
        hi,
        format!("zeta_s[beta={beta},S={s}][{}]", psi.label()),
        move |q| {
            let p = sobolev_p(q, &pp)?;
            let den = ((p - 1.0) * (pp.p_max() - p)).powf(expo);
            let s1 = sv.evaluate(1.0 / (p - 1.0));
            let s2 = sv.evaluate(1.0 / (q * (pp.d() - pp.alpha()) - pp.d()));
            Ok(src.evaluate(p)? * s1 * s2 / den)
        },
        0.0,
    )
}

/// Value of the truncated-operator weight and the exponent attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuValue {
    pub value: f64,
    pub argmin_p: f64,
}

/// `ν(r) = inf_p (d/(d−α) − p)^{−1+α/d} ψ(r p'/(r + p'))`.
pub fn truncated_nu(psi: &PsiFunction, params: &PotentialParams, r: f64) -> Result<NuValue> {
    truncated_nu_general(psi, params, 0.0, &SlowlyVarying::One, r)
}

/// `inf_p (d/(d−α) − p)^{−1−β+α/d} S((d−α)/(d − p(d−α))) ψ(r p'/(r + p'))`.
///
/// The search runs over the `p` whose Young exponent `k = r p'/(r + p')`
/// lies inside the interval of `ψ`: a 257-point scan, geometric offsets
/// `2^{−k}`, `k ≤ 40`, toward both ends of the feasible set, and a
/// golden-section polish around the best sample.
pub fn truncated_nu_general(
    psi: &PsiFunction,
    params: &PotentialParams,
    beta: f64,
    s: &SlowlyVarying,
    r: f64,
) -> Result<NuValue> {
    if !(r >= 1.0) || r.is_nan() {
        return Err(domain(format!("r = {r} must be at least 1")));
    }
    if !(beta >= 0.0) {
        return Err(param(format!("beta = {beta} must be non-negative")));
    }
    if psi.a() < 1.0 {
        return Err(domain("truncated_nu needs a weight with a >= 1"));
    }
    let (d, alpha) = (params.d(), params.alpha());
    let p_end = params.q_min();
    let expo = -1.0 - beta + params.ratio();

    // k(p) decreases from k(1) = r to k(p_end) = r (d/α)/(r + d/α).
    let k_of = |p: f64| -> f64 {
        if p == 1.0 {
            r
        } else {
            let pc = p / (p - 1.0);
            r * pc / (r + pc)
        }
    };
    let p_of_k = |k: f64| r * k / (r * k - r + k);
    let k_end = k_of(p_end);
    let (lo_closed, p_lo) = if r < psi.b() {
        (true, 1.0)
    } else {
        (false, p_of_k(psi.b()))
    };
    let p_hi = if psi.a() > k_end { p_of_k(psi.a()) } else { p_end };
    if !(p_hi > p_lo) {
        return Err(Error::EmptyFeasible(format!(
            "no p in [1, {p_end}) puts r p'/(r + p') inside ({}, {}) for r = {r}",
            psi.a(),
            psi.b()
        )));
    }

    let objective = |p: f64| -> f64 {
        if !(p >= p_lo && p < p_hi) || (!lo_closed && p <= p_lo) {
            return f64::INFINITY;
        }
        let k = k_of(p);
        let Ok(w) = psi.evaluate(k) else {
            return f64::INFINITY;
        };
        let shape = (p_end - p).powf(expo);
        let sf = s.evaluate((d - alpha) / (d - p * (d - alpha)));
        shape * sf * w
    };

    let width = p_hi - p_lo;
    let mut samples: Vec<f64> = (0..=256).map(|i| p_lo + width * i as f64 / 256.0).collect();
    for k in 1..=40 {
        let off = width * 2f64.powi(-k);
        samples.push(p_lo + off);
        samples.push(p_hi - off);
    }
    samples.retain(|&p| p >= p_lo && p < p_hi);
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    let values: Vec<f64> = samples.iter().map(|&p| objective(p)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    if !values[best].is_finite() {
        return Err(Error::EmptyFeasible(format!(
            "objective infinite on every sample for r = {r}"
        )));
    }
    let lo = samples[best.saturating_sub(1)];
    let hi = samples[(best + 1).min(samples.len() - 1)];
    let polished = golden_section(objective, lo, hi, 1e-14, 300);
    let (value, argmin_p) = if polished.value < values[best] {
        (polished.value, polished.x)
    } else {
        (values[best], samples[best])
    };
    Ok(NuValue { value, argmin_p })
}

/// Text form of the built-in weight families, e.g.
/// `power:a=1,b=2,beta=1,gamma=1` or `const:a=1,b=2,value=3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiSpec {
    Power(PowerPsiSpec),
    Const { a: f64, b: f64, value: f64 },
}

impl PsiSpec {
    pub fn build(&self) -> Result<PsiFunction> {
        match *self {
            PsiSpec::Power(spec) => make_power_psi(spec),
            PsiSpec::Const { a, b, value } => PsiFunction::constant(a, b, value),
        }
    }
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSpec::Power(s) => write!(
                f,
                "power:a={},b={},beta={},gamma={}",
                s.a,
                fmt_inf(s.b),
                s.beta,
                s.gamma
            ),
            PsiSpec::Const { a, b, value } => {
                write!(f, "const:a={a},b={},value={value}", fmt_inf(*b))
            }
        }
    }
}

fn fmt_inf(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        x.to_string()
    }
}

impl FromStr for PsiSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = split_family(s);
        let kv = parse_kv(rest)?;
        match family {
            "power" => {
                check_keys(&kv, &["a", "b", "beta", "gamma"])?;
                Ok(PsiSpec::Power(PowerPsiSpec {
                    a: get(&kv, "a")?,
                    b: get(&kv, "b")?,
                    beta: get_or(&kv, "beta", 0.0)?,
                    gamma: get_or(&kv, "gamma", 0.0)?,
                }))
            }
            "const" => {
                check_keys(&kv, &["a", "b", "value"])?;
                Ok(PsiSpec::Const {
                    a: get(&kv, "a")?,
                    b: get(&kv, "b")?,
                    value: get_or(&kv, "value", 1.0)?,
                })
            }
            other => Err(Error::Parse(format!("unknown weight family '{other}'"))),
        }
    }
}

pub(crate) fn split_family(s: &str) -> (&str, &str) {
    match s.trim().split_once(':') {
        Some((f, rest)) => (f.trim(), rest),
        None => (s.trim(), ""),
    }
}

pub(crate) fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("not a number: '{t}'"))),
    }
}

pub(crate) fn parse_kv(s: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
        let k = k.trim().to_string();
        if out.iter().any(|(key, _)| *key == k) {
            return Err(Error::Parse(format!("duplicate key '{k}'")));
        }
        out.push((k, parse_number(v)?));
    }
    Ok(out)
}

pub(crate) fn check_keys(kv: &[(String, f64)], allowed: &[&str]) -> Result<()> {
    for (k, _) in kv {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Parse(format!(
                "unknown key '{k}' (expected one of {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

pub(crate) fn get(kv: &[(String, f64)], key: &str) -> Result<f64> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("missing key '{key}'")))
}

pub(crate) fn get_or(kv: &[(String, f64)], key: &str, default: f64) -> Result<f64> {
    Ok(kv.iter().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(default))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> PotentialParams {
        PotentialParams::line(0.5).unwrap()
    }

    fn one_on(a: f64, b: f64) -> PsiFunction {
        PsiFunction::constant(a, b, 1.0).unwrap()
    }

    #[test]
    fn power_psi_examples() {
        let psi = make_power_psi(PowerPsiSpec { a: 1.0, b: 2.0, beta: 1.0, gamma: 1.0 }).unwrap();
        assert!((psi.evaluate(1.5).unwrap() - 4.0).abs() < 1e-14);
        let flat = make_power_psi(PowerPsiSpec { a: 1.0, b: 2.0, beta: 0.0, gamma: 0.0 }).unwrap();
        assert_eq!(flat.evaluate(1.3).unwrap(), 1.0);
        let h = continuity_point(1.0, 1.0, -1.0).unwrap();
        assert!((h - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        let inf = make_power_psi(PowerPsiSpec { a: 1.0, b: f64::INFINITY, beta: 1.0, gamma: -1.0 })
            .unwrap();
        let (l, r) = (inf.evaluate(h - 1e-6).unwrap(), inf.evaluate(h + 1e-6).unwrap());
        assert!((l - r).abs() / l < 1e-4);
        assert!(inf.check_on_grid(200).is_ok());
        assert!(make_power_psi(PowerPsiSpec { a: 1.0, b: f64::INFINITY, beta: 1.0, gamma: 1.0 })
            .is_err());
    }

    #[test]
    fn discontinuity_is_detected() {
        let step = PsiFunction::from_fn(1.0, 2.0, "step", |p| if p < 1.5 { 1.0 } else { 2.0 }).unwrap();
        assert!(step.check_on_grid(64).is_err());
        let smooth = make_power_psi(PowerPsiSpec { a: 1.0, b: 2.0, beta: 1.0, gamma: 2.0 }).unwrap();
        assert!(smooth.check_on_grid(64).is_ok());
    }

    #[test]
    fn riesz_zeta_examples() {
        let z = riesz_zeta(&one_on(1.0, 2.0), &half()).unwrap();
        assert_eq!(z.a(), 2.0);
        assert_eq!(z.b(), f64::INFINITY);
        assert!((z.evaluate(4.0).unwrap() - 8f64.sqrt()).abs() < 1e-14);
        assert!(riesz_zeta(&one_on(1.0, 3.0), &half()).is_err());
    }

    #[test]
    fn riesz_zeta_of_power_weight_has_shifted_exponents() {
        // ψ(1, 2; β, γ) maps to G(2, ∞; β + 1 − α, −γ − 1 + α):
        // ζ(q) ≍ (q − 2)^{−(β+1/2)} near 2 and ≍ q^{γ+1/2} at infinity.
        let (beta, gamma) = (1.0, 0.5);
        let psi = make_power_psi(PowerPsiSpec { a: 1.0, b: 2.0, beta, gamma }).unwrap();
        let z = riesz_zeta(&psi, &half()).unwrap();
        let slope = |q1: f64, q2: f64, x1: f64, x2: f64| {
            (z.evaluate(q2).unwrap().ln() - z.evaluate(q1).unwrap().ln()) / (x2.ln() - x1.ln())
        };
        let near = slope(2.0 + 1e-6, 2.0 + 1e-7, 1e-6, 1e-7);
        assert!((near + beta + 0.5).abs() < 1e-3, "{near}");
        let far = slope(1e7, 1e8, 1e7, 1e8);
        assert!((far - gamma - 0.5).abs() < 1e-3, "{far}");
    }

    #[test]
    fn derivative_zeta_example() {
        let p2 = PotentialParams::new(2, 1.5).unwrap();
        let xi = MultiIndex::of_order(2, 1);
        let z = derivative_zeta(&one_on(1.0, 4.0), &p2, &xi).unwrap();
        assert!((z.evaluate(8.0).unwrap() - 6f64.powf(0.75)).abs() < 1e-12);
        let a = z.evaluate(5.0).unwrap();
        let b = z.evaluate(50.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn bessel_theta_example() {
        let p2 = PotentialParams::new(2, 1.5).unwrap();
        let xi = MultiIndex::of_order(2, 1);
        let th = bessel_theta(&one_on(1.0, f64::INFINITY), &p2, &xi).unwrap();
        assert!((th.evaluate(4.0).unwrap() - 8.0 / 6.5).abs() < 1e-14);
        assert!((th.evaluate(1e9).unwrap() - 1.0).abs() < 1e-8);
        assert!(bessel_theta(&one_on(1.0, f64::INFINITY), &p2, &MultiIndex::zero(2)).is_err());
    }

    #[test]
    fn bessel_theta_matches_direct_substitution() {
        let p2 = PotentialParams::new(2, 1.5).unwrap();
        let xi = MultiIndex::of_order(2, 1);
        let psi = make_power_psi(PowerPsiSpec { a: 1.0, b: f64::INFINITY, beta: 0.5, gamma: -0.7 })
            .unwrap();
        let th = bessel_theta(&psi, &p2, &xi).unwrap();
        for i in 0..100 {
            let m = th.a() + 0.01 + 0.37 * i as f64;
            let direct = {
                let a1 = 2.0 * m / 1.5;
                let a2 = 2.0 * m * (1.0 - 1.0 / 1.5);
                (2.0 * m / (2.0 * m - 1.5))
                    * psi.evaluate(a1).unwrap().powf(1.0 / 3.0)
                    * psi.evaluate(a2).unwrap().powf(0.5 / 3.0)
            };
            assert!((th.evaluate(m).unwrap() - direct).abs() < 1e-13 * direct);
        }
    }

    #[test]
    fn psi1_examples() {
        let p1 = singular_psi1(&one_on(1.0, 10.0)).unwrap();
        assert_eq!(p1.evaluate(2.0).unwrap(), 4.0);
        assert_eq!(p1.evaluate(3.0).unwrap(), 4.5);
    }

    #[test]
    fn zeta_s_examples() {
        let one = one_on(1.0, 2.0);
        let z = zeta_s(&one, &half(), 1.0, &SlowlyVarying::One).unwrap();
        let expect = (2.0f64 / 9.0).powf(-1.5);
        assert!((z.evaluate(4.0).unwrap() - expect).abs() < 1e-12 * expect);
        let s = SlowlyVarying::log_power(1.0).unwrap();
        let zs = zeta_s(&one, &half(), 1.0, &s).unwrap();
        let with_s = expect * s.evaluate(3.0) * s.evaluate(1.0);
        assert!((zs.evaluate(4.0).unwrap() - with_s).abs() < 1e-12 * with_s);
    }

    #[test]
    fn slowly_varying_checks() {
        assert_eq!(check_slowly_varying(&SlowlyVarying::One, &[0.5, 2.0], 1e6).unwrap(), 0.0);
        let s = SlowlyVarying::log_power(1.0).unwrap();
        assert!(check_slowly_varying(&s, &[2.0], 1e6).unwrap() <= 0.06);
        let lin = SlowlyVarying::custom("z", |z| z);
        assert!((check_slowly_varying(&lin, &[2.0], 1e6).unwrap() - 1.0).abs() < 1e-12);
        assert!(check_slowly_varying(&s, &[2.0], 10.0).is_err());
        assert!(SlowlyVarying::log_power(3.0).is_err());
    }

    #[test]
    fn nu_constant_weight() {
        // k(1) = r must lie in the weight's interval; ψ ≡ 1 on (1, ∞)
        // admits every r, and the monotone objective is minimized at p = 1.
        for r in [1.5, 4.0, 100.0] {
            let nu = truncated_nu(&one_on(1.0, f64::INFINITY), &half(), r).unwrap();
            assert!((nu.value - 1.0).abs() < 1e-12, "r = {r}: {nu:?}");
            assert_eq!(nu.argmin_p, 1.0);
        }
        let nu = truncated_nu(&one_on(1.0, 2.0), &half(), 1.5).unwrap();
        assert!((nu.value - 1.0).abs() < 1e-12);
        let g = truncated_nu_general(&one_on(1.0, 2.0), &half(), 1.0, &SlowlyVarying::One, 1.5)
            .unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nu_empty_feasible_set() {
        let psi = one_on(5.0, 6.0);
        let res = truncated_nu(&one_on(1.0, 2.0), &half(), 1.0);
        assert!(res.is_err());
        let p = PotentialParams::line(0.1).unwrap();
        assert!(matches!(truncated_nu(&psi, &p, 2.0), Err(Error::EmptyFeasible(_))));
    }

    #[test]
    fn psi_spec_round_trip() {
        let s: PsiSpec = "power:a=1,b=2,beta=1,gamma=1".parse().unwrap();
        assert_eq!(s.to_string(), "power:a=1,b=2,beta=1,gamma=1");
        let t: PsiSpec = "power:a=1,b=inf,beta=1,gamma=-1".parse().unwrap();
        assert_eq!(t.to_string().parse::<PsiSpec>().unwrap(), t);
        assert!("power:a=1,b=2,delta=3".parse::<PsiSpec>().is_err());
        assert!("cubic:a=1".parse::<PsiSpec>().is_err());
    }
}
