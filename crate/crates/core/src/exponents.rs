//! Exponent relations between `p`, `q`, conjugates and the shape functions
//! of the operator norm of the Riesz potential.
//!
//! All shape functions are free of the unknown multiplicative constants, so
//! only their ratios and growth rates are meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Result};

/// Distance an exponent must keep from the ends of its open interval.
pub const ENDPOINT_MARGIN: f64 = 1e-12;

/// Dimension `d` and order `α` of the potential, with `0 < α < d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PotentialParams {
    dim: u32,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    d: u32,
    alpha: f64,
}

impl TryFrom<RawParams> for PotentialParams {
    type Error = crate::error::Error;
    fn try_from(r: RawParams) -> Result<Self> {
        PotentialParams::new(r.d, r.alpha)
    }
}

impl From<PotentialParams> for RawParams {
    fn from(p: PotentialParams) -> Self {
        RawParams {
            d: p.dim,
            alpha: p.alpha,
        }
    }
}

impl PotentialParams {
    pub fn new(d: u32, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(param("dimension must be positive"));
        }
        if !(alpha > 0.0 && alpha < d as f64) {
            return Err(param(format!("alpha = {alpha} must lie in (0, {d})")));
        }
        Ok(PotentialParams { dim: d, alpha })
    }

    /// One-dimensional parameters, the setting of every numerical operator.
    pub fn line(alpha: f64) -> Result<Self> {
        PotentialParams::new(1, alpha)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn d(&self) -> f64 {
        self.dim as f64
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `d/α`, the right end of the admissible `p` range.
    pub fn p_max(&self) -> f64 {
        self.d() / self.alpha
    }

    /// `d/(d−α)`, the left end of the admissible `q` range.
    pub fn q_min(&self) -> f64 {
        self.d() / (self.d() - self.alpha)
    }

    /// `α/d`.
    pub fn ratio(&self) -> f64 {
        self.alpha / self.d()
    }
}

/// Non-negative multi-index `ξ` of a partial derivative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndex {
    components: Vec<u32>,
}

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex { components }
    }

    pub fn zero(d: u32) -> Self {
        MultiIndex {
            components: vec![0; d as usize],
        }
    }

    /// Multi-index of order `n` along the first axis.
    pub fn of_order(d: u32, n: u32) -> Self {
        let mut components = vec![0; d.max(1) as usize];
        components[0] = n;
        MultiIndex { components }
    }

    pub fn components(&self) -> &[u32] {
        &self.components
    }

    /// `|ξ|`.
    pub fn order(&self) -> u32 {
        self.components.iter().sum()
    }

    /// Checks the length against `d` and `|ξ| < α`, returning `α(ξ) = α − |ξ|`.
    pub fn reduced_alpha(&self, params: &PotentialParams) -> Result<f64> {
        if self.components.len() != params.dim() as usize {
            return Err(param(format!(
                "multi-index has {} components, expected d = {}",
                self.components.len(),
                params.dim()
            )));
        }
        let a = params.alpha() - self.order() as f64;
        if !(a > 0.0) {
            return Err(domain(format!(
                "|xi| = {} must be below alpha = {}",
                self.order(),
                params.alpha()
            )));
        }
        Ok(a)
    }
}

fn check_open(x: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if x.is_nan() || !(x > lo + ENDPOINT_MARGIN) || !(x < hi - ENDPOINT_MARGIN) {
        return Err(domain(format!("{what} = {x} outside ({lo}, {hi})")));
    }
    Ok(())
}

/// `q = pd/(d − αp)`.
pub fn sobolev_q(p: f64, params: &PotentialParams) -> Result<f64> {
    check_open(p, 1.0, params.p_max(), "p")?;
    Ok(p * params.d() / (params.d() - params.alpha() * p))
}

/// `p = dq/(d + αq)`, inverse of [`sobolev_q`].
pub fn sobolev_p(q: f64, params: &PotentialParams) -> Result<f64> {
    check_open(q, params.q_min(), f64::INFINITY, "q")?;
    Ok(params.d() * q / (params.d() + params.alpha() * q))
}

/// `p' = p/(p − 1)`; infinite at `p = 1` is rejected as a domain error,
/// values just above 1 give large finite results.
pub fn holder_conjugate(p: f64) -> Result<f64> {
    if p.is_nan() || !(p > 1.0) {
        return Err(domain(format!("p = {p} must exceed 1")));
    }
    if p == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(p / (p - 1.0))
}

/// Exponent `k` of Young's inequality `|f ∗ g|_r ≤ |f|_p |g|_k`,
/// i.e. `1 + 1/r = 1/p + 1/k`, written as `k = r p'/(r + p')`.
pub fn young_k(r: f64, p: f64) -> Result<f64> {
    if r.is_nan() || !(r >= 1.0) {
        return Err(domain(format!("r = {r} must be at least 1")));
    }
    let pc = holder_conjugate(p)?;
    let k = if r == f64::INFINITY {
        pc
    } else {
        r * pc / (r + pc)
    };
    if !(k >= 1.0) {
        return Err(domain(format!("Young exponent k = {k} < 1 for r = {r}, p = {p}")));
    }
    let residual = 1.0 + 1.0 / r - 1.0 / p - 1.0 / k;
    if residual.abs() > 1e-12 {
        return Err(domain(format!("Young relation residual {residual:e}")));
    }
    Ok(k)
}

/// `B(p) = [(p − 1)(d/α − p)]^{α/d − 1}`.
pub fn riesz_bound_shape(p: f64, params: &PotentialParams) -> Result<f64> {
    check_open(p, 1.0, params.p_max(), "p")?;
    Ok(((p - 1.0) * (params.p_max() - p)).powf(params.ratio() - 1.0))
}

/// `α^{-1}(d − α)^{-1}[(p − 1)(d/α(ξ) − p)]^{α(ξ)/d − 1}` with `α(ξ) = α − |ξ|`.
pub fn derivative_bound_shape(p: f64, params: &PotentialParams, xi: &MultiIndex) -> Result<f64> {
    let a = xi.reduced_alpha(params)?;
    let d = params.d();
    check_open(p, 1.0, d / a, "p")?;
    let pre = 1.0 / (params.alpha() * (d - params.alpha()));
    Ok(pre * ((p - 1.0) * (d / a - p)).powf(a / d - 1.0))
}

/// `p²/(p − 1)`.
pub fn singular_bound_shape(p: f64) -> Result<f64> {
    if p.is_nan() || !(p > 1.0 + ENDPOINT_MARGIN) {
        return Err(domain(format!("p = {p} must exceed 1")));
    }
    Ok(p * p / (p - 1.0))
}

/// Interpolation parameter placing `1/p` between the weak-type endpoints
/// `1` and `α/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    pub theta: f64,
    pub one_minus_theta: f64,
}

pub fn marcinkiewicz_theta(p: f64, params: &PotentialParams) -> Result<Theta> {
    check_open(p, 1.0, params.p_max(), "p")?;
    let (d, a) = (params.d(), params.alpha());
    let theta = d / (d - a) * (p - 1.0) / p;
    let one_minus_theta = a / (d - a) * (d / a - p) / p;
    let residual = 1.0 / p - (one_minus_theta + theta * a / d);
    if residual.abs() > 1e-12 {
        return Err(domain(format!("interpolation identity residual {residual:e}")));
    }
    Ok(Theta {
        theta,
        one_minus_theta,
    })
}

/// `m = 1/(1 + γ − α/d)`, the Orlicz exponent of Example-3 type potentials.
pub fn orlicz_exponent(gamma: f64, params: &PotentialParams) -> Result<f64> {
    if gamma.is_nan() || !(gamma > 0.0) {
        return Err(param(format!("gamma = {gamma} must be positive")));
    }
    Ok(1.0 / (1.0 + gamma - params.ratio()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> PotentialParams {
        PotentialParams::line(0.5).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PotentialParams::new(1, 1.0).is_err());
        assert!(PotentialParams::new(0, 0.5).is_err());
        assert!(PotentialParams::new(2, 1.5).is_ok());
        let p: PotentialParams = serde_json::from_str(r#"{"d":2,"alpha":1.0}"#).unwrap();
        assert_eq!(p.q_min(), 2.0);
        assert!(serde_json::from_str::<PotentialParams>(r#"{"d":1,"alpha":2.0}"#).is_err());
    }

    #[test]
    fn sobolev_examples() {
        assert!((sobolev_q(4.0 / 3.0, &half()).unwrap() - 4.0).abs() < 1e-12);
        let p2 = PotentialParams::new(2, 1.0).unwrap();
        assert!((sobolev_q(4.0 / 3.0, &p2).unwrap() - 4.0).abs() < 1e-12);
        assert!(sobolev_q(2.0 - 1e-9, &half()).unwrap() > 1e8);
        assert!((sobolev_p(4.0, &half()).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(sobolev_p(2.0 + 1e-9, &half()).unwrap() - 1.0 < 1e-9);
        assert!(sobolev_q(1.0, &half()).is_err());
        assert!(sobolev_q(2.0, &half()).is_err());
        assert!(sobolev_p(2.0, &half()).is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(holder_conjugate(2.0).unwrap(), 2.0);
        assert!((holder_conjugate(4.0 / 3.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(holder_conjugate(1.0 + 1e-15).unwrap() > 1e14);
        assert!(holder_conjugate(1.0).is_err());
    }

    #[test]
    fn young_examples() {
        assert!((young_k(2.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((young_k(10.0, 1.5).unwrap() - 30.0 / 13.0).abs() < 1e-14);
        // r = p' gives k = p'/2
        let p = 1.25;
        let pc = holder_conjugate(p).unwrap();
        assert!((young_k(pc, p).unwrap() - pc / 2.0).abs() < 1e-12);
        assert!(young_k(1.0, 3.0).is_err());
    }

    #[test]
    fn shape_examples() {
        assert!((riesz_bound_shape(1.5, &half()).unwrap() - 2.0).abs() < 1e-14);
        assert!(riesz_bound_shape(1.0 + 1e-10, &half()).unwrap() > 1e4);
        let p2 = PotentialParams::new(2, 1.5).unwrap();
        let xi = MultiIndex::of_order(2, 1);
        let expect = (1.0 / 1.5) * (1.0 / 0.5) * 2f64.powf(-0.75);
        assert!((derivative_bound_shape(2.0, &p2, &xi).unwrap() - expect).abs() < 1e-14);
        let zero = MultiIndex::zero(1);
        let p = 1.3;
        let reduced = derivative_bound_shape(p, &half(), &zero).unwrap();
        let direct = riesz_bound_shape(p, &half()).unwrap() / (0.5 * 0.5);
        assert!((reduced - direct).abs() < 1e-13 * direct);
        assert!(derivative_bound_shape(2.0, &p2, &MultiIndex::of_order(2, 2)).is_err());
        assert_eq!(singular_bound_shape(2.0).unwrap(), 4.0);
        assert_eq!(singular_bound_shape(3.0).unwrap(), 4.5);
        assert!((singular_bound_shape(1e8).unwrap() / 1e8 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn theta_examples() {
        let t = marcinkiewicz_theta(4.0 / 3.0, &half()).unwrap();
        assert!((t.theta - 0.5).abs() < 1e-15);
        assert!(marcinkiewicz_theta(1.0 + 1e-9, &half()).unwrap().theta < 1e-8);
        assert!(marcinkiewicz_theta(2.0 - 1e-9, &half()).unwrap().theta > 1.0 - 1e-8);
    }

    #[test]
    fn orlicz_examples() {
        assert!((orlicz_exponent(0.5, &half()).unwrap() - 1.0).abs() < 1e-15);
        assert!((orlicz_exponent(1.0, &half()).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(orlicz_exponent(1e9, &half()).unwrap() < 1e-8);
    }

    fn params_strategy() -> impl Strategy<Value = PotentialParams> {
        (1u32..4, 0.05f64..0.95).prop_map(|(d, t)| PotentialParams::new(d, t * d as f64).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip_and_identities(params in params_strategy(), t in 1e-6f64..1.0 - 1e-6) {
            let p = 1.0 + t * (params.p_max() - 1.0);
            prop_assume!(p > 1.0 + 1e-6 && p < params.p_max() - 1e-6);
            let q = sobolev_q(p, &params).unwrap();
            let back = sobolev_p(q, &params).unwrap();
            prop_assert!((back - p).abs() <= 1e-12 * p);
            let (d, a) = (params.d(), params.alpha());
            let lhs1 = p - 1.0;
            let rhs1 = (d - a) * (q - params.q_min()) / (d + a * q);
            prop_assert!((lhs1 - rhs1).abs() <= 1e-12 * (1.0 + lhs1.abs()));
            let lhs2 = params.p_max() - p;
            let rhs2 = d * d / (a * (d + a * q));
            prop_assert!((lhs2 - rhs2).abs() <= 1e-12 * (1.0 + lhs2.abs()));
            let th = marcinkiewicz_theta(p, &params).unwrap();
            prop_assert!((1.0 / p - th.one_minus_theta - th.theta * a / d).abs() < 1e-12);
            let refl = 1.0 + params.p_max() - p;
            let b1 = riesz_bound_shape(p, &params).unwrap();
            let b2 = riesz_bound_shape(refl, &params).unwrap();
            prop_assert!((b1 - b2).abs() <= 1e-12 * b1.max(1.0) * 10.0);
        }

        #[test]
        fn young_consistency(r in 1.0f64..1e4, p in 1.01f64..20.0) {
            if let Ok(k) = young_k(r, p) {
                prop_assert!((1.0 + 1.0 / r - 1.0 / p - 1.0 / k).abs() < 1e-12);
            }
        }

        #[test]
        fn conjugate_is_involution(p in 1.001f64..1e3) {
            let c = holder_conjugate(holder_conjugate(p).unwrap()).unwrap();
            prop_assert!((c - p).abs() <= 1e-9 * p);
        }
    }
}
