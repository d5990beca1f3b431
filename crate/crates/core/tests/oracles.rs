//! Closed-form checks of the potential and maximal operators.

use grandlp::norms::FormSpec;
use grandlp::potential::{apply_kernel, hl_maximal, macdonald_k, KernelSpec};
use grandlp::QuadratureSpec;

fn form(s: &str) -> grandlp::TestFunction {
    s.parse::<FormSpec>().unwrap().build().unwrap()
}

#[test]
fn riesz_potential_of_g0_at_origin() {
    // ∫_e^∞ y^{-1} y^{α-1} dy = e^{α-1} / (1-α)
    let f = form("g_delta:0");
    let quad = QuadratureSpec::default();
    for alpha in [0.1, 0.5, 0.9] {
        let u = apply_kernel(&f, 0.0, &KernelSpec::Riesz { alpha }, &quad).unwrap().value;
        let exact = (alpha - 1.0f64).exp() / (1.0 - alpha);
        assert!((u - exact).abs() <= 1e-8 * exact, "alpha {alpha}: {u} vs {exact}");
    }
}

#[test]
fn riesz_potential_of_indicator_outside_support() {
    // ∫_0^1 (x-y)^{α-1} dy = (x^α - (x-1)^α) / α
    let f = form("indicator:0:1");
    let quad = QuadratureSpec::default();
    let alpha = 0.5;
    for x in [1.5, 2.0, 10.0, 1e6] {
        let u = apply_kernel(&f, x, &KernelSpec::Riesz { alpha }, &quad).unwrap().value;
        let exact = 1.0 / (x.sqrt() + (x - 1.0).sqrt()) / alpha;
        assert!((u - exact).abs() <= 1e-8 * exact, "x {x}: {u} vs {exact}");
    }
}

#[test]
fn macdonald_recurrence() {
    // K_{ν+1}(x) = K_{ν-1}(x) + (2ν/x) K_ν(x), with K_{-ν} = K_ν
    for nu in [0.3, 1.0, 1.7] {
        for x in [0.2, 1.0, 5.0, 30.0] {
            let k = |n: f64| macdonald_k(n.abs(), x).unwrap().value;
            let lhs = k(nu + 1.0);
            let rhs = k(nu - 1.0) + 2.0 * nu / x * k(nu);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs, "nu {nu} x {x}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn hardy_littlewood_of_indicator() {
    // M f(x) = sup_r r^{-1} ∫_{|y-x|≤r} |f|. Centred at 2 the quotient is
    // min(r-1, 1)/r, largest for r ≥ 2.
    let f = form("indicator:0:1");
    let m = hl_maximal(&f, 2.0, &QuadratureSpec::default()).unwrap();
    assert!((m - 0.5).abs() <= 1e-6, "{m}");
    // Inside the support small balls give 2r/r.
    let m = hl_maximal(&f, 0.5, &QuadratureSpec::default()).unwrap();
    assert!((m - 2.0).abs() <= 1e-6, "{m}");
}
