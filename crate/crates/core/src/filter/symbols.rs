//! Frequency responses of the stencils and the step-two block sum.

/// `|g_m^[j](λ)|² = Π_i (2 sin(jλ_i/2))^{2m}`.
#[inline]
pub fn g_abs2(lambda: [f64; 2], m: usize, j: usize) -> f64 {
    let jf = j as f64;
    let s1 = 2.0 * (0.5 * jf * lambda[0]).sin();
    let s2 = 2.0 * (0.5 * jf * lambda[1]).sin();
    (s1 * s1 * s2 * s2).powi(m as i32)
}

/// `g_m^[j](λ) = (1 − e^{ijλ₁})^m (1 − e^{ijλ₂})^m` as (re, im).
pub fn g(lambda: [f64; 2], m: usize, j: usize) -> [f64; 2] {
    let jf = j as f64;
    let f1 = cpow([1.0 - (jf * lambda[0]).cos(), -(jf * lambda[0]).sin()], m);
    let f2 = cpow([1.0 - (jf * lambda[1]).cos(), -(jf * lambda[1]).sin()], m);
    cmul(f1, f2)
}

/// `h_m(λ) = (1 + e^{iλ₁})^m (1 + e^{iλ₂})^m` as (re, im).
pub fn h(lambda: [f64; 2], m: usize) -> [f64; 2] {
    let f1 = cpow([1.0 + lambda[0].cos(), lambda[0].sin()], m);
    let f2 = cpow([1.0 + lambda[1].cos(), lambda[1].sin()], m);
    cmul(f1, f2)
}

/// `B_m(λ) = |h_m(λ)|² = Π_i (2 cos(λ_i/2))^{2m}`.
#[inline]
pub fn b_m(lambda: [f64; 2], m: usize) -> f64 {
    let c1 = 2.0 * (0.5 * lambda[0]).cos();
    let c2 = 2.0 * (0.5 * lambda[1]).cos();
    (c1 * c1 * c2 * c2).powi(m as i32)
}

/// `b_{α,β}(λ) = α + β B_m(λ)`, the symbol of the linear combination α Q₁ + β Q₂.
pub fn b_alpha_beta(lambda: [f64; 2], m: usize, alpha: f64, beta: f64) -> f64 {
    alpha + beta * b_m(lambda, m)
}

#[inline]
pub(crate) fn cmul(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn cpow(a: [f64; 2], k: usize) -> [f64; 2] {
    (0..k).fold([1.0, 0.0], |acc, _| cmul(acc, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn factorization_and_magnitudes() {
        for m in 1..=3 {
            for &lam in &[[0.3, -1.2], [2.0, 0.7], [PI, 0.1], [-2.9, 3.0]] {
                let g1 = g(lam, m, 1);
                let g2 = g(lam, m, 2);
                let prod = cmul(g1, h(lam, m));
                assert!((prod[0] - g2[0]).abs() < 1e-12 && (prod[1] - g2[1]).abs() < 1e-12);
                let mag = g1[0] * g1[0] + g1[1] * g1[1];
                assert!((mag - g_abs2(lam, m, 1)).abs() < 1e-12 * mag.max(1.0));
                let hh = h(lam, m);
                assert!((hh[0] * hh[0] + hh[1] * hh[1] - b_m(lam, m)).abs() < 1e-10);
                assert!(b_m(lam, m) <= 16f64.powi(m as i32));
            }
        }
    }

    #[test]
    fn special_values() {
        assert_eq!(b_m([0.0, 0.0], 1), 16.0);
        assert_eq!(b_m([0.0, 0.0], 2), 256.0);
        for l2 in [0.0, 0.5, 2.0] {
            assert!(b_m([PI, l2], 1) < 1e-30);
        }
    }
}
