use crate::error::{invalid, Result};
use crate::filter::Stencil;
use crate::special::{digamma, gamma};

use super::{norm_i, INTEGER_GUARD};

fn check_domain(phi2: f64, m: usize) -> Result<()> {
    if !(phi2 > 0.0 && phi2 < m as f64) {
        return Err(invalid(format!("phi2 = {phi2} outside (0, {m})")));
    }
    if (phi2 - phi2.round()).abs() < INTEGER_GUARD {
        return Err(invalid(format!("integer phi2 = {phi2}")));
    }
    Ok(())
}

/// `Γ(−φ₂) Σ_{a,b} c_a c_b ‖a − b‖^{2φ₂}` for an arbitrary point stencil:
/// the variance of the filtered value under the unit-scale power law.
pub fn stencil_gc_variance(points: &[([i64; 2], f64)], phi2: f64) -> f64 {
    let mut s = 0.0;
    for &(a, ca) in points {
        for &(b, cb) in points {
            let r = norm_i([a[0] - b[0], a[1] - b[1]]);
            if r > 0.0 {
                s += ca * cb * r.powf(2.0 * phi2);
            }
        }
    }
    gamma(-phi2) * s
}

/// `a_m(φ₂)` by the explicit double sum over all stencil pairs.
pub fn a_m_brute_force(phi2: f64, m: usize) -> Result<f64> {
    check_domain(phi2, m)?;
    Ok(stencil_gc_variance(&Stencil::new(m)?.points(), phi2))
}

/// `a_m(φ₂) = Γ(−φ₂) Σ_d w_d ‖d‖^{2φ₂}` with `w` the stencil autocorrelation;
/// positive on the whole domain `0 < φ₂ < m`.
pub fn a_m(phi2: f64, m: usize) -> Result<f64> {
    check_domain(phi2, m)?;
    let w = Stencil::new(m)?.autocorrelation();
    let s: f64 = w
        .iter()
        .map(|&(d, wd)| {
            let r = norm_i(d);
            if r > 0.0 {
                wd * r.powf(2.0 * phi2)
            } else {
                0.0
            }
        })
        .sum();
    Ok(gamma(-phi2) * s)
}

/// Derivative of [`a_m`] in φ₂.
pub fn a_m_prime(phi2: f64, m: usize) -> Result<f64> {
    check_domain(phi2, m)?;
    let w = Stencil::new(m)?.autocorrelation();
    let (mut s, mut ds) = (0.0, 0.0);
    for &(d, wd) in &w {
        let r = norm_i(d);
        if r > 0.0 {
            let t = wd * r.powf(2.0 * phi2);
            s += t;
            ds += 2.0 * t * r.ln();
        }
    }
    let g = gamma(-phi2);
    // d/dφ Γ(−φ) = −ψ(−φ) Γ(−φ)
    Ok(-digamma(-phi2) * g * s + g * ds)
}

/// `|Γ(−φ₂)| (8 − 4·2^{φ₂})`, the first-order scale function.
pub fn a_one_closed_form(phi2: f64) -> f64 {
    gamma(-phi2).abs() * (8.0 - 4.0 * 2f64.powf(phi2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_first_order() {
        assert_relative_eq!(a_m(0.5, 1).unwrap(), 8.306_235_417_440_249, max_relative = 1e-13);
        for k in 1..=17 {
            let phi2 = k as f64 / 18.0;
            let want = a_one_closed_form(phi2);
            assert_relative_eq!(a_m_brute_force(phi2, 1).unwrap(), want, max_relative = 1e-12);
            assert_relative_eq!(a_m(phi2, 1).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn second_order_matches_brute_force_and_is_positive() {
        for phi2 in [0.3, 0.7, 1.2, 1.5, 1.8] {
            let a = a_m(phi2, 2).unwrap();
            assert!(a > 0.0);
            assert_relative_eq!(a, a_m_brute_force(phi2, 2).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for (phi2, m) in [(0.5, 1), (0.1, 1), (0.9, 1), (1.2, 2), (0.4, 2), (1.7, 2)] {
            let h = 1e-6;
            let fd = (a_m(phi2 + h, m).unwrap() - a_m(phi2 - h, m).unwrap()) / (2.0 * h);
            let an = a_m_prime(phi2, m).unwrap();
            assert!(((an - fd) / an).abs() < 1e-6, "phi2={phi2} m={m}: {an} vs {fd}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(a_m(1.0, 2).is_err());
        assert!(a_m(1.2, 1).is_err());
        assert!(a_m(-0.1, 1).is_err());
    }
}
