use twoscale::estimate::{a_laplacian, mom_estimate, DomainMode};
use twoscale::fieldsim::{
    anchored_cov, read_rsf1, write_rsf1, AnchorSet, DumpHeader, JitterModel, JitterSampler, SimMode,
};
use twoscale::filter::{apply_filter, quadratic_variations, QvStats, Stencil, TrimMode};
use twoscale::gcmodel::{a_m, a_m_brute_force, a_m_prime, Matern, PowerLaw};
use twoscale::robust::{prune_and_qv, SiteMask};
use twoscale::Grid;

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "{got} vs {want} (tol {tol})");
}

#[test]
fn power_law_generalized_covariance() {
    let p = PowerLaw::new(1.0, 0.5).unwrap();
    close(p.gc([1.0, 0.0]).unwrap(), -3.5449, 1e-4);
    let p2 = PowerLaw::new(2.0, 0.5).unwrap();
    close(p2.gc([1.0, 1.0]).unwrap(), -10.0266, 1e-4);
    close(p.semivariogram(1.0).unwrap(), 3.5449, 1e-4);
    close(p.semivariogram(4.0).unwrap(), 4.0 * p.semivariogram(1.0).unwrap(), 1e-12);
}

#[test]
fn matern_exponential_case() {
    let q = Matern::new(1.0, 0.5, 1.0).unwrap();
    close(q.cov(0.0).unwrap(), 1.0, 1e-12);
    close(q.cov(1.0).unwrap(), (-1.0f64).exp(), 1e-10);
    close(q.tangent().c_mat, 1.0, 1e-10);
}

#[test]
fn scale_function_values() {
    close(a_m(0.5, 1).unwrap(), 8.3062, 1e-4);
    for (phi2, m) in [(0.5, 1), (1.5, 2), (0.3, 1), (1.2, 2)] {
        let a = a_m(phi2, m).unwrap();
        close(a_m_brute_force(phi2, m).unwrap(), a, 1e-9 * a.abs());
        let h = 1e-5;
        let fd = (a_m(phi2 + h, m).unwrap() - a_m(phi2 - h, m).unwrap()) / (2.0 * h);
        close(a_m_prime(phi2, m).unwrap(), fd, 1e-5 * fd.abs());
    }
}

#[test]
fn stencil_weights() {
    let s = Stencil::new(2).unwrap();
    let w = [1.0, -2.0, 1.0];
    for a in 0..3 {
        for b in 0..3 {
            close(s.coeff(a, b), w[a] * w[b], 0.0);
        }
    }
}

#[test]
fn filter_annihilates_polynomials() {
    let x = Grid::from_fn(10, |i, j| (i * j) as f64);
    let y = apply_filter(&x, 1, 1).unwrap();
    assert!(y.data().iter().all(|&v| v == 1.0));
    let lin = Grid::from_fn(10, |i, j| 3.0 + 2.0 * i as f64 - j as f64 + (i * j) as f64);
    let y2 = apply_filter(&lin, 2, 1).unwrap();
    assert!(y2.data().iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn impulse_quadratic_variation() {
    let mut x = Grid::zeros(8);
    x.set(3, 3, 1.0);
    let q = quadratic_variations(&x, 1, TrimMode::Common).unwrap();
    close(q.q1(), 4.0 / 36.0, 1e-15);
}

#[test]
fn quadratic_variations_scale_quadratically() {
    let x = Grid::from_fn(12, |i, j| ((i * 7 + j * 3) % 5) as f64);
    let q = quadratic_variations(&x, 1, TrimMode::PerStep).unwrap();
    let q2 = quadratic_variations(&x.scaled(2.0), 1, TrimMode::PerStep).unwrap();
    close(q2.q1(), 4.0 * q.q1(), 1e-12);
    close(q2.q2(), 4.0 * q.q2(), 1e-12);
}

#[test]
fn moment_inversion_recovers_truth() {
    for (phi2, m) in [(0.8, 1), (0.3, 1), (1.5, 2)] {
        let a = a_m(phi2, m).unwrap();
        let ratio = 2f64.powf(2.0 * phi2);
        let q = QvStats::new(a, a * ratio, 100, 81, m, TrimMode::PerStep).unwrap();
        close(q.ratio(), ratio, 1e-14);
        let e = mom_estimate(&q, DomainMode::Increasing).unwrap();
        close(e.phi2_hat, phi2, 1e-9);
        close(e.phi1_hat.unwrap(), 1.0, 1e-8);
    }
    close(2f64.powf(-1.6), 0.32988, 1e-5);
}

#[test]
fn laplacian_scale_ratio() {
    let phi2 = 0.7;
    close(a_laplacian(phi2, 2) / a_laplacian(phi2, 1), 2f64.powf(2.0 * phi2), 1e-12);
}

#[test]
fn anchored_covariance_at_unit_lag() {
    let p = PowerLaw::new(1.0, 0.5).unwrap();
    let a = AnchorSet::for_order(0, 1.0).unwrap();
    close(anchored_cov([1.0, 0.0], [1.0, 0.0], &p, &a), 7.0898, 1e-4);
    close(anchored_cov([0.0, 0.0], [2.0, 1.0], &p, &a), 0.0, 1e-12);
}

#[test]
fn empty_mask_matches_unpruned_bitwise() {
    let x = Grid::from_fn(11, |i, j| ((i * 13 + j * 5) % 7) as f64 - 3.0);
    let full = quadratic_variations(&x, 1, TrimMode::PerStep).unwrap();
    let pruned = prune_and_qv(&x, &SiteMask::empty(11), 1).unwrap();
    assert_eq!(pruned.tilde_q1.to_bits(), full.q1().to_bits());
    assert_eq!(pruned.tilde_q2.to_bits(), full.q2().to_bits());
}

#[test]
fn interior_deletion_drops_four_first_step_rows() {
    let x = Grid::from_fn(11, |i, j| (i + j) as f64);
    let p0 = prune_and_qv(&x, &SiteMask::empty(11), 1).unwrap();
    let p1 = prune_and_qv(&x, &SiteMask::single(11, 5, 5).unwrap(), 1).unwrap();
    assert_eq!(p0.tilde_m1 - p1.tilde_m1, 4);
    assert_eq!(p0.tilde_m2 - p1.tilde_m2, 4);
}

#[test]
fn zero_jitter_reproduces_clean_field() {
    let p = PowerLaw::new(1.0, 1.5).unwrap();
    let s = JitterSampler::new(9, JitterModel::PinnedPowerLaw(p), 0.0).unwrap();
    let pair = s.sample_pair(5, 2).unwrap();
    assert_eq!(pair.clean, pair.jittered);
}

#[test]
fn rsf1_round_trip() {
    let g = Grid::from_fn(6, |i, j| (i as f64).sin() + j as f64 * 1e-7);
    let h = DumpHeader { n: 6, m: 1, mode: SimMode::Anchored, seed: 99 };
    let mut buf = Vec::new();
    write_rsf1(&mut buf, &h, &g).unwrap();
    assert_eq!(&buf[..4], b"RSF1");
    let (h2, g2) = read_rsf1(buf.as_slice()).unwrap();
    assert_eq!(h2, h);
    assert_eq!(g2, g);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn inversion_is_exact_on_expected_moments(phi2 in 0.05f64..0.95, phi1 in 0.1f64..10.0) {
            let a = phi1 * a_m(phi2, 1).unwrap();
            let q = QvStats::new(a, a * 2f64.powf(2.0 * phi2), 49, 36, 1, TrimMode::PerStep).unwrap();
            let e = mom_estimate(&q, DomainMode::Increasing).unwrap();
            prop_assert!((e.phi2_hat - phi2).abs() < 1e-8);
            prop_assert!((e.phi1_hat.unwrap() / phi1 - 1.0).abs() < 1e-7);
        }

        #[test]
        fn second_order_variations_ignore_affine_trends(
            vals in proptest::collection::vec(-5.0f64..5.0, 100),
            c in -3.0f64..3.0, b1 in -3.0f64..3.0, b2 in -3.0f64..3.0,
        ) {
            let x = Grid::new(10, vals).unwrap();
            let y = Grid::from_fn(10, |i, j| x.get(i, j) + c + b1 * i as f64 + b2 * j as f64);
            let (qx, qy) = (
                quadratic_variations(&x, 2, TrimMode::Common).unwrap(),
                quadratic_variations(&y, 2, TrimMode::Common).unwrap(),
            );
            prop_assert!((qx.q1() - qy.q1()).abs() <= 1e-9 * (1.0 + qx.q1()));
            prop_assert!((qx.q2() - qy.q2()).abs() <= 1e-9 * (1.0 + qx.q2()));
        }
    }
}
