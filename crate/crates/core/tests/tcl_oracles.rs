// SPDX-License-Identifier: Apache-2.0

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinboson::bath::{self, quadrature, MatsubaraExpansion, ModelParams, QuadratureConfig};
use spinboson::tcl::{self, CoefficientTable, SeriesCoefficients};

fn params(gamma: f64, cutoff: f64, temperature: f64) -> ModelParams {
    ModelParams::new(gamma, cutoff, temperature).unwrap()
}

/// −½∫₀^t D1(s) cos s ds and ½∫₀^t D1(s) sin s ds by direct time quadrature.
fn nested<K: Fn(f64) -> f64>(t: f64, kernel: K, q: &QuadratureConfig) -> (f64, f64) {
    let azz = quadrature::integrate(|s| -0.5 * kernel(s) * s.cos(), 0.0, t, q).unwrap();
    let ayx = quadrature::integrate(|s| 0.5 * kernel(s) * s.sin(), 0.0, t, q).unwrap();
    (azz.value, ayx.value)
}

#[test]
fn frequency_route_matches_nested_time_quadrature() {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let series = MatsubaraExpansion::new(&p).unwrap();
    for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let (azz, ayx) = nested(
            t,
            |s| {
                if s == 0.0 {
                    0.0
                } else {
                    series.noise_kernel(s)
                }
            },
            &q,
        );
        let fz = tcl::coeff_azz(t, &p, &q).unwrap();
        let fy = tcl::coeff_ayx(t, &p, &q).unwrap();
        assert!(
            (fz - azz).abs() <= 1e-6,
            "t={t} a_zz: freq={fz} nested={azz}"
        );
        assert!(
            (fy - ayx).abs() <= 1e-6,
            "t={t} a_yx: freq={fy} nested={ayx}"
        );
    }
}

#[test]
fn nested_oracle_with_quadrature_kernel_at_t3() {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let outer = q.clone().with_tolerance(1e-9);
    let (azz, ayx) = nested(
        3.0,
        |s| {
            if s == 0.0 {
                0.0
            } else {
                bath::noise_kernel_quadrature(s, &p, &q).unwrap()
            }
        },
        &outer,
    );
    assert!((tcl::coeff_azz(3.0, &p, &q).unwrap() - azz).abs() <= 1e-6);
    assert!((tcl::coeff_ayx(3.0, &p, &q).unwrap() - ayx).abs() <= 1e-6);
}

#[test]
fn series_route_matches_frequency_route() {
    for &(cutoff, t) in &[(1.0, 1.0), (0.3, 0.2), (5.0, 2.0), (10.0, 0.5), (0.5, 8.0)] {
        let p = params(0.1, cutoff, t);
        let q = QuadratureConfig::for_params(&p);
        let s = SeriesCoefficients::new(&p).unwrap();
        for time in [0.3, 1.7, 6.0, 25.0] {
            let a = s.evaluate(time);
            let f = tcl::coefficients_frequency_domain(time, &p, &q).unwrap();
            assert!((a.a_zz - f.a_zz).abs() <= 1e-8, "Ω={cutoff} T={t} t={time}");
            assert!((a.a_yx - f.a_yx).abs() <= 1e-8, "Ω={cutoff} T={t} t={time}");
            assert!((a.b_z - f.b_z).abs() <= 1e-12);
        }
        let st = tcl::stationary_coeffs(&p, &q).unwrap();
        let ss = s.stationary();
        assert!((st.a_yx - ss.a_yx).abs() <= 1e-8, "Ω={cutoff} T={t}");
        assert!((st.a_zz - ss.a_zz).abs() <= 1e-12);
    }
}

#[test]
fn bz_closed_form_matches_time_quadrature() {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let quad = quadrature::integrate(
        |s| -0.5 * bath::dissipation_kernel(s, &p) * s.sin(),
        0.0,
        2.0,
        &q,
    )
    .unwrap();
    assert!((quad.value - tcl::coeff_bz(2.0, &p)).abs() <= 1e-10);
}

#[test]
fn reference_stationary_values() {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let st = tcl::stationary_coeffs(&p, &q).unwrap();
    assert!(st.is_stationary());
    assert_abs_diff_eq!(st.a_zz, -0.054_100, epsilon = 1e-4);
    assert_abs_diff_eq!(st.b_z, -0.025, epsilon = 1e-10);
    // Cross-check of the resonance-delta limit at a long finite time.
    assert!((tcl::coeff_azz(200.0, &p, &q).unwrap() - st.a_zz).abs() < 1e-4);
    assert!((tcl::coeff_bz(200.0, &p) - st.b_z).abs() < 1e-12);
}

#[test]
fn stationary_ayx_equals_long_time_average() {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let st = tcl::stationary_ayx(&p, &q).unwrap();
    let n = 200;
    let mean = (0..n)
        .map(|i| 150.0 + 50.0 * (i as f64 + 0.5) / n as f64)
        .map(|t| tcl::coeff_ayx(t, &p, &q).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((mean - st).abs() <= 1e-4, "average={mean} stationary={st}");
}

#[test]
fn gibbs_fixed_point_at_random_temperatures() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let t = rng.gen_range(0.05..10.0);
        let cutoff = rng.gen_range(0.2..10.0);
        let p = params(0.1, cutoff, t);
        let z = -tcl::stationary_bz(&p) / tcl::stationary_azz(&p);
        assert!((z + (0.5 / t).tanh()).abs() < 1e-12, "T={t}: z*={z}");
    }
}

#[test]
fn coefficients_are_linear_in_gamma() {
    let p = params(0.1, 2.0, 0.7);
    let q = QuadratureConfig::for_params(&p);
    let doubled = p.with_gamma(0.2);
    let zero = p.with_gamma(0.0);
    for t in [0.0, 0.4, 3.0, 12.0] {
        let a = tcl::coefficients_frequency_domain(t, &p, &q).unwrap();
        let b = tcl::coefficients_frequency_domain(t, &doubled, &q).unwrap();
        let c = SeriesCoefficients::new(&zero).unwrap().evaluate(t);
        for (x, y) in a.as_array().into_iter().zip(b.as_array()) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-3), "t={t}");
        }
        assert_eq!(c.as_array(), [0.0; 3]);
        if t == 0.0 {
            assert_eq!(a.as_array(), [0.0; 3]);
        }
    }
}

#[test]
fn dissipative_signs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let p = params(
            rng.gen_range(0.01..0.5),
            rng.gen_range(0.1..60.0),
            rng.gen_range(0.0..60.0),
        );
        assert!(tcl::stationary_azz(&p) < 0.0);
        assert!(tcl::stationary_bz(&p) < 0.0);
    }
}

#[test]
fn coefficients_relax_at_high_temperature() {
    let p = params(0.1, 1.0, 1.0);
    let q = QuadratureConfig::for_params(&p);
    let st = tcl::stationary_coeffs(&p, &q).unwrap();
    let s = SeriesCoefficients::new(&p).unwrap();
    for t in [30.0, 45.0, 80.0] {
        let c = s.evaluate(t);
        assert!((c.a_zz - st.a_zz).abs() < 1e-4);
        assert!((c.b_z - st.b_z).abs() < 1e-4);
    }
}

#[test]
fn table_interpolation_across_parameter_range() {
    for &(cutoff, t) in &[
        (1.0, 1.0),
        (0.2, 0.2),
        (10.0, 10.0),
        (1.55, 0.4),
        (50.0, 50.0),
    ] {
        let p = params(0.1, cutoff, t);
        let q = QuadratureConfig::for_params(&p);
        let table = CoefficientTable::for_params(&p, &q).unwrap();
        assert!(table.relaxed(), "Ω={cutoff} T={t}");
        let times = table.times();
        for i in (1..times.len() - 1).step_by(37) {
            let mid = 0.5 * (times[i] + times[i + 1]);
            let a = table.lookup(mid);
            let d = table.direct(mid).unwrap();
            let scale = table.stationary().as_array().map(f64::abs);
            for (c, s) in scale.iter().enumerate() {
                let err = (a.as_array()[c] - d.as_array()[c]).abs();
                assert!(
                    err <= 1e-6 * s.max(1e-12),
                    "Ω={cutoff} T={t} t={mid} c={c}: {err}"
                );
            }
        }
    }
}
