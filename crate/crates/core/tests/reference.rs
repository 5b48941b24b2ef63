use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use v2v3d_core::numerics::{integrate_1d, QuadratureSpec};
use v2v3d_core::reference::{
    afd_from_b, amplitude_pdf, default_psd_grid, doppler_psd, lcr_from_b, ricean_cdf, stcf_components,
    stcf_db_factors, stcf_total, BParams, RiceanParams,
};
use v2v3d_core::testkit::mc_integral_oracle;
use v2v3d_core::{CurveValues, ScenarioConfig};

fn rows() -> [ScenarioConfig; 2] {
    [ScenarioConfig::low_vtd(), ScenarioConfig::high_vtd()]
}

#[test]
fn components_at_origin_recover_power_split() {
    for cfg in rows() {
        let c = stcf_components(0.0, 0.0, 0.0, &cfg, &QuadratureSpec::default()).unwrap();
        let kp1 = cfg.k_factor + 1.0;
        let want = [cfg.eta_sb1, cfg.eta_sb2, cfg.eta_sb3];
        assert!((c.los.norm() / kp1 - cfg.k_factor / kp1).abs() < 1e-12);
        for (got, eta) in c.sb.iter().zip(want) {
            assert!((got.re / kp1 - eta / kp1).abs() < 1e-6 && got.im.abs() < 1e-6, "{got} vs {eta}");
        }
        assert!((c.db.re - cfg.eta_db).abs() < 1e-6 && c.db.im.abs() < 1e-6);
        assert!((c.total() - 1.0).norm() < 1e-6);
    }
}

#[test]
fn psd_is_nonnegative_after_leakage_floor() {
    for cfg in rows() {
        let grid = default_psd_grid(&cfg).unwrap();
        let psd = doppler_psd(&cfg, &grid).unwrap();
        let CurveValues::Real(d) = psd.values else { panic!("PSD must be real") };
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        let min = d.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min >= -1e-3 * max, "{}: min {min} max {max}", cfg.name);
    }
}

#[test]
fn ricean_cdf_matches_integrated_density() {
    for k in [0.0, 0.5, 0.856, 3.786, 12.0] {
        let rp = RiceanParams::new(k, 0.3).unwrap();
        for r in [0.1, 0.5, 1.0, 1.5, 2.5] {
            let spec = QuadratureSpec::adaptive(1e-12, 1e-10);
            let direct = integrate_1d(|z| amplitude_pdf(z, &rp).unwrap(), 0.0, r, &spec).unwrap().value;
            let cdf = ricean_cdf(r, k).unwrap();
            assert!((direct - cdf).abs() < 1e-6, "K = {k}, r = {r}: {direct} vs {cdf}");
        }
    }
}

#[test]
fn double_bounce_factors_match_monte_carlo() {
    let n = 200_000;
    for cfg in rows() {
        let l = cfg.lambda();
        for &(dt, dr, tau) in &[(0.0, 0.0, 4e-4), (0.5 * l, 1.0 * l, 1e-3), (2.0 * l, 0.3 * l, 2.5e-3)] {
            let (tx, rx) = stcf_db_factors(dt, dr, tau, &cfg, &QuadratureSpec::default()).unwrap();
            let side = |d: f64, theta: f64, phi: f64, f: f64, gamma: f64| {
                move |a: f64, b: f64| {
                    let proj = b.sin() * phi.sin() + b.cos() * phi.cos() * (theta - a).cos();
                    let nu = f * (a - gamma).cos() * b.cos();
                    Complex64::from_polar(1.0, 2.0 * PI * (d * proj / l + tau * nu))
                }
            };
            let (mt, st) = mc_integral_oracle(
                side(dt, cfg.theta_t, cfg.phi_t, cfg.f_t_max, cfg.gamma_t),
                &cfg.vmf_tx_sphere,
                n,
                11,
            );
            let (mr, sr) = mc_integral_oracle(
                side(dr, cfg.theta_r, cfg.phi_r, cfg.f_r_max, cfg.gamma_r),
                &cfg.vmf_rx_sphere,
                n,
                12,
            );
            assert!((tx - mt).norm() <= 3.0 * st, "{} tx at {dt},{tau}: {tx} vs {mt} ± {st}", cfg.name);
            assert!((rx - mr).norm() <= 3.0 * sr, "{} rx at {dr},{tau}: {rx} vs {mr} ± {sr}", cfg.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn correlation_is_bounded_and_hermitian(
        high in any::<bool>(),
        dt in -3.0..3.0f64,
        dr in -3.0..3.0f64,
        tau in -4e-3..4e-3f64,
    ) {
        let cfg = if high { ScenarioConfig::high_vtd() } else { ScenarioConfig::low_vtd() };
        let l = cfg.lambda();
        let fwd = stcf_total(dt * l, dr * l, tau, &cfg).unwrap();
        let back = stcf_total(-dt * l, -dr * l, -tau, &cfg).unwrap();
        prop_assert!(fwd.norm() <= 1.0 + 1e-6);
        prop_assert!((back - fwd.conj()).norm() < 1e-6, "{fwd} vs {back}");
    }
}

proptest! {
    #[test]
    fn fade_duration_times_crossing_rate_is_the_cdf(
        r in 0.05..3.0f64,
        k in 0.0..15.0f64,
        b1 in -200.0..200.0f64,
        spread in 1.0..1e5f64,
    ) {
        let b0 = 0.5 / (k + 1.0);
        let b = BParams { b0, b1, b2: (spread + b1 * b1) / b0 };
        let l = lcr_from_b(r, k, &b).unwrap();
        let t = afd_from_b(r, k, &b).unwrap();
        let cdf = ricean_cdf(r, k).unwrap();
        prop_assume!(l > 0.0);
        prop_assert!((t * l - cdf).abs() <= 1e-9);
    }
}
