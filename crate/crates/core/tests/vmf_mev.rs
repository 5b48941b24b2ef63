use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use v2v3d_core::geometry::wrap_angle;
use v2v3d_core::mev::{mev_angles_with, quantile_level};
use v2v3d_core::numerics::{integrate_2d, QuadratureSpec, Rect};
use v2v3d_core::vmf::{vmf_marginal_cdf, vmf_pdf, Marginal};
use v2v3d_core::{MevPairing, VmfParams};

const TABLE_K: [f64; 6] = [0.0, 0.6, 1.3, 3.6, 9.6, 11.5];

fn params() -> impl Strategy<Value = VmfParams> {
    (-PI..PI, -1.2..1.2f64, 0.0..20.0f64).prop_map(|(a, b, k)| VmfParams::new(a, b, k).unwrap())
}

fn azimuth_cdf(alpha: f64, p: &VmfParams) -> f64 {
    vmf_marginal_cdf(Marginal::Azimuth, p.alpha0 + wrap_angle(alpha - p.alpha0), p).unwrap()
}

#[test]
fn density_integrates_to_one() {
    let spec = QuadratureSpec::adaptive(1e-10, 1e-10);
    for k in TABLE_K {
        let p = VmfParams::from_degrees(30.0, 20.0, k);
        // Split at the mode so the peak does not straddle a panel.
        let mut total = 0.0;
        for (a0, a1) in [(-PI, p.alpha0), (p.alpha0, PI)] {
            for (b0, b1) in [(-FRAC_PI_2, p.beta0), (p.beta0, FRAC_PI_2)] {
                total += integrate_2d(|a, b| vmf_pdf(a, b, &p).unwrap(), Rect::new(a0, a1, b0, b1), &spec)
                    .unwrap()
                    .value;
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "k = {k}: {total}");
    }
}

proptest! {
    #[test]
    fn concentration_raises_the_mode(a in -PI..PI, b in -1.2..1.2f64, k1 in 0.0..30.0f64, dk in 0.01..10.0f64) {
        let lo = VmfParams::new(a, b, k1).unwrap();
        let hi = VmfParams::new(a, b, k1 + dk).unwrap();
        prop_assert!(vmf_pdf(a, b, &lo).unwrap() < vmf_pdf(a, b, &hi).unwrap());
    }

    #[test]
    fn flat_slice_is_von_mises(a0 in -PI..PI, k in 0.0..20.0f64) {
        let p = VmfParams::new(a0, 0.0, k).unwrap();
        let ratio = |a: f64| vmf_pdf(a, 0.0, &p).unwrap() / (k * (a - a0).cos()).exp();
        let r0 = ratio(a0);
        for i in 0..16 {
            let a = -PI + 2.0 * PI * i as f64 / 16.0;
            prop_assert!((ratio(a) / r0 - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn angle_sets_split_each_marginal_into_equal_masses(p in params(), shared in any::<bool>()) {
        let n = 40;
        let pairing = if shared { MevPairing::SharedIndex } else { MevPairing::Conditional };
        let set = mev_angles_with(&p, n, pairing).unwrap();
        let mut fa: Vec<f64> = set.pairs.iter().map(|&(a, _)| azimuth_cdf(a, &p)).collect();
        let mut fb: Vec<f64> = set
            .pairs
            .iter()
            .map(|&(_, b)| vmf_marginal_cdf(Marginal::Elevation, b, &p).unwrap())
            .collect();
        fa.sort_by(f64::total_cmp);
        fb.sort_by(f64::total_cmp);
        for m in 0..n {
            let u = quantile_level(m + 1, n);
            prop_assert!((fa[m] - u).abs() < 1e-7, "azimuth level {m}: {} vs {u}", fa[m]);
            prop_assert!((fb[m] - u).abs() < 1e-7, "elevation level {m}: {} vs {u}", fb[m]);
        }
        for w in fa.windows(2).chain(fb.windows(2)) {
            prop_assert!((w[1] - w[0] - 1.0 / n as f64).abs() < 1e-7);
        }
    }

    #[test]
    fn angle_sets_approach_the_marginals(p in params(), n in 1usize..200) {
        let set = mev_angles_with(&p, n, MevPairing::default()).unwrap();
        let mut fa: Vec<f64> = set.pairs.iter().map(|&(a, _)| azimuth_cdf(a, &p)).collect();
        fa.sort_by(f64::total_cmp);
        let ks = fa
            .iter()
            .enumerate()
            .map(|(i, f)| (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs()))
            .fold(0.0, f64::max);
        prop_assert!(ks < 2.0 / n as f64);
    }

    #[test]
    fn angle_sets_are_deterministic(p in params(), n in 1usize..64) {
        for pairing in [MevPairing::Conditional, MevPairing::SharedIndex] {
            let a = mev_angles_with(&p, n, pairing).unwrap();
            let b = mev_angles_with(&p, n, pairing).unwrap();
            for (x, y) in a.pairs.iter().zip(&b.pairs) {
                prop_assert_eq!(x.0.to_bits(), y.0.to_bits());
                prop_assert_eq!(x.1.to_bits(), y.1.to_bits());
            }
        }
    }
}
