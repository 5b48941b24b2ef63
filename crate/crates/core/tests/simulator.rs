use num_complex::Complex64;
use proptest::prelude::*;
use v2v3d_core::estimators::{empirical_acf, EstimatorConfig, Series};
use v2v3d_core::reference::{stcf_los, RayDiscretization};
use v2v3d_core::sos::{generate, parameterize, sim_discretization, sim_stcf_components};
use v2v3d_core::{ScenarioConfig, UniformGrid};

fn with_rays(mut cfg: ScenarioConfig, n: usize) -> ScenarioConfig {
    cfg.n1 = n;
    cfg.n2 = n;
    cfg.n3 = n;
    cfg
}

fn sample_rate(cfg: &ScenarioConfig) -> f64 {
    16.0 * (cfg.f_t_max + cfg.f_r_max)
}

#[test]
fn halves_of_a_realization_share_one_acf() {
    for cfg in [ScenarioConfig::low_vtd(), ScenarioConfig::high_vtd()] {
        let p = parameterize(&cfg, 1).unwrap();
        let grid = UniformGrid::new(0.0, 1.0 / sample_rate(&cfg), 1 << 20).unwrap();
        let h = generate(&p, &cfg, &grid, 1, 1).unwrap();
        let ec = EstimatorConfig::new(1.0 / cfg.f_t_max);
        let (a, b) = h.samples[0].split_at(1 << 19);
        let fa = empirical_acf(Series::new(a, grid.step, &cfg.name), &ec).unwrap();
        let fb = empirical_acf(Series::new(b, grid.step, &cfg.name), &ec).unwrap();
        let (sa, sb) = (fa.stderr.clone().unwrap(), fb.stderr.clone().unwrap());
        let (va, vb) = (fa.magnitudes(), fb.magnitudes());
        for k in 0..va.len() {
            let bound = 3.0 * sa[k].hypot(sb[k]) + 1e-12;
            assert!((va[k] - vb[k]).abs() <= bound, "{} lag {k}: {} vs {} (3σ {bound})", cfg.name, va[k], vb[k]);
        }
    }
}

#[test]
fn time_averaged_power_is_one() {
    for cfg in [ScenarioConfig::low_vtd(), ScenarioConfig::high_vtd()] {
        let p = parameterize(&cfg, 7).unwrap();
        let grid = UniformGrid::new(0.0, 1.0 / sample_rate(&cfg), 1 << 20).unwrap();
        let h = generate(&p, &cfg, &grid, 2, 1).unwrap();
        let segs: Vec<f64> = h.samples[0]
            .chunks(1 << 15)
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>() / c.len() as f64)
            .collect();
        let g = segs.len() as f64;
        let mean = segs.iter().sum::<f64>() / g;
        let var = segs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (g - 1.0);
        let stderr = (var / g).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * stderr, "{}: {mean} ± {stderr}", cfg.name);
    }
}

#[test]
fn distance_to_reference_shrinks_with_ray_count() {
    let taus = 2.0 / 570.0;
    let count = 65;
    let step = taus / (count - 1) as f64;
    for base in [ScenarioConfig::low_vtd(), ScenarioConfig::high_vtd()] {
        let reference = RayDiscretization::new(&base, 0.0, 0.0, RayDiscretization::nodes_for(&base, taus))
            .unwrap()
            .stcf_grid(0.0, step, count);
        let mut last = f64::INFINITY;
        for n in [10, 20, 40, 80] {
            let cfg = with_rays(base.clone(), n);
            let p = parameterize(&cfg, 1).unwrap();
            let sim = sim_discretization(&p, &cfg, 0.0, 0.0).unwrap().stcf_grid(0.0, step, count);
            let sup = sim.iter().zip(&reference).map(|(s, r)| (s.norm() - r.norm()).abs()).fold(0.0, f64::max);
            assert!(sup <= last + 1e-3, "{} N = {n}: {sup} after {last}", base.name);
            last = sup;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn simulated_los_term_equals_reference(
        high in any::<bool>(),
        dt in -3.0..3.0f64,
        dr in -3.0..3.0f64,
        tau in -5e-3..5e-3f64,
    ) {
        let cfg = with_rays(if high { ScenarioConfig::high_vtd() } else { ScenarioConfig::low_vtd() }, 4);
        let p = parameterize(&cfg, 3).unwrap();
        let l = cfg.lambda();
        let sim = sim_stcf_components(dt * l, dr * l, tau, &p, &cfg).unwrap().los;
        let reference: Complex64 = stcf_los(dt * l, dr * l, tau, &cfg);
        prop_assert_eq!(sim, reference);
    }
}
