//! Randomized invariants: equivariance of the local fits and ANOVA
//! quantities under affine transforms of the data, plus shape properties
//! of the F-distribution CDF.

use lpanova::data::{Dataset, FitConfig, GridSpec};
use lpanova::*;
use proptest::prelude::*;

fn xy_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let n = 12usize..40;
    n.prop_flat_map(|n| {
        (
            proptest::collection::vec(0.0..1.0f64, n),
            proptest::collection::vec(-3.0..3.0f64, n),
        )
    })
}

fn spread_enough(x: &[f64]) -> bool {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo > 0.2
}

fn config_at(x0: f64, degree: usize, h: f64) -> FitConfig {
    let grid = GridSpec::new(x0 - 1.0, x0 + 1.0, 2).unwrap();
    FitConfig::new(degree, h, Kernel::Epanechnikov, grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn response_shift_moves_fit_and_leaves_anova((x, y) in xy_strategy(), c in -5.0..5.0f64, p in 0usize..3) {
        prop_assume!(spread_enough(&x));
        let d = Dataset::new(x.clone(), y.clone()).unwrap();
        let shifted = Dataset::new(x, y.iter().map(|v| v + c).collect()).unwrap();
        let config = config_at(0.5, p, 0.4);
        let (Ok(a), Ok(b)) = (local_anova_at(&d, 0.5, &config), local_anova_at(&shifted, 0.5, &config)) else {
            return Ok(());
        };
        let f0 = local_fit(&d, 0.5, &config).unwrap();
        let f1 = local_fit(&shifted, 0.5, &config).unwrap();
        prop_assert!((f1.beta[0] - f0.beta[0] - c).abs() < 1e-9);
        let scale = 1.0 + a.sst.abs() + c * c;
        prop_assert!((a.sst - b.sst).abs() < 1e-9 * scale);
        prop_assert!((a.sse - b.sse).abs() < 1e-9 * scale);
        prop_assert!((a.ssr - b.ssr).abs() < 1e-9 * scale);
    }

    #[test]
    fn response_scaling_scales_sums_quadratically((x, y) in xy_strategy(), a in 0.2..4.0f64) {
        prop_assume!(spread_enough(&x));
        let d = Dataset::new(x.clone(), y.clone()).unwrap();
        let scaled = Dataset::new(x, y.iter().map(|v| a * v).collect()).unwrap();
        let config = config_at(0.5, 1, 0.4);
        let (Ok(one), Ok(two)) = (local_anova_at(&d, 0.5, &config), local_anova_at(&scaled, 0.5, &config)) else {
            return Ok(());
        };
        let scale = 1.0 + a * a * one.sst.abs();
        prop_assert!((two.sst - a * a * one.sst).abs() < 1e-9 * scale);
        prop_assert!((two.sse - a * a * one.sse).abs() < 1e-9 * scale);
        prop_assert!((two.ssr - a * a * one.ssr).abs() < 1e-9 * scale);
        if let (Some(r0), Some(r1)) = (one.r2, two.r2) {
            prop_assert!((r0 - r1).abs() < 1e-9);
        }
    }

    #[test]
    fn covariate_shift_is_transparent((x, y) in xy_strategy(), c in -10.0..10.0f64, p in 0usize..3) {
        prop_assume!(spread_enough(&x));
        let d = Dataset::new(x.clone(), y.clone()).unwrap();
        let moved = Dataset::new(x.iter().map(|v| v + c).collect(), y).unwrap();
        let config = config_at(0.5, p, 0.4);
        let config_moved = config_at(0.5 + c, p, 0.4);
        let (Ok(one), Ok(two)) = (
            local_anova_at(&d, 0.5, &config),
            local_anova_at(&moved, 0.5 + c, &config_moved),
        ) else {
            return Ok(());
        };
        let scale = 1.0 + one.sst.abs();
        prop_assert!((one.sst - two.sst).abs() < 1e-7 * scale);
        prop_assert!((one.sse - two.sse).abs() < 1e-7 * scale);
        prop_assert!((one.ssr - two.ssr).abs() < 1e-7 * scale);
    }

    #[test]
    fn pointwise_identity_everywhere((x, y) in xy_strategy(), p in 0usize..4, h in 0.25..0.8f64) {
        prop_assume!(spread_enough(&x));
        let d = Dataset::new(x, y).unwrap();
        let grid = GridSpec::data_range(&d, 15).unwrap();
        let config = FitConfig::new(p, h, Kernel::Epanechnikov, grid).unwrap();
        for x0 in grid.points() {
            let Ok(a) = local_anova_at(&d, x0, &config) else { continue };
            prop_assert!((a.sst - a.sse - a.ssr).abs() <= 1e-9 * a.sst.max(1e-12));
            prop_assert!(a.sse >= -1e-12 && a.ssr >= -1e-12);
        }
    }

    #[test]
    fn global_r2_and_identity((x, y) in xy_strategy(), h in 0.3..0.8f64) {
        prop_assume!(spread_enough(&x));
        let d = Dataset::new(x, y).unwrap();
        let grid = GridSpec::data_range(&d, 30).unwrap();
        let config = FitConfig::new(1, h, Kernel::Epanechnikov, grid).unwrap();
        let Ok(g) = global_anova(&d, &config) else { return Ok(()) };
        prop_assert!((g.sse + g.ssr - g.sst_integrated).abs() <= 1e-9 * g.sst_integrated.max(1e-12));
        prop_assert!((0.0..=1.0).contains(&g.r2_integrated));
    }

    #[test]
    fn f_cdf_is_a_distribution_function(d1 in 0.5..60.0f64, d2 in 0.5..60.0f64, x in 0.01..20.0f64) {
        let c = f_cdf(x, d1, d2).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        let c2 = f_cdf(x * 1.3, d1, d2).unwrap();
        prop_assert!(c2 >= c - 1e-12);
        prop_assert!(f_cdf(0.0, d1, d2).unwrap().abs() < 1e-12);
    }
}
