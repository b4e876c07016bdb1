use gridcascade::case::rts79;
use gridcascade::scenario::{
    empirical_correlation, generate_rts79_year, generate_scenarios, parse_scenarios, psd_cholesky, scenarios_to_csv,
    PowerCurve, WindModelConfig,
};
use gridcascade::Error;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, Weibull};

#[test]
fn latent_correlation_is_recovered() {
    let case = rts79::wind_case(&Default::default());
    let model = WindModelConfig::rts79();
    let sc = generate_rts79_year(&case, &model, 8760, 17).unwrap();
    let emp = empirical_correlation(&sc).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert!((emp[i][j] - model.correlation[i][j]).abs() < 0.08, "{i},{j}: {}", emp[i][j]);
        }
    }
}

#[test]
fn outputs_follow_the_weibull_power_curve() {
    let case = rts79::wind_case(&Default::default());
    let mut model = WindModelConfig::rts79();
    model.diurnal_profile = vec![1.0; 24];
    model.seasonal_profile = vec![1.0; 12];
    let sc = generate_rts79_year(&case, &model, 500, 4).unwrap();
    let normal = Normal::standard();
    let weibull = Weibull::new(model.weibull_shape[0], model.weibull_scale[0]).unwrap();
    let curve = PowerCurve::default();
    for s in &sc {
        for (out, z) in s.wind_output.iter().zip(&s.latent) {
            let u = normal.cdf(*z);
            let v = weibull.inverse_cdf(u);
            let expected = rts79::WIND_FARM_CAPACITY * curve.fraction(v);
            assert!((out - expected).abs() < 1e-6 * rts79::WIND_FARM_CAPACITY, "{out} vs {expected}");
        }
    }
}

#[test]
fn same_seed_same_scenarios() {
    let case = rts79::wind_case(&Default::default());
    let m = WindModelConfig::rts79();
    let a = generate_rts79_year(&case, &m, 48, 99).unwrap();
    let b = generate_rts79_year(&case, &m, 48, 99).unwrap();
    let c = generate_rts79_year(&case, &m, 48, 100).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn csv_round_trip_is_exact() {
    let case = rts79::wind_case(&Default::default());
    let sc = generate_rts79_year(&case, &WindModelConfig::rts79(), 30, 1).unwrap();
    let text = scenarios_to_csv(&sc, 5, case.n_buses());
    assert_eq!(parse_scenarios(&text).unwrap(), sc);
    assert!(parse_scenarios("nonsense\n1,2\n").is_err());
}

#[test]
fn power_curve_regions() {
    let c = PowerCurve::default();
    assert_eq!(c.fraction(2.9), 0.0);
    assert_eq!(c.fraction(12.0), 1.0);
    assert_eq!(c.fraction(24.9), 1.0);
    assert_eq!(c.fraction(25.0), 0.0);
    let mid = c.fraction(7.5);
    assert!((mid - (7.5f64.powi(3) - 27.0) / (1728.0 - 27.0)).abs() < 1e-15);
}

#[test]
fn invalid_models_are_rejected() {
    let case = rts79::wind_case(&Default::default());
    let mut bad = WindModelConfig::rts79();
    bad.correlation[0][1] = 0.99;
    bad.correlation[1][0] = 0.99;
    bad.correlation[0][2] = -0.99;
    bad.correlation[2][0] = -0.99;
    assert!(matches!(generate_rts79_year(&case, &bad, 10, 0), Err(Error::NotPsd)));
    let three = WindModelConfig::uniform(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    assert!(matches!(generate_rts79_year(&case, &three, 10, 0), Err(Error::WindModel(_))));
    assert!(generate_scenarios(&case, &WindModelConfig::rts79(), &[], 5, 0).is_err());
    assert!(generate_scenarios(&case, &WindModelConfig::rts79(), &[], 0, 0).unwrap().is_empty());
}

proptest! {
    #[test]
    fn cholesky_reconstructs_rank_deficient_matrices(
        factors in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 2), 4)
    ) {
        // C = F Fᵀ with F 4×2 has rank ≤ 2
        let c: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| factors[i][0] * factors[j][0] + factors[i][1] * factors[j][1]).collect())
            .collect();
        let l = psd_cholesky(&c).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i][k] * l[j][k]).sum();
                prop_assert!((v - c[i][j]).abs() < 1e-6);
            }
        }
    }
}
