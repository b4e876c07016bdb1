mod common;

use std::sync::Arc;

use gridcascade::case::{fixtures, rts79};
use gridcascade::dispatch::{self, DispatchLp, DispatchOptions};
use gridcascade::build_gsdf;
use gridcascade::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn two_bus_congestion_sheds_the_excess() {
    // 100 MW unit at the reference bus, 80 MW load behind a 50 MW line
    let case = fixtures::two_bus(100.0, 80.0, 50.0);
    let lp = DispatchLp::new(&case, Arc::new(build_gsdf(&case, &[true]).unwrap()), &Default::default()).unwrap();
    let phi = lp.phi(&[100.0], &[true], &[0.0, 80.0]);
    let sol = dispatch::solve_baseline(&lp, &phi).unwrap();
    assert!((sol.total_shed() - 30.0).abs() < 1e-9);
    assert!((sol.injections[0] - 50.0).abs() < 1e-9);
    assert!(common::kkt_violation(&lp, &phi, &sol) < 1e-7);
}

#[test]
fn optimality_conditions_hold_on_random_rts79_states() {
    let case = rts79::case(&Default::default());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut solved = 0;
    for _ in 0..60 {
        let mut state = vec![true; case.n_lines()];
        for _ in 0..rng.random_range(0..4) {
            state[rng.random_range(0..case.n_lines())] = false;
        }
        let Ok(psi) = build_gsdf(&case, &state) else { continue };
        let literal = rng.random_bool(0.3);
        let opts = DispatchOptions { gen_nonnegative: !literal };
        let lp = DispatchLp::new(&case, Arc::new(psi), &opts).unwrap();
        let units: Vec<bool> = (0..case.n_generators()).map(|_| rng.random_bool(0.9)).collect();
        let caps: Vec<f64> = case.generators.iter().map(|g| g.p_max).collect();
        let scale = rng.random_range(0.4..1.2);
        let loads: Vec<f64> = case.buses.iter().map(|b| b.base_load * scale).collect();
        let phi = lp.phi(&caps, &units, &loads);
        match dispatch::solve_baseline(&lp, &phi) {
            Ok(sol) => {
                let v = common::kkt_violation(&lp, &phi, &sol);
                assert!(v < 1e-6, "kkt violation {v}");
                let shed_ok = sol.shedding.iter().zip(&loads).all(|(s, d)| *s >= -1e-9 && *s <= d + 1e-9);
                assert!(shed_ok);
                solved += 1;
            }
            Err(Error::Unbounded(_)) if literal => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(solved > 40);
}

#[test]
fn lp_text_export_names_every_row() {
    let case = fixtures::five_bus();
    let lp = DispatchLp::new(&case, Arc::new(build_gsdf(&case, &[true; 7]).unwrap()), &Default::default()).unwrap();
    let phi = lp.phi(&[200.0, 80.0, 50.0], &[true; 3], &[0.0, 40.0, 90.0, 70.0, 60.0]);
    let text = dispatch::lpfile::to_lp_string(&lp, &phi);
    assert!(text.starts_with("\\") || text.to_lowercase().contains("minimize"));
    assert!(text.contains("flow_up_1"));
    assert!(text.to_lowercase().contains("end"));
}
