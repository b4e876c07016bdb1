mod common;

use gridcascade::case::{fixtures, rts79};
use gridcascade::{build_gsdf, woodbury_update, Error, SusceptanceSystem};
use proptest::prelude::*;

fn max_diff(a: &gridcascade::GsdfMatrix, b: &nalgebra::DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..a.n_lines() {
        for j in 0..a.n_buses() {
            worst = worst.max((a.get(k, j) - b[(k, j)]).abs());
        }
    }
    worst
}

#[test]
fn rts79_matches_dense_formula() {
    let case = rts79::case(&Default::default());
    let all = vec![true; case.n_lines()];
    let psi = build_gsdf(&case, &all).unwrap();
    let oracle = common::dense_gsdf(&case, &all).unwrap();
    assert!(max_diff(&psi, &oracle) < 1e-10);
    let r = case.reference_index();
    assert!((0..case.n_lines()).all(|k| psi.get(k, r) == 0.0));
}

#[test]
fn injections_at_one_bus_withdrawn_at_reference_conserve_flow() {
    let case = fixtures::five_bus();
    let psi = build_gsdf(&case, &[true; 7]).unwrap();
    // 1 MW injected at bus 5 reaches bus 4 over lines 6 and 7 only
    let through = psi.get(5, 4) + psi.get(6, 4);
    assert!((through + 1.0).abs() < 1e-12 || (through - 1.0).abs() < 1e-12);
}

#[test]
fn every_rts79_bridge_is_reported() {
    let case = rts79::case(&Default::default());
    let all = vec![true; case.n_lines()];
    let sys = SusceptanceSystem::new(&case, &all).unwrap();
    let base = sys.gsdf();
    for k in 0..case.n_lines() {
        let mut state = all.clone();
        state[k] = false;
        let connected = common::components(&case, &state).iter().all(|&c| c == 0);
        match woodbury_update(&sys, &base, &[k]) {
            Ok(_) => assert!(connected, "line {k} splits the network but no error"),
            Err(Error::Islanded(p)) => {
                assert!(!connected, "line {k} reported as bridge");
                assert_eq!(p.islands.len(), 2);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

#[test]
fn removing_an_out_of_service_line_is_rejected() {
    let case = fixtures::five_bus();
    let sys = SusceptanceSystem::new(&case, &[true; 7]).unwrap();
    let once = woodbury_update(&sys, &sys.gsdf(), &[2]).unwrap();
    assert!(woodbury_update(&sys, &once, &[2]).is_err());
    assert!(woodbury_update(&sys, &once, &[70]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn woodbury_chain_matches_rebuild(lines in proptest::collection::vec(0usize..38, 1..5)) {
        let case = rts79::case(&Default::default());
        let all = vec![true; case.n_lines()];
        let sys = SusceptanceSystem::new(&case, &all).unwrap();
        let mut current = sys.gsdf();
        let mut state = all.clone();
        for &k in &lines {
            if !state[k] {
                continue;
            }
            state[k] = false;
            match (woodbury_update(&sys, &current, &[k]), common::dense_gsdf(&case, &state)) {
                (Ok(next), Some(oracle)) => {
                    prop_assert!(max_diff(&next, &oracle) < 1e-8);
                    current = next;
                }
                (Err(Error::Islanded(_)), None) => break,
                (r, o) => prop_assert!(false, "update {:?} vs oracle {:?}", r.map(|_| ()), o.map(|_| ())),
            }
        }
    }
}
