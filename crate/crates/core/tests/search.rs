mod common;

use std::sync::Arc;

use gridcascade::case::{fixtures, Bus, CaseData, GenKind, Generator, Line};
use gridcascade::scenario::{scaled_loads, Scenario};
use gridcascade::search::{
    enumerate_paths, line_failure_probability, search_scenario, SearchConfig, SearchContext, TerminalReason,
};

fn toggles() -> [(bool, bool); 4] {
    [(false, false), (false, true), (true, false), (true, true)]
}

fn five_bus_scenarios(case: &CaseData) -> Vec<Scenario> {
    [0.5, 0.7, 0.85, 1.0, 1.1]
        .iter()
        .enumerate()
        .map(|(i, &f)| Scenario {
            index: i,
            load: scaled_loads(case, f),
            ..Scenario::peak(case, 0.0)
        })
        .collect()
}

#[test]
fn five_bus_search_equals_naive_enumeration() {
    let case = Arc::new(fixtures::five_bus());
    for sc in five_bus_scenarios(&case) {
        let naive = common::naive_paths(&case, &sc, 1e-6, 8);
        assert!(naive.len() > 10);
        for (lsd, woodbury) in toggles() {
            let cfg = SearchConfig {
                epsilon: 1e-6,
                m: 3,
                lsd_enabled: lsd,
                woodbury_enabled: woodbury,
                ..Default::default()
            };
            let ctx = SearchContext::new(case.clone(), cfg).unwrap();
            let (leaves, _, _, _) = enumerate_paths(&ctx, &sc).unwrap();
            let ours: Vec<_> = leaves.iter().map(common::to_naive).collect();
            let diff = common::path_set_difference(&ours, &naive).unwrap_or_else(|| {
                let only_ours: Vec<_> = ours.iter().filter(|p| !naive.contains(p)).collect();
                let only_naive: Vec<_> = naive.iter().filter(|p| !ours.contains(p)).collect();
                panic!("scenario {} ({lsd}, {woodbury}): ours {:?}\nnaive {:?}", sc.index, only_ours, only_naive)
            });
            assert!(diff <= 1e-9, "{diff}");

            let top: Vec<_> = search_scenario(&ctx, &sc).unwrap().paths.iter().map(common::to_naive).collect();
            let expected = common::naive_top(naive.clone(), 3);
            let sigs: Vec<_> = top.iter().map(|p| &p.signature).collect();
            let exp_sigs: Vec<_> = expected.iter().map(|p| &p.signature).collect();
            assert_eq!(sigs, exp_sigs);
        }
    }
}

fn toy() -> CaseData {
    let line = |id| Line {
        id,
        from_bus: 1,
        to_bus: 2,
        reactance: 0.1,
        flow_limit: 100.0,
        relay_threshold: 1.2,
        base_fail_prob: 1e-3,
    };
    CaseData::new(
        "toy",
        100.0,
        vec![
            Bus { id: 1, is_reference: true, base_load: 0.0 },
            Bus { id: 2, is_reference: false, base_load: 50.0 },
        ],
        vec![line(1), line(2)],
        vec![Generator {
            id: 1,
            bus: 1,
            p_max: 100.0,
            cost: 10.0,
            fail_prob: 1e-3,
            kind: GenKind::Conventional,
        }],
        None,
        None,
    )
    .unwrap()
}

#[test]
fn second_failures_survive_and_third_are_pruned() {
    let case = Arc::new(toy());
    let cfg = SearchConfig {
        epsilon: 1e-7,
        m: 100,
        ..Default::default()
    };
    let ctx = SearchContext::new(case.clone(), cfg).unwrap();
    let r = search_scenario(&ctx, &Scenario::peak(&case, 0.0)).unwrap();
    assert_eq!(r.paths.len(), 6);
    for p in &r.paths {
        assert_eq!(p.depth(), 2);
        assert!((p.probability - 1e-6).abs() < 1e-18);
    }
    let islanded = r.paths.iter().filter(|p| p.terminal == TerminalReason::Islanded).count();
    assert_eq!(islanded, 2);
    // losing the only unit sheds everything
    assert!((r.paths[0].shed - 50.0).abs() < 1e-9);
}

#[test]
fn depth_limit_cuts_paths() {
    let case = Arc::new(fixtures::five_bus());
    let cfg = SearchConfig {
        epsilon: 1e-12,
        m: 1000,
        depth_limit: 1,
        ..Default::default()
    };
    let ctx = SearchContext::new(case.clone(), cfg).unwrap();
    let r = search_scenario(&ctx, &Scenario::peak(&case, 0.0)).unwrap();
    assert_eq!(r.paths.len(), 10);
    assert!(r.paths.iter().all(|p| p.depth() == 1));
    assert!(r.paths.iter().any(|p| p.terminal == TerminalReason::DepthLimit));
}

#[test]
fn probabilities_never_increase_along_paths() {
    let case = Arc::new(fixtures::five_bus());
    let ctx = SearchContext::new(case.clone(), SearchConfig { epsilon: 1e-7, m: 10_000, ..Default::default() }).unwrap();
    let r = search_scenario(&ctx, &Scenario::peak(&case, 0.0)).unwrap();
    for p in &r.paths {
        let mut running = 1.0;
        let mut smallest: f64 = 1.0;
        for e in &p.events {
            let next = running * e.probability;
            assert!(next <= running);
            running = next;
            smallest = smallest.min(e.probability);
        }
        assert_eq!(running, p.probability);
        assert!(p.probability <= smallest);
        assert!(p.probability >= 1e-7);
    }
}

#[test]
fn failure_probability_examples() {
    let l = Line {
        id: 1,
        from_bus: 1,
        to_bus: 2,
        reactance: 0.1,
        flow_limit: 100.0,
        relay_threshold: 1.2,
        base_fail_prob: 1e-3,
    };
    assert_eq!(line_failure_probability(&l, 50.0), 1e-3);
    assert!((line_failure_probability(&l, 110.0) - 0.91675).abs() < 1e-12);
    assert!((line_failure_probability(&l, -120.0) - 1.0).abs() < 1e-12);
    assert_eq!(line_failure_probability(&l, 130.0), 1.0);
}
