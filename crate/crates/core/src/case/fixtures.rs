//! Small reference networks used by tests, examples and the C API.

use super::{Bus, CaseData, GenKind, Generator, Line, DEFAULT_RELAY_THRESHOLD};

fn bus(id: usize, reference: bool, load: f64) -> Bus {
    Bus {
        id,
        is_reference: reference,
        base_load: load,
    }
}

fn line(id: usize, from: usize, to: usize, x: f64, limit: f64, p: f64) -> Line {
    Line {
        id,
        from_bus: from,
        to_bus: to,
        reactance: x,
        flow_limit: limit,
        relay_threshold: DEFAULT_RELAY_THRESHOLD,
        base_fail_prob: p,
    }
}

fn unit(id: usize, bus: usize, p_max: f64, cost: f64, p: f64) -> Generator {
    Generator {
        id,
        bus,
        p_max,
        cost,
        fail_prob: p,
        kind: GenKind::Conventional,
    }
}

/// Three buses on a triangle, all reactances `x`, all limits `limit`.
/// Lines: 1 = (1,2), 2 = (2,3), 3 = (1,3). Bus 1 is the reference and
/// hosts a 200 MW unit; buses 2 and 3 carry 50 MW each.
pub fn triangle(x: f64, limit: f64) -> CaseData {
    CaseData::new(
        "triangle",
        100.0,
        vec![bus(1, true, 0.0), bus(2, false, 50.0), bus(3, false, 50.0)],
        vec![
            line(1, 1, 2, x, limit, 1e-3),
            line(2, 2, 3, x, limit, 1e-3),
            line(3, 1, 3, x, limit, 1e-3),
        ],
        vec![unit(1, 1, 200.0, 10.0, 1e-3)],
        None,
        None,
    )
    .expect("triangle fixture is valid")
}

/// One unit at bus 1 (cost 10), one load at bus 2, one line, shed cost 1000.
pub fn two_bus(gen_cap: f64, load: f64, limit: f64) -> CaseData {
    CaseData::new(
        "two-bus",
        100.0,
        vec![bus(1, true, 0.0), bus(2, false, load)],
        vec![line(1, 1, 2, 0.1, limit, 1e-3)],
        vec![unit(1, 1, gen_cap, 10.0, 1e-3)],
        Some(vec![1000.0, 1000.0]),
        None,
    )
    .expect("two-bus fixture is valid")
}

/// Five-bus meshed toy used for cascade enumeration tests.
///
/// ```text
///   G1(1) --L1-- (2)G2
///    |  \         |
///   L2   L3      L4
///    |     \      |
///   (3)----L5----(4)--L6--(5)G3
///                  \______L7_/ (4-5 second circuit)
/// ```
pub fn five_bus() -> CaseData {
    CaseData::new(
        "five-bus",
        100.0,
        vec![
            bus(1, true, 0.0),
            bus(2, false, 40.0),
            bus(3, false, 90.0),
            bus(4, false, 70.0),
            bus(5, false, 60.0),
        ],
        vec![
            line(1, 1, 2, 0.06, 120.0, 2.0e-3),
            line(2, 1, 3, 0.12, 80.0, 1.5e-3),
            line(3, 1, 4, 0.10, 90.0, 1.2e-3),
            line(4, 2, 4, 0.08, 70.0, 9.0e-4),
            line(5, 3, 4, 0.09, 60.0, 8.0e-4),
            line(6, 4, 5, 0.05, 48.0, 7.0e-4),
            line(7, 4, 5, 0.07, 40.0, 6.0e-4),
        ],
        vec![
            unit(1, 1, 200.0, 12.0, 1.1e-3),
            unit(2, 2, 80.0, 25.0, 2.5e-3),
            unit(3, 5, 50.0, 40.0, 3.0e-3),
        ],
        None,
        None,
    )
    .expect("five-bus fixture is valid")
}
