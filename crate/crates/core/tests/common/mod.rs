//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use gridcascade::case::CaseData;
use gridcascade::dispatch::{self, DispatchLp, DispatchOptions};
use gridcascade::gsdf::build_gsdf;
use gridcascade::scenario::Scenario;
use gridcascade::Error;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Connected components by breadth-first search, as island index per bus.
pub fn components(case: &CaseData, state: &[bool]) -> Vec<usize> {
    let n = case.n_buses();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for (k, l) in case.lines.iter().enumerate() {
                if !state[k] {
                    continue;
                }
                let (a, b) = (l.from_bus - 1, l.to_bus - 1);
                let v = if a == u { b } else if b == u { a } else { continue };
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    q.push_back(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Distribution factors from the textbook formula with a dense inverse of
/// the reduced nodal susceptance matrix. `None` when islanded.
pub fn dense_gsdf(case: &CaseData, state: &[bool]) -> Option<DMatrix<f64>> {
    let comp = components(case, state);
    if comp.iter().any(|&c| c != 0) {
        return None;
    }
    let n = case.n_buses();
    let r = case.reference_index();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for (k, l) in case.lines.iter().enumerate() {
        if !state[k] {
            continue;
        }
        let (i, j) = (l.from_bus - 1, l.to_bus - 1);
        let y = 1.0 / l.reactance;
        b[(i, i)] += y;
        b[(j, j)] += y;
        b[(i, j)] -= y;
        b[(j, i)] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != r).collect();
    let red = DMatrix::from_fn(n - 1, n - 1, |a, c| b[(keep[a], keep[c])]);
    let inv = red.lu().try_inverse()?;
    let mut x = DMatrix::<f64>::zeros(n, n);
    for (a, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            x[(i, j)] = inv[(a, c)];
        }
    }
    let mut psi = DMatrix::<f64>::zeros(case.n_lines(), n);
    for (k, l) in case.lines.iter().enumerate() {
        if !state[k] {
            continue;
        }
        let (i, j) = (l.from_bus - 1, l.to_bus - 1);
        for bus in 0..n {
            psi[(k, bus)] = (x[(i, bus)] - x[(j, bus)]) / l.reactance;
        }
    }
    Some(psi)
}

/// Largest violation of the optimality conditions of `min cᵀx, Ax ≤ b(φ),
/// balance = 0` at `sol`: primal feasibility, multiplier signs,
/// stationarity and complementary slackness (scaled by the row's slack).
pub fn kkt_violation(lp: &DispatchLp, phi: &[f64], sol: &dispatch::DispatchSolution) -> f64 {
    let x = sol.x();
    let a = lp.a_matrix();
    let rhs = lp.rhs_all(phi);
    let mut worst: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        let s: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() - rhs[i];
        if i == lp.balance_row() {
            worst = worst.max(s.abs());
        } else {
            worst = worst.max(s);
        }
    }
    let mut grad = lp.cost().to_vec();
    for (&row, &mu) in sol.active_set.iter().zip(&sol.multipliers) {
        if row != lp.balance_row() {
            worst = worst.max(-mu);
        }
        let ar = &a[row];
        let slack: f64 = ar.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() - rhs[row];
        worst = worst.max((mu * slack).abs());
        for (g, v) in grad.iter_mut().zip(ar) {
            *g += mu * v;
        }
    }
    let scale = lp.cost().iter().fold(1.0f64, |m, c| m.max(c.abs()));
    worst.max(grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) / scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaivePath {
    /// (0 = unit, 1 = line, 2 = relay trip), elements.
    pub signature: Vec<(u8, Vec<usize>)>,
    pub probability: f64,
    pub shed: f64,
    pub terminal: &'static str,
}

fn line_prob(base: f64, limit: f64, beta: f64, flow: f64) -> f64 {
    let f = flow.abs();
    if f <= limit + 1e-6 {
        base
    } else if f > beta * limit {
        1.0
    } else {
        base + (1.0 - base) * f / (beta * limit)
    }
}

struct State {
    lines: Vec<bool>,
    units: Vec<bool>,
    injections: Vec<f64>,
    shedding: Vec<f64>,
    probability: f64,
    signature: Vec<(u8, Vec<usize>)>,
    depth: usize,
}

fn settle(case: &CaseData, lines: &[bool], units: &[bool], caps: &[f64], loads: &[f64]) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let gsdf = Arc::new(build_gsdf(case, lines)?);
    let lp = DispatchLp::new(case, gsdf, &DispatchOptions::default())?;
    let sol = dispatch::solve_baseline(&lp, &lp.phi(caps, units, loads))?;
    Ok((sol.injections, sol.shedding))
}

fn islanded_shed(case: &CaseData, lines: &[bool], loads: &[f64], parent_shed: &[f64]) -> f64 {
    let comp = components(case, lines);
    let main = comp[case.reference_index()];
    (0..loads.len())
        .map(|i| if comp[i] == main { parent_shed[i] } else { loads[i] })
        .sum()
}

/// Every leaf of the cascade tree, by plain recursion with rebuilt factors
/// and cold-started LPs.
pub fn naive_paths(case: &CaseData, scenario: &Scenario, eps: f64, depth_limit: usize) -> Vec<NaivePath> {
    let caps = scenario.generator_caps(case);
    let units = vec![true; case.n_generators()];
    let lines = vec![true; case.n_lines()];
    let (inj, shed) = settle(case, &lines, &units, &caps, &scenario.load).expect("intact case solves");
    let root = State {
        lines,
        units,
        injections: inj,
        shedding: shed,
        probability: 1.0,
        signature: Vec::new(),
        depth: 0,
    };
    let mut out = Vec::new();
    recurse(case, scenario, &caps, eps, depth_limit, &root, &mut out);
    out
}

fn recurse(
    case: &CaseData,
    sc: &Scenario,
    caps: &[f64],
    eps: f64,
    depth_limit: usize,
    s: &State,
    out: &mut Vec<NaivePath>,
) {
    let leaf = |reason: &'static str, shed: f64, sig: Vec<(u8, Vec<usize>)>, p: f64, out: &mut Vec<NaivePath>| {
        out.push(NaivePath {
            signature: sig,
            probability: p,
            shed,
            terminal: reason,
        })
    };
    let total_shed: f64 = s.shedding.iter().sum();
    if s.depth >= depth_limit {
        leaf("depth-limit", total_shed, s.signature.clone(), s.probability, out);
        return;
    }
    let psi = dense_gsdf(case, &s.lines).unwrap();
    let flows = &psi * nalgebra::DVector::from_column_slice(&s.injections);
    let mut any = false;
    let mut candidates = 0;
    for g in 0..case.n_generators() {
        let gen = &case.generators[g];
        if !s.units[g] || gen.is_wind() || gen.fail_prob <= 0.0 {
            continue;
        }
        candidates += 1;
        let p = s.probability * gen.fail_prob;
        if p < eps {
            continue;
        }
        any = true;
        let mut units = s.units.clone();
        units[g] = false;
        let bus = gen.bus - 1;
        let remaining: f64 = (0..case.n_generators())
            .filter(|&u| units[u] && case.generators[u].bus - 1 == bus)
            .map(|u| caps[u])
            .sum();
        let produced = s.injections[bus] + sc.load[bus] - s.shedding[bus];
        let lost = (produced - remaining).max(0.0);
        let mut inj = s.injections.clone();
        inj[bus] -= lost;
        inj[case.reference_index()] += lost;
        let mut sig = s.signature.clone();
        sig.push((0, vec![g]));
        step(case, sc, caps, eps, depth_limit, s, s.lines.clone(), units, inj, p, sig, out);
    }
    for k in 0..case.n_lines() {
        if !s.lines[k] {
            continue;
        }
        let l = &case.lines[k];
        let pk = line_prob(l.base_fail_prob, l.flow_limit, l.relay_threshold, flows[k]);
        if pk <= 0.0 {
            continue;
        }
        candidates += 1;
        let p = s.probability * pk;
        if p < eps {
            continue;
        }
        any = true;
        let mut lines = s.lines.clone();
        lines[k] = false;
        let mut sig = s.signature.clone();
        sig.push((1, vec![k]));
        step(case, sc, caps, eps, depth_limit, s, lines, s.units.clone(), s.injections.clone(), p, sig, out);
    }
    if !any && s.depth > 0 {
        let reason = if candidates == 0 { "converged" } else { "below-threshold" };
        leaf(reason, total_shed, s.signature.clone(), s.probability, out);
    }
}

#[allow(clippy::too_many_arguments)]
fn step(
    case: &CaseData,
    sc: &Scenario,
    caps: &[f64],
    eps: f64,
    depth_limit: usize,
    parent: &State,
    mut lines: Vec<bool>,
    units: Vec<bool>,
    inj: Vec<f64>,
    p: f64,
    mut sig: Vec<(u8, Vec<usize>)>,
    out: &mut Vec<NaivePath>,
) {
    loop {
        let Some(psi) = dense_gsdf(case, &lines) else {
            let shed = islanded_shed(case, &lines, &sc.load, &parent.shedding);
            out.push(NaivePath {
                signature: sig,
                probability: p,
                shed,
                terminal: "islanded",
            });
            return;
        };
        let flows = &psi * nalgebra::DVector::from_column_slice(&inj);
        let trips: Vec<usize> = (0..case.n_lines())
            .filter(|&k| lines[k] && flows[k].abs() > case.lines[k].relay_threshold * case.lines[k].flow_limit)
            .collect();
        if trips.is_empty() {
            break;
        }
        for &k in &trips {
            lines[k] = false;
        }
        sig.push((2, trips));
    }
    match settle(case, &lines, &units, caps, &sc.load) {
        Ok((injections, shedding)) => {
            let child = State {
                lines,
                units,
                injections,
                shedding,
                probability: p,
                signature: sig,
                depth: parent.depth + 1,
            };
            recurse(case, sc, caps, eps, depth_limit, &child, out);
        }
        Err(Error::Infeasible) => out.push(NaivePath {
            signature: sig,
            probability: p,
            shed: sc.total_load(),
            terminal: "infeasible",
        }),
        Err(e) => panic!("naive dispatch failed: {e}"),
    }
}

/// The `m` most severe paths: shedding (1e-6 MW resolution) descending,
/// then probability descending, then signature ascending.
pub fn naive_top(mut paths: Vec<NaivePath>, m: usize) -> Vec<NaivePath> {
    paths.sort_by(|a, b| {
        let qa = (a.shed * 1e6).round() as i64;
        let qb = (b.shed * 1e6).round() as i64;
        qb.cmp(&qa)
            .then(b.probability.total_cmp(&a.probability))
            .then(a.signature.cmp(&b.signature))
    });
    paths.truncate(m);
    paths
}

/// Convert a library path to the naive representation.
pub fn to_naive(p: &gridcascade::search::CascadePath) -> NaivePath {
    use gridcascade::search::{EventKind, TerminalReason};
    NaivePath {
        signature: p
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::RandomGenFailure => Some((0, e.elements.clone())),
                EventKind::RandomLineFailure => Some((1, e.elements.clone())),
                EventKind::RelayTrip => Some((2, e.elements.clone())),
                EventKind::Redispatch => None,
            })
            .collect(),
        probability: p.probability,
        shed: p.shed,
        terminal: match p.terminal {
            TerminalReason::Converged => "converged",
            TerminalReason::BelowThreshold => "below-threshold",
            TerminalReason::Islanded => "islanded",
            TerminalReason::DepthLimit => "depth-limit",
            TerminalReason::Infeasible => "infeasible",
        },
    }
}

/// Largest difference between two path lists matched by signature, or
/// `None` if the signature sets differ.
pub fn path_set_difference(a: &[NaivePath], b: &[NaivePath]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for p in a {
        let q = b.iter().find(|q| q.signature == p.signature)?;
        if q.terminal != p.terminal {
            return None;
        }
        worst = worst.max((p.probability - q.probability).abs()).max((p.shed - q.shed).abs());
    }
    Some(worst)
}

/// Average ranks, ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Balanced random injections: loads at `scale` times base, generation
/// spread over randomly weighted units.
pub fn stress_injections(case: &CaseData, rng: &mut impl rand::Rng, scale: f64) -> Vec<f64> {
    let mut inj: Vec<f64> = case.buses.iter().map(|b| -b.base_load * scale).collect();
    let demand: f64 = -inj.iter().sum::<f64>();
    let weights: Vec<f64> = case.generators.iter().map(|g| g.p_max * rng.random_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for (g, w) in case.generators.iter().zip(&weights) {
        inj[g.bus - 1] += demand * w / total;
    }
    let err: f64 = inj.iter().sum();
    inj[case.reference_index()] -= err;
    inj
}
