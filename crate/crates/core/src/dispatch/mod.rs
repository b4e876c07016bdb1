//! Re-dispatch DCOPF: minimise generation plus load-shedding cost after
//! failures, in the multi-parametric form `A x ≤ b + F φ`.
//!
//! Variables are `x = [P; dD]` (bus injections, bus shedding). Inequality
//! rows, in this fixed order:
//!
//! | block | rows | constraint |
//! |-------|------|------------|
//! | 0 | K | `Ψ P ≤ L^b ∘ S_L` |
//! | 1 | K | `-Ψ P ≤ L^b ∘ S_L` |
//! | 2 | N | `P - dD ≤ C (G_max ∘ S_G) - D` |
//! | 3 | N | `dD ≤ D` |
//! | 4 | N | `-dD ≤ 0` |
//! | 5 | N | `-P + dD ≤ D` (only with `gen_nonnegative`) |
//!
//! followed by the balance equality `1ᵀP = 0` as the last row. The
//! parameter vector is `φ = [G_max ∘ S_G; D]`, one entry per generator then
//! one per bus, so `b` depends on the line state alone.

pub mod lpfile;
pub mod simplex;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::case::CaseData;
use crate::error::{Error, Result};
use crate::gsdf::GsdfMatrix;
use simplex::{RowOracle, Vertex};

/// Box placed on injections when `gen_nonnegative` is off, so the solver has
/// a bounded starting vertex. It never binds at an optimum of a connected
/// network, since line limits bound every injection.
const ARTIFICIAL_BOUND: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispatchOptions {
    /// Add `P + D - dD ≥ 0` per bus (no negative generation).
    pub gen_nonnegative: bool,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        DispatchOptions {
            gen_nonnegative: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    FlowUpper(usize),
    FlowLower(usize),
    Generation(usize),
    ShedUpper(usize),
    ShedLower(usize),
    GenerationLower(usize),
    Balance,
    /// Solver-only bound `-P_i ≤ ARTIFICIAL_BOUND`.
    Artificial(usize),
}

/// The line-state dependent part of the re-dispatch LP: `A`, `b`, `F` and
/// the cost vector. Scenario data enters only through `φ`.
#[derive(Debug, Clone)]
pub struct DispatchLp {
    n_buses: usize,
    n_lines: usize,
    gsdf: Arc<GsdfMatrix>,
    limits: Vec<f64>,
    gen_bus: Vec<usize>,
    bus_gens: Vec<Vec<usize>>,
    cost: Vec<f64>,
    gen_nonnegative: bool,
}

impl DispatchLp {
    pub fn new(case: &CaseData, gsdf: Arc<GsdfMatrix>, opts: &DispatchOptions) -> Result<Self> {
        let n = case.n_buses();
        if gsdf.n_buses() != n || gsdf.n_lines() != case.n_lines() {
            return Err(Error::Dimension("GSDF does not match case".into()));
        }
        let limits = case
            .lines
            .iter()
            .zip(gsdf.line_state())
            .map(|(l, &up)| if up { l.flow_limit } else { 0.0 })
            .collect();
        let gen_bus: Vec<usize> = case.generators.iter().map(|g| g.bus - 1).collect();
        let mut bus_gens = vec![Vec::new(); n];
        for (g, &b) in gen_bus.iter().enumerate() {
            bus_gens[b].push(g);
        }
        let mut cost = case.bus_costs();
        cost.extend_from_slice(&case.shed_cost);
        Ok(DispatchLp {
            n_buses: n,
            n_lines: case.n_lines(),
            gsdf,
            limits,
            gen_bus,
            bus_gens,
            cost,
            gen_nonnegative: opts.gen_nonnegative,
        })
    }

    pub fn gsdf(&self) -> &Arc<GsdfMatrix> {
        &self.gsdf
    }

    pub fn line_state(&self) -> &[bool] {
        self.gsdf.line_state()
    }

    pub fn n_buses(&self) -> usize {
        self.n_buses
    }

    pub fn n_generators(&self) -> usize {
        self.gen_bus.len()
    }

    pub fn n_vars(&self) -> usize {
        2 * self.n_buses
    }

    /// Number of inequality rows.
    pub fn n_inequalities(&self) -> usize {
        2 * self.n_lines + if self.gen_nonnegative { 4 } else { 3 } * self.n_buses
    }

    /// Inequalities plus the balance equality.
    pub fn n_rows(&self) -> usize {
        self.n_inequalities() + 1
    }

    pub fn balance_row(&self) -> usize {
        self.n_inequalities()
    }

    pub fn n_params(&self) -> usize {
        self.gen_bus.len() + self.n_buses
    }

    /// Objective `[c_p; c_d]`.
    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn gen_nonnegative(&self) -> bool {
        self.gen_nonnegative
    }

    pub fn row_kind(&self, row: usize) -> RowKind {
        let k = self.n_lines;
        let n = self.n_buses;
        let m = self.n_inequalities();
        match row {
            r if r < k => RowKind::FlowUpper(r),
            r if r < 2 * k => RowKind::FlowLower(r - k),
            r if r < 2 * k + n => RowKind::Generation(r - 2 * k),
            r if r < 2 * k + 2 * n => RowKind::ShedUpper(r - 2 * k - n),
            r if r < 2 * k + 3 * n => RowKind::ShedLower(r - 2 * k - 2 * n),
            r if r < m => RowKind::GenerationLower(r - 2 * k - 3 * n),
            r if r == m => RowKind::Balance,
            r => RowKind::Artificial(r - m - 1),
        }
    }

    /// `φ = [G_max ∘ S_G; D]`.
    pub fn phi(&self, gen_caps: &[f64], gen_state: &[bool], loads: &[f64]) -> Vec<f64> {
        let mut phi: Vec<f64> = gen_caps
            .iter()
            .zip(gen_state)
            .map(|(&c, &up)| if up { c } else { 0.0 })
            .collect();
        phi.extend_from_slice(loads);
        phi
    }

    fn bus_capacity(&self, bus: usize, phi: &[f64]) -> f64 {
        self.bus_gens[bus].iter().map(|&g| phi[g]).sum()
    }

    /// Base right-hand side `b_i`.
    pub fn base_rhs(&self, row: usize) -> f64 {
        match self.row_kind(row) {
            RowKind::FlowUpper(k) | RowKind::FlowLower(k) => self.limits[k],
            RowKind::Artificial(_) => ARTIFICIAL_BOUND,
            _ => 0.0,
        }
    }

    /// `b_i + F_i φ`.
    pub fn rhs(&self, row: usize, phi: &[f64]) -> f64 {
        let g = self.gen_bus.len();
        match self.row_kind(row) {
            RowKind::FlowUpper(k) | RowKind::FlowLower(k) => self.limits[k],
            RowKind::Generation(i) => self.bus_capacity(i, phi) - phi[g + i],
            RowKind::ShedUpper(i) | RowKind::GenerationLower(i) => phi[g + i],
            RowKind::ShedLower(_) | RowKind::Balance => 0.0,
            RowKind::Artificial(_) => ARTIFICIAL_BOUND,
        }
    }

    pub fn rhs_all(&self, phi: &[f64]) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.rhs(r, phi)).collect()
    }

    pub fn row_dense(&self, row: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vars()];
        self.write_row(row, &mut out);
        out
    }

    fn write_row(&self, row: usize, out: &mut [f64]) {
        let n = self.n_buses;
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.row_kind(row) {
            RowKind::FlowUpper(k) => out[..n].copy_from_slice(self.gsdf.row(k)),
            RowKind::FlowLower(k) => {
                for (o, v) in out[..n].iter_mut().zip(self.gsdf.row(k)) {
                    *o = -v;
                }
            }
            RowKind::Generation(i) => {
                out[i] = 1.0;
                out[n + i] = -1.0;
            }
            RowKind::ShedUpper(i) => out[n + i] = 1.0,
            RowKind::ShedLower(i) => out[n + i] = -1.0,
            RowKind::GenerationLower(i) => {
                out[i] = -1.0;
                out[n + i] = 1.0;
            }
            RowKind::Balance => out[..n].iter_mut().for_each(|v| *v = 1.0),
            RowKind::Artificial(i) => out[i] = -1.0,
        }
    }

    /// Dense `A` over inequality rows then the balance row.
    pub fn a_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|r| self.row_dense(r)).collect()
    }

    pub fn b_vector(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.base_rhs(r)).collect()
    }

    /// Dense `F` (rows x params).
    pub fn f_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|r| self.f_row(r)).collect()
    }

    pub fn f_row(&self, row: usize) -> Vec<f64> {
        let g = self.gen_bus.len();
        let mut out = vec![0.0; self.n_params()];
        match self.row_kind(row) {
            RowKind::Generation(i) => {
                for &u in &self.bus_gens[i] {
                    out[u] = 1.0;
                }
                out[g + i] = -1.0;
            }
            RowKind::ShedUpper(i) | RowKind::GenerationLower(i) => out[g + i] = 1.0,
            _ => {}
        }
        out
    }

    /// `a_iᵀx - rhs_i` for the inequality and balance rows.
    pub fn residuals_into(&self, x: &[f64], rhs: &[f64], out: &mut [f64]) {
        let n = self.n_buses;
        let k = self.n_lines;
        let (p, dd) = x.split_at(n);
        for line in 0..k {
            let f = if self.gsdf.line_state()[line] {
                crate::gsdf::dot(self.gsdf.row(line), p)
            } else {
                0.0
            };
            out[line] = f - rhs[line];
            out[k + line] = -f - rhs[k + line];
        }
        let base = 2 * k;
        for i in 0..n {
            out[base + i] = p[i] - dd[i] - rhs[base + i];
            out[base + n + i] = dd[i] - rhs[base + n + i];
            out[base + 2 * n + i] = -dd[i] - rhs[base + 2 * n + i];
        }
        let mut next = base + 3 * n;
        if self.gen_nonnegative {
            for i in 0..n {
                out[next + i] = -p[i] + dd[i] - rhs[next + i];
            }
            next += n;
        }
        out[next] = p.iter().sum::<f64>() - rhs[next];
        for (j, o) in out[next + 1..].iter_mut().enumerate() {
            *o = -p[j] - rhs[next + 1 + j];
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        crate::gsdf::dot(&self.cost, x)
    }

    /// Dual-feasible starting basis.
    ///
    /// A marginal bus `g` prices the balance row at `-c_g`. Cheaper buses sit
    /// on their generation limit, dearer ones on their lower generation
    /// bound, and every bus starts unshed. The marginal bus is picked in merit
    /// order so that the start is close to the economic dispatch.
    fn crash_basis(&self, phi: &[f64]) -> Vec<usize> {
        let n = self.n_buses;
        let k = self.n_lines;
        let c = &self.cost[..n];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
        let g = self.gen_bus.len();
        let load: f64 = phi[g..].iter().sum();
        let mut supplied = 0.0;
        let mut marginal = *order.last().unwrap();
        for &bus in &order {
            supplied += self.bus_capacity(bus, phi);
            if supplied >= load {
                marginal = bus;
                break;
            }
        }
        let cm = c[marginal];
        let lower = |i: usize| -> usize {
            if self.gen_nonnegative {
                2 * k + 3 * n + i
            } else {
                self.n_rows() + i
            }
        };
        let mut basis = Vec::with_capacity(2 * n);
        for i in 0..n {
            if i == marginal {
                continue;
            }
            let less = c[i] < cm || (c[i] == cm && i < marginal);
            basis.push(if less { 2 * k + i } else { lower(i) });
        }
        for i in 0..n {
            basis.push(2 * k + 2 * n + i);
        }
        basis.push(self.balance_row());
        basis
    }
}

/// Solver view of a [`DispatchLp`], including the artificial injection
/// bounds when `gen_nonnegative` is off.
struct SolverRows<'a>(&'a DispatchLp);

impl RowOracle for SolverRows<'_> {
    fn n_vars(&self) -> usize {
        self.0.n_vars()
    }

    fn n_rows(&self) -> usize {
        self.0.n_rows() + if self.0.gen_nonnegative { 0 } else { self.0.n_buses }
    }

    fn is_equality(&self, row: usize) -> bool {
        row == self.0.balance_row()
    }

    fn row_into(&self, row: usize, out: &mut [f64]) {
        self.0.write_row(row, out)
    }

    fn residuals(&self, x: &[f64], rhs: &[f64], out: &mut [f64]) {
        self.0.residuals_into(x, rhs, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispatchStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchSolution {
    pub injections: Vec<f64>,
    pub shedding: Vec<f64>,
    pub objective: f64,
    /// Tight rows of the optimal basis, ascending; always contains the
    /// balance row.
    pub active_set: Vec<usize>,
    /// Multipliers of `active_set` rows (`c + Ãᵀ μ = 0`, `μ ≥ 0` on
    /// inequality rows).
    pub multipliers: Vec<f64>,
    pub status: DispatchStatus,
}

impl DispatchSolution {
    pub fn total_shed(&self) -> f64 {
        self.shedding.iter().sum()
    }

    /// Bus generation `P + D - dD`.
    pub fn generation(&self, loads: &[f64]) -> Vec<f64> {
        self.injections
            .iter()
            .zip(loads)
            .zip(&self.shedding)
            .map(|((p, d), s)| p + d - s)
            .collect()
    }

    pub fn x(&self) -> Vec<f64> {
        let mut x = self.injections.clone();
        x.extend_from_slice(&self.shedding);
        x
    }

    pub(crate) fn from_x(lp: &DispatchLp, x: &[f64], active: Vec<usize>, mu: Vec<f64>) -> Self {
        let n = lp.n_buses();
        DispatchSolution {
            injections: x[..n].to_vec(),
            shedding: x[n..].to_vec(),
            objective: lp.objective(x),
            active_set: active,
            multipliers: mu,
            status: DispatchStatus::Optimal,
        }
    }
}

/// A complete re-dispatch instance.
#[derive(Debug, Clone)]
pub struct DispatchProblem {
    pub lp: Arc<DispatchLp>,
    pub gen_state: Vec<bool>,
    /// Scenario-adjusted `G_max` per generator.
    pub gen_caps: Vec<f64>,
    pub loads: Vec<f64>,
}

impl DispatchProblem {
    pub fn new(
        case: &CaseData,
        gsdf: Arc<GsdfMatrix>,
        gen_state: Vec<bool>,
        gen_caps: Vec<f64>,
        loads: Vec<f64>,
        opts: &DispatchOptions,
    ) -> Result<Self> {
        let lp = Arc::new(DispatchLp::new(case, gsdf, opts)?);
        DispatchProblem::with_lp(lp, gen_state, gen_caps, loads)
    }

    pub fn with_lp(
        lp: Arc<DispatchLp>,
        gen_state: Vec<bool>,
        gen_caps: Vec<f64>,
        loads: Vec<f64>,
    ) -> Result<Self> {
        if gen_state.len() != lp.n_generators()
            || gen_caps.len() != lp.n_generators()
            || loads.len() != lp.n_buses()
        {
            return Err(Error::Dimension("dispatch problem sizes".into()));
        }
        Ok(DispatchProblem {
            lp,
            gen_state,
            gen_caps,
            loads,
        })
    }

    pub fn phi(&self) -> Vec<f64> {
        self.lp.phi(&self.gen_caps, &self.gen_state, &self.loads)
    }
}

/// Canonical LP form of a problem: the shared `A, b, F` and this problem's `φ`.
pub fn build_lp(problem: &DispatchProblem) -> (Arc<DispatchLp>, Vec<f64>) {
    (problem.lp.clone(), problem.phi())
}

/// Optimal vertex of the LP at `φ`, from scratch.
pub fn solve_baseline(lp: &DispatchLp, phi: &[f64]) -> Result<DispatchSolution> {
    Ok(solve_vertex(lp, phi)?.0)
}

/// Like [`solve_baseline`] but also returns the simplex vertex (basis and
/// `A_B⁻¹`) for region construction.
pub fn solve_vertex(lp: &DispatchLp, phi: &[f64]) -> Result<(DispatchSolution, Vertex)> {
    if phi.len() != lp.n_params() {
        return Err(Error::Dimension(format!(
            "{} parameters for an LP expecting {}",
            phi.len(),
            lp.n_params()
        )));
    }
    let rows = SolverRows(lp);
    let mut rhs = lp.rhs_all(phi);
    if !lp.gen_nonnegative {
        rhs.extend(std::iter::repeat_n(ARTIFICIAL_BOUND, lp.n_buses));
    }
    let start = lp.crash_basis(phi);
    let vertex = match simplex::solve(&rows, lp.cost(), &rhs, start) {
        Ok(v) => v,
        Err(Error::Infeasible) => {
            log::warn!("re-dispatch LP infeasible; treating as total shedding");
            return Err(Error::Infeasible);
        }
        Err(e) => return Err(e),
    };
    let m = lp.n_rows();
    for (&r, &mu) in vertex.basis.iter().zip(&vertex.multipliers) {
        if r >= m && mu > simplex::DUAL_TOLERANCE {
            return Err(Error::Unbounded(format!("injection box on bus {} binds", r - m + 1)));
        }
    }
    let mut pairs: Vec<(usize, f64)> = vertex
        .basis
        .iter()
        .copied()
        .zip(vertex.multipliers.iter().copied())
        .collect();
    pairs.sort_by_key(|p| p.0);
    let (active, mu): (Vec<usize>, Vec<f64>) = pairs.into_iter().unzip();
    let sol = DispatchSolution::from_x(lp, &vertex.x, active, mu);
    Ok((sol, vertex))
}

/// Convenience wrapper over [`solve_baseline`].
pub fn solve_problem(problem: &DispatchProblem) -> Result<DispatchSolution> {
    solve_baseline(&problem.lp, &problem.phi())
}

/// Largest constraint violation of `x` at `φ` (MW); negative when strictly
/// feasible.
pub fn max_violation(lp: &DispatchLp, phi: &[f64], x: &[f64]) -> f64 {
    let rhs = lp.rhs_all(phi);
    let mut res = vec![0.0; lp.n_rows()];
    lp.residuals_into(x, &rhs, &mut res);
    let bal = lp.balance_row();
    res.iter()
        .enumerate()
        .map(|(r, &v)| if r == bal { v.abs() } else { v })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{fixtures, rts79};
    use crate::gsdf::build_gsdf;

    fn problem(case: &CaseData, loads: Vec<f64>, opts: DispatchOptions) -> DispatchProblem {
        let gsdf = Arc::new(build_gsdf(case, &vec![true; case.n_lines()]).unwrap());
        let caps = case.generators.iter().map(|g| g.p_max).collect();
        DispatchProblem::new(
            case,
            gsdf,
            vec![true; case.n_generators()],
            caps,
            loads,
            &opts,
        )
        .unwrap()
    }

    #[test]
    fn two_bus_line_binds() {
        let case = fixtures::two_bus(100.0, 80.0, 50.0);
        let p = problem(&case, vec![0.0, 80.0], DispatchOptions::default());
        let s = solve_problem(&p).unwrap();
        assert!((s.injections[0] - 50.0).abs() < 1e-9);
        assert!((s.shedding[1] - 30.0).abs() < 1e-9);
        assert!(s.shedding[0].abs() < 1e-12);
        // c_p at bus 2 is only a tie-break; shed cost 1000
        let cp = case.bus_costs();
        let expect = cp[0] * 50.0 + cp[1] * -50.0 + 1000.0 * 30.0;
        assert!((s.objective - expect).abs() < 1e-9);
        assert!(s.active_set.contains(&p.lp.balance_row()));
    }

    #[test]
    fn zero_load_is_zero_dispatch() {
        let case = fixtures::two_bus(100.0, 80.0, 50.0);
        let p = problem(&case, vec![0.0, 0.0], DispatchOptions::default());
        let s = solve_problem(&p).unwrap();
        assert!(s.injections.iter().chain(&s.shedding).all(|v| v.abs() < 1e-12));
        assert!(s.objective.abs() < 1e-12);
    }

    #[test]
    fn rts79_peak_without_wind_sheds_nothing() {
        let case = rts79::case(&Default::default());
        let loads = case.buses.iter().map(|b| b.base_load).collect();
        let p = problem(&case, loads, DispatchOptions::default());
        let s = solve_problem(&p).unwrap();
        assert!(s.total_shed() < 1e-6, "shed {}", s.total_shed());
        assert!(max_violation(&p.lp, &p.phi(), &s.x()) < 1e-6);
        assert_eq!(s.active_set.len(), p.lp.n_vars());
    }

    #[test]
    fn rts79_row_count_literal_form() {
        let case = rts79::case(&Default::default());
        let loads = case.buses.iter().map(|b| b.base_load).collect();
        let p = problem(&case, loads, DispatchOptions { gen_nonnegative: false });
        assert_eq!(p.lp.n_inequalities(), 2 * 38 + 3 * 24);
        let s = solve_problem(&p).unwrap();
        assert!(s.total_shed() < 1e-6);
        assert!(max_violation(&p.lp, &p.phi(), &s.x()) < 1e-6);
    }

    #[test]
    fn loads_only_move_phi() {
        let case = fixtures::five_bus();
        let a = problem(&case, vec![0.0, 40.0, 90.0, 70.0, 60.0], Default::default());
        let b = DispatchProblem::with_lp(
            a.lp.clone(),
            a.gen_state.clone(),
            a.gen_caps.clone(),
            vec![0.0, 30.0, 95.0, 70.0, 10.0],
        )
        .unwrap();
        let (lpa, phia) = build_lp(&a);
        let (lpb, phib) = build_lp(&b);
        assert!(Arc::ptr_eq(&lpa, &lpb));
        assert_eq!(lpa.a_matrix(), lpb.a_matrix());
        assert_eq!(lpa.b_vector(), lpb.b_vector());
        assert_ne!(phia, phib);
    }

    #[test]
    fn multipliers_certify_optimality() {
        let case = rts79::case(&Default::default());
        let loads: Vec<f64> = case.buses.iter().map(|b| b.base_load * 1.1).collect();
        let mut p = problem(&case, loads, DispatchOptions::default());
        p.gen_state[22] = false;
        let s = solve_problem(&p).unwrap();
        // c + Ãᵀ μ = 0
        let lp = &p.lp;
        let mut r = lp.cost().to_vec();
        for (&row, &mu) in s.active_set.iter().zip(&s.multipliers) {
            for (ri, a) in r.iter_mut().zip(lp.row_dense(row)) {
                *ri += mu * a;
            }
            if row != lp.balance_row() {
                assert!(mu >= -1e-9);
            }
        }
        assert!(r.iter().all(|v| v.abs() < 1e-6), "{r:?}");
    }
}
