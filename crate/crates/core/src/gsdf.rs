//! Generation shifted distribution factors (GSDF) and their low-rank update
//! after line removals.
//!
//! `Ψ` is K x N with `flows = Ψ · injections`. It is built from the reduced
//! bus susceptance matrix `B̃` (reference row and column removed) as
//! `Ψ̃ = B̃_f B̃⁻¹`, padded with a zero column at the reference bus.
//!
//! Removing a set of `l` in-service lines changes `B̃` by
//! `-M̃ diag(b) M̃ᵀ`, where the columns of `M̃` are the reduced incidence
//! vectors of the removed lines. The Woodbury identity then gives
//!
//! ```text
//! B̃_new⁻¹ = B̃⁻¹ - B̃⁻¹ M̃ c M̃ᵀ B̃⁻¹,   c = (-diag(b)⁻¹ + M̃ᵀ B̃⁻¹ M̃)⁻¹
//! ```
//!
//! and, because row k of `Ψ` equals `b_k E_kᵀ B̃⁻¹`, every factor above can
//! be read off the current `Ψ` without materializing `B̃⁻¹`. The update is
//! an `l x l` inverse plus `O(K N l)` work.

use nalgebra::DMatrix;

use crate::case::CaseData;
use crate::error::{Error, Result};

/// Relative pivot size under which the capacitance matrix is singular.
pub const ISLANDING_TOLERANCE: f64 = 1e-9;

/// Dense K x N distribution factor matrix for one line state.
#[derive(Debug, Clone, PartialEq)]
pub struct GsdfMatrix {
    values: Vec<f64>,
    n_lines: usize,
    n_buses: usize,
    line_state: Vec<bool>,
    reference: usize,
}

impl GsdfMatrix {
    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    pub fn n_buses(&self) -> usize {
        self.n_buses
    }

    /// Zero-based reference bus index.
    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn line_state(&self) -> &[bool] {
        &self.line_state
    }

    /// Sensitivities of line `k` (zero-based) to every bus injection.
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_buses..(k + 1) * self.n_buses]
    }

    #[inline]
    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.values[line * self.n_buses + bus]
    }

    pub fn column(&self, bus: usize) -> Vec<f64> {
        (0..self.n_lines).map(|k| self.get(k, bus)).collect()
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `Ψ · injections`, without balance checks.
    #[inline]
    pub fn apply(&self, injections: &[f64], out: &mut [f64]) {
        debug_assert_eq!(injections.len(), self.n_buses);
        for (k, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(k), injections);
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_lines, self.n_buses, &self.values)
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &GsdfMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whitespace-separated matrix text, one line per branch.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in 0..self.n_lines {
            let row: Vec<String> = self.row(k).iter().map(|v| format!("{v:.12e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bus and branch susceptance matrices of a base topology, with the reduced
/// inverse `B̃⁻¹` cached.
#[derive(Debug, Clone)]
pub struct SusceptanceSystem {
    from: Vec<usize>,
    to: Vec<usize>,
    susceptance: Vec<f64>,
    reference: usize,
    line_state: Vec<bool>,
    bus_matrix: DMatrix<f64>,
    branch_matrix: DMatrix<f64>,
    reduced_inverse: DMatrix<f64>,
}

impl SusceptanceSystem {
    /// Assemble `B`, `B_f` and factor `B̃` for the given line state.
    pub fn new(case: &CaseData, line_state: &[bool]) -> Result<Self> {
        check_state_len(case, line_state)?;
        let partition = case.islands(line_state);
        if partition.islands.len() > 1 {
            return Err(Error::Islanded(partition));
        }
        let n = case.n_buses();
        let k = case.n_lines();
        let reference = case.reference_index();
        let from: Vec<usize> = case.lines.iter().map(|l| l.from_bus - 1).collect();
        let to: Vec<usize> = case.lines.iter().map(|l| l.to_bus - 1).collect();
        let susceptance: Vec<f64> = case.lines.iter().map(|l| l.susceptance()).collect();

        let mut bus_matrix = DMatrix::zeros(n, n);
        let mut branch_matrix = DMatrix::zeros(k, n);
        for line in 0..k {
            if !line_state[line] {
                continue;
            }
            let (f, t, b) = (from[line], to[line], susceptance[line]);
            bus_matrix[(f, f)] += b;
            bus_matrix[(t, t)] += b;
            bus_matrix[(f, t)] -= b;
            bus_matrix[(t, f)] -= b;
            branch_matrix[(line, f)] = b;
            branch_matrix[(line, t)] = -b;
        }
        let reduced = bus_matrix
            .clone()
            .remove_row(reference)
            .remove_column(reference);
        let reduced_inverse = reduced
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Islanded(case.islands(line_state)))?;
        Ok(SusceptanceSystem {
            from,
            to,
            susceptance,
            reference,
            line_state: line_state.to_vec(),
            bus_matrix,
            branch_matrix,
            reduced_inverse,
        })
    }

    pub fn bus_matrix(&self) -> &DMatrix<f64> {
        &self.bus_matrix
    }

    pub fn branch_matrix(&self) -> &DMatrix<f64> {
        &self.branch_matrix
    }

    /// `B̃⁻¹`, (N-1) x (N-1).
    pub fn reduced_inverse(&self) -> &DMatrix<f64> {
        &self.reduced_inverse
    }

    pub fn line_state(&self) -> &[bool] {
        &self.line_state
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn n_buses(&self) -> usize {
        self.bus_matrix.nrows()
    }

    pub fn n_lines(&self) -> usize {
        self.from.len()
    }

    pub fn endpoints(&self, line: usize) -> (usize, usize) {
        (self.from[line], self.to[line])
    }

    pub fn susceptance(&self, line: usize) -> f64 {
        self.susceptance[line]
    }

    /// `Ψ` for the base topology of this system.
    pub fn gsdf(&self) -> GsdfMatrix {
        let n = self.n_buses();
        let k = self.n_lines();
        let r = self.reference;
        let full = |i: usize| -> Option<usize> {
            use std::cmp::Ordering::*;
            match i.cmp(&r) {
                Less => Some(i),
                Equal => None,
                Greater => Some(i - 1),
            }
        };
        let mut values = vec![0.0; k * n];
        for line in 0..k {
            if !self.line_state[line] {
                continue;
            }
            let b = self.susceptance[line];
            let (f, t) = (full(self.from[line]), full(self.to[line]));
            let row = &mut values[line * n..(line + 1) * n];
            for (bus, v) in row.iter_mut().enumerate() {
                let Some(j) = full(bus) else { continue };
                let xf = f.map_or(0.0, |f| self.reduced_inverse[(f, j)]);
                let xt = t.map_or(0.0, |t| self.reduced_inverse[(t, j)]);
                *v = b * (xf - xt);
            }
        }
        GsdfMatrix {
            values,
            n_lines: k,
            n_buses: n,
            line_state: self.line_state.clone(),
            reference: r,
        }
    }
}

fn check_state_len(case: &CaseData, line_state: &[bool]) -> Result<()> {
    if line_state.len() != case.n_lines() {
        return Err(Error::Dimension(format!(
            "line state has {} entries for {} lines",
            line_state.len(),
            case.n_lines()
        )));
    }
    Ok(())
}

/// Build `Ψ` from scratch with a dense factorization of `B̃`.
pub fn build_gsdf(case: &CaseData, line_state: &[bool]) -> Result<GsdfMatrix> {
    Ok(SusceptanceSystem::new(case, line_state)?.gsdf())
}

/// Update `gsdf` for the removal of `removed` (zero-based line indices, all
/// currently in service) through the Woodbury identity.
///
/// `sys` supplies topology and susceptances; the inverse of the current
/// `B̃` is never formed since `E_kᵀ B̃⁻¹ = Ψ_k / b_k` for in-service lines.
pub fn woodbury_update(
    sys: &SusceptanceSystem,
    gsdf: &GsdfMatrix,
    removed: &[usize],
) -> Result<GsdfMatrix> {
    if removed.is_empty() {
        return Ok(gsdf.clone());
    }
    let n = gsdf.n_buses;
    let k = gsdf.n_lines;
    if sys.n_lines() != k || sys.n_buses() != n {
        return Err(Error::Dimension("GSDF does not match susceptance system".into()));
    }
    let mut new_state = gsdf.line_state.clone();
    for &r in removed {
        if r >= k {
            return Err(Error::UnknownId { kind: "line", id: r + 1 });
        }
        if !new_state[r] {
            return Err(Error::Validation(format!(
                "line {} is not in service or listed twice",
                r + 1
            )));
        }
        new_state[r] = false;
    }

    let l = removed.len();
    // V = M̃ᵀ B̃⁻¹ (l x N), read from the rows of the current Ψ.
    let mut v = DMatrix::<f64>::zeros(l, n);
    for (i, &r) in removed.iter().enumerate() {
        let inv_b = 1.0 / sys.susceptance(r);
        for (j, x) in gsdf.row(r).iter().enumerate() {
            v[(i, j)] = x * inv_b;
        }
    }
    // capacitance c⁻¹ = -diag(b)⁻¹ + M̃ᵀ B̃⁻¹ M̃
    let mut cap = DMatrix::<f64>::zeros(l, l);
    for i in 0..l {
        for (j, &r) in removed.iter().enumerate() {
            let (f, t) = sys.endpoints(r);
            cap[(i, j)] = v[(i, f)] - v[(i, t)];
        }
        cap[(i, i)] -= 1.0 / sys.susceptance(removed[i]);
    }
    let scale = removed
        .iter()
        .fold(0.0_f64, |m, &r| m.max(1.0 / sys.susceptance(r)));
    let lu = cap.lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(min_pivot > ISLANDING_TOLERANCE * scale) {
        return Err(Error::Islanded(islands_of(sys, &new_state)));
    }
    // W = c M̃ᵀ B̃⁻¹
    let w = lu
        .solve(&v)
        .ok_or_else(|| Error::Islanded(islands_of(sys, &new_state)))?;

    let mut values = gsdf.values.clone();
    for &r in removed {
        values[r * n..(r + 1) * n].iter_mut().for_each(|x| *x = 0.0);
    }
    // Ψ_new = Z - (Z M̃) W, Z = Ψ with removed rows zeroed
    let mut zm = vec![0.0; l];
    for line in 0..k {
        if !new_state[line] {
            continue;
        }
        let row = &values[line * n..(line + 1) * n];
        for (j, &r) in removed.iter().enumerate() {
            let (f, t) = sys.endpoints(r);
            zm[j] = row[f] - row[t];
        }
        let row = &mut values[line * n..(line + 1) * n];
        for (j, &coef) in zm.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            for (bus, x) in row.iter_mut().enumerate() {
                *x -= coef * w[(j, bus)];
            }
        }
    }
    Ok(GsdfMatrix {
        values,
        n_lines: k,
        n_buses: n,
        line_state: new_state,
        reference: gsdf.reference,
    })
}

fn islands_of(sys: &SusceptanceSystem, state: &[bool]) -> crate::error::IslandPartition {
    let n = sys.n_buses();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (line, &up) in state.iter().enumerate() {
        if up {
            let (f, t) = sys.endpoints(line);
            let a = find(&mut parent, f);
            let b = find(&mut parent, t);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut islands: Vec<Vec<usize>> = Vec::new();
    let mut roots = Vec::new();
    for bus in 0..n {
        let r = find(&mut parent, bus);
        match roots.iter().position(|&x| x == r) {
            Some(i) => islands[i].push(bus + 1),
            None => {
                roots.push(r);
                islands.push(vec![bus + 1]);
            }
        }
    }
    crate::error::IslandPartition { islands }
}
