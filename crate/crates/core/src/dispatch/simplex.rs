//! Dual simplex for `min cᵀx  s.t.  a_iᵀx ≤ r_i (inequalities), a_iᵀx = r_i
//! (equalities)` in row-basis form.
//!
//! A basis is a set of `n` rows (all equalities included) whose matrix
//! `A_B` is invertible. The vertex is `x = A_B⁻¹ r_B` and the multipliers
//! `μ = -A_B⁻ᵀ c` must be nonnegative on inequality rows (dual
//! feasibility). Each iteration the most violated nonbasic row enters and
//! the ratio test on `μ` picks the leaving row; `A_B⁻¹` gets a rank-one
//! column update and is refactored periodically.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
pub const DUAL_TOLERANCE: f64 = 1e-9;
const PIVOT_TOLERANCE: f64 = 1e-11;
const REFACTOR_EVERY: usize = 32;

/// Row access used by the solver.
pub trait RowOracle {
    fn n_vars(&self) -> usize;
    fn n_rows(&self) -> usize;
    fn is_equality(&self, row: usize) -> bool;
    /// Dense coefficients of `row` written into `out` (length `n_vars`).
    fn row_into(&self, row: usize, out: &mut [f64]);
    /// `a_iᵀx - rhs_i` for every row.
    fn residuals(&self, x: &[f64], rhs: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub x: Vec<f64>,
    /// Basic rows in basis position order.
    pub basis: Vec<usize>,
    /// `μ` in basis position order.
    pub multipliers: Vec<f64>,
    /// `A_B⁻¹`, row-major, columns in basis position order.
    pub inverse: Vec<f64>,
    pub iterations: usize,
}

struct State {
    basis: Vec<usize>,
    inv: Vec<f64>,
    mu: Vec<f64>,
}

fn factor<L: RowOracle>(lp: &L, basis: &[usize], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = lp.n_vars();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut row = vec![0.0; n];
    for (p, &r) in basis.iter().enumerate() {
        lp.row_into(r, &mut row);
        for j in 0..n {
            a[(p, j)] = row[j];
        }
    }
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::Solver("singular basis".into()))?;
    let mut flat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            flat[i * n + j] = inv[(i, j)];
        }
    }
    let mu = multipliers(&flat, n, c);
    Ok((flat, mu))
}

/// `μ = -Gᵀ c`
fn multipliers(inv: &[f64], n: usize, c: &[f64]) -> Vec<f64> {
    let mut mu = vec![0.0; n];
    for (i, ci) in c.iter().enumerate() {
        if *ci == 0.0 {
            continue;
        }
        let row = &inv[i * n..(i + 1) * n];
        for (m, g) in mu.iter_mut().zip(row) {
            *m -= ci * g;
        }
    }
    mu
}

/// `x = G r_B`
pub fn primal(inv: &[f64], n: usize, basis: &[usize], rhs: &[f64], x: &mut [f64]) {
    for (i, xi) in x.iter_mut().enumerate() {
        let row = &inv[i * n..(i + 1) * n];
        *xi = row.iter().zip(basis).map(|(g, &r)| g * rhs[r]).sum();
    }
}

/// Solve from a dual-feasible starting basis.
pub fn solve<L: RowOracle>(lp: &L, c: &[f64], rhs: &[f64], start: Vec<usize>) -> Result<Vertex> {
    let n = lp.n_vars();
    let m = lp.n_rows();
    if start.len() != n || c.len() != n || rhs.len() != m {
        return Err(Error::Dimension("simplex input sizes".into()));
    }
    let (inv, mu) = factor(lp, &start, c)?;
    let mut st = State {
        basis: start,
        inv,
        mu,
    };
    for (p, &r) in st.basis.iter().enumerate() {
        if !lp.is_equality(r) && st.mu[p] < -DUAL_TOLERANCE {
            return Err(Error::Solver(format!(
                "starting basis is not dual feasible (row {r}, multiplier {})",
                st.mu[p]
            )));
        }
    }

    let mut in_basis = vec![false; m];
    for &r in &st.basis {
        in_basis[r] = true;
    }
    let mut x = vec![0.0; n];
    let mut res = vec![0.0; m];
    let mut a_r = vec![0.0; n];
    let mut d = vec![0.0; n];
    let bland_after = 4 * (m + n);
    let max_iter = 20 * (m + n);
    let mut since_refactor = 0;
    let mut iter = 0;
    loop {
        primal(&st.inv, n, &st.basis, rhs, &mut x);
        lp.residuals(&x, rhs, &mut res);
        let mut enter: Option<(usize, f64)> = None;
        for (r, &v) in res.iter().enumerate() {
            if in_basis[r] || v <= FEASIBILITY_TOLERANCE {
                continue;
            }
            if iter >= bland_after {
                enter = Some((r, v));
                break;
            }
            if enter.is_none_or(|(_, best)| v > best) {
                enter = Some((r, v));
            }
        }
        let Some((r, _)) = enter else {
            if since_refactor > 0 {
                // confirm optimality on a fresh factorization
                let (inv, mu) = factor(lp, &st.basis, c)?;
                st.inv = inv;
                st.mu = mu;
                since_refactor = 0;
                continue;
            }
            return Ok(Vertex {
                x,
                basis: st.basis,
                multipliers: st.mu,
                inverse: st.inv,
                iterations: iter,
            });
        };
        iter += 1;
        if iter > max_iter {
            return Err(Error::Solver(format!("no convergence after {max_iter} iterations")));
        }

        // d = Gᵀ a_r, so that a_r = A_Bᵀ d
        lp.row_into(r, &mut a_r);
        d.iter_mut().for_each(|v| *v = 0.0);
        for (i, &ai) in a_r.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = &st.inv[i * n..(i + 1) * n];
            for (dj, g) in d.iter_mut().zip(row) {
                *dj += ai * g;
            }
        }

        let mut leave: Option<(usize, f64)> = None;
        for p in 0..n {
            let row = st.basis[p];
            if lp.is_equality(row) || d[p] <= PIVOT_TOLERANCE {
                continue;
            }
            let t = st.mu[p].max(0.0) / d[p];
            let better = match leave {
                None => true,
                Some((q, best)) => t < best || (t == best && row < st.basis[q]),
            };
            if better {
                leave = Some((p, t));
            }
        }
        let Some((q, t)) = leave else {
            return Err(Error::Infeasible);
        };

        for p in 0..n {
            st.mu[p] -= t * d[p];
        }
        st.mu[q] = t;

        // G' = G - (G e_q)(d - e_q)ᵀ / d_q
        let dq = d[q];
        for i in 0..n {
            let row = &mut st.inv[i * n..(i + 1) * n];
            let gq = row[q] / dq;
            for (j, g) in row.iter_mut().enumerate() {
                if j != q {
                    *g -= gq * d[j];
                }
            }
            row[q] = gq;
        }
        in_basis[st.basis[q]] = false;
        in_basis[r] = true;
        st.basis[q] = r;

        since_refactor += 1;
        if since_refactor >= REFACTOR_EVERY {
            let (inv, mu) = factor(lp, &st.basis, c)?;
            st.inv = inv;
            st.mu = mu;
            since_refactor = 0;
        }
    }
}

/// Dense LP used for testing the solver in isolation.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub a: Vec<Vec<f64>>,
    pub equality: Vec<bool>,
}

impl RowOracle for DenseLp {
    fn n_vars(&self) -> usize {
        self.a.first().map_or(0, |r| r.len())
    }

    fn n_rows(&self) -> usize {
        self.a.len()
    }

    fn is_equality(&self, row: usize) -> bool {
        self.equality[row]
    }

    fn row_into(&self, row: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.a[row]);
    }

    fn residuals(&self, x: &[f64], rhs: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = crate::gsdf::dot(&self.a[i], x) - rhs[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min -x - y  s.t.  x ≤ 2, y ≤ 3, x + y ≤ 4, -x ≤ 0, -y ≤ 0
    fn small() -> (DenseLp, Vec<f64>, Vec<f64>) {
        let lp = DenseLp {
            a: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
            equality: vec![false; 5],
        };
        (lp, vec![-1.0, -2.0], vec![2.0, 3.0, 4.0, 0.0, 0.0])
    }

    #[test]
    fn solves_small_lp() {
        let (lp, c, rhs) = small();
        // {x ≤ 2, y ≤ 3} has multipliers (1, 2): dual feasible, primal infeasible
        let v = solve(&lp, &c, &rhs, vec![0, 1]).unwrap();
        assert!((v.x[0] - 1.0).abs() < 1e-12 && (v.x[1] - 3.0).abs() < 1e-12);
        let mut basis = v.basis.clone();
        basis.sort();
        assert_eq!(basis, vec![1, 2]);
        assert!(v.multipliers.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn detects_infeasibility() {
        let lp = DenseLp {
            a: vec![vec![1.0], vec![-1.0]],
            equality: vec![false; 2],
        };
        // x ≤ -1 and -x ≤ -1 (x ≥ 1)
        let r = solve(&lp, &[-1.0], &[-1.0, -1.0], vec![0]);
        assert!(matches!(r, Err(Error::Infeasible)));
    }

    #[test]
    fn rejects_dual_infeasible_start() {
        let (lp, c, rhs) = small();
        assert!(solve(&lp, &c, &rhs, vec![3, 4]).is_err());
    }

    #[test]
    fn equality_row_stays_basic() {
        // min x + 2y  s.t. x + y = 1, -x ≤ 0, -y ≤ 0, x ≤ 0.25
        let lp = DenseLp {
            a: vec![
                vec![1.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![1.0, 0.0],
            ],
            equality: vec![true, false, false, false],
        };
        let v = solve(&lp, &[1.0, 2.0], &[1.0, 0.0, 0.0, 0.25], vec![0, 2]).unwrap();
        assert!((v.x[0] - 0.25).abs() < 1e-12 && (v.x[1] - 0.75).abs() < 1e-12);
        assert!(v.basis.contains(&0));
    }
}
