//! CPLEX LP text dump of a re-dispatch instance, for cross-checking with
//! external solvers.

use std::fmt::Write as _;

use super::{DispatchLp, RowKind};

fn var(lp: &DispatchLp, j: usize) -> String {
    let n = lp.n_buses();
    if j < n {
        format!("P{}", j + 1)
    } else {
        format!("dD{}", j - n + 1)
    }
}

fn row_name(kind: RowKind) -> String {
    match kind {
        RowKind::FlowUpper(k) => format!("flow_up_{}", k + 1),
        RowKind::FlowLower(k) => format!("flow_lo_{}", k + 1),
        RowKind::Generation(i) => format!("gen_{}", i + 1),
        RowKind::ShedUpper(i) => format!("shed_up_{}", i + 1),
        RowKind::ShedLower(i) => format!("shed_lo_{}", i + 1),
        RowKind::GenerationLower(i) => format!("gen_lo_{}", i + 1),
        RowKind::Balance => "balance".into(),
        RowKind::Artificial(i) => format!("box_{}", i + 1),
    }
}

fn term(out: &mut String, coef: f64, name: &str, first: &mut bool) {
    if coef == 0.0 {
        return;
    }
    let sign = if coef < 0.0 { "-" } else { "+" };
    if *first && coef > 0.0 {
        let _ = write!(out, " {:.12} {name}", coef);
    } else {
        let _ = write!(out, " {sign} {:.12} {name}", coef.abs());
    }
    *first = false;
}

/// Write the LP at parameter `φ`. All variables are free; bounds are rows.
pub fn to_lp_string(lp: &DispatchLp, phi: &[f64]) -> String {
    let nv = lp.n_vars();
    let mut out = String::from("\\ re-dispatch DCOPF\nMinimize\n obj:");
    let mut first = true;
    for j in 0..nv {
        term(&mut out, lp.cost()[j], &var(lp, j), &mut first);
    }
    if first {
        out.push_str(" 0 P1");
    }
    out.push_str("\nSubject To\n");
    for r in 0..lp.n_rows() {
        let kind = lp.row_kind(r);
        let row = lp.row_dense(r);
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        let _ = write!(out, " {}:", row_name(kind));
        let mut first = true;
        for (j, &a) in row.iter().enumerate() {
            term(&mut out, a, &var(lp, j), &mut first);
        }
        let op = if kind == RowKind::Balance { "=" } else { "<=" };
        let _ = writeln!(out, " {op} {:.12}", lp.rhs(r, phi));
    }
    out.push_str("Bounds\n");
    for j in 0..nv {
        let _ = writeln!(out, " {} free", var(lp, j));
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures;
    use crate::dispatch::DispatchOptions;
    use crate::gsdf::build_gsdf;
    use std::sync::Arc;

    #[test]
    fn two_bus_dump() {
        let case = fixtures::two_bus(100.0, 80.0, 50.0);
        let gsdf = Arc::new(build_gsdf(&case, &[true]).unwrap());
        let lp = DispatchLp::new(&case, gsdf, &DispatchOptions::default()).unwrap();
        let phi = lp.phi(&[100.0], &[true], &[0.0, 80.0]);
        let text = to_lp_string(&lp, &phi);
        assert!(text.starts_with("\\ re-dispatch"));
        assert!(text.contains("balance: 1.000000000000 P1 + 1.000000000000 P2 = 0.000000000000"));
        assert!(text.contains("shed_up_2: 1.000000000000 dD2 <= 80.000000000000"));
        assert!(text.trim_end().ends_with("End"));
    }
}
