//! Importer for MATPOWER `.m` case files (`mpc.bus`, `mpc.gen`, `mpc.branch`,
//! `mpc.gencost`).
//!
//! Only the DC-relevant columns are read. MATPOWER carries no reliability
//! data, so failure probabilities come from [`MatpowerOptions`]. Bus numbers
//! are renumbered densely in file order; out-of-service branches and units
//! are dropped.

use std::collections::HashMap;
use std::path::Path;

use super::{Bus, CaseData, GenKind, Generator, Line};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MatpowerOptions {
    pub name: String,
    pub relay_threshold: f64,
    pub line_fail_prob: f64,
    pub gen_fail_prob: f64,
    /// Rating used when `rateA` is 0 (unlimited in MATPOWER).
    pub unlimited_rating: f64,
}

impl Default for MatpowerOptions {
    fn default() -> Self {
        MatpowerOptions {
            name: "matpower".into(),
            relay_threshold: super::DEFAULT_RELAY_THRESHOLD,
            line_fail_prob: 1e-5,
            gen_fail_prob: super::DEFAULT_GEN_FAIL_PROB,
            unlimited_rating: 9999.0,
        }
    }
}

pub fn import_matpower(path: impl AsRef<Path>, opts: &MatpowerOptions) -> Result<CaseData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matpower(&text, opts)
}

fn matrix(text: &str, field: &str) -> Result<Option<Vec<Vec<f64>>>> {
    let key = format!("mpc.{field}");
    let Some(start) = text.find(&key) else {
        return Ok(None);
    };
    let rest = &text[start + key.len()..];
    let open = rest
        .find('[')
        .ok_or_else(|| Error::Parse(format!("{key}: missing '['")))?;
    let close = rest
        .find(']')
        .ok_or_else(|| Error::Parse(format!("{key}: missing ']'")))?;
    let body = &rest[open + 1..close];
    let mut rows = Vec::new();
    for raw in body.lines() {
        let line = raw.split('%').next().unwrap_or("");
        for chunk in line.split(';') {
            let vals: Vec<f64> = chunk
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("{key}: bad number '{s}'")))
                })
                .collect::<Result<_>>()?;
            if !vals.is_empty() {
                rows.push(vals);
            }
        }
    }
    Ok(Some(rows))
}

fn col(row: &[f64], i: usize, what: &str) -> Result<f64> {
    row.get(i)
        .copied()
        .ok_or_else(|| Error::Parse(format!("{what}: row has only {} columns", row.len())))
}

pub fn parse_matpower(text: &str, opts: &MatpowerOptions) -> Result<CaseData> {
    let base_mva = text
        .find("mpc.baseMVA")
        .and_then(|i| {
            let rest = &text[i..];
            let eq = rest.find('=')?;
            let semi = rest.find(';')?;
            rest[eq + 1..semi].trim().parse::<f64>().ok()
        })
        .unwrap_or(100.0);
    let bus_rows = matrix(text, "bus")?.ok_or_else(|| Error::Parse("missing mpc.bus".into()))?;
    let gen_rows = matrix(text, "gen")?.unwrap_or_default();
    let branch_rows =
        matrix(text, "branch")?.ok_or_else(|| Error::Parse("missing mpc.branch".into()))?;
    let cost_rows = matrix(text, "gencost")?.unwrap_or_default();

    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        let number = col(row, 0, "bus")? as i64;
        let id = buses.len() + 1;
        if index.insert(number, id).is_some() {
            return Err(Error::Validation(format!("duplicate bus number {number}")));
        }
        buses.push(Bus {
            id,
            is_reference: col(row, 1, "bus")? as i64 == 3,
            base_load: col(row, 2, "bus")?.max(0.0),
        });
    }
    let lookup = |n: f64| -> Result<usize> {
        index
            .get(&(n as i64))
            .copied()
            .ok_or_else(|| Error::Validation(format!("reference to unknown bus {n}")))
    };

    let mut lines = Vec::new();
    for row in &branch_rows {
        let status = row.get(10).copied().unwrap_or(1.0);
        if status <= 0.0 {
            continue;
        }
        let rate = col(row, 5, "branch")?;
        lines.push(Line {
            id: lines.len() + 1,
            from_bus: lookup(col(row, 0, "branch")?)?,
            to_bus: lookup(col(row, 1, "branch")?)?,
            reactance: col(row, 3, "branch")?,
            flow_limit: if rate > 0.0 { rate } else { opts.unlimited_rating },
            relay_threshold: opts.relay_threshold,
            base_fail_prob: opts.line_fail_prob,
        });
    }

    let mut generators = Vec::new();
    for (g, row) in gen_rows.iter().enumerate() {
        let status = row.get(7).copied().unwrap_or(1.0);
        let p_max = col(row, 8, "gen")?;
        if status <= 0.0 || p_max <= 0.0 {
            continue;
        }
        let cost = cost_rows.get(g).map(|c| marginal_cost(c, p_max)).unwrap_or(0.0);
        generators.push(Generator {
            id: generators.len() + 1,
            bus: lookup(col(row, 0, "gen")?)?,
            p_max,
            cost,
            fail_prob: opts.gen_fail_prob,
            kind: GenKind::Conventional,
        });
    }

    CaseData::new(
        opts.name.clone(),
        base_mva,
        buses,
        lines,
        generators,
        None,
        None,
    )
}

/// Average marginal cost over [0, p_max] for polynomial (model 2) costs;
/// slope of the last segment for piecewise-linear (model 1) costs.
fn marginal_cost(row: &[f64], p_max: f64) -> f64 {
    let model = row.first().copied().unwrap_or(2.0) as i64;
    let n = row.get(3).copied().unwrap_or(0.0) as usize;
    let coeffs = &row[4.min(row.len())..];
    match model {
        2 if n >= 2 && coeffs.len() >= n => {
            // c_{n-1} p^{n-1} + ... + c_0; derivative averaged over [0, p_max]
            let total = |p: f64| -> f64 {
                coeffs[..n]
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * p.powi((n - 1 - i) as i32))
                    .sum()
            };
            if p_max > 0.0 {
                (total(p_max) - total(0.0)) / p_max
            } else {
                coeffs[n - 2]
            }
        }
        1 if n >= 2 && coeffs.len() >= 2 * n => {
            let (x0, y0) = (coeffs[2 * n - 4], coeffs[2 * n - 3]);
            let (x1, y1) = (coeffs[2 * n - 2], coeffs[2 * n - 1]);
            if x1 > x0 { (y1 - y0) / (x1 - x0) } else { 0.0 }
        }
        _ => 0.0,
    }
}
