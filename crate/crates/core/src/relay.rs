//! DC power flow and the protection-relay fixed point.

use std::sync::Arc;

use crate::case::CaseData;
use crate::error::{Error, IslandPartition, Result};
use crate::gsdf::{build_gsdf, woodbury_update, GsdfMatrix, SusceptanceSystem};

/// Relative balance tolerance for injection vectors.
pub const BALANCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector {
    pub flows: Vec<f64>,
    pub line_state: Vec<bool>,
}

impl FlowVector {
    pub fn abs_max(&self) -> f64 {
        self.flows.iter().fold(0.0, |m, f| m.max(f.abs()))
    }
}

/// `L = Ψ P`. Injections must sum to zero within
/// `BALANCE_TOLERANCE * max(1, Σ|P| / 2)`.
pub fn dc_power_flow(gsdf: &GsdfMatrix, injections: &[f64]) -> Result<FlowVector> {
    if injections.len() != gsdf.n_buses() {
        return Err(Error::Dimension(format!(
            "{} injections for {} buses",
            injections.len(),
            gsdf.n_buses()
        )));
    }
    let sum: f64 = injections.iter().sum();
    let scale = injections.iter().map(|p| p.abs()).sum::<f64>() / 2.0;
    let tol = BALANCE_TOLERANCE * scale.max(1.0);
    if sum.abs() > tol {
        return Err(Error::Unbalanced { sum, tol });
    }
    let mut flows = vec![0.0; gsdf.n_lines()];
    gsdf.apply(injections, &mut flows);
    Ok(FlowVector {
        flows,
        line_state: gsdf.line_state().to_vec(),
    })
}

/// How many violating lines a relay iteration removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripMode {
    /// Every line above its trip level at once.
    #[default]
    Batch,
    /// Only the most overloaded line (relative to its trip level).
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayOutcome {
    /// Zero-based line indices tripped in each iteration.
    pub tripped_lines: Vec<Vec<usize>>,
    pub final_state: Vec<bool>,
    pub final_flows: FlowVector,
    pub iterations: usize,
    /// Set when a trip disconnected the network; `final_state` then includes
    /// the islanding trip and `final_flows` are those before it.
    pub islanded: Option<IslandPartition>,
}

impl RelayOutcome {
    pub fn all_tripped(&self) -> impl Iterator<Item = usize> + '_ {
        self.tripped_lines.iter().flatten().copied()
    }
}

/// Lines whose flow magnitude is strictly above `β_k L_k^b`.
pub fn violations(case: &CaseData, flows: &FlowVector, mode: TripMode) -> Vec<usize> {
    let over = flows
        .flows
        .iter()
        .zip(&case.lines)
        .enumerate()
        .filter(|(k, (f, line))| flows.line_state[*k] && f.abs() > line.trip_level());
    match mode {
        TripMode::Batch => over.map(|(k, _)| k).collect(),
        TripMode::Sequential => {
            let mut best: Option<(usize, f64)> = None;
            for (k, (f, line)) in over {
                let ratio = f.abs() / line.trip_level();
                if best.is_none_or(|(_, r)| ratio > r) {
                    best = Some((k, ratio));
                }
            }
            best.map(|(k, _)| vec![k]).unwrap_or_default()
        }
    }
}

/// Run DCPF, trip every line above its relay threshold, update Ψ with the
/// Woodbury identity and repeat until no breaker operates.
pub fn relay_fixed_point(
    case: &CaseData,
    sys: &SusceptanceSystem,
    gsdf: &GsdfMatrix,
    injections: &[f64],
) -> Result<RelayOutcome> {
    let out = relay_loop(
        case,
        Arc::new(gsdf.clone()),
        injections,
        TripMode::Batch,
        |g, removed| woodbury_update(sys, g, removed).map(Arc::new),
    )?;
    match out.0.islanded {
        Some(p) => Err(Error::Islanded(p)),
        None => Ok(out.0),
    }
}

/// The same loop with a from-scratch Ψ build per iteration.
pub fn relay_fixed_point_naive(
    case: &CaseData,
    gsdf: &GsdfMatrix,
    injections: &[f64],
) -> Result<RelayOutcome> {
    let out = relay_loop(
        case,
        Arc::new(gsdf.clone()),
        injections,
        TripMode::Batch,
        |g, removed| {
            let mut state = g.line_state().to_vec();
            for &r in removed {
                state[r] = false;
            }
            build_gsdf(case, &state).map(Arc::new)
        },
    )?;
    match out.0.islanded {
        Some(p) => Err(Error::Islanded(p)),
        None => Ok(out.0),
    }
}

/// Relay loop with a caller-supplied Ψ update. Islanding is reported in the
/// outcome instead of as an error; other update errors propagate. Also
/// returns the Ψ of the final (connected) state.
pub fn relay_loop<F>(
    case: &CaseData,
    gsdf: Arc<GsdfMatrix>,
    injections: &[f64],
    mode: TripMode,
    mut update: F,
) -> Result<(RelayOutcome, Arc<GsdfMatrix>)>
where
    F: FnMut(&GsdfMatrix, &[usize]) -> Result<Arc<GsdfMatrix>>,
{
    let mut gsdf = gsdf;
    let mut flows = dc_power_flow(&gsdf, injections)?;
    let mut tripped_lines = Vec::new();
    let mut state = gsdf.line_state().to_vec();
    let limit = case.n_lines();
    loop {
        let trip = violations(case, &flows, mode);
        if trip.is_empty() {
            break;
        }
        for &k in &trip {
            state[k] = false;
        }
        tripped_lines.push(trip.clone());
        match update(&gsdf, &trip) {
            Ok(next) => gsdf = next,
            Err(Error::Islanded(p)) => {
                let iterations = tripped_lines.len();
                return Ok((
                    RelayOutcome {
                        tripped_lines,
                        final_state: state,
                        final_flows: flows,
                        iterations,
                        islanded: Some(p),
                    },
                    gsdf,
                ));
            }
            Err(e) => return Err(e),
        }
        flows = dc_power_flow(&gsdf, injections)?;
        debug_assert!(tripped_lines.len() <= limit);
    }
    let iterations = tripped_lines.len();
    Ok((
        RelayOutcome {
            tripped_lines,
            final_state: state,
            final_flows: flows,
            iterations,
            islanded: None,
        },
        gsdf,
    ))
}
