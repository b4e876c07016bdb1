//! Markov chain search over failure states.
//!
//! Each arrow of the chain is a long-short-long step: one random failure of
//! a unit or line, the relay cascade it triggers, then a re-dispatch. A path
//! is kept while the product of its arrow probabilities is at least `ε`;
//! leaves of the resulting tree are the candidate cascading paths, and the
//! `m` with the most shedding are reported per scenario.

use std::cmp::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::case::{CaseData, Line};
use crate::dispatch::{self, DispatchLp, DispatchOptions, DispatchSolution};
use crate::error::{Error, IslandPartition, Result};
use crate::gsdf::{build_gsdf, woodbury_update, GsdfMatrix, SusceptanceSystem};
use crate::lsd::{LineStateKey, Lsd, LsdEntry, LsdOptions, LsdStats};
use crate::relay::{self, TripMode};
use crate::scenario::Scenario;

/// Post-dispatch flows within this margin above `L^b` count as at the limit
/// when evaluating line failure probabilities (MW).
pub const FLOW_SNAP: f64 = 1e-6;
/// Shedding resolution used to rank paths (MW).
pub const SHED_QUANTUM: f64 = 1e-6;

/// Line failure probability as a function of flow:
/// `p^b` up to `L^b`, rising linearly in `|L| / (β L^b)` up to the relay
/// level, and 1 beyond it.
pub fn line_failure_probability(line: &Line, flow: f64) -> f64 {
    let f = flow.abs();
    let pb = line.base_fail_prob;
    if f <= line.flow_limit {
        pb
    } else if f <= line.trip_level() {
        (1.0 - pb) * f / line.trip_level() + pb
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub epsilon: f64,
    pub m: usize,
    /// Maximum number of random failures on a path.
    pub depth_limit: usize,
    pub lsd_enabled: bool,
    pub woodbury_enabled: bool,
    pub trip_mode: TripMode,
    pub dispatch: DispatchOptions,
    pub max_lsd_entries: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            epsilon: 1e-9,
            m: 3,
            depth_limit: 8,
            lsd_enabled: true,
            woodbury_enabled: true,
            trip_mode: TripMode::Batch,
            dispatch: DispatchOptions::default(),
            max_lsd_entries: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) && self.epsilon != 1.0 {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        Ok(())
    }

    /// Label of the acceleration combination: `c1` none, `c2` dictionary
    /// only, `c3` dictionary and Woodbury updates.
    pub fn label(&self) -> &'static str {
        match (self.lsd_enabled, self.woodbury_enabled) {
            (false, false) => "c1",
            (true, false) => "c2",
            (true, true) => "c3",
            (false, true) => "woodbury-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    RandomGenFailure,
    RandomLineFailure,
    RelayTrip,
    Redispatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeEvent {
    pub kind: EventKind,
    /// Zero-based element indices (generators or lines).
    pub elements: Vec<usize>,
    pub probability: f64,
    /// Total shedding after this event (MW); set on re-dispatch events.
    pub shed: f64,
}

impl CascadeEvent {
    /// Element labels as printed in reports (`G3`, `L11`, one-based).
    pub fn labels(&self) -> Vec<String> {
        let prefix = match self.kind {
            EventKind::RandomGenFailure => "G",
            EventKind::RandomLineFailure | EventKind::RelayTrip => "L",
            EventKind::Redispatch => return Vec::new(),
        };
        self.elements.iter().map(|e| format!("{prefix}{}", e + 1)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    /// No element left that could fail.
    Converged,
    /// Every possible next failure falls below `ε`.
    BelowThreshold,
    Islanded,
    DepthLimit,
    /// Re-dispatch LP had no solution; all load counted as shed.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadePath {
    pub scenario: usize,
    pub events: Vec<CascadeEvent>,
    pub probability: f64,
    /// Shedding in the final state of the path (MW).
    pub shed: f64,
    pub terminal: TerminalReason,
}

impl CascadePath {
    /// Random failures along the path.
    pub fn depth(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::RandomGenFailure | EventKind::RandomLineFailure))
            .count()
    }

    /// Failed elements in order: each random failure followed by its relay
    /// trips.
    pub fn element_sequence(&self) -> Vec<String> {
        self.events.iter().flat_map(|e| e.labels()).collect()
    }

    fn signature(&self) -> Vec<(EventKind, Vec<usize>)> {
        self.events
            .iter()
            .filter(|e| e.kind != EventKind::Redispatch)
            .map(|e| (e.kind, e.elements.clone()))
            .collect()
    }
}

fn quantized(shed: f64) -> i64 {
    (shed / SHED_QUANTUM).round() as i64
}

/// Severity order: more shedding first, then higher probability, then
/// lexicographic event sequence.
pub fn severity_cmp(a: &CascadePath, b: &CascadePath) -> Ordering {
    quantized(b.shed)
        .cmp(&quantized(a.shed))
        .then_with(|| b.probability.total_cmp(&a.probability))
        .then_with(|| a.signature().cmp(&b.signature()))
}

/// Keep the `m` most severe paths, sorted.
pub fn select_top(mut paths: Vec<CascadePath>, m: usize) -> Vec<CascadePath> {
    paths.sort_by(severity_cmp);
    paths.truncate(m);
    paths
}

/// Wall time per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    /// Enumerating random failures and their probabilities.
    pub sampling: Duration,
    /// GSDF construction or update and relay power flows.
    pub dcpf: Duration,
    /// Re-dispatch LPs.
    pub dcopf: Duration,
}

impl PhaseTimes {
    pub fn add(&mut self, other: &PhaseTimes) {
        self.sampling += other.sampling;
        self.dcpf += other.dcpf;
        self.dcopf += other.dcopf;
    }
}

/// A state of the chain together with its settled operating point.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub line_state: Vec<bool>,
    pub gen_state: Vec<bool>,
    pub gsdf: Arc<GsdfMatrix>,
    entry: Option<Arc<LsdEntry>>,
    pub injections: Vec<f64>,
    pub shedding: Vec<f64>,
    pub flows: Vec<f64>,
    pub probability: f64,
    pub events: Vec<CascadeEvent>,
    pub depth: usize,
    pub shed: f64,
    pub terminal: Option<TerminalReason>,
}

impl SearchNode {
    fn into_path(self, scenario: usize, reason: TerminalReason) -> CascadePath {
        CascadePath {
            scenario,
            events: self.events,
            probability: self.probability,
            shed: self.shed,
            terminal: self.terminal.unwrap_or(reason),
        }
    }
}

/// Result of expanding one state.
#[derive(Debug)]
pub struct Expansion {
    pub children: Vec<SearchNode>,
    /// Elements that could fail at all (nonzero probability).
    pub candidates: usize,
}

/// Shared, immutable search inputs plus the dictionary.
#[derive(Debug)]
pub struct SearchContext {
    pub case: Arc<CaseData>,
    pub config: SearchConfig,
    sys: Arc<SusceptanceSystem>,
    base_gsdf: Arc<GsdfMatrix>,
    lsd: Option<Lsd>,
    gen_fail: Vec<f64>,
}

impl SearchContext {
    pub fn new(case: Arc<CaseData>, config: SearchConfig) -> Result<Self> {
        config.validate()?;
        let all = vec![true; case.n_lines()];
        let sys = Arc::new(SusceptanceSystem::new(&case, &all)?);
        let base_gsdf = Arc::new(sys.gsdf());
        let lsd = config.lsd_enabled.then(|| {
            Lsd::with_system(
                case.clone(),
                sys.clone(),
                config.dispatch,
                LsdOptions {
                    regions: true,
                    woodbury: config.woodbury_enabled,
                    max_entries: config.max_lsd_entries,
                },
            )
        });
        let gen_fail = case.generators.iter().map(|g| g.search_fail_prob()).collect();
        Ok(SearchContext {
            case,
            config,
            sys,
            base_gsdf,
            lsd,
            gen_fail,
        })
    }

    pub fn lsd(&self) -> Option<&Lsd> {
        self.lsd.as_ref()
    }

    pub fn lsd_stats(&self) -> Option<LsdStats> {
        self.lsd.as_ref().map(|l| l.stats())
    }

    fn root_gsdf(&self) -> Result<(Arc<GsdfMatrix>, Option<Arc<LsdEntry>>)> {
        if let Some(lsd) = &self.lsd {
            let key = LineStateKey::from_state(&vec![true; self.case.n_lines()]);
            let e = lsd.lookup_or_build(&key)?;
            return Ok((e.gsdf().clone(), Some(e)));
        }
        if self.config.woodbury_enabled {
            Ok((self.base_gsdf.clone(), None))
        } else {
            let all = vec![true; self.case.n_lines()];
            Ok((Arc::new(build_gsdf(&self.case, &all)?), None))
        }
    }

    fn child_gsdf(
        &self,
        parent: &GsdfMatrix,
        removed: &[usize],
    ) -> Result<(Arc<GsdfMatrix>, Option<Arc<LsdEntry>>)> {
        if let Some(lsd) = &self.lsd {
            let e = lsd.child(parent, removed)?;
            return Ok((e.gsdf().clone(), Some(e)));
        }
        if self.config.woodbury_enabled {
            Ok((Arc::new(woodbury_update(&self.sys, parent, removed)?), None))
        } else {
            let mut state = parent.line_state().to_vec();
            for &r in removed {
                state[r] = false;
            }
            Ok((Arc::new(build_gsdf(&self.case, &state)?), None))
        }
    }

    fn dispatch(
        &self,
        gsdf: &Arc<GsdfMatrix>,
        entry: Option<&Arc<LsdEntry>>,
        phi_of: impl Fn(&DispatchLp) -> Vec<f64>,
    ) -> Result<DispatchSolution> {
        match (&self.lsd, entry) {
            (Some(lsd), Some(e)) => lsd.solve(e, &phi_of(e.lp())),
            (Some(lsd), None) => {
                let e = lsd.lookup_or_build(&LineStateKey::from_state(gsdf.line_state()))?;
                lsd.solve(&e, &phi_of(e.lp()))
            }
            (None, _) => {
                let lp = DispatchLp::new(&self.case, gsdf.clone(), &self.config.dispatch)?;
                dispatch::solve_baseline(&lp, &phi_of(&lp))
            }
        }
    }
}

/// Settled operating point of the intact system for a scenario.
pub fn root_node(ctx: &SearchContext, scenario: &Scenario, times: &mut PhaseTimes) -> Result<SearchNode> {
    let t = Instant::now();
    let (gsdf, entry) = ctx.root_gsdf()?;
    times.dcpf += t.elapsed();
    let caps = scenario.generator_caps(&ctx.case);
    let gen_state = vec![true; ctx.case.n_generators()];
    let t = Instant::now();
    let sol = ctx.dispatch(&gsdf, entry.as_ref(), |lp| lp.phi(&caps, &gen_state, &scenario.load))?;
    times.dcopf += t.elapsed();
    let t = Instant::now();
    let mut flows = vec![0.0; gsdf.n_lines()];
    gsdf.apply(&sol.injections, &mut flows);
    times.dcpf += t.elapsed();
    let shed = sol.total_shed();
    Ok(SearchNode {
        line_state: gsdf.line_state().to_vec(),
        gen_state,
        gsdf,
        entry,
        injections: sol.injections,
        shedding: sol.shedding,
        flows,
        probability: 1.0,
        events: Vec::new(),
        depth: 0,
        shed,
        terminal: None,
    })
}

fn islanded_shed(partition: &IslandPartition, reference: usize, loads: &[f64], shedding: &[f64]) -> f64 {
    let main = partition.island_of(reference + 1);
    (0..loads.len())
        .map(|i| {
            if partition.island_of(i + 1) == main {
                shedding[i]
            } else {
                loads[i]
            }
        })
        .sum()
}

enum Trigger {
    Gen(usize),
    Line(usize),
}

/// Children of `node`: every single random failure whose path probability
/// stays at or above `ε`, each followed by the relay cascade and re-dispatch.
pub fn expand_state(
    ctx: &SearchContext,
    scenario: &Scenario,
    node: &SearchNode,
    times: &mut PhaseTimes,
) -> Result<Expansion> {
    let t = Instant::now();
    let eps = ctx.config.epsilon;
    let mut triggers = Vec::new();
    let mut candidates = 0;
    for (g, &up) in node.gen_state.iter().enumerate() {
        let p = ctx.gen_fail[g];
        if !up || p <= 0.0 {
            continue;
        }
        candidates += 1;
        if node.probability * p >= eps {
            triggers.push((Trigger::Gen(g), p));
        }
    }
    for (k, line) in ctx.case.lines.iter().enumerate() {
        if !node.line_state[k] {
            continue;
        }
        let flow = node.flows[k];
        let p = if flow.abs() <= line.flow_limit + FLOW_SNAP {
            line.base_fail_prob
        } else {
            line_failure_probability(line, flow)
        };
        if p <= 0.0 {
            continue;
        }
        candidates += 1;
        if node.probability * p >= eps {
            triggers.push((Trigger::Line(k), p));
        }
    }
    times.sampling += t.elapsed();

    let caps = scenario.generator_caps(&ctx.case);
    let reference = ctx.case.reference_index();
    let mut children = Vec::with_capacity(triggers.len());
    for (trigger, p) in triggers {
        let mut child = SearchNode {
            line_state: node.line_state.clone(),
            gen_state: node.gen_state.clone(),
            gsdf: node.gsdf.clone(),
            entry: node.entry.clone(),
            injections: node.injections.clone(),
            shedding: node.shedding.clone(),
            flows: Vec::new(),
            probability: node.probability * p,
            events: node.events.clone(),
            depth: node.depth + 1,
            shed: node.shed,
            terminal: None,
        };
        let t = Instant::now();
        match trigger {
            Trigger::Gen(g) => {
                child.gen_state[g] = false;
                child.events.push(CascadeEvent {
                    kind: EventKind::RandomGenFailure,
                    elements: vec![g],
                    probability: p,
                    shed: 0.0,
                });
                // remaining units at the bus keep what they can; the
                // reference bus picks up the rest until re-dispatch
                let bus = ctx.case.generators[g].bus - 1;
                let remaining: f64 = ctx
                    .case
                    .generators
                    .iter()
                    .enumerate()
                    .filter(|(u, gen)| gen.bus - 1 == bus && child.gen_state[*u])
                    .map(|(u, _)| caps[u])
                    .sum();
                let generation = node.injections[bus] + scenario.load[bus] - node.shedding[bus];
                let lost = (generation - remaining).max(0.0);
                child.injections[bus] -= lost;
                child.injections[reference] += lost;
            }
            Trigger::Line(k) => {
                child.line_state[k] = false;
                child.events.push(CascadeEvent {
                    kind: EventKind::RandomLineFailure,
                    elements: vec![k],
                    probability: p,
                    shed: 0.0,
                });
                match ctx.child_gsdf(&node.gsdf, &[k]) {
                    Ok((g, e)) => {
                        child.gsdf = g;
                        child.entry = e;
                    }
                    Err(Error::Islanded(part)) => {
                        times.dcpf += t.elapsed();
                        child.shed = islanded_shed(&part, reference, &scenario.load, &node.shedding);
                        child.terminal = Some(TerminalReason::Islanded);
                        children.push(child);
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        let mut last_entry = child.entry.clone();
        let (outcome, gsdf) = relay::relay_loop(
            &ctx.case,
            child.gsdf.clone(),
            &child.injections,
            ctx.config.trip_mode,
            |g, removed| {
                let (next, e) = ctx.child_gsdf(g, removed)?;
                last_entry = e;
                Ok(next)
            },
        )?;
        times.dcpf += t.elapsed();
        for trip in &outcome.tripped_lines {
            child.events.push(CascadeEvent {
                kind: EventKind::RelayTrip,
                elements: trip.clone(),
                probability: 1.0,
                shed: 0.0,
            });
        }
        child.line_state = outcome.final_state;
        if let Some(part) = outcome.islanded {
            child.shed = islanded_shed(&part, reference, &scenario.load, &node.shedding);
            child.terminal = Some(TerminalReason::Islanded);
            children.push(child);
            continue;
        }
        child.gsdf = gsdf;
        child.entry = last_entry;

        let t = Instant::now();
        let gen_state = &child.gen_state;
        let sol = ctx.dispatch(&child.gsdf, child.entry.as_ref(), |lp| {
            lp.phi(&caps, gen_state, &scenario.load)
        });
        times.dcopf += t.elapsed();
        match sol {
            Ok(sol) => {
                let t = Instant::now();
                child.flows = vec![0.0; child.gsdf.n_lines()];
                child.gsdf.apply(&sol.injections, &mut child.flows);
                times.dcpf += t.elapsed();
                child.shed = sol.total_shed();
                child.injections = sol.injections;
                child.shedding = sol.shedding;
            }
            Err(Error::Infeasible) => {
                child.shed = scenario.total_load();
                child.terminal = Some(TerminalReason::Infeasible);
            }
            Err(e) => return Err(e),
        }
        child.events.push(CascadeEvent {
            kind: EventKind::Redispatch,
            elements: Vec::new(),
            probability: 1.0,
            shed: child.shed,
        });
        children.push(child);
    }
    Ok(Expansion { children, candidates })
}

/// Outcome of one scenario's search.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub index: usize,
    /// Up to `m` most severe paths, sorted by severity.
    pub paths: Vec<CascadePath>,
    /// States visited, root included.
    pub nodes: usize,
    pub leaves: usize,
    /// Shedding of the intact system (MW).
    pub base_shed: f64,
    pub times: PhaseTimes,
}

impl ScenarioResult {
    pub fn empty(index: usize) -> Self {
        ScenarioResult {
            index,
            paths: Vec::new(),
            nodes: 0,
            leaves: 0,
            base_shed: 0.0,
            times: PhaseTimes::default(),
        }
    }

    pub fn max_shed(&self) -> f64 {
        self.paths.first().map_or(self.base_shed, |p| p.shed.max(self.base_shed))
    }
}

/// Every leaf path of the search tree, unsorted.
pub fn enumerate_paths(ctx: &SearchContext, scenario: &Scenario) -> Result<(Vec<CascadePath>, usize, f64, PhaseTimes)> {
    let mut times = PhaseTimes::default();
    let root = root_node(ctx, scenario, &mut times)?;
    let base_shed = root.shed;
    let mut leaves = Vec::new();
    let mut nodes = 1;
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.terminal.is_some() {
            leaves.push(node.into_path(scenario.index, TerminalReason::Islanded));
            continue;
        }
        if node.depth >= ctx.config.depth_limit {
            leaves.push(node.into_path(scenario.index, TerminalReason::DepthLimit));
            continue;
        }
        let exp = expand_state(ctx, scenario, &node, &mut times)?;
        nodes += exp.children.len();
        if exp.children.is_empty() {
            if node.depth > 0 {
                let reason = if exp.candidates == 0 {
                    TerminalReason::Converged
                } else {
                    TerminalReason::BelowThreshold
                };
                leaves.push(node.into_path(scenario.index, reason));
            }
            continue;
        }
        // reversed so children are visited in trigger order
        stack.extend(exp.children.into_iter().rev());
    }
    Ok((leaves, nodes, base_shed, times))
}

/// The `m` most severe paths of one scenario.
pub fn search_scenario(ctx: &SearchContext, scenario: &Scenario) -> Result<ScenarioResult> {
    let (leaves, nodes, base_shed, times) = enumerate_paths(ctx, scenario)?;
    let n_leaves = leaves.len();
    Ok(ScenarioResult {
        index: scenario.index,
        paths: select_top(leaves, ctx.config.m),
        nodes,
        leaves: n_leaves,
        base_shed,
        times,
    })
}
