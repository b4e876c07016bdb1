//! Report files: shedding series, path list, path graph, timing table and
//! dictionary statistics.
//!
//! MW values are written with three decimals so that round-off differences
//! between solver paths never show up in the files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::search::{CascadePath, EventKind};
use crate::study::{StudyReport, TimingBreakdown};

pub const SHEDDING_FILE: &str = "shedding.csv";
pub const PATHS_FILE: &str = "paths.jsonl";
pub const GRAPH_FILE: &str = "path_graph.dot";
pub const TIMING_FILE: &str = "timing.txt";
pub const LSD_STATS_FILE: &str = "lsd_stats.json";
pub const ERRORS_FILE: &str = "errors.txt";

/// Name of the start node in the path graph.
pub const START_NODE: &str = "start";

fn mw(x: f64) -> f64 {
    (x * 1e3).round() / 1e3
}

/// Hourly series: `hour,load_mw,wind_mw,base_shed_mw,max_shed_mw,paths,states`.
pub fn shedding_series(report: &StudyReport) -> String {
    let mut out = String::from("hour,load_mw,wind_mw,base_shed_mw,max_shed_mw,paths,states\n");
    for h in &report.hours {
        let _ = writeln!(
            out,
            "{},{:.3},{:.3},{:.3},{:.3},{},{}",
            h.hour,
            h.load,
            h.wind,
            h.result.base_shed,
            h.max_shed(),
            h.result.paths.len(),
            h.result.nodes
        );
    }
    out
}

#[derive(Serialize)]
struct EventRecord {
    kind: EventKind,
    elements: Vec<String>,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shed_mw: Option<f64>,
}

#[derive(Serialize)]
struct PathRecord {
    hour: usize,
    rank: usize,
    probability: f64,
    shed_mw: f64,
    depth: usize,
    terminal: crate::search::TerminalReason,
    events: Vec<EventRecord>,
}

fn path_record(path: &CascadePath, rank: usize) -> PathRecord {
    PathRecord {
        hour: path.scenario,
        rank,
        probability: path.probability,
        shed_mw: mw(path.shed),
        depth: path.depth(),
        terminal: path.terminal,
        events: path
            .events
            .iter()
            .map(|e| EventRecord {
                kind: e.kind,
                elements: match e.kind {
                    EventKind::Redispatch => Vec::new(),
                    _ => e.labels(),
                },
                probability: e.probability,
                shed_mw: (e.kind == EventKind::Redispatch).then(|| mw(e.shed)),
            })
            .collect(),
    }
}

/// One JSON object per line and path, in hour then rank order.
pub fn path_list(report: &StudyReport) -> String {
    let mut out = String::new();
    for h in &report.hours {
        for (rank, p) in h.result.paths.iter().enumerate() {
            out.push_str(&serde_json::to_string(&path_record(p, rank + 1)).expect("path record serializes"));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeStats {
    pub count: usize,
    pub max_shed: f64,
}

/// Element-level graph of the reported paths: each path contributes the
/// chain `start → first failure → ... → last relay trip`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathGraph {
    pub edges: BTreeMap<(String, String), EdgeStats>,
}

impl PathGraph {
    pub fn from_paths<'a>(paths: impl IntoIterator<Item = &'a CascadePath>) -> Self {
        let mut g = PathGraph::default();
        for p in paths {
            let mut prev = START_NODE.to_string();
            for node in p.element_sequence() {
                let e = g.edges.entry((prev, node.clone())).or_default();
                e.count += 1;
                e.max_shed = e.max_shed.max(mw(p.shed));
                prev = node;
            }
        }
        g
    }

    /// Sum of the counts of incident edges, per node.
    pub fn degrees(&self) -> BTreeMap<String, usize> {
        let mut d = BTreeMap::new();
        for ((a, b), e) in &self.edges {
            *d.entry(a.clone()).or_insert(0) += e.count;
            *d.entry(b.clone()).or_insert(0) += e.count;
        }
        d
    }

    /// Largest shedding of any path through each node.
    pub fn node_max_shed(&self) -> BTreeMap<String, f64> {
        let mut s: BTreeMap<String, f64> = BTreeMap::new();
        for ((a, b), e) in &self.edges {
            for n in [a, b] {
                let v = s.entry(n.clone()).or_insert(0.0);
                *v = v.max(e.max_shed);
            }
        }
        s
    }

    /// Graphviz text. Node and edge colors go from blue (no shedding) to
    /// red (the largest shedding in the graph).
    pub fn to_dot(&self) -> String {
        let degrees = self.degrees();
        let shed = self.node_max_shed();
        let top = shed.values().fold(0.0f64, |a, &b| a.max(b));
        let color = |x: f64| {
            let frac = if top > 0.0 { x / top } else { 0.0 };
            format!("{:.3} 0.850 0.900", 0.667 * (1.0 - frac))
        };
        let mut out = String::from("digraph cascade_paths {\n  node [shape=circle, style=filled];\n");
        for (name, deg) in &degrees {
            let s = shed[name];
            let _ = writeln!(
                out,
                "  \"{name}\" [degree={deg}, max_shed={s:.3}, fillcolor=\"{}\"];",
                color(s)
            );
        }
        for ((a, b), e) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{a}\" -> \"{b}\" [count={}, max_shed={:.3}, color=\"{}\"];",
                e.count,
                e.max_shed,
                color(e.max_shed)
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Published phase times for cases c1..c3 on RTS-79 (seconds).
pub const REFERENCE_TIMES: [(&str, [f64; 4]); 3] = [
    ("c1", [82.0, 241.0, 1425.0, 1883.0]),
    ("c2", [74.0, 124.0, 94.0, 351.0]),
    ("c3", [74.0, 78.0, 91.0, 297.0]),
];

/// Timing table of a single run.
pub fn timing_table(t: &TimingBreakdown) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "case {} ({}), {} scenarios, {} states", t.case, t.label, t.scenarios, t.nodes);
    let _ = writeln!(out, "{:<22}{:>12}", "phase", "seconds");
    for (name, v) in [
        ("scenario generation", t.scenario_generation),
        ("sampling", t.sampling),
        ("dcpf", t.dcpf),
        ("dcopf", t.dcopf),
        ("total", t.total),
    ] {
        let _ = writeln!(out, "{name:<22}{v:>12.3}");
    }
    out
}

/// Side-by-side phase times with speedups relative to the first report.
/// Every report must describe the same workload.
pub fn emit_timing_comparison(reports: &[TimingBreakdown]) -> Result<String> {
    if reports.len() < 2 {
        return Err(Error::Workload("need at least two timing reports".into()));
    }
    let base = &reports[0];
    if let Some(bad) = reports.iter().find(|r| !r.same_workload(base)) {
        return Err(Error::Workload(format!(
            "{} ({} scenarios, {} states on {}) differs from {} ({} scenarios, {} states on {})",
            bad.label, bad.scenarios, bad.nodes, bad.case, base.label, base.scenarios, base.nodes, base.case
        )));
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a == b { 1.0 } else { f64::INFINITY };
    let mut out = String::new();
    let _ = writeln!(out, "workload: {}, {} scenarios, {} states", base.case, base.scenarios, base.nodes);
    let _ = writeln!(
        out,
        "{:<14}{:>11}{:>11}{:>11}{:>11}{:>10}{:>10}",
        "run", "sampling", "dcpf", "dcopf", "total", "x total", "x dcopf"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<14}{:>11.3}{:>11.3}{:>11.3}{:>11.3}{:>10.2}{:>10.2}",
            r.label,
            r.sampling,
            r.dcpf,
            r.dcopf,
            r.total,
            ratio(base.total, r.total),
            ratio(base.dcopf, r.dcopf)
        );
    }
    let _ = writeln!(out, "reference (published RTS-79 runs, annotation only):");
    let c1 = REFERENCE_TIMES[0].1;
    for (name, v) in REFERENCE_TIMES {
        let _ = writeln!(
            out,
            "{:<14}{:>11.0}{:>11.0}{:>11.0}{:>11.0}{:>10.2}{:>10.2}",
            format!("ref-{name}"),
            v[0],
            v[1],
            v[2],
            v[3],
            c1[3] / v[3],
            c1[2] / v[2]
        );
    }
    Ok(out)
}

/// Files written by [`write_report`].
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub shedding: PathBuf,
    pub paths: PathBuf,
    pub graph: PathBuf,
    pub timing: PathBuf,
    pub lsd_stats: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write every report file into `dir`.
pub fn write_report(report: &StudyReport, dir: &Path) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = WrittenFiles {
        shedding: dir.join(SHEDDING_FILE),
        paths: dir.join(PATHS_FILE),
        graph: dir.join(GRAPH_FILE),
        timing: dir.join(TIMING_FILE),
        lsd_stats: dir.join(LSD_STATS_FILE),
    };
    write(&files.shedding, &shedding_series(report))?;
    write(&files.paths, &path_list(report))?;
    write(&files.graph, &PathGraph::from_paths(report.paths()).to_dot())?;
    write(&files.timing, &timing_table(&report.timing))?;
    let stats = serde_json::to_string_pretty(&report.lsd).expect("stats serialize");
    write(&files.lsd_stats, &(stats + "\n"))?;
    let errors: String = report
        .failures()
        .map(|h| format!("{}\t{}\n", h.hour, h.error.as_deref().unwrap_or_default()))
        .collect();
    let err_path = dir.join(ERRORS_FILE);
    if !errors.is_empty() {
        write(&err_path, &errors)?;
    } else if err_path.exists() {
        std::fs::remove_file(&err_path).map_err(|e| Error::io(&err_path, e))?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{CascadeEvent, TerminalReason};

    fn path(elements: &[(EventKind, usize)], shed: f64) -> CascadePath {
        CascadePath {
            scenario: 0,
            events: elements
                .iter()
                .map(|&(kind, e)| CascadeEvent {
                    kind,
                    elements: vec![e],
                    probability: 0.5,
                    shed: 0.0,
                })
                .collect(),
            probability: 0.5,
            shed,
            terminal: TerminalReason::BelowThreshold,
        }
    }

    #[test]
    fn graph_degrees_count_edge_ends() {
        let a = path(&[(EventKind::RandomLineFailure, 29), (EventKind::RelayTrip, 24)], 10.0);
        let b = path(&[(EventKind::RandomLineFailure, 29)], 3.0);
        let g = PathGraph::from_paths([&a, &b]);
        let d = g.degrees();
        assert_eq!(d["start"], 2);
        assert_eq!(d["L30"], 3);
        assert_eq!(d["L25"], 1);
        assert_eq!(g.edges[&("start".into(), "L30".into())].max_shed, 10.0);
        assert!(g.to_dot().contains("\"L30\" -> \"L25\" [count=1"));
    }

    fn timing(label: &str, total: f64) -> TimingBreakdown {
        TimingBreakdown {
            label: label.into(),
            case: "x".into(),
            scenarios: 10,
            epsilon: 1e-9,
            m: 3,
            depth_limit: 8,
            nodes: 100,
            scenario_generation: 0.1,
            sampling: 1.0,
            dcpf: 2.0,
            dcopf: 3.0,
            total,
        }
    }

    #[test]
    fn self_comparison_has_unit_ratios() {
        let t = timing("c1", 6.5);
        let table = emit_timing_comparison(&[t.clone(), t]).unwrap();
        let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("c1")).collect();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert!(r.trim_end().ends_with("1.00      1.00"), "{r}");
        }
        assert!(table.contains("ref-c3"));
    }

    #[test]
    fn mismatched_workloads_are_refused() {
        let a = timing("c1", 6.5);
        let mut b = timing("c3", 1.0);
        b.nodes = 99;
        assert!(matches!(emit_timing_comparison(&[a.clone(), b]), Err(Error::Workload(_))));
        assert!(emit_timing_comparison(&[a]).is_err());
    }
}
