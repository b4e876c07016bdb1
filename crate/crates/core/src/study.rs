//! Study configuration and the multi-scenario driver.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::case::{self, fixtures, rts79, CaseData};
use crate::dispatch::DispatchOptions;
use crate::error::{Error, Result};
use crate::lsd::LsdStats;
use crate::relay::TripMode;
use crate::scenario::{self, Scenario, WindModelConfig};
use crate::search::{search_scenario, PhaseTimes, ScenarioResult, SearchConfig, SearchContext};

/// Names accepted for `case` besides a file path.
pub const BUILTIN_CASES: [&str; 3] = ["rts79", "rts79_wind", "five_bus"];

/// Everything a study run needs; mirrors the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Built-in case name, or a path to a TOML case file or MATPOWER `.m` file.
    pub case: String,
    pub hours: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub m: usize,
    pub depth_limit: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub lsd: bool,
    pub woodbury: bool,
    pub trip_mode: TripMode,
    /// Keep unit injections nonnegative in the re-dispatch LP.
    pub gen_nonnegative: bool,
    /// Markov step length for the built-in cases (hours).
    pub step_hours: f64,
    pub relay_threshold: f64,
    pub rating_scale: f64,
    /// Replay scenarios from this CSV instead of generating them.
    pub scenarios: Option<PathBuf>,
    /// Wind model override; the built-in RTS-79 model is used otherwise.
    pub wind: Option<WindModelConfig>,
    pub out: PathBuf,
    pub save_scenarios: bool,
    pub lsd_load: Option<PathBuf>,
    pub lsd_save: Option<PathBuf>,
    pub max_lsd_entries: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        StudyConfig {
            case: "rts79_wind".into(),
            hours: 8760,
            seed: 2024,
            epsilon: search.epsilon,
            m: search.m,
            depth_limit: search.depth_limit,
            workers: 0,
            lsd: true,
            woodbury: true,
            trip_mode: TripMode::Batch,
            gen_nonnegative: true,
            step_hours: rts79::DEFAULT_STEP_HOURS,
            relay_threshold: case::DEFAULT_RELAY_THRESHOLD,
            rating_scale: 1.0,
            scenarios: None,
            wind: None,
            out: PathBuf::from("gridcascade-out"),
            save_scenarios: false,
            lsd_load: None,
            lsd_save: None,
            max_lsd_entries: None,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("study config serializes")
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            epsilon: self.epsilon,
            m: self.m,
            depth_limit: self.depth_limit,
            lsd_enabled: self.lsd,
            woodbury_enabled: self.woodbury,
            trip_mode: self.trip_mode,
            dispatch: DispatchOptions {
                gen_nonnegative: self.gen_nonnegative,
            },
            max_lsd_entries: self.max_lsd_entries,
        }
    }

    fn rts79_options(&self) -> rts79::Rts79Options {
        rts79::Rts79Options {
            step_hours: self.step_hours,
            relay_threshold: self.relay_threshold,
            rating_scale: self.rating_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.search_config().validate()?;
        if !(self.step_hours > 0.0) {
            return Err(Error::Config("step_hours must be positive".into()));
        }
        if !(self.relay_threshold > 1.0) {
            return Err(Error::Config("relay_threshold must exceed 1".into()));
        }
        if !(self.rating_scale > 0.0) {
            return Err(Error::Config("rating_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn build_case(&self) -> Result<CaseData> {
        match self.case.as_str() {
            "rts79" => Ok(rts79::case(&self.rts79_options())),
            "rts79_wind" => Ok(rts79::wind_case(&self.rts79_options())),
            "five_bus" => Ok(fixtures::five_bus()),
            path if path.ends_with(".m") => case::matpower::import_matpower(path, &Default::default()),
            path => case::load_case(path),
        }
    }

    pub fn build_scenarios(&self, case: &CaseData) -> Result<Vec<Scenario>> {
        if let Some(path) = &self.scenarios {
            let mut all = scenario::load_scenarios(path)?;
            all.truncate(self.hours);
            return Ok(all);
        }
        let wind = match &self.wind {
            Some(w) => w.clone(),
            None => {
                let n = case.generators.iter().filter(|g| g.is_wind()).count();
                if n == rts79::WIND_BUSES.len() {
                    WindModelConfig::rts79()
                } else {
                    WindModelConfig::uniform(identity(n))
                }
            }
        };
        let profile = if self.case.starts_with("rts79") {
            rts79::hourly_load_profile()
        } else {
            vec![1.0]
        };
        scenario::generate_scenarios(case, &wind, &profile, self.hours, self.seed)
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Phase totals of one run, with the workload they were measured on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub label: String,
    pub case: String,
    pub scenarios: usize,
    pub epsilon: f64,
    pub m: usize,
    pub depth_limit: usize,
    /// States visited over all scenarios.
    pub nodes: usize,
    pub scenario_generation: f64,
    pub sampling: f64,
    pub dcpf: f64,
    pub dcopf: f64,
    /// Wall time of the search.
    pub total: f64,
}

impl TimingBreakdown {
    /// Same case, scenario count, search parameters and visited states.
    pub fn same_workload(&self, other: &TimingBreakdown) -> bool {
        self.case == other.case
            && self.scenarios == other.scenarios
            && self.epsilon == other.epsilon
            && self.m == other.m
            && self.depth_limit == other.depth_limit
            && self.nodes == other.nodes
    }
}

/// Hour-level summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct HourSummary {
    pub hour: usize,
    pub load: f64,
    pub wind: f64,
    pub result: ScenarioResult,
    /// Set when the scenario's search failed; `result` is then empty.
    pub error: Option<String>,
}

impl HourSummary {
    pub fn max_shed(&self) -> f64 {
        if self.error.is_some() {
            f64::NAN
        } else {
            self.result.max_shed()
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub case_name: String,
    pub hours: Vec<HourSummary>,
    pub timing: TimingBreakdown,
    pub lsd: Option<LsdStats>,
}

impl StudyReport {
    pub fn paths(&self) -> impl Iterator<Item = &crate::search::CascadePath> {
        self.hours.iter().flat_map(|h| h.result.paths.iter())
    }

    pub fn failures(&self) -> impl Iterator<Item = &HourSummary> {
        self.hours.iter().filter(|h| h.error.is_some())
    }

    pub fn n_paths(&self) -> usize {
        self.hours.iter().map(|h| h.result.paths.len()).sum()
    }
}

/// Build the case and scenarios from `config` and search every scenario.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let case = Arc::new(config.build_case()?);
    let t = Instant::now();
    let scenarios = config.build_scenarios(&case)?;
    let generation = t.elapsed();
    if config.save_scenarios {
        std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
        scenario::save_scenarios(config.out.join("scenarios.csv"), &scenarios, &case)?;
    }
    let mut report = run_scenarios(case, &scenarios, config)?;
    report.timing.scenario_generation = generation.as_secs_f64();
    Ok(report)
}

/// Search the given scenarios on `case`.
pub fn run_scenarios(case: Arc<CaseData>, scenarios: &[Scenario], config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let search = config.search_config();
    let ctx = SearchContext::new(case.clone(), search)?;
    if let (Some(path), Some(lsd)) = (&config.lsd_load, ctx.lsd()) {
        let n = lsd.load(path)?;
        log::info!("loaded {n} line states from {}", path.display());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    log::info!(
        "searching {} scenarios on {} ({}, {} workers)",
        scenarios.len(),
        case.name,
        search.label(),
        pool.current_num_threads()
    );
    let t = Instant::now();
    let results: Vec<Result<ScenarioResult>> =
        pool.install(|| scenarios.par_iter().map(|s| search_scenario(&ctx, s)).collect());
    let total = t.elapsed();

    let mut phases = PhaseTimes::default();
    let mut nodes = 0;
    for r in results.iter().flatten() {
        phases.add(&r.times);
        nodes += r.nodes;
    }
    if let (Some(path), Some(lsd)) = (&config.lsd_save, ctx.lsd()) {
        lsd.save(path)?;
    }
    let hours = scenarios
        .iter()
        .zip(results)
        .map(|(s, result)| {
            let (result, error) = match result {
                Ok(r) => (r, None),
                Err(e) => {
                    log::warn!("scenario {} failed: {e}", s.index);
                    (ScenarioResult::empty(s.index), Some(e.to_string()))
                }
            };
            HourSummary {
                hour: s.index,
                load: s.total_load(),
                wind: s.total_wind(),
                result,
                error,
            }
        })
        .collect();
    let secs = Duration::as_secs_f64;
    Ok(StudyReport {
        config: config.clone(),
        case_name: case.name.clone(),
        hours,
        timing: TimingBreakdown {
            label: search.label().into(),
            case: case.name.clone(),
            scenarios: scenarios.len(),
            epsilon: search.epsilon,
            m: search.m,
            depth_limit: search.depth_limit,
            nodes,
            scenario_generation: 0.0,
            sampling: secs(&phases.sampling),
            dcpf: secs(&phases.dcpf),
            dcopf: secs(&phases.dcopf),
            total: secs(&total),
        },
        lsd: ctx.lsd_stats(),
    })
}
