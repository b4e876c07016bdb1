use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use gridcascade::relay::TripMode;
use gridcascade::report::{self, emit_timing_comparison};
use gridcascade::study::{run_study, StudyConfig, BUILTIN_CASES};

/// Environment variable that overrides the output directory.
const OUT_ENV: &str = "GRIDCASCADE_OUT";

/// Search cascading-failure paths over hourly wind/load scenarios.
#[derive(Debug, Parser)]
#[command(name = "gridcascade", version)]
struct Args {
    /// TOML file with any of the settings below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in case (rts79, rts79_wind, five_bus), a TOML case file or a MATPOWER .m file.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Paths reported per scenario.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    hours: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth_limit: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Disable the line-state dictionary.
    #[arg(long)]
    no_lsd: bool,
    /// Rebuild distribution factors from scratch instead of updating them.
    #[arg(long)]
    no_woodbury: bool,
    /// Trip only the most overloaded line per relay iteration.
    #[arg(long)]
    sequential_trips: bool,
    /// Allow negative unit injections in the re-dispatch LP.
    #[arg(long)]
    literal_dispatch: bool,
    /// Markov step length for built-in cases (hours).
    #[arg(long)]
    step_hours: Option<f64>,
    #[arg(long)]
    relay_threshold: Option<f64>,
    #[arg(long)]
    rating_scale: Option<f64>,
    /// Replay scenarios from a CSV written with --save-scenarios.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    save_scenarios: bool,
    /// Output directory; GRIDCASCADE_OUT overrides the config file value.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Preload the dictionary from a file.
    #[arg(long)]
    lsd_load: Option<PathBuf>,
    /// Save the dictionary after the run.
    #[arg(long)]
    lsd_save: Option<PathBuf>,
    #[arg(long)]
    max_lsd_entries: Option<usize>,
    /// Run c1, c2 and c3 on the same workload and write a timing comparison.
    #[arg(long)]
    compare: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl Args {
    fn study_config(&self) -> Result<StudyConfig> {
        let mut c = match &self.config {
            Some(path) => StudyConfig::load(path)?,
            None => StudyConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        set!(case, epsilon, m, hours, seed, depth_limit, workers, step_hours, relay_threshold, rating_scale);
        if self.scenarios.is_some() {
            c.scenarios = self.scenarios.clone();
        }
        if self.lsd_load.is_some() {
            c.lsd_load = self.lsd_load.clone();
        }
        if self.lsd_save.is_some() {
            c.lsd_save = self.lsd_save.clone();
        }
        if self.max_lsd_entries.is_some() {
            c.max_lsd_entries = self.max_lsd_entries;
        }
        if self.no_lsd {
            c.lsd = false;
        }
        if self.no_woodbury {
            c.woodbury = false;
        }
        if self.sequential_trips {
            c.trip_mode = TripMode::Sequential;
        }
        if self.literal_dispatch {
            c.gen_nonnegative = false;
        }
        if self.save_scenarios {
            c.save_scenarios = true;
        }
        if let Some(out) = std::env::var_os(OUT_ENV) {
            c.out = out.into();
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if !BUILTIN_CASES.contains(&c.case.as_str()) && !std::path::Path::new(&c.case).exists() {
            bail!("unknown case `{}` (built-in cases: {})", c.case, BUILTIN_CASES.join(", "));
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(args: Args) -> Result<()> {
    let config = args.study_config()?;
    if args.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    if args.compare {
        let mut timings = Vec::new();
        for (lsd, woodbury) in [(false, false), (true, false), (true, true)] {
            let c = StudyConfig {
                lsd,
                woodbury,
                lsd_load: None,
                lsd_save: None,
                ..config.clone()
            };
            let r = run_study(&c)?;
            eprintln!("{}: {:.3} s", r.timing.label, r.timing.total);
            if lsd && woodbury {
                report::write_report(&r, &config.out)?;
            }
            timings.push(r.timing);
        }
        let table = emit_timing_comparison(&timings)?;
        let path = config.out.join("timing_comparison.txt");
        std::fs::write(&path, &table).with_context(|| format!("writing {}", path.display()))?;
        print!("{table}");
        return Ok(());
    }
    let r = run_study(&config)?;
    let files = report::write_report(&r, &config.out)?;
    let failed = r.failures().count();
    println!(
        "{} scenarios, {} paths, {} states in {:.3} s ({}) -> {}",
        r.hours.len(),
        r.n_paths(),
        r.timing.nodes,
        r.timing.total,
        r.timing.label,
        config.out.display()
    );
    if failed > 0 {
        eprintln!("{failed} scenarios failed; see {}", config.out.join(report::ERRORS_FILE).display());
    }
    log::debug!("wrote {:?}", files);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
