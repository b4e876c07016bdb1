//! Hourly wind and load scenarios.
//!
//! Wind follows a latent Gaussian AR(1) process per farm,
//! `z_t = a z_{t-1} + sqrt(1 - a²) L ε_t`, with `L Lᵀ` the configured
//! cross-farm correlation. Each latent value is mapped through the standard
//! normal CDF onto a Weibull wind speed, scaled by diurnal and monthly
//! multipliers and converted to power with a cubic power curve. Loads are
//! the case's bus loads scaled by an hourly profile.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::case::{rts79, CaseData};
use crate::error::{Error, Result};

const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Hour number, from 0.
    pub index: usize,
    /// Available output per wind generator, in case order (MW).
    pub wind_output: Vec<f64>,
    /// Load per bus (MW).
    pub load: Vec<f64>,
    /// Latent standard-normal value per wind generator.
    pub latent: Vec<f64>,
    /// Seed of the stream that produced this hour.
    pub rng_seed: u64,
}

impl Scenario {
    pub fn total_load(&self) -> f64 {
        self.load.iter().sum()
    }

    pub fn total_wind(&self) -> f64 {
        self.wind_output.iter().sum()
    }

    /// Per-generator capacities: nameplate for conventional units, this
    /// hour's available output for wind units.
    pub fn generator_caps(&self, case: &CaseData) -> Vec<f64> {
        let mut wind = self.wind_output.iter();
        case.generators
            .iter()
            .map(|g| {
                if g.is_wind() {
                    *wind.next().unwrap_or(&0.0)
                } else {
                    g.p_max
                }
            })
            .collect()
    }

    /// Peak-hour scenario without wind variation: base loads, wind at
    /// `wind_fraction` of capacity.
    pub fn peak(case: &CaseData, wind_fraction: f64) -> Self {
        let wind: Vec<f64> = case
            .generators
            .iter()
            .filter(|g| g.is_wind())
            .map(|g| g.p_max * wind_fraction)
            .collect();
        Scenario {
            index: 0,
            latent: vec![0.0; wind.len()],
            wind_output: wind,
            load: case.buses.iter().map(|b| b.base_load).collect(),
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,
}

impl Default for PowerCurve {
    fn default() -> Self {
        PowerCurve {
            cut_in: 3.0,
            rated: 12.0,
            cut_out: 25.0,
        }
    }
}

impl PowerCurve {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.cut_in && self.cut_in < self.rated && self.rated < self.cut_out) {
            return Err(Error::WindModel(format!(
                "power curve needs 0 <= cut-in < rated < cut-out, got {} / {} / {}",
                self.cut_in, self.rated, self.cut_out
            )));
        }
        Ok(())
    }

    /// Fraction of rated power at wind speed `v` (m/s).
    pub fn fraction(&self, v: f64) -> f64 {
        if v < self.cut_in || v >= self.cut_out {
            0.0
        } else if v >= self.rated {
            1.0
        } else {
            let c3 = self.cut_in.powi(3);
            (v.powi(3) - c3) / (self.rated.powi(3) - c3)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindModelConfig {
    /// Correlation of the latent process between farms (wind generators in
    /// case order).
    pub correlation: Vec<Vec<f64>>,
    pub weibull_shape: Vec<f64>,
    pub weibull_scale: Vec<f64>,
    pub ar_coefficient: f64,
    /// Speed multiplier per hour of day.
    pub diurnal_profile: Vec<f64>,
    /// Speed multiplier per month (hour `h` falls in month `h * 12 / 8760`).
    pub seasonal_profile: Vec<f64>,
    pub power_curve: PowerCurve,
}

/// Diurnal shape: stronger winds at night, a trough in early afternoon.
pub const DEFAULT_DIURNAL: [f64; 24] = [
    1.10, 1.11, 1.12, 1.12, 1.11, 1.09, 1.05, 1.00, 0.95, 0.91, 0.88, 0.86, 0.85, 0.85, 0.86,
    0.88, 0.91, 0.95, 0.99, 1.03, 1.06, 1.08, 1.09, 1.10,
];
/// Monthly shape: windier winter and spring, calm late summer.
pub const DEFAULT_SEASONAL: [f64; 12] = [
    1.12, 1.10, 1.12, 1.08, 1.00, 0.92, 0.86, 0.84, 0.90, 0.98, 1.05, 1.10,
];

impl WindModelConfig {
    /// Identical farms with the given correlation matrix.
    pub fn uniform(correlation: Vec<Vec<f64>>) -> Self {
        let n = correlation.len();
        WindModelConfig {
            correlation,
            weibull_shape: vec![2.0; n],
            weibull_scale: vec![8.5; n],
            ar_coefficient: 0.9,
            diurnal_profile: DEFAULT_DIURNAL.to_vec(),
            seasonal_profile: DEFAULT_SEASONAL.to_vec(),
            power_curve: PowerCurve::default(),
        }
    }

    /// Correlation `within` inside each region and `across` between regions;
    /// `region[i]` labels farm `i`.
    pub fn regional(region: &[usize], within: f64, across: f64) -> Self {
        let n = region.len();
        let corr = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            1.0
                        } else if region[i] == region[j] {
                            within
                        } else {
                            across
                        }
                    })
                    .collect()
            })
            .collect();
        WindModelConfig::uniform(corr)
    }

    /// The RTS-79 wind study: farms at buses 1 and 2 form one region and
    /// those at 18, 21, 23 another; 0.6 within, 0.2 across.
    pub fn rts79() -> Self {
        let region: Vec<usize> = rts79::WIND_BUSES
            .iter()
            .map(|&b| usize::from(b > 10))
            .collect();
        WindModelConfig::regional(&region, 0.6, 0.2)
    }

    pub fn n_farms(&self) -> usize {
        self.correlation.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_farms();
        if self.weibull_shape.len() != n || self.weibull_scale.len() != n {
            return Err(Error::WindModel("one Weibull shape and scale per farm".into()));
        }
        if self.correlation.iter().any(|r| r.len() != n) {
            return Err(Error::WindModel("correlation matrix must be square".into()));
        }
        for i in 0..n {
            if (self.correlation[i][i] - 1.0).abs() > 1e-12 {
                return Err(Error::WindModel("correlation diagonal must be 1".into()));
            }
            for j in 0..i {
                if (self.correlation[i][j] - self.correlation[j][i]).abs() > 1e-12 {
                    return Err(Error::WindModel("correlation matrix must be symmetric".into()));
                }
            }
        }
        if self.weibull_shape.iter().chain(&self.weibull_scale).any(|&v| !(v > 0.0)) {
            return Err(Error::WindModel("Weibull parameters must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::WindModel("AR coefficient must lie in [0, 1)".into()));
        }
        if self.diurnal_profile.len() != 24 {
            return Err(Error::WindModel("diurnal profile needs 24 entries".into()));
        }
        if self.seasonal_profile.is_empty() {
            return Err(Error::WindModel("seasonal profile is empty".into()));
        }
        self.power_curve.validate()
    }
}

/// Lower-triangular `L` with `L Lᵀ = C` for positive semidefinite `C`.
/// Zero pivots are allowed when the rest of their column vanishes.
pub fn psd_cholesky(c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = c.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = c[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -PSD_TOLERANCE {
            return Err(Error::NotPsd);
        }
        let pivot = if d > PSD_TOLERANCE { d.sqrt() } else { 0.0 };
        l[j][j] = pivot;
        for i in j + 1..n {
            let s = c[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if pivot == 0.0 {
                if s.abs() > 1e-8 {
                    return Err(Error::NotPsd);
                }
            } else {
                l[i][j] = s / pivot;
            }
        }
    }
    Ok(l)
}

/// Bus loads at `fraction` of the system peak.
pub fn scaled_loads(case: &CaseData, fraction: f64) -> Vec<f64> {
    let base = case.total_base_load();
    let scale = if base > 0.0 { case.peak_load / base } else { 0.0 };
    case.buses
        .iter()
        .map(|b| (b.base_load * scale * fraction).max(0.0))
        .collect()
}

/// Generate `count` hourly scenarios. `load_profile` holds per-hour
/// fractions of peak load and is used cyclically.
pub fn generate_scenarios(
    case: &CaseData,
    wind: &WindModelConfig,
    load_profile: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    let farms: Vec<f64> = case
        .generators
        .iter()
        .filter(|g| g.is_wind())
        .map(|g| g.p_max)
        .collect();
    if !farms.is_empty() {
        wind.validate()?;
        if wind.n_farms() != farms.len() {
            return Err(Error::WindModel(format!(
                "wind model has {} farms, case has {} wind generators",
                wind.n_farms(),
                farms.len()
            )));
        }
    }
    if count > 0 && load_profile.is_empty() {
        return Err(Error::Config("load profile is empty".into()));
    }
    let n = farms.len();
    let chol = if n > 0 { psd_cholesky(&wind.correlation)? } else { Vec::new() };
    let normal = Normal::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - wind.ar_coefficient.powi(2)).sqrt();
    let mut z = vec![0.0; n];
    let mut eps = vec![0.0; n];
    let mut out = Vec::with_capacity(count);
    for hour in 0..count {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            let shock: f64 = (0..=i).map(|k| chol[i][k] * eps[k]).sum();
            z[i] = if hour == 0 {
                shock
            } else {
                wind.ar_coefficient * z[i] + innovation * shock
            };
        }
        let diurnal = if n > 0 { wind.diurnal_profile[hour % 24] } else { 1.0 };
        let seasonal = if n > 0 {
            let months = wind.seasonal_profile.len();
            wind.seasonal_profile[(hour % 8760) * months / 8760]
        } else {
            1.0
        };
        let wind_output = (0..n)
            .map(|i| {
                let u = normal.cdf(z[i]).clamp(0.0, 1.0 - 1e-16);
                let speed = wind.weibull_scale[i] * (-(1.0 - u).ln()).powf(1.0 / wind.weibull_shape[i]);
                let fraction = wind.power_curve.fraction(speed * diurnal * seasonal);
                (farms[i] * fraction).clamp(0.0, farms[i])
            })
            .collect();
        out.push(Scenario {
            index: hour,
            wind_output,
            load: scaled_loads(case, load_profile[hour % load_profile.len()]),
            latent: z.clone(),
            rng_seed: seed,
        });
    }
    Ok(out)
}

/// Generate with the bundled RTS-79 hourly load shape.
pub fn generate_rts79_year(
    case: &CaseData,
    wind: &WindModelConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    generate_scenarios(case, wind, &rts79::hourly_load_profile(), count, seed)
}

/// Pearson correlation matrix of the latent wind process.
pub fn empirical_correlation(scenarios: &[Scenario]) -> Result<Vec<Vec<f64>>> {
    if scenarios.len() < 2 {
        return Err(Error::Degenerate("need at least two scenarios".into()));
    }
    let n = scenarios[0].latent.len();
    if n < 2 {
        return Err(Error::Degenerate("need at least two wind farms".into()));
    }
    let t = scenarios.len() as f64;
    let mean: Vec<f64> = (0..n)
        .map(|i| scenarios.iter().map(|s| s.latent[i]).sum::<f64>() / t)
        .collect();
    let mut cov = vec![vec![0.0; n]; n];
    for s in scenarios {
        for i in 0..n {
            for j in 0..=i {
                cov[i][j] += (s.latent[i] - mean[i]) * (s.latent[j] - mean[j]);
            }
        }
    }
    let sd: Vec<f64> = (0..n).map(|i| cov[i][i].sqrt()).collect();
    if sd.iter().any(|&v| v <= 0.0) {
        return Err(Error::Degenerate("constant latent series".into()));
    }
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let r = cov[i][j] / (sd[i] * sd[j]);
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    Ok(corr)
}

/// Columnar text: `hour,seed,wind_1..,latent_1..,load_1..` with values in
/// shortest round-trip form, so a replay reproduces the run exactly.
pub fn scenarios_to_csv(scenarios: &[Scenario], n_farms: usize, n_buses: usize) -> String {
    let mut s = String::from("hour,seed");
    for i in 1..=n_farms {
        let _ = write!(s, ",wind_{i}");
    }
    for i in 1..=n_farms {
        let _ = write!(s, ",latent_{i}");
    }
    for i in 1..=n_buses {
        let _ = write!(s, ",load_{i}");
    }
    s.push('\n');
    for sc in scenarios {
        let _ = write!(s, "{},{}", sc.index, sc.rng_seed);
        for v in sc.wind_output.iter().chain(&sc.latent).chain(&sc.load) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn save_scenarios(path: impl AsRef<Path>, scenarios: &[Scenario], case: &CaseData) -> Result<()> {
    let path = path.as_ref();
    let farms = case.generators.iter().filter(|g| g.is_wind()).count();
    std::fs::write(path, scenarios_to_csv(scenarios, farms, case.n_buses()))
        .map_err(|e| Error::io(path, e))
}

pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty scenario file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "hour" || cols[1] != "seed" {
        return Err(Error::Parse("scenario header must start with hour,seed".into()));
    }
    let count = |prefix: &str| cols.iter().filter(|c| c.starts_with(prefix)).count();
    let (nw, nl, nb) = (count("wind_"), count("latent_"), count("load_"));
    if nw != nl || 2 + nw + nl + nb != cols.len() {
        return Err(Error::Parse("unexpected scenario columns".into()));
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(Error::Parse(format!("row {}: {} fields", row + 2, f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number '{s}'", row + 2)))
        };
        let vals = f[2..].iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?;
        out.push(Scenario {
            index: f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad hour", row + 2)))?,
            rng_seed: f[1]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad seed", row + 2)))?,
            wind_output: vals[..nw].to_vec(),
            latent: vals[nw..2 * nw].to_vec(),
            load: vals[2 * nw..].to_vec(),
        });
    }
    Ok(out)
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| Error::io(path, e))?);
        text.push('\n');
    }
    parse_scenarios(&text)
}
