//! Built-in IEEE RTS-79 data: topology, unit mix, reliability statistics and
//! the chronological load model.
//!
//! Unit numbering follows the usual bus order (synchronous condenser at bus
//! 14 excluded), 1-based:
//!
//! | ids   | bus | type |
//! |-------|-----|------|
//! | 1-2   | 1   | U20  |
//! | 3-4   | 1   | U76  |
//! | 5-6   | 2   | U20  |
//! | 7-8   | 2   | U76  |
//! | 9-11  | 7   | U100 |
//! | 12-14 | 13  | U197 |
//! | 15-19 | 15  | U12  |
//! | 20    | 15  | U155 |
//! | 21    | 16  | U155 |
//! | 22    | 18  | U400 |
//! | 23    | 21  | U400 |
//! | 24-29 | 22  | U50  |
//! | 30-31 | 23  | U155 |
//! | 32    | 23  | U350 |

use super::{Bus, CaseData, GenKind, Generator, Line};

/// Bus loads at the annual peak (MW), buses 1..24.
const BUS_LOAD: [f64; 24] = [
    108.0, 97.0, 180.0, 74.0, 71.0, 136.0, 125.0, 171.0, 175.0, 195.0, 0.0, 0.0, 265.0, 194.0,
    317.0, 100.0, 0.0, 333.0, 181.0, 128.0, 0.0, 0.0, 0.0, 0.0,
];

const REFERENCE_BUS: usize = 13;

/// (from, to, reactance p.u., rating MW, outages per year)
const BRANCHES: [(usize, usize, f64, f64, f64); 38] = [
    (1, 2, 0.0139, 175.0, 0.24),
    (1, 3, 0.2112, 175.0, 0.51),
    (1, 5, 0.0845, 175.0, 0.33),
    (2, 4, 0.1267, 175.0, 0.39),
    (2, 6, 0.1920, 175.0, 0.48),
    (3, 9, 0.1190, 175.0, 0.38),
    (3, 24, 0.0839, 400.0, 0.02),
    (4, 9, 0.1037, 175.0, 0.36),
    (5, 10, 0.0883, 175.0, 0.34),
    (6, 10, 0.0605, 175.0, 0.33),
    (7, 8, 0.0614, 175.0, 0.30),
    (8, 9, 0.1651, 175.0, 0.44),
    (8, 10, 0.1651, 175.0, 0.44),
    (9, 11, 0.0839, 400.0, 0.02),
    (9, 12, 0.0839, 400.0, 0.02),
    (10, 11, 0.0839, 400.0, 0.02),
    (10, 12, 0.0839, 400.0, 0.02),
    (11, 13, 0.0476, 500.0, 0.40),
    (11, 14, 0.0418, 500.0, 0.39),
    (12, 13, 0.0476, 500.0, 0.40),
    (12, 23, 0.0966, 500.0, 0.52),
    (13, 23, 0.0865, 500.0, 0.49),
    (14, 16, 0.0389, 500.0, 0.38),
    (15, 16, 0.0173, 500.0, 0.33),
    (15, 21, 0.0490, 500.0, 0.41),
    (15, 21, 0.0490, 500.0, 0.41),
    (15, 24, 0.0519, 500.0, 0.41),
    (16, 17, 0.0259, 500.0, 0.35),
    (16, 19, 0.0231, 500.0, 0.34),
    (17, 18, 0.0144, 500.0, 0.32),
    (17, 22, 0.1053, 500.0, 0.54),
    (18, 21, 0.0259, 500.0, 0.35),
    (18, 21, 0.0259, 500.0, 0.35),
    (19, 20, 0.0396, 500.0, 0.38),
    (19, 20, 0.0396, 500.0, 0.38),
    (20, 23, 0.0216, 500.0, 0.34),
    (20, 23, 0.0216, 500.0, 0.34),
    (21, 22, 0.0678, 500.0, 0.45),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitType {
    U12,
    U20,
    U50,
    U76,
    U100,
    U155,
    U197,
    U350,
    U400,
}

impl UnitType {
    pub fn capacity(self) -> f64 {
        match self {
            UnitType::U12 => 12.0,
            UnitType::U20 => 20.0,
            UnitType::U50 => 50.0,
            UnitType::U76 => 76.0,
            UnitType::U100 => 100.0,
            UnitType::U155 => 155.0,
            UnitType::U197 => 197.0,
            UnitType::U350 => 350.0,
            UnitType::U400 => 400.0,
        }
    }

    /// Mean time to failure (hours).
    pub fn mttf_hours(self) -> f64 {
        match self {
            UnitType::U12 => 2940.0,
            UnitType::U20 => 450.0,
            UnitType::U50 => 1980.0,
            UnitType::U76 => 1960.0,
            UnitType::U100 => 1200.0,
            UnitType::U155 => 960.0,
            UnitType::U197 => 950.0,
            UnitType::U350 => 1150.0,
            UnitType::U400 => 1100.0,
        }
    }

    /// Linear marginal cost ($/MWh).
    pub fn cost(self) -> f64 {
        match self {
            UnitType::U12 => 56.564,
            UnitType::U20 => 130.0,
            UnitType::U50 => 0.001,
            UnitType::U76 => 16.0811,
            UnitType::U100 => 43.6615,
            UnitType::U155 => 12.3883,
            UnitType::U197 => 48.5804,
            UnitType::U350 => 11.8495,
            UnitType::U400 => 4.4231,
        }
    }
}

/// (bus, type) for units 1..32.
pub const UNITS: [(usize, UnitType); 32] = {
    use UnitType::*;
    [
        (1, U20),
        (1, U20),
        (1, U76),
        (1, U76),
        (2, U20),
        (2, U20),
        (2, U76),
        (2, U76),
        (7, U100),
        (7, U100),
        (7, U100),
        (13, U197),
        (13, U197),
        (13, U197),
        (15, U12),
        (15, U12),
        (15, U12),
        (15, U12),
        (15, U12),
        (15, U155),
        (16, U155),
        (18, U400),
        (21, U400),
        (22, U50),
        (22, U50),
        (22, U50),
        (22, U50),
        (22, U50),
        (22, U50),
        (23, U155),
        (23, U155),
        (23, U350),
    ]
};

/// Options for the built-in RTS-79 cases.
#[derive(Debug, Clone)]
pub struct Rts79Options {
    /// Length of one Markov step (hours); converts the historical failure
    /// rates into per-step probabilities `1 - exp(-rate * step)`.
    pub step_hours: f64,
    pub relay_threshold: f64,
    /// Multiplies every line rating.
    pub rating_scale: f64,
}

impl Default for Rts79Options {
    fn default() -> Self {
        Rts79Options {
            step_hours: DEFAULT_STEP_HOURS,
            relay_threshold: super::DEFAULT_RELAY_THRESHOLD,
            rating_scale: 1.0,
        }
    }
}

/// Default Markov step length: one minute.
pub const DEFAULT_STEP_HOURS: f64 = 1.0 / 60.0;

fn step_probability(rate_per_hour: f64, step_hours: f64) -> f64 {
    -(-rate_per_hour * step_hours).exp_m1()
}

fn lines(opts: &Rts79Options) -> Vec<Line> {
    BRANCHES
        .iter()
        .enumerate()
        .map(|(k, &(f, t, x, rating, outages))| Line {
            id: k + 1,
            from_bus: f,
            to_bus: t,
            reactance: x,
            flow_limit: rating * opts.rating_scale,
            relay_threshold: opts.relay_threshold,
            base_fail_prob: step_probability(outages / 8760.0, opts.step_hours),
        })
        .collect()
}

fn buses() -> Vec<Bus> {
    BUS_LOAD
        .iter()
        .enumerate()
        .map(|(i, &load)| Bus {
            id: i + 1,
            is_reference: i + 1 == REFERENCE_BUS,
            base_load: load,
        })
        .collect()
}

fn thermal_units(opts: &Rts79Options, removed: &[usize]) -> Vec<Generator> {
    UNITS
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(&(i + 1)))
        .map(|(_, &(bus, ty))| Generator {
            id: 0,
            bus,
            p_max: ty.capacity(),
            cost: ty.cost(),
            fail_prob: step_probability(1.0 / ty.mttf_hours(), opts.step_hours),
            kind: GenKind::Conventional,
        })
        .collect()
}

fn renumber(mut gens: Vec<Generator>) -> Vec<Generator> {
    for (i, g) in gens.iter_mut().enumerate() {
        g.id = i + 1;
    }
    gens
}

/// The original system: 24 buses, 38 lines, 32 units, 2850 MW peak.
pub fn case(opts: &Rts79Options) -> CaseData {
    CaseData::new(
        "rts79",
        100.0,
        buses(),
        lines(opts),
        renumber(thermal_units(opts, &[])),
        None,
        Some(2850.0),
    )
    .expect("built-in RTS-79 data is valid")
}

/// Buses hosting the five 340 MW wind farms.
pub const WIND_BUSES: [usize; 5] = [1, 2, 18, 21, 23];
pub const WIND_FARM_CAPACITY: f64 = 340.0;
/// Thermal units displaced by the wind farms: the two U76 at bus 1, the two
/// U76 at bus 2 and one U155 at bus 23 (152, 152 and 155 MW).
pub const DEFAULT_REMOVED_UNITS: [usize; 5] = [3, 4, 7, 8, 31];

/// RTS-79 with five wind farms replacing the units in
/// [`DEFAULT_REMOVED_UNITS`].
pub fn wind_case(opts: &Rts79Options) -> CaseData {
    wind_case_with_removed(opts, &DEFAULT_REMOVED_UNITS)
}

/// Wind variant with an explicit list of removed unit ids (1-based, in the
/// numbering of [`UNITS`]).
pub fn wind_case_with_removed(opts: &Rts79Options, removed: &[usize]) -> CaseData {
    let mut gens = thermal_units(opts, removed);
    for &bus in &WIND_BUSES {
        gens.push(Generator {
            id: 0,
            bus,
            p_max: WIND_FARM_CAPACITY,
            cost: 0.0,
            fail_prob: 0.0,
            kind: GenKind::Wind,
        });
    }
    CaseData::new(
        "rts79_wind",
        100.0,
        buses(),
        lines(opts),
        renumber(gens),
        None,
        Some(2850.0),
    )
    .expect("built-in RTS-79 wind data is valid")
}

/// Weekly peak as a percentage of the annual peak, weeks 1..52.
const WEEKLY_PEAK: [f64; 52] = [
    86.2, 90.0, 87.8, 83.4, 88.0, 84.1, 83.2, 80.6, 74.0, 73.7, 71.5, 72.7, 70.4, 75.0, 72.1, 80.0,
    75.4, 83.7, 87.0, 88.0, 85.6, 81.1, 90.0, 88.7, 89.6, 86.1, 75.5, 81.6, 80.1, 88.0, 72.2, 77.6,
    80.0, 72.9, 72.6, 70.5, 78.0, 69.5, 72.4, 72.4, 74.3, 74.4, 80.0, 88.1, 88.5, 90.9, 94.0, 89.0,
    94.2, 97.0, 100.0, 95.2,
];

/// Daily peak as a percentage of the weekly peak, Monday..Sunday.
const DAILY_PEAK: [f64; 7] = [93.0, 100.0, 98.0, 96.0, 94.0, 77.0, 75.0];

const WINTER_WEEKDAY: [f64; 24] = [
    67.0, 63.0, 60.0, 59.0, 59.0, 60.0, 74.0, 86.0, 95.0, 96.0, 96.0, 95.0, 95.0, 95.0, 93.0, 94.0,
    99.0, 100.0, 100.0, 96.0, 91.0, 83.0, 73.0, 63.0,
];
const WINTER_WEEKEND: [f64; 24] = [
    78.0, 72.0, 68.0, 66.0, 64.0, 65.0, 66.0, 70.0, 80.0, 88.0, 90.0, 91.0, 90.0, 88.0, 87.0, 87.0,
    91.0, 100.0, 99.0, 97.0, 94.0, 92.0, 87.0, 81.0,
];
const SUMMER_WEEKDAY: [f64; 24] = [
    64.0, 60.0, 58.0, 56.0, 56.0, 58.0, 64.0, 76.0, 87.0, 95.0, 99.0, 100.0, 99.0, 100.0, 100.0,
    97.0, 96.0, 96.0, 93.0, 92.0, 92.0, 93.0, 87.0, 72.0,
];
const SUMMER_WEEKEND: [f64; 24] = [
    74.0, 70.0, 66.0, 65.0, 64.0, 62.0, 62.0, 66.0, 81.0, 86.0, 91.0, 93.0, 93.0, 92.0, 91.0, 91.0,
    92.0, 94.0, 95.0, 95.0, 100.0, 93.0, 88.0, 80.0,
];
const SPRING_FALL_WEEKDAY: [f64; 24] = [
    63.0, 62.0, 60.0, 58.0, 59.0, 65.0, 72.0, 85.0, 95.0, 99.0, 100.0, 99.0, 93.0, 92.0, 90.0,
    88.0, 90.0, 92.0, 96.0, 98.0, 96.0, 90.0, 80.0, 70.0,
];
const SPRING_FALL_WEEKEND: [f64; 24] = [
    75.0, 73.0, 69.0, 66.0, 65.0, 65.0, 68.0, 74.0, 83.0, 89.0, 92.0, 94.0, 91.0, 90.0, 90.0, 86.0,
    85.0, 88.0, 92.0, 100.0, 97.0, 95.0, 90.0, 85.0,
];

/// Hourly system load as a fraction of the annual peak, 8760 values.
/// Day 365 reuses week 52.
pub fn hourly_load_profile() -> Vec<f64> {
    let mut out = Vec::with_capacity(8760);
    for day in 0..365 {
        let week = (day / 7).min(51);
        let weekday = day % 7;
        let weekend = weekday >= 5;
        // weeks are 1-based in the season definitions
        let w = week + 1;
        let hourly = if w <= 8 || w >= 44 {
            if weekend { &WINTER_WEEKEND } else { &WINTER_WEEKDAY }
        } else if (18..=30).contains(&w) {
            if weekend { &SUMMER_WEEKEND } else { &SUMMER_WEEKDAY }
        } else if weekend {
            &SPRING_FALL_WEEKEND
        } else {
            &SPRING_FALL_WEEKDAY
        };
        for h in hourly {
            out.push(WEEKLY_PEAK[week] / 100.0 * DAILY_PEAK[weekday] / 100.0 * h / 100.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn original_system_totals() {
        let c = case(&Rts79Options::default());
        assert_eq!(c.n_buses(), 24);
        assert_eq!(c.n_lines(), 38);
        assert_eq!(c.n_generators(), 32);
        assert_eq!(c.peak_load, 2850.0);
        assert!((c.total_base_load() - 2850.0).abs() < 1e-9);
        assert!((c.total_capacity() - 3405.0).abs() < 1e-9);
        assert_eq!(c.reference_index(), 12);
    }

    #[test]
    fn wind_variant_swaps_units() {
        let c = wind_case(&Rts79Options::default());
        let wind: Vec<_> = c.generators.iter().filter(|g| g.is_wind()).collect();
        assert_eq!(wind.len(), 5);
        assert_eq!(
            wind.iter().map(|g| g.bus).collect::<Vec<_>>(),
            WIND_BUSES.to_vec()
        );
        assert!(wind.iter().all(|g| g.p_max == 340.0 && g.fail_prob == 0.0));
        // 32 thermal - 5 displaced + 5 farms
        assert_eq!(c.n_generators(), 32);
        let thermal_at = |bus: usize| -> f64 {
            c.generators
                .iter()
                .filter(|g| g.bus == bus && !g.is_wind())
                .map(|g| g.p_max)
                .sum()
        };
        assert_eq!(thermal_at(1), 192.0 - 152.0);
        assert_eq!(thermal_at(2), 192.0 - 152.0);
        assert_eq!(thermal_at(23), 660.0 - 155.0);
        assert!((c.total_capacity() - (3405.0 - 459.0 + 1700.0)).abs() < 1e-9);
    }

    #[test]
    fn load_profile_shape() {
        let p = hourly_load_profile();
        assert_eq!(p.len(), 8760);
        let max = p.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x > 0.3 && x <= 1.0));
    }

    #[test]
    fn step_probabilities_are_small() {
        let c = case(&Rts79Options::default());
        assert!(c.lines.iter().all(|l| l.base_fail_prob > 0.0 && l.base_fail_prob < 1e-5));
        assert!(c.generators.iter().all(|g| g.fail_prob > 0.0 && g.fail_prob < 1e-3));
    }
}
