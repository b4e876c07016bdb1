//! Line status dictionary (LSD): per line state, the GSDF matrix and the
//! critical regions of the re-dispatch LP visited so far.
//!
//! A critical region is identified by the optimal active set `Ã` of a
//! solved LP. Because costs never change, the multipliers of that basis stay
//! dual feasible for every `φ`; whenever the affine point
//! `x = Ã⁻¹(b̃ + F̃φ)` also satisfies the inactive rows it is optimal, and
//! the LP solve collapses to one matrix-vector product and a feasibility
//! sweep.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::case::CaseData;
use crate::dispatch::{self, DispatchLp, DispatchOptions, DispatchSolution};
use crate::error::{Error, Result};
use crate::gsdf::{build_gsdf, woodbury_update, GsdfMatrix, SusceptanceSystem};

/// Residual allowed on inactive rows by the region test (MW). The test is
/// closed: points on a region boundary are accepted, which is sound since
/// the stored basis stays optimal there.
pub const REGION_TOLERANCE: f64 = 1e-9;
/// Largest `|Ã Ã⁻¹ - I|` accepted when storing a region.
pub const INVERSE_TOLERANCE: f64 = 1e-8;
/// Every `AUDIT_PERIOD`-th region hit is re-checked for dual feasibility
/// and complementary slackness.
pub const AUDIT_PERIOD: u64 = 100;
const FORMAT_VERSION: u32 = 1;

/// Packed binary line state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineStateKey {
    bits: Vec<u64>,
    len: usize,
}

impl LineStateKey {
    pub fn from_state(state: &[bool]) -> Self {
        let mut bits = vec![0u64; state.len().div_ceil(64)];
        for (i, &up) in state.iter().enumerate() {
            if up {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        LineStateKey {
            bits,
            len: state.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_up(&self, line: usize) -> bool {
        self.bits[line / 64] >> (line % 64) & 1 == 1
    }

    pub fn to_state(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.is_up(i)).collect()
    }

    /// Lines out of service, ascending.
    pub fn outages(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| !self.is_up(i)).collect()
    }

    /// Lines in service here but not in `other`, if `other` is a
    /// sub-state (every line up in `other` is up here).
    pub fn removals_to(&self, other: &LineStateKey) -> Option<Vec<usize>> {
        if self.len != other.len {
            return None;
        }
        let mut removed = Vec::new();
        for (w, (a, b)) in self.bits.iter().zip(&other.bits).enumerate() {
            if b & !a != 0 {
                return None;
            }
            let mut diff = a & !b;
            while diff != 0 {
                let bit = diff.trailing_zeros() as usize;
                removed.push(w * 64 + bit);
                diff &= diff - 1;
            }
        }
        Some(removed)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let state = text
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::Parse(format!("bad line state character '{c}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LineStateKey::from_state(&state))
    }
}

impl fmt::Display for LineStateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.is_up(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One critical region: an optimal basis of the LP of its line state.
#[derive(Debug)]
pub struct CriticalRegion {
    active: Vec<usize>,
    inverse: Vec<f64>,
    b_tilde: Vec<f64>,
    multipliers: Vec<f64>,
    hits: AtomicU64,
}

impl Clone for CriticalRegion {
    fn clone(&self) -> Self {
        CriticalRegion {
            active: self.active.clone(),
            inverse: self.inverse.clone(),
            b_tilde: self.b_tilde.clone(),
            multipliers: self.multipliers.clone(),
            hits: AtomicU64::new(self.hits.load(Ordering::Relaxed)),
        }
    }
}

impl CriticalRegion {
    /// Region of an optimal solution (its active set must be a square,
    /// invertible basis). Returns `None` for degenerate active sets.
    pub fn from_solution(lp: &DispatchLp, sol: &DispatchSolution) -> Option<Self> {
        CriticalRegion::from_active(lp, &sol.active_set)
    }

    /// Region for a given active set: `Ã` is assembled and inverted here.
    pub fn from_active(lp: &DispatchLp, active: &[usize]) -> Option<Self> {
        let n = lp.n_vars();
        if active.len() != n || active.iter().any(|&r| r >= lp.n_rows()) {
            return None;
        }
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (p, &r) in active.iter().enumerate() {
            for (j, v) in lp.row_dense(r).into_iter().enumerate() {
                a[(p, j)] = v;
            }
        }
        let inv = a.clone().try_inverse()?;
        let err = (&a * &inv - nalgebra::DMatrix::<f64>::identity(n, n)).amax();
        if !(err <= INVERSE_TOLERANCE) {
            return None;
        }
        let mut inverse = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                inverse[i * n + j] = inv[(i, j)];
            }
        }
        // μ = -Ã⁻ᵀ c
        let mut multipliers = vec![0.0; n];
        for (i, c) in lp.cost().iter().enumerate() {
            for (j, m) in multipliers.iter_mut().enumerate() {
                *m -= c * inverse[i * n + j];
            }
        }
        let bal = lp.balance_row();
        if active
            .iter()
            .zip(&multipliers)
            .any(|(&r, &m)| r != bal && m < -dispatch::simplex::DUAL_TOLERANCE)
        {
            return None;
        }
        Some(CriticalRegion {
            active: active.to_vec(),
            b_tilde: active.iter().map(|&r| lp.base_rhs(r)).collect(),
            inverse,
            multipliers,
            hits: AtomicU64::new(0),
        })
    }

    pub fn active_indices(&self) -> &[usize] {
        &self.active
    }

    pub fn b_tilde(&self) -> &[f64] {
        &self.b_tilde
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// `Ã⁻¹` as a matrix (columns follow `active_indices`).
    pub fn a_tilde_inverse(&self) -> nalgebra::DMatrix<f64> {
        let n = self.active.len();
        nalgebra::DMatrix::from_row_slice(n, n, &self.inverse)
    }

    /// `F̃`: parameter map restricted to the active rows.
    pub fn f_tilde(&self, lp: &DispatchLp) -> nalgebra::DMatrix<f64> {
        let rows: Vec<Vec<f64>> = self.active.iter().map(|&r| lp.f_row(r)).collect();
        let p = lp.n_params();
        nalgebra::DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
    }

    /// `Ã⁻¹ (b̃ + F̃ φ)` from a precomputed full right-hand side.
    fn affine_point(&self, rhs: &[f64], x: &mut [f64]) {
        dispatch::simplex::primal(&self.inverse, self.active.len(), &self.active, rhs, x);
    }

    fn accepts(lp: &DispatchLp, x: &[f64], rhs: &[f64], res: &mut [f64]) -> bool {
        lp.residuals_into(x, rhs, res);
        let bal = lp.balance_row();
        res.iter()
            .enumerate()
            .all(|(r, &v)| if r == bal { v.abs() <= REGION_TOLERANCE } else { v <= REGION_TOLERANCE })
    }

    /// Does `φ` lie in this region (inactive rows satisfied at the affine
    /// point, within [`REGION_TOLERANCE`])?
    pub fn region_test(&self, lp: &DispatchLp, phi: &[f64]) -> bool {
        let rhs = lp.rhs_all(phi);
        let mut x = vec![0.0; lp.n_vars()];
        self.affine_point(&rhs, &mut x);
        let mut res = vec![0.0; lp.n_rows()];
        CriticalRegion::accepts(lp, &x, &rhs, &mut res)
    }

    /// Affine solution at `φ`; meaningful when [`region_test`] holds.
    ///
    /// [`region_test`]: CriticalRegion::region_test
    pub fn affine_solve(&self, lp: &DispatchLp, phi: &[f64]) -> DispatchSolution {
        let rhs = lp.rhs_all(phi);
        let mut x = vec![0.0; lp.n_vars()];
        self.affine_point(&rhs, &mut x);
        DispatchSolution::from_x(lp, &x, self.active.clone(), self.multipliers.clone())
    }

    /// Certificate check: `c + Ãᵀμ = 0`, `μ ≥ 0`, and `μ_i · slack_i ≈ 0`.
    pub fn audit(&self, lp: &DispatchLp, sol: &DispatchSolution, phi: &[f64], tol: f64) -> bool {
        let mut r = lp.cost().to_vec();
        let bal = lp.balance_row();
        let x = sol.x();
        for (&row, &mu) in self.active.iter().zip(&self.multipliers) {
            if row != bal && mu < -tol {
                return false;
            }
            let a = lp.row_dense(row);
            for (ri, ai) in r.iter_mut().zip(&a) {
                *ri += mu * ai;
            }
            let slack = lp.rhs(row, phi) - crate::gsdf::dot(&a, &x);
            if (mu * slack).abs() > tol {
                return false;
            }
        }
        r.iter().all(|v| v.abs() <= tol)
    }
}

/// Cached data for one line state.
#[derive(Debug)]
pub struct LsdEntry {
    key: LineStateKey,
    lp: Arc<DispatchLp>,
    regions: RwLock<Vec<Arc<CriticalRegion>>>,
    last_used: AtomicU64,
}

impl LsdEntry {
    fn new(key: LineStateKey, lp: Arc<DispatchLp>) -> Self {
        LsdEntry {
            key,
            lp,
            regions: RwLock::new(Vec::new()),
            last_used: AtomicU64::new(0),
        }
    }

    pub fn key(&self) -> &LineStateKey {
        &self.key
    }

    pub fn gsdf(&self) -> &Arc<GsdfMatrix> {
        self.lp.gsdf()
    }

    pub fn lp(&self) -> &Arc<DispatchLp> {
        &self.lp
    }

    pub fn n_regions(&self) -> usize {
        self.regions.read().unwrap().len()
    }

    /// Snapshot of the regions in scan (most recently used first) order.
    pub fn regions(&self) -> Vec<Arc<CriticalRegion>> {
        self.regions.read().unwrap().clone()
    }

    fn insert_region(&self, region: CriticalRegion) -> bool {
        let mut regions = self.regions.write().unwrap();
        if regions.iter().any(|r| r.active == region.active) {
            return false;
        }
        regions.insert(0, Arc::new(region));
        true
    }

    fn promote(&self, region: &Arc<CriticalRegion>) {
        let mut regions = self.regions.write().unwrap();
        if let Some(i) = regions.iter().position(|r| Arc::ptr_eq(r, region)) {
            if i > 0 {
                let r = regions.remove(i);
                regions.insert(0, r);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LsdOptions {
    /// Store and reuse critical regions (off: GSDF storage only).
    pub regions: bool,
    /// Derive new GSDF matrices by Woodbury updates from a cached state.
    pub woodbury: bool,
    /// Evict the least recently used entry beyond this many line states.
    pub max_entries: Option<usize>,
}

impl Default for LsdOptions {
    fn default() -> Self {
        LsdOptions {
            regions: true,
            woodbury: true,
            max_entries: None,
        }
    }
}

/// Counters reported after a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LsdStats {
    pub entries: usize,
    pub regions: usize,
    pub gsdf_hits: u64,
    pub gsdf_misses: u64,
    pub region_hits: u64,
    pub region_misses: u64,
    pub degenerate_skips: u64,
    pub evictions: u64,
    pub audits: u64,
    pub audit_failures: u64,
    pub baseline_seconds: f64,
    pub affine_seconds: f64,
    /// Estimate: region hits priced at the mean baseline solve time, minus
    /// the time spent in region scans.
    pub seconds_saved: f64,
}

#[derive(Debug, Default)]
struct Counters {
    gsdf_hits: AtomicU64,
    gsdf_misses: AtomicU64,
    region_hits: AtomicU64,
    region_misses: AtomicU64,
    degenerate: AtomicU64,
    evictions: AtomicU64,
    audits: AtomicU64,
    audit_failures: AtomicU64,
    baseline_ns: AtomicU64,
    affine_ns: AtomicU64,
    clock: AtomicU64,
}

/// The dictionary. Shared across workers; lookups take read locks and
/// insertions are serialized.
#[derive(Debug)]
pub struct Lsd {
    case: Arc<CaseData>,
    sys: Arc<SusceptanceSystem>,
    dispatch: DispatchOptions,
    options: LsdOptions,
    entries: RwLock<HashMap<LineStateKey, Arc<LsdEntry>>>,
    insert_lock: Mutex<()>,
    counters: Counters,
}

impl Lsd {
    pub fn new(case: Arc<CaseData>, dispatch: DispatchOptions, options: LsdOptions) -> Result<Self> {
        let all = vec![true; case.n_lines()];
        let sys = Arc::new(SusceptanceSystem::new(&case, &all)?);
        Ok(Lsd::with_system(case, sys, dispatch, options))
    }

    pub fn with_system(
        case: Arc<CaseData>,
        sys: Arc<SusceptanceSystem>,
        dispatch: DispatchOptions,
        options: LsdOptions,
    ) -> Self {
        Lsd {
            case,
            sys,
            dispatch,
            options,
            entries: RwLock::new(HashMap::new()),
            insert_lock: Mutex::new(()),
            counters: Counters::default(),
        }
    }

    pub fn case(&self) -> &Arc<CaseData> {
        &self.case
    }

    pub fn options(&self) -> &LsdOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &LineStateKey) -> Option<Arc<LsdEntry>> {
        let e = self.entries.read().unwrap().get(key).cloned();
        if let Some(e) = &e {
            e.last_used.store(self.tick(), Ordering::Relaxed);
        }
        e
    }

    fn tick(&self) -> u64 {
        self.counters.clock.fetch_add(1, Ordering::Relaxed)
    }

    fn insert(&self, entry: LsdEntry) -> Arc<LsdEntry> {
        let _guard = self.insert_lock.lock().unwrap();
        let mut entries = self.entries.write().unwrap();
        if let Some(e) = entries.get(&entry.key) {
            return e.clone();
        }
        if let Some(max) = self.options.max_entries {
            while entries.len() >= max.max(1) {
                let victim = entries
                    .iter()
                    .min_by_key(|(k, e)| (e.last_used.load(Ordering::Relaxed), (*k).clone()))
                    .map(|(k, _)| k.clone());
                match victim {
                    Some(k) => {
                        entries.remove(&k);
                        self.counters.evictions.fetch_add(1, Ordering::Relaxed);
                    }
                    None => break,
                }
            }
        }
        entry.last_used.store(self.tick(), Ordering::Relaxed);
        let e = Arc::new(entry);
        entries.insert(e.key.clone(), e.clone());
        e
    }

    fn make_entry(&self, key: LineStateKey, gsdf: GsdfMatrix) -> Result<LsdEntry> {
        let lp = DispatchLp::new(&self.case, Arc::new(gsdf), &self.dispatch)?;
        Ok(LsdEntry::new(key, Arc::new(lp)))
    }

    /// Entry for `key`, building Ψ on a miss from the cached state needing
    /// the fewest extra removals (Woodbury) or from scratch.
    pub fn lookup_or_build(&self, key: &LineStateKey) -> Result<Arc<LsdEntry>> {
        if let Some(e) = self.get(key) {
            self.counters.gsdf_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(e);
        }
        self.counters.gsdf_misses.fetch_add(1, Ordering::Relaxed);
        let gsdf = if self.options.woodbury {
            let ancestor = {
                let entries = self.entries.read().unwrap();
                entries
                    .values()
                    .filter_map(|e| e.key.removals_to(key).map(|r| (r, e.clone())))
                    .min_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.1.key.cmp(&b.1.key)))
            };
            match ancestor {
                Some((removed, e)) => woodbury_update(&self.sys, e.gsdf(), &removed)?,
                None => {
                    let base = self.sys.gsdf();
                    woodbury_update(&self.sys, &base, &key.outages())?
                }
            }
        } else {
            build_gsdf(&self.case, &key.to_state())?
        };
        Ok(self.insert(self.make_entry(key.clone(), gsdf)?))
    }

    /// Entry for the state reached from `parent` by removing `removed`.
    /// The parent's Ψ seeds the Woodbury update on a miss.
    pub fn child(&self, parent: &GsdfMatrix, removed: &[usize]) -> Result<Arc<LsdEntry>> {
        let mut state = parent.line_state().to_vec();
        for &r in removed {
            state[r] = false;
        }
        let key = LineStateKey::from_state(&state);
        if let Some(e) = self.get(&key) {
            self.counters.gsdf_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(e);
        }
        self.counters.gsdf_misses.fetch_add(1, Ordering::Relaxed);
        let gsdf = if self.options.woodbury {
            woodbury_update(&self.sys, parent, removed)?
        } else {
            build_gsdf(&self.case, &state)?
        };
        Ok(self.insert(self.make_entry(key, gsdf)?))
    }

    /// Solve the re-dispatch LP of `entry` at `φ`, through a stored region
    /// when one contains `φ`, otherwise by the baseline solver (storing the
    /// new region).
    pub fn solve(&self, entry: &LsdEntry, phi: &[f64]) -> Result<DispatchSolution> {
        let lp = &entry.lp;
        if self.options.regions {
            let start = Instant::now();
            let rhs = lp.rhs_all(phi);
            let mut x = vec![0.0; lp.n_vars()];
            let mut res = vec![0.0; lp.n_rows()];
            let regions = entry.regions.read().unwrap();
            let mut hit = None;
            for (i, region) in regions.iter().enumerate() {
                region.affine_point(&rhs, &mut x);
                if CriticalRegion::accepts(lp, &x, &rhs, &mut res) {
                    hit = Some((i, region.clone()));
                    break;
                }
            }
            drop(regions);
            self.counters
                .affine_ns
                .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
            if let Some((i, region)) = hit {
                let n = region.hits.fetch_add(1, Ordering::Relaxed) + 1;
                let sol = DispatchSolution::from_x(
                    lp,
                    &x,
                    region.active.clone(),
                    region.multipliers.clone(),
                );
                let audited = n % AUDIT_PERIOD == 0;
                if audited {
                    self.counters.audits.fetch_add(1, Ordering::Relaxed);
                }
                if !audited || region.audit(lp, &sol, phi, 1e-6) {
                    self.counters.region_hits.fetch_add(1, Ordering::Relaxed);
                    if i > 0 {
                        entry.promote(&region);
                    }
                    return Ok(sol);
                }
                self.counters.audit_failures.fetch_add(1, Ordering::Relaxed);
                log::warn!("region audit failed on state {}; re-solving", entry.key);
            }
            self.counters.region_misses.fetch_add(1, Ordering::Relaxed);
        }
        let start = Instant::now();
        let sol = dispatch::solve_baseline(lp, phi);
        self.counters
            .baseline_ns
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        let sol = sol?;
        if self.options.regions {
            match CriticalRegion::from_solution(lp, &sol) {
                Some(region) => {
                    entry.insert_region(region);
                }
                None => {
                    self.counters.degenerate.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
        Ok(sol)
    }

    pub fn stats(&self) -> LsdStats {
        let entries = self.entries.read().unwrap();
        let c = &self.counters;
        let baseline = c.baseline_ns.load(Ordering::Relaxed) as f64 * 1e-9;
        let affine = c.affine_ns.load(Ordering::Relaxed) as f64 * 1e-9;
        let misses = c.region_misses.load(Ordering::Relaxed);
        let hits = c.region_hits.load(Ordering::Relaxed);
        let per_solve = if misses > 0 { baseline / misses as f64 } else { 0.0 };
        LsdStats {
            entries: entries.len(),
            regions: entries.values().map(|e| e.n_regions()).sum(),
            gsdf_hits: c.gsdf_hits.load(Ordering::Relaxed),
            gsdf_misses: c.gsdf_misses.load(Ordering::Relaxed),
            region_hits: hits,
            region_misses: misses,
            degenerate_skips: c.degenerate.load(Ordering::Relaxed),
            evictions: c.evictions.load(Ordering::Relaxed),
            audits: c.audits.load(Ordering::Relaxed),
            audit_failures: c.audit_failures.load(Ordering::Relaxed),
            baseline_seconds: baseline,
            affine_seconds: affine,
            seconds_saved: hits as f64 * per_solve - affine,
        }
    }

    /// Persist line states and region active sets. Matrices are rebuilt on
    /// load, so the file stays small and independent of round-off.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let entries = self.entries.read().unwrap();
        let mut list: Vec<SavedEntry> = entries
            .values()
            .map(|e| SavedEntry {
                state: e.key.to_string(),
                regions: e.regions().iter().map(|r| r.active.clone()).collect(),
            })
            .collect();
        list.sort_by(|a, b| a.state.cmp(&b.state));
        let file = SavedLsd {
            version: FORMAT_VERSION,
            case: self.case.name.clone(),
            n_lines: self.case.n_lines(),
            n_buses: self.case.n_buses(),
            gen_nonnegative: self.dispatch.gen_nonnegative,
            entries: list,
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Parse(format!("serializing dictionary: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Load entries saved by [`Lsd::save`] into this dictionary.
    pub fn load(&self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SavedLsd = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if file.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "dictionary format version {} (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        if file.n_lines != self.case.n_lines()
            || file.n_buses != self.case.n_buses()
            || file.gen_nonnegative != self.dispatch.gen_nonnegative
        {
            return Err(Error::Validation(format!(
                "dictionary was built for a different case or dispatch form ({})",
                file.case
            )));
        }
        let mut loaded = 0;
        for saved in file.entries {
            let key = LineStateKey::parse(&saved.state)?;
            let entry = self.lookup_or_build(&key)?;
            for active in saved.regions.iter().rev() {
                if let Some(r) = CriticalRegion::from_active(&entry.lp, active) {
                    entry.insert_region(r);
                }
            }
            loaded += 1;
        }
        Ok(loaded)
    }
}

#[derive(Serialize, Deserialize)]
struct SavedEntry {
    state: String,
    regions: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct SavedLsd {
    version: u32,
    case: String,
    n_lines: usize,
    n_buses: usize,
    gen_nonnegative: bool,
    entries: Vec<SavedEntry>,
}

/// GSDF lookup through the dictionary.
pub fn lookup_or_build_gsdf(lsd: &Lsd, key: &LineStateKey) -> Result<Arc<GsdfMatrix>> {
    Ok(lsd.lookup_or_build(key)?.gsdf().clone())
}

/// Solve a dispatch problem through the dictionary.
pub fn solve_dcopf_accelerated(
    lsd: &Lsd,
    problem: &dispatch::DispatchProblem,
) -> Result<DispatchSolution> {
    let key = LineStateKey::from_state(problem.lp.line_state());
    let entry = lsd.lookup_or_build(&key)?;
    lsd.solve(&entry, &problem.phi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures;

    fn two_bus_lp() -> (CaseData, Arc<DispatchLp>) {
        let case = fixtures::two_bus(100.0, 80.0, 50.0);
        let gsdf = Arc::new(build_gsdf(&case, &[true]).unwrap());
        let lp = Arc::new(DispatchLp::new(&case, gsdf, &DispatchOptions::default()).unwrap());
        (case, lp)
    }

    #[test]
    fn key_round_trip() {
        let state = vec![true, false, true, true, false];
        let key = LineStateKey::from_state(&state);
        assert_eq!(key.to_state(), state);
        assert_eq!(key.to_string(), "10110");
        assert_eq!(LineStateKey::parse("10110").unwrap(), key);
        assert_eq!(key.outages(), vec![1, 4]);
        let all = LineStateKey::from_state(&[true; 5]);
        assert_eq!(all.removals_to(&key), Some(vec![1, 4]));
        assert_eq!(key.removals_to(&all), None);
    }

    #[test]
    fn two_bus_region() {
        let (_, lp) = two_bus_lp();
        let phi80 = lp.phi(&[100.0], &[true], &[0.0, 80.0]);
        let sol = dispatch::solve_baseline(&lp, &phi80).unwrap();
        let region = CriticalRegion::from_solution(&lp, &sol).unwrap();
        assert!(region.region_test(&lp, &phi80));
        let same = region.affine_solve(&lp, &phi80);
        for (a, b) in same.x().iter().zip(sol.x()) {
            assert!((a - b).abs() < 1e-9);
        }

        let phi79 = lp.phi(&[100.0], &[true], &[0.0, 79.0]);
        assert!(region.region_test(&lp, &phi79));
        let aff = region.affine_solve(&lp, &phi79);
        assert!((aff.shedding[1] - 29.0).abs() < 1e-9);
        assert!((aff.injections[0] - 50.0).abs() < 1e-9);
        let full = dispatch::solve_baseline(&lp, &phi79).unwrap();
        assert!((aff.objective - full.objective).abs() < 1e-9);
        assert!(region.audit(&lp, &aff, &phi79, 1e-6));

        // below the line limit the shedding row would have to go negative
        let phi40 = lp.phi(&[100.0], &[true], &[0.0, 40.0]);
        assert!(!region.region_test(&lp, &phi40));
        let full = dispatch::solve_baseline(&lp, &phi40).unwrap();
        assert_ne!(full.active_set, region.active_indices());
    }

    #[test]
    fn accelerated_solve_hits_on_repeat() {
        let case = Arc::new(fixtures::five_bus());
        let lsd = Lsd::new(case.clone(), DispatchOptions::default(), LsdOptions::default()).unwrap();
        let key = LineStateKey::from_state(&vec![true; case.n_lines()]);
        let entry = lsd.lookup_or_build(&key).unwrap();
        let caps: Vec<f64> = case.generators.iter().map(|g| g.p_max).collect();
        let loads: Vec<f64> = case.buses.iter().map(|b| b.base_load).collect();
        let phi = entry.lp().phi(&caps, &[true; 3], &loads);
        let a = lsd.solve(&entry, &phi).unwrap();
        let b = lsd.solve(&entry, &phi).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
        let s = lsd.stats();
        assert_eq!((s.region_hits, s.region_misses), (1, 1));
        assert_eq!(s.entries, 1);
        let again = lsd.lookup_or_build(&key).unwrap();
        assert!(Arc::ptr_eq(&again, &entry));
        assert_eq!(lsd.stats().gsdf_hits, 1);
    }

    #[test]
    fn nearest_ancestor_update_matches_scratch() {
        let case = Arc::new(fixtures::five_bus());
        let lsd = Lsd::new(case.clone(), DispatchOptions::default(), LsdOptions::default()).unwrap();
        let mut s = vec![true; case.n_lines()];
        s[0] = false;
        lsd.lookup_or_build(&LineStateKey::from_state(&s)).unwrap();
        s[5] = false;
        let psi = lookup_or_build_gsdf(&lsd, &LineStateKey::from_state(&s)).unwrap();
        let scratch = build_gsdf(&case, &s).unwrap();
        assert!(psi.max_abs_diff(&scratch) < 1e-8);
    }

    #[test]
    fn lru_eviction() {
        let case = Arc::new(fixtures::five_bus());
        let opts = LsdOptions {
            max_entries: Some(2),
            ..Default::default()
        };
        let lsd = Lsd::new(case.clone(), DispatchOptions::default(), opts).unwrap();
        for k in 0..4 {
            let mut s = vec![true; case.n_lines()];
            s[k] = false;
            lsd.lookup_or_build(&LineStateKey::from_state(&s)).unwrap();
        }
        assert_eq!(lsd.len(), 2);
        assert_eq!(lsd.stats().evictions, 2);
    }
}
