//! Feasibility sweeps over `(M, N, d)` grids, boundary extraction and
//! bound curves for plotting.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    decomposition_dof_per_user, decomposition_per_user_at, gamma_critical, optimal_sdof_two_cell_at,
    prior_outer_at, proper_test, usap_downlink_necessary, usap_uplink_necessary, xnet_outer_at,
    xnet_outer_bound, prior_outer_bound,
};
use crate::network::{ChannelSet, DofDemand, NetworkConfig};
use crate::numerics::TolerancePolicy;
use crate::structured::build_two_cell_design;
use crate::usap::{sub_seed, usap};
use crate::verify::Direction;
use crate::Rational;

/// Largest antenna count a sweep may range over.
pub const MAX_GRID: usize = 200;
/// Desk-scale default for `M_max` and `N_max`.
pub const DESK_SCALE: usize = 30;
/// Full-scale grid size.
pub const FULL_SCALE: usize = 75;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("M_max and N_max must lie in 1..={MAX_GRID}, got ({0}, {1})")]
    GridTooLarge(usize, usize),
    #[error("seeds per point must be in 1..=255, got {0}")]
    Seeds(usize),
    #[error("invalid network: {0}")]
    Config(#[from] crate::network::ConfigError),
    #[error("scheme {0} needs G = 2 and K in {{2, 3}}")]
    StructuredScope(Scheme),
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("checkpoint: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    UsapUplink,
    UsapDownlink,
    Structured,
    BoundsOnly,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::UsapUplink => "usap-uplink",
            Scheme::UsapDownlink => "usap-downlink",
            Scheme::Structured => "structured",
            Scheme::BoundsOnly => "bounds-only",
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Scheme::UsapDownlink => Direction::Downlink,
            _ => Direction::Uplink,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "usap-uplink" => Ok(Scheme::UsapUplink),
            "usap-downlink" => Ok(Scheme::UsapDownlink),
            "structured" => Ok(Scheme::Structured),
            "bounds-only" => Ok(Scheme::BoundsOnly),
            other => Err(SweepError::UnknownScheme(other.to_string())),
        }
    }
}

/// Optional restriction of the grid to a sub-region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Strictly below the decomposition inner bound and strictly above the
    /// random-beamforming line `d = N/(GK)`.
    BelowDecomposition,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub g: usize,
    pub k: usize,
    pub m_max: usize,
    pub n_max: usize,
    pub seeds: usize,
    pub scheme: Scheme,
    /// Root of every per-trial seed.
    pub base_seed: u64,
    /// Drop the scheme's necessary condition from the gates, so points where
    /// the linear system has no solution are tried as well.
    pub relax_usap_gate: bool,
    pub region: Option<Region>,
    /// Record wall time per point. Off by default so that CSV output is
    /// byte-identical across runs.
    pub record_timing: bool,
    pub checkpoint: Option<PathBuf>,
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub tolerance: TolerancePolicy,
}

impl SweepSpec {
    pub fn new(g: usize, k: usize, m_max: usize, n_max: usize, scheme: Scheme) -> Self {
        Self {
            g,
            k,
            m_max,
            n_max,
            seeds: 3,
            scheme,
            base_seed: 0,
            relax_usap_gate: false,
            region: None,
            record_timing: false,
            checkpoint: None,
            output: None,
            tolerance: TolerancePolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(1..=MAX_GRID).contains(&self.m_max) || !(1..=MAX_GRID).contains(&self.n_max) {
            return Err(SweepError::GridTooLarge(self.m_max, self.n_max));
        }
        if !(1..=255).contains(&self.seeds) {
            return Err(SweepError::Seeds(self.seeds));
        }
        NetworkConfig::new(self.g, self.k, 1, 1)?;
        if self.scheme == Scheme::Structured && (self.g != 2 || !matches!(self.k, 2 | 3)) {
            return Err(SweepError::StructuredScope(self.scheme));
        }
        Ok(())
    }

    /// Whether `(M, N, d)` passes every gate of this spec.
    pub fn admissible(&self, m: usize, n: usize, d: usize) -> bool {
        let Ok(cfg) = NetworkConfig::new(self.g, self.k, m, n) else {
            return false;
        };
        let Ok(dd) = DofDemand::new(d) else {
            return false;
        };
        let gk = self.g * self.k;
        let l = dd.alignment_equations(&cfg);
        let scheme_gate = match self.scheme {
            Scheme::UsapDownlink => usap_downlink_necessary(&cfg, dd),
            _ => usap_uplink_necessary(&cfg, dd),
        };
        let base = l > 0
            && (self.relax_usap_gate || scheme_gate)
            && d <= m
            && self.k * d <= n
            && m < gk * d
            && m.gcd(&n).gcd(&d) == 1
            && proper_test(&cfg, dd);
        base && match self.region {
            None => true,
            Some(Region::BelowDecomposition) => {
                Rational::from_integer(d as i64) < decomposition_dof_per_user(&cfg).value()
            }
        }
    }
}

/// Every admissible `(M, N, d)`, ordered lexicographically.
///
/// For the structured scheme the grid is every `(M, N)` pair; `d` is then
/// decided by the design and the returned value is a placeholder `0`.
pub fn enumerate_grid(spec: &SweepSpec) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for m in 1..=spec.m_max {
        for n in 1..=spec.n_max {
            if spec.scheme == Scheme::Structured {
                out.push((m, n, 0));
                continue;
            }
            for d in 1..=m.min(n) {
                if spec.admissible(m, n, d) {
                    out.push((m, n, d));
                }
            }
        }
    }
    out
}

/// Extra per-point information kept in the checkpoint but not in the CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordDetail {
    pub seed_statuses: Vec<String>,
    /// Whether all seeds agreed on the status.
    pub agreement: bool,
    /// Total nullspace redraws over all seeds.
    pub redraws: usize,
    /// Seeds whose first nullspace draw already passed the identity test.
    pub first_draw_pit_pass: usize,
    pub nullity: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub max_leakage: Option<f64>,
    pub note: Option<String>,
}

/// One grid point after all seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub g: usize,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    /// Per-user streams. For structured designs this is the per-user count
    /// in the spatially extended network.
    pub d: usize,
    pub gamma: Rational,
    /// Per-user DoF over `N` in unextended units.
    pub dn: Rational,
    pub status: String,
    pub scheme: Scheme,
    pub seeds: usize,
    /// Largest alignment residual over seeds.
    pub residual: Option<f64>,
    /// Smallest identity-test singular-value ratio over seeds.
    pub min_sv: Option<f64>,
    pub time_ms: u64,
    #[serde(default)]
    pub detail: Option<RecordDetail>,
}

impl SweepRecord {
    pub fn is_success(&self) -> bool {
        self.status == "Success"
    }

    pub fn key(&self) -> (usize, usize, usize, Scheme) {
        (self.m, self.n, self.d, self.scheme)
    }
}

/// Row layout of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    #[serde(rename = "G")]
    pub g: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub gamma_num: i64,
    pub gamma_den: i64,
    #[serde(rename = "dN_num")]
    pub dn_num: i64,
    #[serde(rename = "dN_den")]
    pub dn_den: i64,
    pub status: String,
    pub scheme: Scheme,
    pub seeds: usize,
    pub residual: Option<f64>,
    pub min_sv: Option<f64>,
    pub time_ms: u64,
}

impl From<&SweepRecord> for CsvRow {
    fn from(r: &SweepRecord) -> Self {
        CsvRow {
            g: r.g,
            k: r.k,
            m: r.m,
            n: r.n,
            d: r.d,
            gamma_num: *r.gamma.numer(),
            gamma_den: *r.gamma.denom(),
            dn_num: *r.dn.numer(),
            dn_den: *r.dn.denom(),
            status: r.status.clone(),
            scheme: r.scheme,
            seeds: r.seeds,
            residual: r.residual,
            min_sv: r.min_sv,
            time_ms: r.time_ms,
        }
    }
}

impl From<CsvRow> for SweepRecord {
    fn from(r: CsvRow) -> Self {
        SweepRecord {
            g: r.g,
            k: r.k,
            m: r.m,
            n: r.n,
            d: r.d,
            gamma: Rational::new(r.gamma_num, r.gamma_den),
            dn: Rational::new(r.dn_num, r.dn_den),
            status: r.status,
            scheme: r.scheme,
            seeds: r.seeds,
            residual: r.residual,
            min_sv: r.min_sv,
            time_ms: r.time_ms,
            detail: None,
        }
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>, SweepError> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize::<CsvRow>()
        .map(|row| Ok(SweepRecord::from(row?)))
        .collect()
}

/// Seed of trial `s` at a grid point; independent of evaluation order.
pub fn trial_seed(spec: &SweepSpec, m: usize, n: usize, d: usize, s: usize) -> u64 {
    let a = sub_seed(spec.base_seed, (spec.g * 1000 + spec.k) as u64);
    let b = sub_seed(a, (m * 1000 + n) as u64);
    sub_seed(b, (d * 1000 + s) as u64)
}

fn ratio(a: usize, b: usize) -> Rational {
    Rational::new(a as i64, b as i64)
}

fn run_point(spec: &SweepSpec, m: usize, n: usize, d: usize) -> SweepRecord {
    let start = Instant::now();
    let cfg = NetworkConfig::new(spec.g, spec.k, m, n).expect("grid point has positive sizes");
    let mut rec = SweepRecord {
        g: spec.g,
        k: spec.k,
        m,
        n,
        d,
        gamma: ratio(m, n),
        dn: ratio(d, n),
        status: String::new(),
        scheme: spec.scheme,
        seeds: spec.seeds,
        residual: None,
        min_sv: None,
        time_ms: 0,
        detail: None,
    };
    let detail = match spec.scheme {
        Scheme::UsapUplink | Scheme::UsapDownlink => run_usap_point(spec, &cfg, &mut rec),
        Scheme::Structured => run_structured_point(spec, &cfg, &mut rec),
        Scheme::BoundsOnly => {
            rec.seeds = 0;
            rec.status = bounds_status(&cfg, d).to_string();
            RecordDetail { agreement: true, ..Default::default() }
        }
    };
    rec.detail = Some(detail);
    if spec.record_timing {
        rec.time_ms = start.elapsed().as_millis() as u64;
    }
    rec
}

fn fold_max(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

fn fold_min(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Collapses per-seed statuses: `Success` only if unanimous, otherwise the
/// first failing status.
fn unanimous(statuses: &[String]) -> (String, bool) {
    let agreement = statuses.windows(2).all(|w| w[0] == w[1]);
    let status = statuses
        .iter()
        .find(|s| s.as_str() != "Success")
        .or(statuses.first())
        .cloned()
        .unwrap_or_default();
    (status, agreement)
}

fn run_usap_point(spec: &SweepSpec, cfg: &NetworkConfig, rec: &mut SweepRecord) -> RecordDetail {
    let d = DofDemand::new(rec.d).expect("grid d is positive");
    let mut detail = RecordDetail::default();
    let mut statuses = Vec::with_capacity(spec.seeds);
    for s in 0..spec.seeds {
        let seed = trial_seed(spec, rec.m, rec.n, rec.d, s);
        let ch = ChannelSet::generate(*cfg, sub_seed(seed, 1 << 32));
        let out = usap(&ch, d, spec.scheme.direction(), seed, &spec.tolerance);
        let diag = &out.diagnostics;
        rec.residual = fold_max(rec.residual, diag.residual);
        rec.min_sv = fold_min(rec.min_sv, diag.pit_min_ratio);
        detail.redraws += diag.redraws;
        if diag.first_draw_pit_pass == Some(true) {
            detail.first_draw_pit_pass += 1;
        }
        detail.nullity = Some(diag.nullity);
        detail.rows = Some(diag.rows);
        detail.cols = Some(diag.cols);
        let leak = diag.report.as_ref().and_then(|r| r.max_leakage);
        detail.max_leakage = fold_max(detail.max_leakage, leak);
        if detail.note.is_none() {
            detail.note = diag.note.clone();
        }
        statuses.push(out.status.as_str().to_string());
    }
    let (status, agreement) = unanimous(&statuses);
    rec.status = status;
    detail.agreement = agreement;
    detail.seed_statuses = statuses;
    detail
}

fn run_structured_point(spec: &SweepSpec, cfg: &NetworkConfig, rec: &mut SweepRecord) -> RecordDetail {
    let mut detail = RecordDetail::default();
    let mut statuses = Vec::with_capacity(spec.seeds);
    for s in 0..spec.seeds {
        let seed = trial_seed(spec, rec.m, rec.n, 0, s);
        match build_two_cell_design(cfg, seed, &spec.tolerance) {
            Ok(design) => {
                rec.d = design.beamformers.d().get();
                rec.dn = design.achieved_dof.value() / Rational::from_integer(rec.n as i64);
                let report = &design.report;
                let ok = report.pass && report.separable();
                detail.max_leakage = fold_max(detail.max_leakage, report.max_leakage);
                rec.residual = fold_max(rec.residual, report.max_leakage);
                statuses.push(if ok { "Success" } else { "AlignmentFailure" }.to_string());
            }
            Err(e) => {
                if detail.note.is_none() {
                    detail.note = Some(e.to_string());
                }
                statuses.push("DesignFailure".to_string());
            }
        }
    }
    let (status, agreement) = unanimous(&statuses);
    rec.status = status;
    detail.agreement = agreement;
    detail.seed_statuses = statuses;
    detail
}

/// Classification of `d` against the closed-form bounds: `Achievable` at or
/// below the decomposition inner bound, `Infeasible` above the tighter outer
/// bound, `Open` in between.
fn bounds_status(cfg: &NetworkConfig, d: usize) -> &'static str {
    let d = Rational::from_integer(d as i64);
    let inner = decomposition_dof_per_user(cfg).value();
    let mut outer = prior_outer_bound(cfg).value();
    if let Ok(x) = xnet_outer_bound(cfg) {
        outer = outer.min(x.value());
    }
    if d <= inner {
        "Achievable"
    } else if d > outer {
        "Infeasible"
    } else {
        "Open"
    }
}

/// Appends records as JSON lines; tolerates a torn final line left by an
/// interrupted run.
struct Checkpoint {
    file: Mutex<File>,
}

impl Checkpoint {
    fn open(path: &Path) -> Result<(Self, Vec<SweepRecord>), SweepError> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        let mut done = Vec::new();
        for line in BufReader::new(&file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<SweepRecord>(&line) {
                Ok(r) => done.push(r),
                Err(e) => log::warn!("skipping unreadable checkpoint line: {e}"),
            }
        }
        let len = file.seek(SeekFrom::End(0))?;
        if len > 0 {
            let mut last = [0u8; 1];
            let mut f = File::open(path)?;
            f.seek(SeekFrom::Start(len - 1))?;
            f.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
            }
        }
        Ok((Self { file: Mutex::new(file) }, done))
    }

    fn append(&self, rec: &SweepRecord) -> Result<(), SweepError> {
        let mut line = serde_json::to_string(rec).expect("records serialize");
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

/// Runs the spec's scheme on every grid point, in parallel, and returns
/// records sorted by `(M, N, d)`.
///
/// With a checkpoint path, completed points are read back and skipped and
/// each new record is appended as soon as it is done.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>, SweepError> {
    spec.validate()?;
    let grid = enumerate_grid(spec);
    let (ckpt, mut done) = match &spec.checkpoint {
        Some(p) => {
            let (c, d) = Checkpoint::open(p)?;
            (Some(c), d)
        }
        None => (None, Vec::new()),
    };
    done.retain(|r| r.scheme == spec.scheme && r.g == spec.g && r.k == spec.k);
    // Structured points are keyed by (M, N) since d is an output.
    let done_keys: HashSet<(usize, usize, usize)> = done
        .iter()
        .map(|r| (r.m, r.n, if spec.scheme == Scheme::Structured { 0 } else { r.d }))
        .collect();
    let in_grid: HashSet<(usize, usize, usize)> = grid.iter().copied().collect();
    let mut records: Vec<SweepRecord> = done
        .into_iter()
        .filter(|r| {
            let d = if spec.scheme == Scheme::Structured { 0 } else { r.d };
            in_grid.contains(&(r.m, r.n, d))
        })
        .collect();
    let todo: Vec<_> = grid.into_iter().filter(|p| !done_keys.contains(p)).collect();
    log::info!("sweep {}: {} points to run, {} resumed", spec.scheme, todo.len(), records.len());

    let fresh: Vec<Result<SweepRecord, SweepError>> = todo
        .par_iter()
        .map(|&(m, n, d)| {
            let rec = run_point(spec, m, n, d);
            if let Some(c) = &ckpt {
                c.append(&rec)?;
            }
            Ok(rec)
        })
        .collect();
    for r in fresh {
        records.push(r?);
    }
    // A resumed checkpoint may hold duplicates from an earlier interrupted run.
    records.sort_by_key(|r| (r.m, r.n, r.d));
    records.dedup_by_key(|r| (r.m, r.n, r.d));
    if let Some(path) = &spec.output {
        write_csv(&records, File::create(path)?)?;
    }
    Ok(records)
}

/// For each `γ` with at least one success, the largest successful `d/N`.
pub fn extract_boundary(records: &[SweepRecord]) -> Vec<(Rational, Rational)> {
    let mut best: BTreeMap<Rational, Rational> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_success()) {
        best.entry(r.gamma).and_modify(|v| *v = (*v).max(r.dn)).or_insert(r.dn);
    }
    best.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// A record whose point fails the spec's gates.
    Inadmissible { m: usize, n: usize, d: usize },
    /// Success at `d` but failure at a smaller admissible `d_fail`.
    NonMonotone { m: usize, n: usize, d_success: usize, d_fail: usize },
    SeedDisagreement { m: usize, n: usize, d: usize, statuses: Vec<String> },
}

/// Post-hoc checks: admissibility of every record, monotonicity in `d` at
/// fixed `(M, N)` and seed agreement.
pub fn check_records(spec: &SweepSpec, records: &[SweepRecord]) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.scheme != Scheme::Structured {
        for r in records {
            if !spec.admissible(r.m, r.n, r.d) {
                out.push(Violation::Inadmissible { m: r.m, n: r.n, d: r.d });
            }
        }
        let mut by_mn: BTreeMap<(usize, usize), Vec<&SweepRecord>> = BTreeMap::new();
        for r in records {
            by_mn.entry((r.m, r.n)).or_default().push(r);
        }
        for ((m, n), rs) in by_mn {
            let failed: Vec<usize> = rs.iter().filter(|r| !r.is_success()).map(|r| r.d).collect();
            for r in rs.iter().filter(|r| r.is_success()) {
                if let Some(&d_fail) = failed.iter().find(|&&f| f < r.d) {
                    out.push(Violation::NonMonotone { m, n, d_success: r.d, d_fail });
                }
            }
        }
    }
    for r in records {
        if let Some(det) = &r.detail {
            if !det.agreement {
                out.push(Violation::SeedDisagreement {
                    m: r.m,
                    n: r.n,
                    d: r.d,
                    statuses: det.seed_statuses.clone(),
                });
            }
        }
    }
    out
}

/// All reduced fractions `p/q` with `q ≤ max_den` and `0 < p/q ≤ gamma_max`,
/// ascending.
pub fn gamma_grid(max_den: i64, gamma_max: Rational) -> Vec<Rational> {
    let mut v: Vec<Rational> = (1..=max_den)
        .flat_map(|q| (1..).map(move |p| Rational::new(p, q)).take_while(move |r| *r <= gamma_max))
        .filter(|r| *r.denom() > 0)
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Bound values per `γ`, all normalized by `N` and per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub gamma: Rational,
    pub decomposition: Rational,
    pub proper: Rational,
    pub xnet_outer: Option<Rational>,
    pub prior_outer: Rational,
    pub mac_bc: Rational,
    /// `1/(K(G−γ))`, defined for `γ < G`.
    pub uplink_gate: Option<Rational>,
    /// `γ²/(GKγ−1)`, defined for `GKγ > 1`.
    pub downlink_gate: Option<Rational>,
    /// Optimal value for two-cell networks with `K ∈ {2, 3}`.
    pub optimal: Option<Rational>,
}

pub fn emit_bound_curves(g: usize, k: usize, gammas: &[Rational]) -> Vec<CurveRow> {
    let one = Rational::from_integer(1);
    let (gr, kr) = (Rational::from_integer(g as i64), Rational::from_integer(k as i64));
    gammas
        .iter()
        .map(|&gamma| CurveRow {
            gamma,
            decomposition: decomposition_per_user_at(g, k, gamma, one),
            proper: (gamma + 1) / (gr * kr + 1),
            xnet_outer: xnet_outer_at(g, k, gamma, one).ok(),
            prior_outer: prior_outer_at(g, k, gamma, one),
            mac_bc: gamma.min(one / kr),
            uplink_gate: (gamma < gr).then(|| one / (kr * (gr - gamma))),
            downlink_gate: (gr * kr * gamma > one).then(|| gamma * gamma / (gr * kr * gamma - 1)),
            optimal: if g == 2 { optimal_sdof_two_cell_at(k, gamma, one).ok() } else { None },
        })
        .collect()
}

#[derive(Serialize)]
struct CurveCsv {
    gamma_num: i64,
    gamma_den: i64,
    gamma: f64,
    decomposition: f64,
    proper: f64,
    xnet_outer: Option<f64>,
    prior_outer: f64,
    mac_bc: f64,
    uplink_gate: Option<f64>,
    downlink_gate: Option<f64>,
    optimal: Option<f64>,
    gamma_l: Option<f64>,
    gamma_r: Option<f64>,
}

fn f(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Writes curves as floats; the critical ratios `γ_l, γ_r` are repeated on
/// every row when they exist.
pub fn write_curves_csv<W: Write>(g: usize, k: usize, rows: &[CurveRow], out: W) -> Result<(), SweepError> {
    let crit = gamma_critical(g, k).ok();
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CurveCsv {
            gamma_num: *r.gamma.numer(),
            gamma_den: *r.gamma.denom(),
            gamma: f(r.gamma),
            decomposition: f(r.decomposition),
            proper: f(r.proper),
            xnet_outer: r.xnet_outer.map(f),
            prior_outer: f(r.prior_outer),
            mac_bc: f(r.mac_bc),
            uplink_gate: r.uplink_gate.map(f),
            downlink_gate: r.downlink_gate.map(f),
            optimal: r.optimal.map(f),
            gamma_l: crit.map(|c| c.0.to_f64()),
            gamma_r: crit.map(|c| c.1.to_f64()),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundaryCsv {
    gamma_num: i64,
    gamma_den: i64,
    #[serde(rename = "dN_num")]
    dn_num: i64,
    #[serde(rename = "dN_den")]
    dn_den: i64,
    gamma: f64,
    #[serde(rename = "dN")]
    dn: f64,
}

pub fn write_boundary_csv<W: Write>(boundary: &[(Rational, Rational)], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    for &(g, d) in boundary {
        w.serialize(BoundaryCsv {
            gamma_num: *g.numer(),
            gamma_den: *g.denom(),
            dn_num: *d.numer(),
            dn_den: *d.denom(),
            gamma: f(g),
            dn: f(d),
        })?;
    }
    w.flush()?;
    Ok(())
}
