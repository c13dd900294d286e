//! Packing-ratio beamformer construction for two-cell networks with two or
//! three users per cell.
//!
//! A set of `s` beamformers from one cell whose images at the other BS span
//! `t` dimensions has packing ratio `s:t`. Each `γ = M/N` range uses one or
//! two kinds of sets, highest ratio first. Later stages work on effective
//! channels `H·W`, where `W` spans the complement of what a user already
//! transmits on.

use faer::Mat;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{optimal_sdof_two_cell, DofValue};
use crate::network::{ChannelSet, ConfigError, DofDemand, NetworkConfig};
use crate::numerics::{self, NumericsError, TolerancePolicy};
use crate::verify::{self, AlignmentReport, BeamformerSet, Direction, VerifyError};
use crate::{c64, CMat, Rational};

/// Largest spatial extension the builder accepts.
pub const MAX_EXTENSION: usize = 45;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructuredError {
    #[error("structured design needs G = 2 and K in {{2, 3}}, got {0}")]
    UnsupportedConfig(NetworkConfig),
    #[error("{ratio} sets: requested {requested}, only {available} available")]
    InsufficientOverlap {
        ratio: PackingRatio,
        requested: usize,
        available: usize,
    },
    #[error("user ({cell},{user}): requested {requested} vectors, only {available} dimensions available")]
    InsufficientNullspace {
        cell: usize,
        user: usize,
        requested: usize,
        available: usize,
    },
    #[error("user ({cell},{user}) has no unused transmit dimensions")]
    EmptyComplement { cell: usize, user: usize },
    #[error("{ratio} set occupies {rank} dimensions at the interfering BS")]
    PackingViolated { ratio: PackingRatio, rank: usize },
    #[error("extension factor {0} exceeds the cap")]
    ExtensionTooLarge(usize),
    #[error("designed beamformers fail alignment verification")]
    VerificationFailed(Box<AlignmentReport>),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// `s` beamformers occupying `t` dimensions at the interfering BS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingRatio {
    pub s: usize,
    pub t: usize,
}

impl std::fmt::Display for PackingRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.s, self.t)
    }
}

/// One set of beamformers from `cell`; each member is `(user, M×1 vector)`.
#[derive(Debug, Clone)]
pub struct PackingSet {
    pub ratio: PackingRatio,
    pub cell: usize,
    pub members: Vec<(usize, CMat)>,
}

/// Channels seen through per-user restriction matrices `W` with
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct EffectiveChannels {
    config: NetworkConfig,
    restrictions: Vec<CMat>,
    channels: Vec<CMat>,
}

impl EffectiveChannels {
    /// `W = I` for every user.
    pub fn identity(ch: &ChannelSet) -> Self {
        let cfg = *ch.config();
        Self {
            config: cfg,
            restrictions: (0..cfg.users()).map(|_| numerics::identity(cfg.m())).collect(),
            channels: ch.iter().map(|(_, h)| h.clone()).collect(),
        }
    }

    /// Effective user dimension `M′`.
    pub fn dim(&self, cell: usize, user: usize) -> usize {
        self.restriction(cell, user).ncols()
    }

    pub fn restriction(&self, cell: usize, user: usize) -> &CMat {
        &self.restrictions[self.config.user_index(cell, user)]
    }

    /// `H_(cell user, bs)·W_(cell user)`.
    pub fn channel(&self, cell: usize, user: usize, bs: usize) -> &CMat {
        &self.channels[self.config.user_index(cell, user) * self.config.g() + bs]
    }

    fn lift(&self, cell: usize, user: usize, x: faer::MatRef<'_, c64>) -> CMat {
        self.restriction(cell, user) * x
    }
}

/// Restricts every user to the orthogonal complement of the beamformers it
/// already uses (`designed`, indexed by flat user index, any column count).
pub fn restrict_complement(
    ch: &ChannelSet,
    designed: &[CMat],
    pol: &TolerancePolicy,
) -> Result<EffectiveChannels, StructuredError> {
    let cfg = *ch.config();
    let mut restrictions = Vec::with_capacity(cfg.users());
    let mut channels = Vec::with_capacity(cfg.users() * cfg.g());
    for (idx, v) in designed.iter().enumerate() {
        let (cell, user) = cfg.user_of(idx);
        let w = numerics::orth_complement(v, pol)?;
        if w.ncols() == 0 {
            return Err(StructuredError::EmptyComplement { cell, user });
        }
        for bs in 0..cfg.g() {
            channels.push(ch.channel(cell, user, bs) * &w);
        }
        restrictions.push(w);
    }
    Ok(EffectiveChannels {
        config: cfg,
        restrictions,
        channels,
    })
}

/// Block matrix from a grid of optional blocks; `None` is a zero block.
/// Row heights and column widths are given explicitly.
fn block_matrix(heights: &[usize], widths: &[usize], blocks: &[Vec<Option<&CMat>>]) -> CMat {
    let mut out = Mat::<c64>::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (bi, row) in blocks.iter().enumerate() {
        let mut c0 = 0;
        for (bj, b) in row.iter().enumerate() {
            if let Some(b) = b {
                out.as_mut()
                    .submatrix_mut(r0, c0, heights[bi], widths[bj])
                    .copy_from(b.as_ref());
            }
            c0 += widths[bj];
        }
        r0 += heights[bi];
    }
    out
}

fn negated(a: &CMat) -> CMat {
    a * faer::Scale(c64::new(-1.0, 0.0))
}

/// Checks the image of a set at the interfering BS and wraps it.
fn finish_set(
    eff: &EffectiveChannels,
    cell: usize,
    ratio: PackingRatio,
    coords: Vec<(usize, CMat)>,
    pol: &TolerancePolicy,
) -> Result<PackingSet, StructuredError> {
    let other = 1 - cell;
    let images: Vec<CMat> = coords
        .iter()
        .map(|(u, x)| eff.channel(cell, *u, other) * x)
        .collect();
    let floor = coords
        .iter()
        .map(|(u, x)| eff.channel(cell, *u, other).norm_l2() * x.norm_l2())
        .fold(0.0, f64::max);
    let refs: Vec<_> = images.iter().map(|m| m.as_ref()).collect();
    let image = numerics::hcat(eff.config.n(), &refs);
    let rank = numerics::numerical_rank_floored(image.as_ref(), floor, pol);
    if rank != ratio.t {
        return Err(StructuredError::PackingViolated { ratio, rank });
    }
    let members = coords
        .into_iter()
        .map(|(u, x)| (u, eff.lift(cell, u, x.as_ref())))
        .collect();
    Ok(PackingSet { ratio, cell, members })
}

/// Splits nullspace columns into per-user coordinate blocks.
fn split_sets(
    eff: &EffectiveChannels,
    cell: usize,
    users: &[usize],
    basis: &CMat,
    count: usize,
    ratio: PackingRatio,
    pol: &TolerancePolicy,
) -> Result<Vec<PackingSet>, StructuredError> {
    if count > basis.ncols() {
        return Err(StructuredError::InsufficientOverlap {
            ratio,
            requested: count,
            available: basis.ncols(),
        });
    }
    (0..count)
        .map(|j| {
            let mut offset = 0;
            let coords = users
                .iter()
                .map(|&u| {
                    let dim = eff.dim(cell, u);
                    let x = basis.as_ref().submatrix(offset, j, dim, 1).to_owned();
                    offset += dim;
                    (u, x)
                })
                .collect();
            finish_set(eff, cell, ratio, coords, pol)
        })
        .collect()
}

/// `count` sets for users `pair` of `cell` whose images at the other BS
/// coincide: nullspace of `[H̃_a, −H̃_b]`.
pub fn packing_2to1(
    eff: &EffectiveChannels,
    cell: usize,
    pair: (usize, usize),
    count: usize,
    pol: &TolerancePolicy,
) -> Result<Vec<PackingSet>, StructuredError> {
    let other = 1 - cell;
    let (a, b) = pair;
    let hb = negated(eff.channel(cell, b, other));
    let sys = numerics::hcat(
        eff.config.n(),
        &[eff.channel(cell, a, other).as_ref(), hb.as_ref()],
    );
    let basis = numerics::nullspace_basis(&sys, pol);
    split_sets(eff, cell, &[a, b], &basis, count, PackingRatio { s: 2, t: 1 }, pol)
}

/// `count` sets of three beamformers (one per user of `cell`, `K = 3`)
/// whose images at the other BS span two dimensions: nullspace of
/// `[H̃_1 H̃_2 H̃_3]`.
pub fn packing_3to2(
    eff: &EffectiveChannels,
    cell: usize,
    count: usize,
    pol: &TolerancePolicy,
) -> Result<Vec<PackingSet>, StructuredError> {
    let other = 1 - cell;
    let hs: Vec<_> = (0..3).map(|u| eff.channel(cell, u, other).as_ref()).collect();
    let sys = numerics::hcat(eff.config.n(), &hs);
    let basis = numerics::nullspace_basis(&sys, pol);
    split_sets(eff, cell, &[0, 1, 2], &basis, count, PackingRatio { s: 3, t: 2 }, pol)
}

/// `count` sets of three beamformers whose images at the other BS are
/// colinear: nullspace of `[[H̃_1 H̃_2 0], [0 H̃_2 H̃_3]]`.
pub fn packing_3to1(
    eff: &EffectiveChannels,
    cell: usize,
    count: usize,
    pol: &TolerancePolicy,
) -> Result<Vec<PackingSet>, StructuredError> {
    let other = 1 - cell;
    let n = eff.config.n();
    let h = |u| eff.channel(cell, u, other);
    let widths: Vec<usize> = (0..3).map(|u| eff.dim(cell, u)).collect();
    let sys = block_matrix(
        &[n, n],
        &widths,
        &[
            vec![Some(h(0)), Some(h(1)), None],
            vec![None, Some(h(1)), Some(h(2))],
        ],
    );
    let basis = numerics::nullspace_basis(&sys, pol);
    split_sets(eff, cell, &[0, 1, 2], &basis, count, PackingRatio { s: 3, t: 1 }, pol)
}

/// `count` beamformers for one user that vanish at the other BS.
pub fn zero_force_set(
    eff: &EffectiveChannels,
    cell: usize,
    user: usize,
    count: usize,
    pol: &TolerancePolicy,
) -> Result<Vec<PackingSet>, StructuredError> {
    let basis = numerics::nullspace_basis(eff.channel(cell, user, 1 - cell), pol);
    if count > basis.ncols() {
        return Err(StructuredError::InsufficientNullspace {
            cell,
            user,
            requested: count,
            available: basis.ncols(),
        });
    }
    (0..count)
        .map(|j| {
            let x = basis.as_ref().subcols(j, 1).to_owned();
            finish_set(eff, cell, PackingRatio { s: 1, t: 0 }, vec![(user, x)], pol)
        })
        .collect()
}

/// `count` random beamformers for one user in its effective space.
pub fn random_sets(
    eff: &EffectiveChannels,
    cell: usize,
    user: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
    pol: &TolerancePolicy,
) -> Result<Vec<PackingSet>, StructuredError> {
    let dim = eff.dim(cell, user);
    if count > dim {
        return Err(StructuredError::InsufficientNullspace {
            cell,
            user,
            requested: count,
            available: dim,
        });
    }
    (0..count)
        .map(|_| {
            let x = numerics::gaussian_matrix(rng, dim, 1);
            finish_set(eff, cell, PackingRatio { s: 1, t: 1 }, vec![(user, x)], pol)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    /// 1:1, one user.
    Random,
    /// 1:0, one user.
    ZeroForce,
    /// 2:1, a pair of users of one cell.
    Pair,
    /// 3:2, all three users of one cell.
    Triple32,
    /// 3:1, all three users of one cell.
    Triple31,
}

impl SetKind {
    pub fn ratio(self) -> PackingRatio {
        let (s, t) = match self {
            SetKind::Random => (1, 1),
            SetKind::ZeroForce => (1, 0),
            SetKind::Pair => (2, 1),
            SetKind::Triple32 => (3, 2),
            SetKind::Triple31 => (3, 1),
        };
        PackingRatio { s, t }
    }

    /// Units per cell a count applies to (users, pairs or the whole cell).
    fn units_per_cell(self, k: usize) -> usize {
        match self {
            SetKind::Random | SetKind::ZeroForce => k,
            SetKind::Pair => pairs(k).len(),
            SetKind::Triple32 | SetKind::Triple31 => 1,
        }
    }

    /// Beamformers each user receives per unit count.
    fn per_user(self, k: usize) -> usize {
        match self {
            SetKind::Pair => pairs(k).iter().filter(|p| p.0 == 0 || p.1 == 0).count(),
            _ => 1,
        }
    }
}

fn pairs(k: usize) -> &'static [(usize, usize)] {
    match k {
        2 => &[(0, 1)],
        _ => &[(0, 1), (0, 2), (1, 2)],
    }
}

/// Stage count per unit as `a·M + b·N`.
#[derive(Debug, Clone, Copy)]
struct Stage {
    kind: SetKind,
    a: (i64, i64),
    b: (i64, i64),
}

impl Stage {
    fn count(&self, m: usize, n: usize) -> Rational {
        Rational::new(self.a.0, self.a.1) * (m as i64) + Rational::new(self.b.0, self.b.1) * (n as i64)
    }
}

/// A `γ` interval and its stages.
struct Row {
    lo: (i64, i64, bool),
    hi: Option<(i64, i64, bool)>,
    stages: &'static [Stage],
}

const fn st(kind: SetKind, a: (i64, i64), b: (i64, i64)) -> Stage {
    Stage { kind, a, b }
}

use SetKind::*;

static ROWS_K2: [Row; 6] = [
    Row { lo: (0, 1, false), hi: Some((1, 4, false)), stages: &[st(Random, (1, 1), (0, 1))] },
    Row { lo: (1, 4, true), hi: Some((1, 2, true)), stages: &[st(Random, (0, 1), (1, 4))] },
    Row {
        lo: (1, 2, false),
        hi: Some((2, 3, false)),
        stages: &[st(Pair, (2, 1), (-1, 1)), st(Random, (-3, 2), (1, 1))],
    },
    Row { lo: (2, 3, true), hi: Some((1, 1, true)), stages: &[st(Pair, (0, 1), (1, 3))] },
    Row {
        lo: (1, 1, false),
        hi: Some((3, 2, false)),
        stages: &[st(ZeroForce, (1, 1), (-1, 1)), st(Pair, (-2, 3), (1, 1))],
    },
    Row { lo: (3, 2, true), hi: None, stages: &[st(ZeroForce, (0, 1), (1, 2))] },
];

static ROWS_K3: [Row; 10] = [
    Row { lo: (0, 1, false), hi: Some((1, 6, false)), stages: &[st(Random, (1, 1), (0, 1))] },
    Row { lo: (1, 6, true), hi: Some((1, 3, true)), stages: &[st(Random, (0, 1), (1, 6))] },
    Row {
        lo: (1, 3, false),
        hi: Some((2, 5, false)),
        stages: &[st(Triple32, (3, 1), (-1, 1)), st(Random, (-5, 2), (1, 1))],
    },
    Row { lo: (2, 5, true), hi: Some((1, 2, true)), stages: &[st(Triple32, (0, 1), (1, 5))] },
    Row {
        lo: (1, 2, false),
        hi: Some((5, 9, false)),
        stages: &[st(Pair, (2, 1), (-1, 1)), st(Triple32, (-18, 5), (2, 1))],
    },
    Row { lo: (5, 9, true), hi: Some((2, 3, true)), stages: &[st(Pair, (0, 1), (1, 9))] },
    Row {
        lo: (2, 3, false),
        hi: Some((3, 4, false)),
        stages: &[st(Triple31, (3, 1), (-2, 1)), st(Pair, (-4, 3), (1, 1))],
    },
    Row { lo: (3, 4, true), hi: Some((1, 1, true)), stages: &[st(Triple31, (0, 1), (1, 4))] },
    Row {
        lo: (1, 1, false),
        hi: Some((4, 3, false)),
        stages: &[st(ZeroForce, (1, 1), (-1, 1)), st(Triple31, (-3, 4), (1, 1))],
    },
    Row { lo: (4, 3, true), hi: None, stages: &[st(ZeroForce, (0, 1), (1, 3))] },
];

fn find_row(k: usize, gamma: Rational) -> (usize, &'static Row) {
    let rows: &'static [Row] = if k == 2 { &ROWS_K2 } else { &ROWS_K3 };
    let inside = |row: &Row| {
        let lo = Rational::new(row.lo.0, row.lo.1);
        let above = if row.lo.2 { gamma >= lo } else { gamma > lo };
        let below = match row.hi {
            None => true,
            Some((p, q, closed)) => {
                let hi = Rational::new(p, q);
                if closed {
                    gamma <= hi
                } else {
                    gamma < hi
                }
            }
        };
        above && below
    };
    rows.iter()
        .enumerate()
        .find(|(_, r)| inside(r))
        .expect("rows cover every positive γ")
}

/// Per-stage record of what was built, in extended units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub kind: SetKind,
    pub ratio: String,
    /// Sets per unit (user, pair or cell depending on `kind`).
    pub count_per_unit: usize,
    /// Sets per cell, comparable with the packing tables.
    pub sets_per_cell: usize,
    /// Smallest number of sets that could have been built for a unit.
    pub available_per_unit: usize,
}

#[derive(Debug, Clone)]
pub struct StructuredDesign {
    /// Unextended configuration.
    pub config: NetworkConfig,
    pub extension_factor: usize,
    /// 1-based index of the `γ` row used.
    pub row: usize,
    pub channels: ChannelSet,
    pub beamformers: BeamformerSet,
    pub ledger: Vec<LedgerEntry>,
    pub sets: Vec<PackingSet>,
    /// Per-user DoF in unextended units.
    pub achieved_dof: DofValue,
    pub report: AlignmentReport,
}

/// Smallest factor making every stage count and the per-user DoF integral.
pub fn extension_factor(k: usize, m: usize, n: usize) -> Result<usize, StructuredError> {
    let cfg = NetworkConfig::new(2, k, m, n)?;
    if !matches!(k, 2 | 3) {
        return Err(StructuredError::UnsupportedConfig(cfg));
    }
    let (_, row) = find_row(k, cfg.gamma());
    let dof = optimal_sdof_two_cell(k, m, n).expect("K checked").value();
    let q = row
        .stages
        .iter()
        .map(|s| *s.count(m, n).denom())
        .chain(std::iter::once(*dof.denom()))
        .fold(1i64, |acc, d| acc.lcm(&d)) as usize;
    if q > MAX_EXTENSION {
        return Err(StructuredError::ExtensionTooLarge(q));
    }
    Ok(q)
}

/// Builds aligned uplink beamformers for a `(2, K, M, N)` network with
/// `K ∈ {2, 3}` over channels drawn with `seed` for the extended network.
pub fn build_two_cell_design(
    cfg: &NetworkConfig,
    seed: u64,
    pol: &TolerancePolicy,
) -> Result<StructuredDesign, StructuredError> {
    if cfg.g() != 2 || !matches!(cfg.k(), 2 | 3) {
        return Err(StructuredError::UnsupportedConfig(*cfg));
    }
    let (k, m, n) = (cfg.k(), cfg.m(), cfg.n());
    let q = extension_factor(k, m, n)?;
    let ext = cfg.spatially_extend(q)?;
    let (row_idx, row) = find_row(k, cfg.gamma());
    let channels = ChannelSet::generate(ext, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let mut designed: Vec<CMat> = (0..ext.users()).map(|_| Mat::zeros(ext.m(), 0)).collect();
    let mut ledger = Vec::new();
    let mut sets = Vec::new();
    let mut eff = EffectiveChannels::identity(&channels);

    for (si, stage) in row.stages.iter().enumerate() {
        let count_r = stage.count(m, n) * (q as i64);
        debug_assert!(count_r.is_integer() && count_r >= Rational::zero());
        let count = count_r.to_integer() as usize;
        if count == 0 {
            continue;
        }
        if si > 0 {
            eff = restrict_complement(&channels, &designed, pol)?;
        }
        let mut available = usize::MAX;
        let mut stage_sets = Vec::new();
        for cell in 0..2 {
            match stage.kind {
                SetKind::Random => {
                    for u in 0..k {
                        available = available.min(eff.dim(cell, u));
                        stage_sets.extend(random_sets(&eff, cell, u, count, &mut rng, pol)?);
                    }
                }
                SetKind::ZeroForce => {
                    for u in 0..k {
                        available = available.min(eff.dim(cell, u).saturating_sub(ext.n()));
                        stage_sets.extend(zero_force_set(&eff, cell, u, count, pol)?);
                    }
                }
                SetKind::Pair => {
                    for &p in pairs(k) {
                        let (a, b) = (eff.dim(cell, p.0), eff.dim(cell, p.1));
                        available = available.min((a + b).saturating_sub(ext.n()));
                        stage_sets.extend(packing_2to1(&eff, cell, p, count, pol)?);
                    }
                }
                SetKind::Triple32 => {
                    let total: usize = (0..3).map(|u| eff.dim(cell, u)).sum();
                    available = available.min(total.saturating_sub(ext.n()));
                    stage_sets.extend(packing_3to2(&eff, cell, count, pol)?);
                }
                SetKind::Triple31 => {
                    let total: usize = (0..3).map(|u| eff.dim(cell, u)).sum();
                    available = available.min(total.saturating_sub(2 * ext.n()));
                    stage_sets.extend(packing_3to1(&eff, cell, count, pol)?);
                }
            }
        }
        for set in &stage_sets {
            for (u, v) in &set.members {
                let idx = ext.user_index(set.cell, *u);
                designed[idx] = numerics::hcat(ext.m(), &[designed[idx].as_ref(), v.as_ref()]);
            }
        }
        sets.extend(stage_sets);
        ledger.push(LedgerEntry {
            kind: stage.kind,
            ratio: stage.kind.ratio().to_string(),
            count_per_unit: count,
            sets_per_cell: count * stage.kind.units_per_cell(k),
            available_per_unit: available,
        });
    }

    let d_ext: usize = ledger
        .iter()
        .map(|e| e.count_per_unit * e.kind.per_user(k))
        .sum();
    debug_assert!(designed.iter().all(|v| v.ncols() == d_ext));
    let d = DofDemand::new(d_ext)?;
    let beamformers = BeamformerSet::new(ext, d, Direction::Uplink, designed, pol)?;
    let report = verify::verify_alignment(&channels, &beamformers, pol)?;
    if !report.pass {
        return Err(StructuredError::VerificationFailed(Box::new(report)));
    }
    let achieved = DofValue::ratio(d_ext, q);
    log::debug!(
        "structured {cfg}: row {}, extension {q}, d = {d_ext}, leakage {:?}",
        row_idx + 1,
        report.max_leakage
    );
    Ok(StructuredDesign {
        config: *cfg,
        extension_factor: q,
        row: row_idx + 1,
        channels,
        beamformers,
        ledger,
        sets,
        achieved_dof: achieved,
        report,
    })
}

impl StructuredDesign {
    /// Per-cell DoF in unextended units.
    pub fn dof_per_cell(&self) -> DofValue {
        self.achieved_dof.scale(Rational::from_integer(self.config.k() as i64))
    }

    /// Slack `available − used` of each ledger stage, per unit.
    pub fn slack(&self) -> Vec<i64> {
        self.ledger
            .iter()
            .map(|e| e.available_per_unit as i64 - e.count_per_unit as i64)
            .collect()
    }

    pub fn achieved_f64(&self) -> f64 {
        self.achieved_dof.value().to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn restriction_shapes() {
        let cfg = NetworkConfig::new(2, 2, 3, 4).unwrap();
        let ch = ChannelSet::generate(cfg, 1);
        let id = EffectiveChannels::identity(&ch);
        assert_eq!(id.dim(0, 0), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut designed: Vec<CMat> = (0..4).map(|_| Mat::zeros(3, 0)).collect();
        designed[0] = numerics::gaussian_matrix(&mut rng, 3, 1);
        let eff = restrict_complement(&ch, &designed, &pol()).unwrap();
        assert_eq!(eff.dim(0, 0), 2);
        assert_eq!(eff.channel(0, 0, 1).ncols(), 2);
        assert_eq!(eff.dim(1, 1), 3);
        designed[1] = numerics::gaussian_matrix(&mut rng, 3, 3);
        assert!(matches!(
            restrict_complement(&ch, &designed, &pol()),
            Err(StructuredError::EmptyComplement { cell: 0, user: 1 })
        ));
    }

    #[test]
    fn pair_sets_examples() {
        let cfg = NetworkConfig::new(2, 2, 3, 3).unwrap();
        let ch = ChannelSet::generate(cfg, 2);
        let eff = EffectiveChannels::identity(&ch);
        let sets = packing_2to1(&eff, 0, (0, 1), 1, &pol()).unwrap();
        assert_eq!(sets.len(), 1);
        assert!(matches!(
            packing_2to1(&eff, 0, (0, 1), 4, &pol()),
            Err(StructuredError::InsufficientOverlap { requested: 4, available: 3, .. })
        ));

        let cfg = NetworkConfig::new(2, 3, 6, 9).unwrap();
        let ch = ChannelSet::generate(cfg, 3);
        let eff = EffectiveChannels::identity(&ch);
        for &p in pairs(3) {
            assert_eq!(packing_2to1(&eff, 1, p, 3, &pol()).unwrap().len(), 3);
        }
    }

    #[test]
    fn triple_sets_examples() {
        let cfg = NetworkConfig::new(2, 3, 4, 10).unwrap();
        let ch = ChannelSet::generate(cfg, 4);
        let eff = EffectiveChannels::identity(&ch);
        assert_eq!(packing_3to2(&eff, 0, 2, &pol()).unwrap().len(), 2);
        assert!(packing_3to2(&eff, 0, 3, &pol()).is_err());

        let cfg = NetworkConfig::new(2, 3, 3, 4).unwrap();
        let ch = ChannelSet::generate(cfg, 5);
        let eff = EffectiveChannels::identity(&ch);
        assert_eq!(packing_3to1(&eff, 0, 1, &pol()).unwrap().len(), 1);
        let cfg = NetworkConfig::new(2, 3, 2, 3).unwrap();
        let ch = ChannelSet::generate(cfg, 5);
        let eff = EffectiveChannels::identity(&ch);
        assert!(matches!(
            packing_3to1(&eff, 0, 1, &pol()),
            Err(StructuredError::InsufficientOverlap { available: 0, .. })
        ));
    }

    #[test]
    fn zero_force_examples() {
        let cfg = NetworkConfig::new(2, 2, 3, 2).unwrap();
        let ch = ChannelSet::generate(cfg, 6);
        let eff = EffectiveChannels::identity(&ch);
        let sets = zero_force_set(&eff, 0, 1, 1, &pol()).unwrap();
        let v = &sets[0].members[0].1;
        assert!((ch.channel(0, 1, 1) * v).norm_l2() <= 1e-8);
        assert!(matches!(
            zero_force_set(&eff, 0, 1, 2, &pol()),
            Err(StructuredError::InsufficientNullspace { available: 1, .. })
        ));
    }

    #[test]
    fn design_examples() {
        let d = build_two_cell_design(&NetworkConfig::new(2, 2, 3, 3).unwrap(), 1, &pol()).unwrap();
        assert_eq!(d.extension_factor, 1);
        assert_eq!(d.achieved_dof, DofValue::from_int(1));
        assert!(d.report.receivers.iter().all(|r| r.interference_rank == 1));

        let d = build_two_cell_design(&NetworkConfig::new(2, 3, 2, 3).unwrap(), 1, &pol()).unwrap();
        assert_eq!(d.extension_factor, 3);
        assert_eq!(d.dof_per_cell(), DofValue::from_int(2));

        let d = build_two_cell_design(&NetworkConfig::new(2, 2, 2, 3).unwrap(), 1, &pol()).unwrap();
        assert_eq!(d.dof_per_cell(), DofValue::from_int(2));
        assert_eq!(d.ledger[0].available_per_unit, 1);

        let err = build_two_cell_design(&NetworkConfig::new(3, 2, 2, 3).unwrap(), 1, &pol());
        assert!(matches!(err, Err(StructuredError::UnsupportedConfig(_))));
    }

    #[test]
    fn row_boundaries_follow_tables() {
        assert_eq!(find_row(2, Rational::new(1, 4)).0, 1);
        assert_eq!(find_row(2, Rational::new(1, 2)).0, 1);
        assert_eq!(find_row(2, Rational::new(2, 3)).0, 3);
        assert_eq!(find_row(2, Rational::new(1, 1)).0, 3);
        assert_eq!(find_row(2, Rational::new(3, 2)).0, 5);
        assert_eq!(find_row(3, Rational::new(5, 9)).0, 5);
        assert_eq!(find_row(3, Rational::new(4, 3)).0, 9);
    }
}
