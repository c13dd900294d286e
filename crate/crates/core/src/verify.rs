//! Rank-based alignment checks and zero-forcing receive filters.
//!
//! A receiver (a base station on the uplink, a user on the downlink) sees
//! its desired stream groups plus an interference matrix. Alignment holds
//! when the interference rank fits in the receiver's budget and every
//! desired group keeps full rank after projecting out everything else.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{ChannelSet, DofDemand, NetworkConfig};
use crate::numerics::{self, TolerancePolicy};
use crate::CMat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("beamformer ({cell},{user}) has shape {rows}x{cols}, expected {expected_rows}x{d}")]
    Shape {
        cell: usize,
        user: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        d: usize,
    },
    #[error("beamformer ({cell},{user}) has rank {rank} < d = {d}")]
    RankDeficient { cell: usize, user: usize, rank: usize, d: usize },
    #[error("expected {expected} beamformers, got {got}")]
    Count { expected: usize, got: usize },
    #[error("beamformers built for {bf}, channels for {ch}")]
    ConfigMismatch { bf: NetworkConfig, ch: NetworkConfig },
    #[error("receiver {receiver}: interference rank {rank} exceeds budget {budget}")]
    AlignmentViolated { receiver: usize, rank: usize, budget: usize },
    #[error("receiver {receiver}, group {group}: direct-link rank {rank} < d = {d}")]
    SignalCollapse { receiver: usize, group: usize, rank: usize, d: usize },
}

/// Link direction of a beamformer set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Users transmit with `M×d` precoders; base stations receive.
    Uplink,
    /// Base stations transmit with `N×d` precoders per user over `Hᴴ`.
    Downlink,
}

/// Transmit precoders of every user, indexed like
/// [`NetworkConfig::user_index`].
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    config: NetworkConfig,
    d: DofDemand,
    direction: Direction,
    precoders: Vec<CMat>,
}

impl BeamformerSet {
    /// Checks that every precoder is `M×d` (uplink) or `N×d` (downlink)
    /// with numerical rank `d`.
    pub fn new(
        config: NetworkConfig,
        d: DofDemand,
        direction: Direction,
        precoders: Vec<CMat>,
        pol: &TolerancePolicy,
    ) -> Result<Self, VerifyError> {
        let set = Self::new_unchecked(config, d, direction, precoders);
        if set.precoders.len() != config.users() {
            return Err(VerifyError::Count {
                expected: config.users(),
                got: set.precoders.len(),
            });
        }
        let rows = set.antennas();
        for (idx, v) in set.precoders.iter().enumerate() {
            let (cell, user) = config.user_of(idx);
            if v.nrows() != rows || v.ncols() != d.get() {
                return Err(VerifyError::Shape {
                    cell,
                    user,
                    rows: v.nrows(),
                    cols: v.ncols(),
                    expected_rows: rows,
                    d: d.get(),
                });
            }
            let rank = numerics::numerical_rank(v, pol);
            if rank < d.get() {
                return Err(VerifyError::RankDeficient { cell, user, rank, d: d.get() });
            }
        }
        Ok(set)
    }

    /// No shape or rank checks; for diagnostics with zero, random or
    /// otherwise defective precoders.
    pub fn new_unchecked(
        config: NetworkConfig,
        d: DofDemand,
        direction: Direction,
        precoders: Vec<CMat>,
    ) -> Self {
        Self {
            config,
            d,
            direction,
            precoders,
        }
    }

    /// Independent Gaussian precoders.
    pub fn random(config: NetworkConfig, d: DofDemand, direction: Direction, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows = match direction {
            Direction::Uplink => config.m(),
            Direction::Downlink => config.n(),
        };
        let precoders = (0..config.users())
            .map(|_| numerics::gaussian_matrix(&mut rng, rows, d.get()))
            .collect();
        Self::new_unchecked(config, d, direction, precoders)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn d(&self) -> DofDemand {
        self.d
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Antennas at the transmitting side.
    pub fn antennas(&self) -> usize {
        match self.direction {
            Direction::Uplink => self.config.m(),
            Direction::Downlink => self.config.n(),
        }
    }

    pub fn precoder(&self, cell: usize, user: usize) -> &CMat {
        &self.precoders[self.config.user_index(cell, user)]
    }

    pub fn precoders(&self) -> &[CMat] {
        &self.precoders
    }

    pub fn into_precoders(self) -> Vec<CMat> {
        self.precoders
    }
}

/// Effective signal block of transmitter `(cell, user)` at receiver `rx`.
///
/// Uplink: `H_(cell user, rx) V`, with `rx` a base station. Downlink: the
/// precoder sits at BS `cell` and `rx = (j, l)` is a user, giving
/// `H_(jl, cell)ᴴ V`.
fn received_block(
    ch: &ChannelSet,
    bf: &BeamformerSet,
    cell: usize,
    user: usize,
    rx: (usize, usize),
) -> CMat {
    let v = bf.precoder(cell, user);
    match bf.direction {
        Direction::Uplink => ch.channel(cell, user, rx.0) * v,
        Direction::Downlink => ch.channel(rx.0, rx.1, cell).adjoint() * v,
    }
}

/// Interference at base station `i` on the uplink:
/// `N × (G−1)Kd` with columns `H_(jl,i) v_jlk` ordered by `(j, l, k)`, `j ≠ i`.
pub fn interference_matrix(ch: &ChannelSet, bf: &BeamformerSet, i: usize) -> CMat {
    let cfg = *ch.config();
    let blocks: Vec<CMat> = (0..cfg.g())
        .filter(|&j| j != i)
        .flat_map(|j| (0..cfg.k()).map(move |l| (j, l)))
        .map(|(j, l)| ch.channel(j, l, i) * bf.precoder(j, l))
        .collect();
    let refs: Vec<_> = blocks.iter().map(|b| b.as_ref()).collect();
    numerics::hcat(cfg.n(), &refs)
}

/// Desired groups and interference seen by one receiver.
struct ReceiverView {
    groups: Vec<CMat>,
    interference: CMat,
    budget: usize,
}

fn receiver_views(ch: &ChannelSet, bf: &BeamformerSet) -> Vec<ReceiverView> {
    let cfg = *ch.config();
    let d = bf.d.get();
    let (g, k) = (cfg.g(), cfg.k());
    match bf.direction {
        Direction::Uplink => (0..g)
            .map(|i| ReceiverView {
                groups: (0..k).map(|l| received_block(ch, bf, i, l, (i, 0))).collect(),
                interference: interference_matrix(ch, bf, i),
                budget: cfg.n().saturating_sub(k * d),
            })
            .collect(),
        Direction::Downlink => (0..cfg.users())
            .map(|idx| {
                let rx = cfg.user_of(idx);
                let blocks: Vec<CMat> = (0..cfg.users())
                    .filter(|&o| o != idx)
                    .map(|o| {
                        let (c, u) = cfg.user_of(o);
                        received_block(ch, bf, c, u, rx)
                    })
                    .collect();
                let refs: Vec<_> = blocks.iter().map(|b| b.as_ref()).collect();
                ReceiverView {
                    groups: vec![received_block(ch, bf, rx.0, rx.1, rx)],
                    interference: numerics::hcat(cfg.m(), &refs),
                    budget: cfg.m().saturating_sub(d),
                }
            })
            .collect(),
    }
}

/// Diagnostics for one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverReport {
    /// Base station index (uplink) or flat user index (downlink).
    pub receiver: usize,
    pub interference_rank: usize,
    /// Dimensions left for interference: `N − Kd` or `M − d`.
    pub budget: usize,
    /// Rank of `[desired signals | interference]`.
    pub signal_interference_rank: usize,
    /// Rank of `Uᴴ H V` for each desired group.
    pub direct_ranks: Vec<usize>,
    /// Smallest singular value of the interference counted in its rank,
    /// relative to the largest.
    pub smallest_kept: Option<f64>,
    /// Largest singular value of the interference below the cutoff,
    /// relative to the largest.
    pub largest_dropped: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub direction: Direction,
    pub d: usize,
    pub receivers: Vec<ReceiverReport>,
    pub pass: bool,
    /// Largest normalized leakage `‖Uᴴ H V‖/(‖H‖‖V‖)` onto any undesired
    /// stream; only computed for passing designs.
    pub max_leakage: Option<f64>,
}

impl AlignmentReport {
    /// True when every receiver's desired and interfering subspaces are
    /// linearly independent.
    pub fn separable(&self) -> bool {
        self.receivers.iter().all(|r| {
            r.signal_interference_rank == r.direct_ranks.len() * self.d + r.interference_rank
        })
    }
}

/// Receive filters, indexed like the precoders. Each has orthonormal
/// columns.
#[derive(Debug, Clone)]
pub struct ReceiveFilterSet {
    pub filters: Vec<CMat>,
}

struct ViewOutcome {
    report: ReceiverReport,
    filters: Vec<CMat>,
}

fn analyse(receiver: usize, view: &ReceiverView, d: usize, pol: &TolerancePolicy) -> ViewOutcome {
    let rows = view.interference.nrows();
    let mut all: Vec<_> = view.groups.iter().map(|g| g.as_ref()).collect();
    all.push(view.interference.as_ref());
    let all = numerics::hcat(rows, &all);
    let sv = numerics::singular_values(&all);
    // Every rank at this receiver is measured against the strongest
    // received direction, so residual interference at roundoff level
    // counts as zero.
    let floor = sv.first().copied().unwrap_or(0.0);
    let signal_interference_rank = numerics::numerical_rank_floored(all.as_ref(), floor, pol);
    let (interference_rank, smallest_kept, largest_dropped) =
        numerics::rank_with_margin(view.interference.as_ref(), floor, pol);

    let mut filters = Vec::with_capacity(view.groups.len());
    let mut direct_ranks = Vec::with_capacity(view.groups.len());
    for (gi, group) in view.groups.iter().enumerate() {
        let mut others: Vec<_> = view
            .groups
            .iter()
            .enumerate()
            .filter(|&(o, _)| o != gi)
            .map(|(_, g)| g.as_ref())
            .collect();
        others.push(view.interference.as_ref());
        let blocked = numerics::hcat(rows, &others);
        let complement = numerics::column_space_complement(blocked.as_ref(), floor, pol);
        let projected = complement.adjoint() * group;
        let basis = numerics::column_space_basis(projected.as_ref(), floor, pol);
        let u: CMat = &complement * &basis;
        let direct = u.adjoint() * group;
        direct_ranks.push(numerics::numerical_rank_floored(direct.as_ref(), floor, pol).min(d));
        filters.push(u);
    }
    ViewOutcome {
        report: ReceiverReport {
            receiver,
            interference_rank,
            budget: view.budget,
            signal_interference_rank,
            direct_ranks,
            smallest_kept,
            largest_dropped,
        },
        filters,
    }
}

fn run(ch: &ChannelSet, bf: &BeamformerSet, pol: &TolerancePolicy) -> Result<(AlignmentReport, Vec<CMat>), VerifyError> {
    if ch.config() != bf.config() {
        return Err(VerifyError::ConfigMismatch {
            bf: *bf.config(),
            ch: *ch.config(),
        });
    }
    let d = bf.d.get();
    let views = receiver_views(ch, bf);
    let outcomes: Vec<ViewOutcome> = views
        .par_iter()
        .enumerate()
        .map(|(i, v)| analyse(i, v, d, pol))
        .collect();
    let pass = outcomes.iter().all(|o| {
        o.report.interference_rank <= o.report.budget
            && o.report.direct_ranks.iter().all(|&r| r == d)
    });
    let mut filters = Vec::with_capacity(ch.config().users());
    let mut receivers = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        filters.extend(o.filters);
        receivers.push(o.report);
    }
    let mut report = AlignmentReport {
        direction: bf.direction,
        d,
        receivers,
        pass,
        max_leakage: None,
    };
    if pass {
        report.max_leakage = Some(max_leakage(ch, bf, &filters));
    }
    Ok((report, filters))
}

/// Computes every report field, building the receive filters internally.
pub fn verify_alignment(
    ch: &ChannelSet,
    bf: &BeamformerSet,
    pol: &TolerancePolicy,
) -> Result<AlignmentReport, VerifyError> {
    run(ch, bf, pol).map(|(r, _)| r)
}

/// Receive filters that null all undesired streams.
pub fn receive_filters(
    ch: &ChannelSet,
    bf: &BeamformerSet,
    pol: &TolerancePolicy,
) -> Result<ReceiveFilterSet, VerifyError> {
    let (report, filters) = run(ch, bf, pol)?;
    let d = report.d;
    for r in &report.receivers {
        if r.interference_rank > r.budget {
            return Err(VerifyError::AlignmentViolated {
                receiver: r.receiver,
                rank: r.interference_rank,
                budget: r.budget,
            });
        }
    }
    for r in &report.receivers {
        if let Some((group, &rank)) = r.direct_ranks.iter().enumerate().find(|(_, &x)| x < d) {
            return Err(VerifyError::SignalCollapse {
                receiver: r.receiver,
                group,
                rank,
                d,
            });
        }
    }
    Ok(ReceiveFilterSet { filters })
}

/// Filter of user `idx` and the channel it sees from transmitter `o`.
fn link(ch: &ChannelSet, bf: &BeamformerSet, rx: usize, tx: usize) -> CMat {
    let cfg = ch.config();
    let (rc, ru) = cfg.user_of(rx);
    let (tc, tu) = cfg.user_of(tx);
    match bf.direction {
        Direction::Uplink => ch.channel(tc, tu, rc).clone(),
        Direction::Downlink => ch.channel(rc, ru, tc).adjoint().to_owned(),
    }
}

fn max_leakage(ch: &ChannelSet, bf: &BeamformerSet, filters: &[CMat]) -> f64 {
    let users = ch.config().users();
    (0..users)
        .into_par_iter()
        .map(|rx| {
            let u = &filters[rx];
            let mut worst: f64 = 0.0;
            for tx in (0..users).filter(|&t| t != rx) {
                let h = link(ch, bf, rx, tx);
                let v = &bf.precoders[tx];
                let scale = h.norm_l2() * v.norm_l2();
                if scale == 0.0 {
                    continue;
                }
                let leak: Mat<_> = u.adjoint() * &h * v;
                worst = worst.max(leak.norm_l2() / scale);
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}
