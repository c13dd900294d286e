//! Random-coefficient alignment design.
//!
//! At each receiver the interfering streams must satisfy `L` random linear
//! relations, which collapses their span by `L` dimensions. Stacking all
//! relations gives one homogeneous system `A v = 0` in the concatenated
//! beamformer vector `v`, ordered by `(cell, user, stream)`. A random point of
//! its nullspace is split into per-user precoders, which then go through a
//! randomized identity test for full column rank and the rank-based
//! alignment check.

use faer::Mat;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::usap_downlink_necessary;
use crate::network::{ChannelSet, DofDemand, NetworkConfig};
use crate::numerics::{self, NullspaceProjector, TolerancePolicy};
use crate::verify::{self, AlignmentReport, BeamformerSet, Direction};
use crate::{c64, CMat};

/// Redraws of the random starting vector after an identity-test failure.
pub const MAX_REDRAWS: usize = 3;

/// Identity-test threshold on `σ_min/σ_max`.
pub const PIT_THRESHOLD: f64 = 1e-8;

/// Ratios in this band pass or fail as usual but are logged.
pub const PIT_MARGINAL: (f64, f64) = (1e-10, 1e-6);

/// Independent 64-bit seed for a numbered sub-stream of `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Number of relations per receiver: `GKd − N` (uplink) or `GKd − M`
/// (downlink).
pub fn equations_per_receiver(cfg: &NetworkConfig, d: DofDemand, direction: Direction) -> i64 {
    let streams = (cfg.users() * d.get()) as i64;
    match direction {
        Direction::Uplink => streams - cfg.n() as i64,
        Direction::Downlink => streams - cfg.m() as i64,
    }
}

/// Coefficients `α` of the alignment relations.
///
/// Uplink receivers are base stations and a relation at BS `i` involves the
/// streams of every user outside cell `i`. Downlink receivers are users and
/// a relation at user `j` involves every stream not addressed to `j`.
/// Values are drawn in `(receiver, relation, stream)` order, skipping
/// excluded streams, which hold zero.
#[derive(Debug, Clone)]
pub struct CoefficientTensor {
    seed: u64,
    direction: Direction,
    equations: usize,
    streams: usize,
    d: usize,
    values: Vec<c64>,
}

impl CoefficientTensor {
    /// `None` when there are no relations to impose (`L ≤ 0`).
    pub fn generate(cfg: &NetworkConfig, d: DofDemand, direction: Direction, seed: u64) -> Option<Self> {
        let l = equations_per_receiver(cfg, d, direction);
        if l <= 0 {
            return None;
        }
        let l = l as usize;
        let streams = cfg.users() * d.get();
        let receivers = match direction {
            Direction::Uplink => cfg.g(),
            Direction::Downlink => cfg.users(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![c64::new(0.0, 0.0); receivers * l * streams];
        for rx in 0..receivers {
            for p in 0..l {
                for s in 0..streams {
                    let user = s / d.get();
                    if !Self::involved(cfg, direction, rx, user) {
                        continue;
                    }
                    values[(rx * l + p) * streams + s] = numerics::gaussian_scalar(&mut rng);
                }
            }
        }
        Some(Self {
            seed,
            direction,
            equations: l,
            streams,
            d: d.get(),
            values,
        })
    }

    fn involved(cfg: &NetworkConfig, direction: Direction, rx: usize, user: usize) -> bool {
        match direction {
            Direction::Uplink => cfg.user_of(user).0 != rx,
            Direction::Downlink => user != rx,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn equations(&self) -> usize {
        self.equations
    }

    /// `α` of stream `n` of user `user` in relation `p` at receiver `rx`.
    pub fn alpha(&self, rx: usize, p: usize, user: usize, n: usize) -> c64 {
        self.values[(rx * self.equations + p) * self.streams + user * self.d + n]
    }
}

/// Stacked system matrix.
///
/// Uplink: `GLN × GKMd`; block row `(i, p)` starts at row `(i·L + p)·N`, the
/// slot of stream `n` of user `u` starts at column `(u·d + n)·M` and holds
/// `α·H_(u, i)`. Downlink: `GK·L·M × GKNd` with `M`-row blocks
/// `α·H_(j, cell(u))ᴴ` at `(j·L + p)·M` and `N`-wide slots.
pub fn assemble_alignment_matrix(ch: &ChannelSet, d: DofDemand, coeffs: &CoefficientTensor) -> CMat {
    let cfg = *ch.config();
    let (m, n, d) = (cfg.m(), cfg.n(), d.get());
    let l = coeffs.equations;
    let (receivers, height, width) = match coeffs.direction {
        Direction::Uplink => (cfg.g(), n, m),
        Direction::Downlink => (cfg.users(), m, n),
    };
    let mut a = Mat::<c64>::zeros(receivers * l * height, cfg.users() * d * width);
    for rx in 0..receivers {
        for user in 0..cfg.users() {
            if !CoefficientTensor::involved(&cfg, coeffs.direction, rx, user) {
                continue;
            }
            let (cell, u) = cfg.user_of(user);
            let block: CMat = match coeffs.direction {
                Direction::Uplink => ch.channel(cell, u, rx).clone(),
                Direction::Downlink => {
                    let (rc, ru) = cfg.user_of(rx);
                    ch.channel(rc, ru, cell).adjoint().to_owned()
                }
            };
            for p in 0..l {
                let r0 = (rx * l + p) * height;
                for s in 0..d {
                    let alpha = coeffs.alpha(rx, p, user, s);
                    let c0 = (user * d + s) * width;
                    for j in 0..width {
                        for i in 0..height {
                            a[(r0 + i, c0 + j)] = alpha * block[(i, j)];
                        }
                    }
                }
            }
        }
    }
    a
}

/// Outcome of the randomized full-rank test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitResult {
    pub per_user: Vec<bool>,
    /// `σ_min/σ_max` of each completed matrix.
    pub ratios: Vec<f64>,
    pub pass: bool,
    pub marginal: bool,
}

impl PitResult {
    pub fn min_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Completes each column-normalized precoder `V̂` with random columns to a
/// square matrix `[V̂ | R]` and declares it full rank when
/// `σ_min/σ_max > PIT_THRESHOLD`.
pub fn pit_independence(bf: &BeamformerSet, seed: u64) -> PitResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = bf.antennas();
    let mut ratios = Vec::with_capacity(bf.precoders().len());
    for v in bf.precoders() {
        let d = v.ncols();
        if d > rows {
            ratios.push(0.0);
            continue;
        }
        let vn = normalize_columns(v);
        let r = numerics::gaussian_matrix(&mut rng, rows, rows - d);
        let square = numerics::hcat(rows, &[vn.as_ref(), r.as_ref()]);
        let sv = numerics::singular_values(&square);
        let ratio = match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        };
        ratios.push(ratio);
    }
    let per_user: Vec<bool> = ratios.iter().map(|&r| r > PIT_THRESHOLD).collect();
    let marginal = ratios
        .iter()
        .any(|&r| (PIT_MARGINAL.0..=PIT_MARGINAL.1).contains(&r));
    PitResult {
        pass: per_user.iter().all(|&p| p),
        per_user,
        ratios,
        marginal,
    }
}

fn normalize_columns(v: &CMat) -> CMat {
    let mut out = v.clone();
    for j in 0..out.ncols() {
        let norm = out.col(j).norm_l2();
        if norm > 0.0 {
            for i in 0..out.nrows() {
                out[(i, j)] = out[(i, j)] / norm;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UsapStatus {
    Success,
    PitFailure,
    EmptyNullspace,
    NotApplicable,
    /// A nullspace point passed the identity test but the resulting design
    /// failed alignment verification or the residual check.
    AlignmentFailure,
}

impl UsapStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            UsapStatus::Success => "Success",
            UsapStatus::PitFailure => "PitFailure",
            UsapStatus::EmptyNullspace => "EmptyNullspace",
            UsapStatus::NotApplicable => "NotApplicable",
            UsapStatus::AlignmentFailure => "AlignmentFailure",
        }
    }
}

impl std::fmt::Display for UsapStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsapDiagnostics {
    pub rows: usize,
    pub cols: usize,
    pub equations_per_receiver: i64,
    pub rank: usize,
    pub nullity: usize,
    pub residual: Option<f64>,
    /// Pivot ratios on either side of the rank cutoff.
    pub smallest_kept: Option<f64>,
    pub largest_dropped: Option<f64>,
    /// Smallest identity-test ratio of the accepted (or last) draw.
    pub pit_min_ratio: Option<f64>,
    pub pit_marginal: bool,
    pub redraws: usize,
    /// Whether the first nullspace draw already passed the identity test.
    pub first_draw_pit_pass: Option<bool>,
    pub separable: Option<bool>,
    pub report: Option<AlignmentReport>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsapOutcome {
    pub direction: Direction,
    pub config: NetworkConfig,
    pub d: usize,
    pub seed: u64,
    pub status: UsapStatus,
    pub diagnostics: UsapDiagnostics,
    #[serde(skip)]
    pub beamformers: Option<BeamformerSet>,
}

/// Uplink design over `ch` with coefficients and random draws keyed by
/// `seed`.
pub fn usap_uplink(ch: &ChannelSet, d: DofDemand, seed: u64, pol: &TolerancePolicy) -> UsapOutcome {
    usap(ch, d, Direction::Uplink, seed, pol)
}

/// Downlink design: precoders at the base stations, channels `Hᴴ`.
pub fn usap_downlink(ch: &ChannelSet, d: DofDemand, seed: u64, pol: &TolerancePolicy) -> UsapOutcome {
    usap(ch, d, Direction::Downlink, seed, pol)
}

pub fn usap(
    ch: &ChannelSet,
    d: DofDemand,
    direction: Direction,
    seed: u64,
    pol: &TolerancePolicy,
) -> UsapOutcome {
    let cfg = *ch.config();
    let mut out = UsapOutcome {
        direction,
        config: cfg,
        d: d.get(),
        seed,
        status: UsapStatus::NotApplicable,
        diagnostics: UsapDiagnostics {
            equations_per_receiver: equations_per_receiver(&cfg, d, direction),
            ..Default::default()
        },
        beamformers: None,
    };
    let tx_antennas = match direction {
        Direction::Uplink => cfg.m(),
        Direction::Downlink => cfg.n(),
    };
    if d.get() > tx_antennas {
        out.diagnostics.note = Some(format!("d = {} exceeds {tx_antennas} transmit antennas", d.get()));
        return out;
    }
    if direction == Direction::Downlink && !usap_downlink_necessary(&cfg, d) {
        out.diagnostics.note = Some("downlink necessary condition fails".into());
        return out;
    }
    let Some(coeffs) = CoefficientTensor::generate(&cfg, d, direction, sub_seed(seed, 0)) else {
        out.diagnostics.note = Some("no alignment relations (L <= 0)".into());
        return out;
    };

    let a = assemble_alignment_matrix(ch, d, &coeffs);
    let projector = NullspaceProjector::new(&a, pol);
    let diag = &mut out.diagnostics;
    diag.rows = a.nrows();
    diag.cols = a.ncols();
    diag.rank = projector.rank();
    diag.nullity = projector.nullity();
    if projector.nullity() == 0 {
        out.status = UsapStatus::EmptyNullspace;
        return out;
    }

    let per_user = d.get() * tx_antennas;
    let mut accepted = None;
    for attempt in 0..=MAX_REDRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 1 + attempt as u64));
        let r = numerics::gaussian_matrix(&mut rng, a.ncols(), 1);
        let sample = projector
            .project(r.col(0).to_owned())
            .expect("nullity checked above");
        let precoders: Vec<CMat> = (0..cfg.users())
            .map(|u| {
                Mat::from_fn(tx_antennas, d.get(), |i, n| sample.vector[u * per_user + n * tx_antennas + i])
            })
            .map(|v| normalize_columns(&v))
            .collect();
        let bf = BeamformerSet::new_unchecked(cfg, d, direction, precoders);
        let pit = pit_independence(&bf, sub_seed(seed, 100 + attempt as u64));
        let diag = &mut out.diagnostics;
        diag.redraws = attempt;
        diag.residual = Some(sample.residual);
        diag.smallest_kept = sample.smallest_kept;
        diag.largest_dropped = sample.largest_dropped;
        diag.pit_min_ratio = Some(pit.min_ratio());
        diag.pit_marginal |= pit.marginal;
        if attempt == 0 {
            diag.first_draw_pit_pass = Some(pit.pass);
        }
        if pit.marginal {
            log::info!(
                "{cfg} d={} {direction:?} seed {seed}: marginal identity test ratio {:.3e}",
                d.get(),
                pit.min_ratio()
            );
        }
        if pit.pass {
            accepted = Some(bf);
            break;
        }
    }
    let Some(bf) = accepted else {
        out.status = UsapStatus::PitFailure;
        return out;
    };

    let bf = match BeamformerSet::new(cfg, d, direction, bf.into_precoders(), pol) {
        Ok(bf) => bf,
        Err(e) => {
            out.status = UsapStatus::AlignmentFailure;
            out.diagnostics.note = Some(e.to_string());
            return out;
        }
    };
    let report = verify::verify_alignment(ch, &bf, pol).expect("configs match");
    let separable = report.separable();
    let residual_ok = out.diagnostics.residual.is_some_and(|r| r <= pol.residual_tol);
    let ok = report.pass && residual_ok && (direction == Direction::Uplink || separable);
    out.diagnostics.separable = Some(separable);
    out.diagnostics.report = Some(report);
    out.status = if ok {
        UsapStatus::Success
    } else {
        UsapStatus::AlignmentFailure
    };
    out.beamformers = Some(bf);
    out
}
