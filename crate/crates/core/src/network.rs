//! Network configurations and seeded generic channel realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, TolerancePolicy};
use crate::{CMat, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("network parameter {name} must be at least 1 (got {value})")]
    NonPositive { name: &'static str, value: usize },
    #[error("stream demand d must be at least 1")]
    ZeroDemand,
    #[error("spatial extension factor must be at least 1")]
    ZeroExtension,
    #[error("channel ({cell},{user},{bs}) has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ChannelShape {
        cell: usize,
        user: usize,
        bs: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("expected {expected} channel matrices, got {got}")]
    ChannelCount { expected: usize, got: usize },
}

/// A `(G, K, M, N)` network: `G` cells, `K` users per cell, `M` antennas per
/// user and `N` antennas per base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(rename = "G")]
    cells: usize,
    #[serde(rename = "K")]
    users_per_cell: usize,
    #[serde(rename = "M")]
    user_antennas: usize,
    #[serde(rename = "N")]
    bs_antennas: usize,
}

impl NetworkConfig {
    pub fn new(g: usize, k: usize, m: usize, n: usize) -> Result<Self, ConfigError> {
        for (name, value) in [("G", g), ("K", k), ("M", m), ("N", n)] {
            if value == 0 {
                return Err(ConfigError::NonPositive { name, value });
            }
        }
        Ok(Self {
            cells: g,
            users_per_cell: k,
            user_antennas: m,
            bs_antennas: n,
        })
    }

    #[inline]
    pub fn g(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.users_per_cell
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.user_antennas
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.bs_antennas
    }

    /// Total number of users, `G·K`.
    pub fn users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    /// Antenna ratio `γ = M/N`, reduced.
    pub fn gamma(&self) -> Rational {
        Rational::new(self.user_antennas as i64, self.bs_antennas as i64)
    }

    /// Scales both antenna counts by `factor`; `γ` is unchanged.
    pub fn spatially_extend(&self, factor: usize) -> Result<Self, ConfigError> {
        if factor == 0 {
            return Err(ConfigError::ZeroExtension);
        }
        Ok(Self {
            user_antennas: self.user_antennas * factor,
            bs_antennas: self.bs_antennas * factor,
            ..*self
        })
    }

    /// Flat index of user `(cell, user)`, cell-major.
    #[inline]
    pub fn user_index(&self, cell: usize, user: usize) -> usize {
        debug_assert!(cell < self.cells && user < self.users_per_cell);
        cell * self.users_per_cell + user
    }

    /// Inverse of [`NetworkConfig::user_index`].
    #[inline]
    pub fn user_of(&self, index: usize) -> (usize, usize) {
        (index / self.users_per_cell, index % self.users_per_cell)
    }
}

impl std::fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{},{})",
            self.cells, self.users_per_cell, self.user_antennas, self.bs_antennas
        )
    }
}

/// Number of data streams `d` requested by every user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DofDemand(usize);

impl DofDemand {
    pub fn new(d: usize) -> Result<Self, ConfigError> {
        if d == 0 {
            return Err(ConfigError::ZeroDemand);
        }
        Ok(Self(d))
    }

    #[inline]
    pub fn get(&self) -> usize {
        self.0
    }

    /// Number of linear vector equations the interfering beamformers must
    /// satisfy at each base station, `L = GKd − N`. Negative when no
    /// alignment is needed.
    pub fn alignment_equations(&self, cfg: &NetworkConfig) -> i64 {
        (cfg.users() * self.0) as i64 - cfg.n() as i64
    }
}

/// All `G·K·G` channel matrices of one realization. Entry `(j, l, i)` is the
/// `N×M` channel from user `l` of cell `j` to base station `i` (all indices
/// zero-based).
#[derive(Debug, Clone)]
pub struct ChannelSet {
    config: NetworkConfig,
    seed: u64,
    channels: Vec<CMat>,
}

impl ChannelSet {
    /// Draws i.i.d. unit-variance circularly-symmetric complex Gaussian
    /// entries from a ChaCha8 stream keyed by `seed`. Matrices are drawn in
    /// `(cell, user, bs)` lexicographic order, each column-major with the
    /// real part sampled before the imaginary part.
    pub fn generate(config: NetworkConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = config.users() * config.g();
        let channels = (0..count)
            .map(|_| numerics::gaussian_matrix(&mut rng, config.n(), config.m()))
            .collect();
        Self {
            config,
            seed,
            channels,
        }
    }

    /// Builds a channel set from explicit matrices in `(cell, user, bs)`
    /// order, e.g. when loading a dump.
    pub fn from_matrices(
        config: NetworkConfig,
        seed: u64,
        channels: Vec<CMat>,
    ) -> Result<Self, ConfigError> {
        let expected = config.users() * config.g();
        if channels.len() != expected {
            return Err(ConfigError::ChannelCount {
                expected,
                got: channels.len(),
            });
        }
        for (idx, h) in channels.iter().enumerate() {
            if h.nrows() != config.n() || h.ncols() != config.m() {
                let bs = idx % config.g();
                let (cell, user) = config.user_of(idx / config.g());
                return Err(ConfigError::ChannelShape {
                    cell,
                    user,
                    bs,
                    rows: h.nrows(),
                    cols: h.ncols(),
                    expected_rows: config.n(),
                    expected_cols: config.m(),
                });
            }
        }
        Ok(Self {
            config,
            seed,
            channels,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Channel from user `(cell, user)` to base station `bs`.
    #[inline]
    pub fn channel(&self, cell: usize, user: usize, bs: usize) -> &CMat {
        &self.channels[self.config.user_index(cell, user) * self.config.g() + bs]
    }

    /// Iterates `((cell, user, bs), H)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), &CMat)> + '_ {
        let g = self.config.g();
        self.channels.iter().enumerate().map(move |(idx, h)| {
            let (cell, user) = self.config.user_of(idx / g);
            ((cell, user, idx % g), h)
        })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Smallest singular value over all channel matrices; a genericity
    /// proxy.
    pub fn min_singular_value(&self) -> f64 {
        self.channels
            .iter()
            .map(|h| {
                numerics::singular_values(h)
                    .last()
                    .copied()
                    .unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every matrix has full rank `min(M, N)` under `pol`.
    pub fn is_generic(&self, pol: &TolerancePolicy) -> bool {
        let full = self.config.m().min(self.config.n());
        self.channels
            .iter()
            .all(|h| numerics::numerical_rank(h, pol) == full)
    }
}
