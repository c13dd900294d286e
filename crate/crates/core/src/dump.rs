//! JSON exchange formats for channel sets and beamformer sets.
//!
//! Matrices are stored column-major as separate real and imaginary arrays,
//! so any implementation can reload them without a complex-number codec.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{ChannelSet, ConfigError, DofDemand, NetworkConfig};
use crate::numerics::TolerancePolicy;
use crate::verify::{BeamformerSet, Direction, VerifyError};
use crate::{c64, CMat};

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("matrix {index}: {rows}x{cols} needs {want} entries, got re={re} im={im}")]
    Length {
        index: usize,
        rows: usize,
        cols: usize,
        want: usize,
        re: usize,
        im: usize,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    #[serde(rename = "G")]
    pub g: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl DumpHeader {
    fn new(cfg: &NetworkConfig, seed: u64) -> Self {
        Self { g: cfg.g(), k: cfg.k(), m: cfg.m(), n: cfg.n(), seed }
    }

    pub fn config(&self) -> Result<NetworkConfig, ConfigError> {
        NetworkConfig::new(self.g, self.k, self.m, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub cell: usize,
    pub user: usize,
    /// Receiving base station; absent for beamformers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs: Option<usize>,
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixDump {
    fn from_mat(cell: usize, user: usize, bs: Option<usize>, a: &CMat) -> Self {
        let (rows, cols) = (a.nrows(), a.ncols());
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                re.push(a[(i, j)].re);
                im.push(a[(i, j)].im);
            }
        }
        Self { cell, user, bs, rows, cols, re, im }
    }

    fn to_mat(&self, index: usize) -> Result<CMat, DumpError> {
        let want = self.rows * self.cols;
        if self.re.len() != want || self.im.len() != want {
            return Err(DumpError::Length {
                index,
                rows: self.rows,
                cols: self.cols,
                want,
                re: self.re.len(),
                im: self.im.len(),
            });
        }
        let rows = self.rows;
        Ok(CMat::from_fn(rows, self.cols, |i, j| {
            c64::new(self.re[j * rows + i], self.im[j * rows + i])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDump {
    pub header: DumpHeader,
    pub channels: Vec<MatrixDump>,
}

impl ChannelDump {
    pub fn from_set(ch: &ChannelSet) -> Self {
        Self {
            header: DumpHeader::new(ch.config(), ch.seed()),
            channels: ch
                .iter()
                .map(|((cell, user, bs), h)| MatrixDump::from_mat(cell, user, Some(bs), h))
                .collect(),
        }
    }

    /// Rebuilds the set; matrices must be in `(cell, user, bs)` order.
    pub fn to_set(&self) -> Result<ChannelSet, DumpError> {
        let cfg = self.header.config()?;
        let mats = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_mat(i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ChannelSet::from_matrices(cfg, self.header.seed, mats)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerDump {
    pub header: DumpHeader,
    pub d: usize,
    pub direction: Direction,
    pub precoders: Vec<MatrixDump>,
}

impl BeamformerDump {
    pub fn from_set(bf: &BeamformerSet, seed: u64) -> Self {
        let cfg = bf.config();
        Self {
            header: DumpHeader::new(cfg, seed),
            d: bf.d().get(),
            direction: bf.direction(),
            precoders: bf
                .precoders()
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let (cell, user) = cfg.user_of(idx);
                    MatrixDump::from_mat(cell, user, None, v)
                })
                .collect(),
        }
    }

    /// Rebuilds and validates the set.
    pub fn to_set(&self, pol: &TolerancePolicy) -> Result<BeamformerSet, DumpError> {
        let cfg = self.header.config()?;
        let mats = self
            .precoders
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_mat(i))
            .collect::<Result<Vec<_>, _>>()?;
        let d = DofDemand::new(self.d)?;
        Ok(BeamformerSet::new(cfg, d, self.direction, mats, pol)?)
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), DumpError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(f, value)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DumpError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(f)?)
}
