//! Closed-form DoF values, outer bounds and feasibility tests.
//!
//! All quantities are exact rationals. Unless a name says otherwise, values
//! are per user.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Roots;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::network::{DofDemand, NetworkConfig};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("G must be at least 2 (got {0})")]
    GMustExceedOne(usize),
    #[error("closed form needs single-antenna users (M = {0})")]
    NotSingleAntenna(usize),
    #[error("closed form known only for K in {{2, 3}} (got {0})")]
    UnsupportedK(usize),
    #[error("no real critical ratios for G={g}, K={k}: discriminant {discriminant} < 0")]
    NoRealRoots { g: usize, k: usize, discriminant: i64 },
}

/// A nonnegative exact DoF quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DofValue(Rational);

impl DofValue {
    /// # Panics
    ///
    /// On a negative value.
    pub fn new(value: Rational) -> Self {
        assert!(value >= Rational::zero(), "DoF value must be nonnegative, got {value}");
        Self(value)
    }

    pub fn from_int(v: usize) -> Self {
        Self(Rational::from_integer(v as i64))
    }

    pub fn ratio(num: usize, den: usize) -> Self {
        Self::new(Rational::new(num as i64, den as i64))
    }

    pub fn value(&self) -> Rational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn scale(&self, factor: Rational) -> Self {
        Self::new(self.0 * factor)
    }
}

impl From<DofValue> for Rational {
    fn from(v: DofValue) -> Rational {
        v.0
    }
}

impl fmt::Display for DofValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for DofValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r: Rational = s.trim().parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        if r < Rational::zero() {
            return Err(format!("negative DoF value {s:?}"));
        }
        Ok(Self(r))
    }
}

impl Serialize for DofValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DofValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn int(v: usize) -> Rational {
    Rational::from_integer(v as i64)
}

fn min_of(values: impl IntoIterator<Item = Rational>) -> Rational {
    values
        .into_iter()
        .reduce(|a, b| a.min(b))
        .expect("min over an empty set")
}

/// The set `{p/q : 1 ≤ p ≤ G−1, 1 ≤ q ≤ (G−p)K}`, reduced and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionSet {
    elements: BTreeSet<Rational>,
}

impl FractionSet {
    pub fn iter(&self) -> impl Iterator<Item = &Rational> {
        self.elements.iter()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, r: &Rational) -> bool {
        self.elements.contains(r)
    }
}

pub fn fraction_set(g: usize, k: usize) -> Result<FractionSet, BoundsError> {
    if g < 2 {
        return Err(BoundsError::GMustExceedOne(g));
    }
    let mut elements = BTreeSet::new();
    for p in 1..g {
        for q in 1..=(g - p) * k {
            elements.insert(Rational::new(p as i64, q as i64));
        }
    }
    Ok(FractionSet { elements })
}

/// Achievable DoF per cell of the subspace-decomposition scheme:
/// `KMN/(KM+N)` when `(G−1)KM ≥ N`, and `min(KM, N/G)` otherwise.
///
/// In the second regime every user beamforms randomly, so each BS sees
/// `GK·d` streams and `d = min(M, N/(GK))`.
pub fn decomposition_dof_per_cell(cfg: &NetworkConfig) -> DofValue {
    decomposition_dof_per_user(cfg).scale(int(cfg.k()))
}

pub fn decomposition_dof_per_user(cfg: &NetworkConfig) -> DofValue {
    DofValue::new(decomposition_per_user_at(cfg.g(), cfg.k(), int(cfg.m()), int(cfg.n())))
}

/// Per-user decomposition value at real-valued (rational) antenna counts.
/// All bounds are homogeneous of degree one in `(M, N)`, so evaluating at
/// `(γ, 1)` gives the value normalized by `N`.
pub fn decomposition_per_user_at(g: usize, k: usize, m: Rational, n: Rational) -> Rational {
    let (gr, kr) = (int(g), int(k));
    if (gr - 1) * kr * m >= n {
        m * n / (kr * m + n)
    } else {
        m.min(n / (gr * kr))
    }
}

/// Outer bound `min_{p/q ∈ Q} max(Np, Mq)/(Kp+q)`.
pub fn xnet_outer_bound(cfg: &NetworkConfig) -> Result<DofValue, BoundsError> {
    xnet_outer_at(cfg.g(), cfg.k(), int(cfg.m()), int(cfg.n())).map(DofValue::new)
}

pub fn xnet_outer_at(g: usize, k: usize, m: Rational, n: Rational) -> Result<Rational, BoundsError> {
    let q_set = fraction_set(g, k)?;
    let k = int(k);
    Ok(min_of(q_set.iter().map(|r| {
        let (p, q) = (Rational::from_integer(*r.numer()), Rational::from_integer(*r.denom()));
        (n * p).max(m * q) / (k * p + q)
    })))
}

/// `min(M, N/K, max(KM,(G−1)N)/(K+G−1), max(N,(G−1)M)/(K+G−1))`.
pub fn prior_outer_bound(cfg: &NetworkConfig) -> DofValue {
    DofValue::new(prior_outer_at(cfg.g(), cfg.k(), int(cfg.m()), int(cfg.n())))
}

pub fn prior_outer_at(g: usize, k: usize, m: Rational, n: Rational) -> Rational {
    let (gr, kr) = (int(g), int(k));
    let den = kr + gr - 1;
    min_of([
        m,
        n / kr,
        (kr * m).max((gr - 1) * n) / den,
        n.max((gr - 1) * m) / den,
    ])
}

/// `M + N ≥ (GK+1)d`.
pub fn proper_test(cfg: &NetworkConfig, d: DofDemand) -> bool {
    cfg.m() + cfg.n() >= (cfg.users() + 1) * d.get()
}

/// Largest per-user demand for which the system is proper, `(M+N)/(GK+1)`.
pub fn proper_limit(cfg: &NetworkConfig) -> DofValue {
    DofValue::ratio(cfg.m() + cfg.n(), cfg.users() + 1)
}

/// Full-cooperation reference bound `min(M, N/K)`.
pub fn mac_bc_bound(cfg: &NetworkConfig) -> DofValue {
    DofValue::new(int(cfg.m()).min(Rational::new(cfg.n() as i64, cfg.k() as i64)))
}

/// DoF of a network with single-antenna users.
pub fn single_antenna_dof(cfg: &NetworkConfig) -> Result<DofValue, BoundsError> {
    if cfg.m() != 1 {
        return Err(BoundsError::NotSingleAntenna(cfg.m()));
    }
    let (g, k, n) = (cfg.g(), cfg.k(), cfg.n());
    Ok(if n < (g - 1) * k {
        DofValue::ratio(n, n + k)
    } else if n < g * k {
        DofValue::ratio(n, g * k)
    } else {
        DofValue::from_int(1)
    })
}

/// `max(Nω/(Kω+1), M/(Kω+1))`.
pub fn f_omega(omega: Rational, k: usize, m: usize, n: usize) -> DofValue {
    DofValue::new(f_omega_at(omega, k, int(m), int(n)))
}

fn f_omega_at(omega: Rational, k: usize, m: Rational, n: Rational) -> Rational {
    let den = int(k) * omega + 1;
    (n * omega / den).max(m / den)
}

fn omegas(k: usize) -> Result<&'static [(i64, i64)], BoundsError> {
    match k {
        2 => Ok(&[(1, 2), (1, 1)]),
        3 => Ok(&[(1, 3), (1, 2), (2, 3), (1, 1)]),
        _ => Err(BoundsError::UnsupportedK(k)),
    }
}

/// Optimal spatially-normalized DoF per user of the two-cell network with
/// `K ∈ {2, 3}`: `min(M, N/K, f_(ω,K)(M,N) …)`.
pub fn optimal_sdof_two_cell(k: usize, m: usize, n: usize) -> Result<DofValue, BoundsError> {
    optimal_sdof_two_cell_at(k, int(m), int(n)).map(DofValue::new)
}

pub fn optimal_sdof_two_cell_at(k: usize, m: Rational, n: Rational) -> Result<Rational, BoundsError> {
    let ws = omegas(k)?;
    Ok(min_of(
        [m, n / int(k)]
            .into_iter()
            .chain(ws.iter().map(|&(a, b)| f_omega_at(Rational::new(a, b), k, m, n))),
    ))
}

/// Optimal spatially-normalized DoF per user of the two-cell network for
/// general `K` on the two ranges of `γ` where it is known; `None` elsewhere.
///
/// * `γ ≤ 1/(K−1)`: `min(M, max(N/2K, M/2), N/(2K−1))`
/// * `γ ≥ K/(K+1)`: `min(max(N/(K+1), M/(K+1)), N/K)`
pub fn two_cell_partial_general_k(k: usize, m: usize, n: usize) -> Option<DofValue> {
    assert!(k >= 2, "K must be at least 2");
    let gamma = Rational::new(m as i64, n as i64);
    let (mr, nr, kr) = (int(m), int(n), int(k));
    if gamma <= Rational::new(1, k as i64 - 1) {
        let v = mr
            .min((nr / (kr * 2)).max(mr / 2))
            .min(nr / (kr * 2 - 1));
        Some(DofValue::new(v))
    } else if gamma >= Rational::new(k as i64, k as i64 + 1) {
        let v = (nr / (kr + 1)).max(mr / (kr + 1)).min(nr / kr);
        Some(DofValue::new(v))
    } else {
        None
    }
}

/// A number `a + b·√r` with `r` squarefree (`r = 1` only when `b = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticSurd {
    pub rational: Rational,
    pub coeff: Rational,
    pub radicand: i64,
}

impl QuadraticSurd {
    pub fn exact(&self) -> Option<Rational> {
        self.coeff.is_zero().then_some(self.rational)
    }

    pub fn to_f64(&self) -> f64 {
        self.rational.to_f64().unwrap_or(f64::NAN)
            + self.coeff.to_f64().unwrap_or(f64::NAN) * (self.radicand as f64).sqrt()
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.is_zero() {
            return write!(f, "{}", self.rational);
        }
        let sign = if self.coeff < Rational::zero() { '-' } else { '+' };
        write!(f, "{} {} {}*sqrt({})", self.rational, sign, self.coeff.abs(), self.radicand)
    }
}

/// Splits `v ≥ 0` into `s²·r` with `r` squarefree.
fn square_split(mut v: i64) -> (i64, i64) {
    let mut s = 1;
    let mut p = 2;
    while p * p <= v {
        while v % (p * p) == 0 {
            v /= p * p;
            s *= p;
        }
        p += 1;
    }
    (s, v)
}

/// The antenna ratios `γ_l ≤ γ_r` at which the decomposition DoF meets the
/// proper limit: roots of `Kγ² − K(G−1)γ + 1 = 0`.
pub fn gamma_critical(g: usize, k: usize) -> Result<(QuadraticSurd, QuadraticSurd), BoundsError> {
    let (gi, ki) = (g as i64, k as i64);
    let disc = ki * ki * (gi - 1) * (gi - 1) - 4 * ki;
    if disc < 0 {
        return Err(BoundsError::NoRealRoots { g, k, discriminant: disc });
    }
    let rational = Rational::new(gi - 1, 2);
    let root = disc.sqrt();
    let (coeff, radicand) = if root * root == disc {
        // Perfect square: fold into the rational part.
        return Ok((
            QuadraticSurd {
                rational: rational - Rational::new(root, 2 * ki),
                coeff: Rational::zero(),
                radicand: 1,
            },
            QuadraticSurd {
                rational: rational + Rational::new(root, 2 * ki),
                coeff: Rational::zero(),
                radicand: 1,
            },
        ));
    } else {
        let (s, r) = square_split(disc);
        (Rational::new(s, 2 * ki), r)
    };
    Ok((
        QuadraticSurd { rational, coeff: -coeff, radicand },
        QuadraticSurd { rational, coeff, radicand },
    ))
}

/// Necessary condition for the uplink random-coefficient design:
/// `L·N < K·M·d` with `L = GKd − N`.
pub fn usap_uplink_necessary(cfg: &NetworkConfig, d: DofDemand) -> bool {
    let l = d.alignment_equations(cfg);
    l * (cfg.n() as i64) < (cfg.k() * cfg.m() * d.get()) as i64
}

/// Necessary condition for the downlink random-coefficient design:
/// `GK(GKd − M)M < GKdN`.
pub fn usap_downlink_necessary(cfg: &NetworkConfig, d: DofDemand) -> bool {
    let gk = cfg.users() as i64;
    let (m, n, d) = (cfg.m() as i64, cfg.n() as i64, d.get() as i64);
    gk * (gk * d - m) * m < gk * d * n
}

/// All bounds for one configuration, per user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub config: NetworkConfig,
    pub decomposition_inner: DofValue,
    pub xnet_outer: DofValue,
    pub prior_outer: DofValue,
    pub proper_limit: DofValue,
    pub mac_bc: DofValue,
    /// Known optimum: a closed form for the configuration's family, or the
    /// inner bound when it meets an outer bound.
    pub closed_form_optimal: Option<DofValue>,
}

impl BoundReport {
    pub fn compute(cfg: &NetworkConfig) -> Result<Self, BoundsError> {
        let inner = decomposition_dof_per_user(cfg);
        let xnet = xnet_outer_bound(cfg)?;
        let prior = prior_outer_bound(cfg);
        let closed = if cfg.m() == 1 {
            single_antenna_dof(cfg).ok()
        } else if cfg.g() == 2 && matches!(cfg.k(), 2 | 3) {
            optimal_sdof_two_cell(cfg.k(), cfg.m(), cfg.n()).ok()
        } else if cfg.g() == 2 {
            two_cell_partial_general_k(cfg.k(), cfg.m(), cfg.n())
        } else {
            None
        }
        .or_else(|| (inner == xnet.min(prior)).then_some(inner));
        Ok(Self {
            config: *cfg,
            decomposition_inner: inner,
            xnet_outer: xnet,
            prior_outer: prior,
            proper_limit: proper_limit(cfg),
            mac_bc: mac_bc_bound(cfg),
            closed_form_optimal: closed,
        })
    }
}
