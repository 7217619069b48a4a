//! The twelve synthetic benchmark configurations (sub-experiments a..l).
//!
//! Sweep values are always given on the n = 500 scale; pure-node counts are
//! rescaled by `n / 500` when a smaller network is requested, which keeps the
//! pure-node fraction of every grid point unchanged.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DcmmParams, DegreeParams, MembershipMatrix, MixingMatrix};
use crate::error::{Error, Result};

const FULL_N: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubExperiment {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
    L,
}

impl SubExperiment {
    pub const ALL: [SubExperiment; 12] = [
        Self::A,
        Self::B,
        Self::C,
        Self::D,
        Self::E,
        Self::F,
        Self::G,
        Self::H,
        Self::I,
        Self::J,
        Self::K,
        Self::L,
    ];

    /// Name of the swept quantity.
    pub fn sweep_name(self) -> &'static str {
        use SubExperiment::*;
        match self {
            A | B => "n0",
            C | D => "rho",
            E | F => "x",
            G => "z1",
            H => "z2",
            I | J => "p",
            K | L => "q",
        }
    }

    /// `(start, step, count)` of the sweep grid.
    fn grid_spec(self) -> (f64, f64, usize) {
        use SubExperiment::*;
        match self {
            A | B => (40.0, 20.0, 7),
            C | D => (0.0, 0.02, 11),
            E | F => (0.0, 0.05, 11),
            G => (1.0, 1.0, 8),
            H => (0.0, 0.1, 9),
            I | J => (1.0, 0.5, 9),
            K | L => (0.0, 0.05, 11),
        }
    }

    fn is_dcmm(self) -> bool {
        use SubExperiment::*;
        matches!(self, B | D | F | J | L)
    }
}

impl fmt::Display for SubExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = b"abcdefghijkl"[*self as usize] as char;
        write!(f, "{c}")
    }
}

impl FromStr for SubExperiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let lower = lower.strip_prefix("1").unwrap_or(&lower);
        SubExperiment::ALL
            .into_iter()
            .find(|sub| sub.to_string() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sub-experiment {s:?}")))
    }
}

/// Degree-parameter laws used by the presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaLaw {
    /// `theta(i) = c`.
    Constant(f64),
    /// `theta(i) = base + 0.8 (i/n)^2`, the degree-corrected default with base 0.2.
    Quadratic { base: f64, slope: f64 },
    /// `1 / theta(i)` i.i.d. uniform on `[1, z1]`.
    InverseUniform { z1: f64 },
}

impl ThetaLaw {
    pub fn sample(self, n: usize, seed: u64) -> Result<DegreeParams> {
        let theta = match self {
            ThetaLaw::Constant(c) => vec![c; n],
            ThetaLaw::Quadratic { base, slope } => (1..=n)
                .map(|i| {
                    let r = i as f64 / n as f64;
                    base + slope * r * r
                })
                .collect(),
            ThetaLaw::InverseUniform { z1 } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|_| {
                        let u = if z1 > 1.0 { rng.gen_range(1.0..=z1) } else { 1.0 };
                        1.0 / u
                    })
                    .collect()
            }
        };
        DegreeParams::new(theta)
    }
}

/// One sub-experiment at a chosen network size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment1 {
    pub sub: SubExperiment,
    pub n: usize,
}

impl Experiment1 {
    /// The published scale, n = 500.
    pub fn full(sub: SubExperiment) -> Self {
        Self { sub, n: FULL_N }
    }

    /// Desk scale, n = 200.
    pub fn desk(sub: SubExperiment) -> Self {
        Self { sub, n: 200 }
    }

    pub fn k(&self) -> usize {
        match self.sub {
            SubExperiment::K | SubExperiment::L => 4,
            _ => 3,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let (start, step, count) = self.sub.grid_spec();
        (0..count).map(|i| round10(start + i as f64 * step)).collect()
    }

    pub fn range(&self) -> (f64, f64) {
        let g = self.grid();
        (g[0], g[g.len() - 1])
    }

    /// True when the degree parameters are random and must be redrawn for
    /// every replication.
    pub fn has_random_theta(&self) -> bool {
        self.sub == SubExperiment::G
    }

    fn scaled_pure_count(&self, n0: f64) -> usize {
        (n0 * self.n as f64 / FULL_N as f64).round() as usize
    }

    /// Full model for one grid value. `theta_seed` is used only when the
    /// degree parameters are random.
    pub fn params(&self, value: f64, theta_seed: u64) -> Result<DcmmParams> {
        use SubExperiment::*;
        let (lo, hi) = self.range();
        if !(value >= lo - 1e-9 && value <= hi + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "sweep value {value} for sub-experiment {} outside [{lo}, {hi}]",
                self.sub
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }

        let (mut n0, mut x, mut rho) = (100.0, 0.4, 0.1);
        match self.sub {
            A | B => n0 = value,
            C | D => rho = value,
            E | F => x = value,
            K | L => {
                n0 = 75.0;
                x = 0.2;
            }
            _ => {}
        }

        let k = self.k();
        let p = match self.sub {
            I | J => {
                let base = MixingMatrix::two_level(3, 0.2, 0.05)?;
                MixingMatrix::new(base.matrix() * value)?
            }
            K | L => {
                let q = value;
                MixingMatrix::from_rows(&[
                    vec![0.5 + q, 0.5, 0.3, 0.3],
                    vec![0.5, 0.5 + q, 0.3, 0.3],
                    vec![0.3, 0.3, 0.5 + q, 0.5],
                    vec![0.3, 0.3, 0.5, 0.5 + q],
                ])?
            }
            _ => MixingMatrix::two_level(3, 0.5, rho)?,
        };

        let law = match self.sub {
            G => ThetaLaw::InverseUniform { z1: value },
            H => ThetaLaw::Quadratic { base: 0.1 + value, slope: 0.4 },
            s if s.is_dcmm() => ThetaLaw::Quadratic { base: 0.2, slope: 0.8 },
            _ => ThetaLaw::Constant(0.4),
        };
        let theta = law.sample(self.n, theta_seed)?;
        let pi = block_memberships(self.n, k, self.scaled_pure_count(n0), x)?;
        DcmmParams::new(p, theta, pi)
    }
}

/// First `k * n0` nodes pure in equal consecutive blocks; the rest split into
/// consecutive groups over the mixed profiles, remainder dealt round-robin.
fn block_memberships(n: usize, k: usize, n0: usize, x: f64) -> Result<MembershipMatrix> {
    let pure = k * n0;
    if pure > n {
        return Err(Error::InvalidParameter(format!(
            "{k} blocks of {n0} pure nodes exceed n = {n}"
        )));
    }
    let profiles = mixed_profiles(k, x);
    let mixed = n - pure;
    let base = mixed / profiles.len();
    let extra = mixed % profiles.len();

    let mut pi = DMatrix::zeros(n, k);
    for i in 0..pure {
        pi[(i, i / n0)] = 1.0;
    }
    let mut row = pure;
    for (g, profile) in profiles.iter().enumerate() {
        let size = base + usize::from(g < extra);
        for _ in 0..size {
            for (c, &v) in profile.iter().enumerate() {
                pi[(row, c)] = v;
            }
            row += 1;
        }
    }
    MembershipMatrix::new(pi)
}

/// For K = 3: (x, x, 1-2x), (x, 1-2x, x), (1-2x, x, x), uniform.
/// For K = 4 the analogous four profiles with 1-3x, then uniform.
fn mixed_profiles(k: usize, x: f64) -> Vec<Vec<f64>> {
    let heavy = 1.0 - (k - 1) as f64 * x;
    let mut out: Vec<Vec<f64>> = (0..k)
        .map(|g| {
            let slot = k - 1 - g;
            (0..k).map(|c| if c == slot { heavy } else { x }).collect()
        })
        .collect();
    out.push(vec![1.0 / k as f64; k]);
    out
}

fn round10(v: f64) -> f64 {
    (v * 1e10).round() / 1e10
}

/// Serializable description of one generated network: enough to rebuild its
/// parameters exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRecord {
    pub sub: SubExperiment,
    pub n: usize,
    pub value: f64,
    pub theta_seed: u64,
    pub sample_seed: u64,
}

impl PresetRecord {
    pub fn params(&self) -> Result<DcmmParams> {
        Experiment1 { sub: self.sub, n: self.n }.params(self.value, self.theta_seed)
    }

    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("preset record is always serializable")
    }

    pub fn from_config_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse {
            location: "preset".into(),
            message: e.to_string(),
        })
    }
}
