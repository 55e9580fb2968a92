//! Signal-dependent read + shot noise on normalized raw frames.
//!
//! Variance model at linear gain `g = 10^(dB/20)`:
//! `var(x) = shot_k * g * x + (read_sigma * g)^2`.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::RawImage;

pub const DEFAULT_READ_SIGMA: f64 = 2e-4;
pub const DEFAULT_SHOT_K: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub gain_db: f64,
    /// Read-noise standard deviation at unit gain, normalized units.
    pub read_sigma: f64,
    /// Shot-noise variance per unit signal at unit gain.
    pub shot_k: f64,
}

impl NoiseProfile {
    pub fn new(gain_db: f64, read_sigma: f64, shot_k: f64) -> Result<Self> {
        let p = NoiseProfile {
            gain_db,
            read_sigma,
            shot_k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain_db.is_finite() {
            return Err(Error::InvalidArgument("gain must be finite".into()));
        }
        if !(self.read_sigma >= 0.0 && self.read_sigma.is_finite())
            || !(self.shot_k >= 0.0 && self.shot_k.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "noise parameters must be non-negative: read_sigma={} shot_k={}",
                self.read_sigma, self.shot_k
            )));
        }
        Ok(())
    }

    pub fn linear_gain(&self) -> f64 {
        10f64.powf(self.gain_db / 20.0)
    }

    #[inline]
    pub fn variance(&self, x: f64) -> f64 {
        let g = self.linear_gain();
        self.shot_k * g * x + (self.read_sigma * g).powi(2)
    }
}

pub fn noise_variance(profile: &NoiseProfile, x: f64) -> f64 {
    profile.variance(x)
}

/// Per-gain profile lookup. Starts with the challenge gains (0, 24, 42 dB)
/// at the default parameters; entries can be added or overridden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRegistry {
    profiles: Vec<NoiseProfile>,
}

impl Default for NoiseRegistry {
    fn default() -> Self {
        NoiseRegistry {
            profiles: crate::datagen::CHALLENGE_GAINS_DB
                .iter()
                .map(|&g| NoiseProfile {
                    gain_db: g,
                    read_sigma: DEFAULT_READ_SIGMA,
                    shot_k: DEFAULT_SHOT_K,
                })
                .collect(),
        }
    }
}

impl NoiseRegistry {
    pub fn empty() -> Self {
        NoiseRegistry { profiles: Vec::new() }
    }

    pub fn insert(&mut self, profile: NoiseProfile) -> Result<()> {
        profile.validate()?;
        match self
            .profiles
            .iter_mut()
            .find(|p| same_gain(p.gain_db, profile.gain_db))
        {
            Some(slot) => *slot = profile,
            None => self.profiles.push(profile),
        }
        Ok(())
    }

    pub fn profile_for_gain(&self, gain_db: f64) -> Result<NoiseProfile> {
        self.profiles
            .iter()
            .find(|p| same_gain(p.gain_db, gain_db))
            .copied()
            .ok_or(Error::UnregisteredGain(gain_db))
    }

    pub fn profiles(&self) -> &[NoiseProfile] {
        &self.profiles
    }
}

fn same_gain(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Registered default profile for one of the challenge gains.
pub fn profile_for_gain(gain_db: f64) -> Result<NoiseProfile> {
    NoiseRegistry::default().profile_for_gain(gain_db)
}

/// Words of the ChaCha stream consumed per pixel (two u64 draws).
const WORDS_PER_PIXEL: u128 = 4;

#[inline]
fn standard_normal(a: u64, b: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) + 1) as f64 * SCALE; // (0, 1]
    let u2 = (b >> 11) as f64 * SCALE; // [0, 1)
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Adds heteroscedastic Gaussian noise and clamps to `[0, 1]`.
///
/// Pixel `i` always draws from words `4i..4i+4` of the ChaCha8 stream keyed
/// by `seed`, so the result does not depend on traversal order or threads.
pub fn synthesize_noise(raw: &RawImage, profile: &NoiseProfile, seed: u64) -> Result<RawImage> {
    profile.validate()?;
    let w = raw.width();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut out = raw.data().to_vec();
    if w == 0 {
        return Ok(raw.clone());
    }
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut rng = base.clone();
        rng.set_word_pos((y * w) as u128 * WORDS_PER_PIXEL);
        for v in row.iter_mut() {
            let (a, b) = (rng.next_u64(), rng.next_u64());
            let sigma = profile.variance(*v).max(0.0).sqrt();
            *v = (*v + sigma * standard_normal(a, b)).clamp(0.0, 1.0);
        }
    });
    Ok(raw.with_data(out, raw.cfa().clone()))
}
