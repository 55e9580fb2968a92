//! Minimal visualization ISP: Bayer demosaic, white balance, transfer curve.
//!
//! The same [`IspConfig`] must be used for prediction and ground truth when
//! rendering for metrics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::border::phase_index;
use crate::cfa::Channel;
use crate::error::{Error, Result};
use crate::image::{PlanarImage, RawImage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemosaicKind {
    Bilinear,
    #[default]
    Mhc5x5,
}

impl FromStr for DemosaicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(DemosaicKind::Bilinear),
            "mhc5x5" | "mhc" => Ok(DemosaicKind::Mhc5x5),
            other => Err(Error::InvalidArgument(format!("unknown demosaic `{other}`"))),
        }
    }
}

impl fmt::Display for DemosaicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemosaicKind::Bilinear => "bilinear",
            DemosaicKind::Mhc5x5 => "mhc5x5",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transfer {
    #[default]
    Srgb,
    Gamma22,
    Linear,
}

impl Transfer {
    /// Clamps into `[0, 1]`, then applies the curve.
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        match self {
            Transfer::Srgb => {
                if v <= 0.003_130_8 {
                    12.92 * v
                } else {
                    1.055 * v.powf(1.0 / 2.4) - 0.055
                }
            }
            Transfer::Gamma22 => v.powf(1.0 / 2.2),
            Transfer::Linear => v,
        }
    }
}

impl FromStr for Transfer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srgb" => Ok(Transfer::Srgb),
            "gamma22" => Ok(Transfer::Gamma22),
            "linear" => Ok(Transfer::Linear),
            other => Err(Error::InvalidArgument(format!("unknown transfer `{other}`"))),
        }
    }
}

impl fmt::Display for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transfer::Srgb => "srgb",
            Transfer::Gamma22 => "gamma22",
            Transfer::Linear => "linear",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IspConfig {
    pub demosaic: DemosaicKind,
    pub wb_gains: [f64; 3],
    pub transfer: Transfer,
}

impl Default for IspConfig {
    fn default() -> Self {
        IspConfig {
            demosaic: DemosaicKind::Mhc5x5,
            wb_gains: [1.0, 1.0, 1.0],
            transfer: Transfer::Srgb,
        }
    }
}

impl IspConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wb_gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "white-balance gains must be positive, got {:?}",
                self.wb_gains
            )));
        }
        Ok(())
    }
}

/// Clamped, phase-preserving access to a CFA frame.
struct Taps<'a> {
    raw: &'a RawImage,
    w: isize,
    h: isize,
    tw: usize,
    th: usize,
}

impl<'a> Taps<'a> {
    fn new(raw: &'a RawImage) -> Self {
        Taps {
            raw,
            w: raw.width() as isize,
            h: raw.height() as isize,
            tw: raw.cfa().tile_width(),
            th: raw.cfa().tile_height(),
        }
    }

    #[inline]
    fn coords(&self, x: isize, y: isize) -> (usize, usize) {
        if x >= 0 && y >= 0 && x < self.w && y < self.h {
            (x as usize, y as usize)
        } else {
            (
                phase_index(x, self.w as usize, self.tw),
                phase_index(y, self.h as usize, self.th),
            )
        }
    }

    #[inline]
    fn value(&self, x: isize, y: isize) -> f64 {
        let (x, y) = self.coords(x, y);
        self.raw.get(x, y)
    }

    #[inline]
    fn channel(&self, x: isize, y: isize) -> Channel {
        let (x, y) = self.coords(x, y);
        self.raw.channel_at(x, y)
    }
}

fn check_bayer_input(bayer: &RawImage, min: usize) -> Result<()> {
    bayer.cfa().require_bayer()?;
    if bayer.width() < min || bayer.height() < min {
        return Err(Error::ImageTooSmall(format!(
            "demosaic needs at least {min}x{min}, got {}x{}",
            bayer.width(),
            bayer.height()
        )));
    }
    Ok(())
}

const RGB: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

fn slot(c: Channel) -> usize {
    match c {
        Channel::R => 0,
        Channel::G => 1,
        Channel::B => 2,
        Channel::W => unreachable!("W in a Bayer frame"),
    }
}

fn render_rows<F>(bayer: &RawImage, pixel: F) -> Result<PlanarImage>
where
    F: Fn(&Taps<'_>, isize, isize) -> [f64; 3] + Sync,
{
    let (w, h) = (bayer.width(), bayer.height());
    let taps = Taps::new(bayer);
    let mut rgb = vec![[0.0f64; 3]; w * h];
    rgb.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = pixel(&taps, x as isize, y as isize);
        }
    });
    let planes = (0..3).map(|c| rgb.iter().map(|p| p[c]).collect()).collect();
    PlanarImage::new(w, h, RGB.to_vec(), planes)
}

/// Bilinear demosaic: each missing color is the mean of that color's samples
/// in the 3x3 neighborhood (the classical bilinear stencils for Bayer).
pub fn demosaic_bilinear(bayer: &RawImage) -> Result<PlanarImage> {
    check_bayer_input(bayer, 3)?;
    render_rows(bayer, |t, x, y| {
        let own = t.channel(x, y);
        let mut sum = [0.0; 3];
        let mut cnt = [0u32; 3];
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let s = slot(t.channel(x + dx, y + dy));
                sum[s] += t.value(x + dx, y + dy);
                cnt[s] += 1;
            }
        }
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = sum[c] / f64::from(cnt[c].max(1));
        }
        px[slot(own)] = t.value(x, y);
        px
    })
}

type Kernel = [[f64; 5]; 5];

/// Gradient-corrected 5x5 kernels, to be scaled by 1/8.
pub const MHC_G_AT_RB: Kernel = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [-1.0, 2.0, 4.0, 2.0, -1.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];
/// Color horizontally adjacent to a green site.
pub const MHC_ROW_AT_G: Kernel = [
    [0.0, 0.0, 0.5, 0.0, 0.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [-1.0, 4.0, 5.0, 4.0, -1.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0],
];
/// Color vertically adjacent to a green site.
pub const MHC_COL_AT_G: Kernel = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.5, 0.0, 5.0, 0.0, 0.5],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];
/// Red at blue sites and blue at red sites.
pub const MHC_RB_AT_BR: Kernel = [
    [0.0, 0.0, -1.5, 0.0, 0.0],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [-1.5, 0.0, 6.0, 0.0, -1.5],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, -1.5, 0.0, 0.0],
];

#[inline]
fn convolve5(t: &Taps<'_>, k: &Kernel, x: isize, y: isize) -> f64 {
    let mut acc = 0.0;
    for (ky, row) in k.iter().enumerate() {
        for (kx, &wgt) in row.iter().enumerate() {
            if wgt != 0.0 {
                acc += wgt * t.value(x + kx as isize - 2, y + ky as isize - 2);
            }
        }
    }
    acc / 8.0
}

/// Gradient-corrected linear demosaic with 5x5 support. Every kernel has unit
/// DC gain and is symmetric, so affine signals are reproduced exactly.
pub fn demosaic_mhc(bayer: &RawImage) -> Result<PlanarImage> {
    check_bayer_input(bayer, 5)?;
    render_rows(bayer, |t, x, y| {
        let own = t.channel(x, y);
        let mut px = [0.0; 3];
        px[slot(own)] = t.value(x, y);
        match own {
            Channel::G => {
                let horizontal = t.channel(x + 1, y);
                let vertical = t.channel(x, y + 1);
                px[slot(horizontal)] = convolve5(t, &MHC_ROW_AT_G, x, y);
                px[slot(vertical)] = convolve5(t, &MHC_COL_AT_G, x, y);
            }
            _ => {
                let other = if own == Channel::R { Channel::B } else { Channel::R };
                px[1] = convolve5(t, &MHC_G_AT_RB, x, y);
                px[slot(other)] = convolve5(t, &MHC_RB_AT_BR, x, y);
            }
        }
        px
    })
}

pub fn demosaic(bayer: &RawImage, kind: DemosaicKind) -> Result<PlanarImage> {
    match kind {
        DemosaicKind::Bilinear => demosaic_bilinear(bayer),
        DemosaicKind::Mhc5x5 => demosaic_mhc(bayer),
    }
}

pub fn apply_transfer(rgb: &PlanarImage, transfer: Transfer) -> Result<PlanarImage> {
    let planes = rgb
        .planes()
        .iter()
        .map(|p| p.iter().map(|&v| transfer.apply(v)).collect())
        .collect();
    PlanarImage::new(rgb.width(), rgb.height(), rgb.channels().to_vec(), planes)
}

/// Demosaic, white-balance, clamp to `[0, 1]`, then apply the transfer curve.
pub fn run_isp(bayer: &RawImage, cfg: &IspConfig) -> Result<PlanarImage> {
    cfg.validate()?;
    let rgb = demosaic(bayer, cfg.demosaic)?;
    let (w, h) = (rgb.width(), rgb.height());
    let planes = rgb
        .into_planes()
        .into_iter()
        .zip(cfg.wb_gains)
        .map(|(mut p, gain)| {
            for v in &mut p {
                *v = cfg.transfer.apply(*v * gain);
            }
            p
        })
        .collect();
    PlanarImage::new(w, h, RGB.to_vec(), planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::{CfaDescriptor, CfaRegistry};
    use crate::test_util::random_raw;

    fn bayers() -> Vec<CfaDescriptor> {
        CfaRegistry::builtin().iter().filter(|c| c.is_bayer()).cloned().collect()
    }

    fn assert_constant(img: &PlanarImage, v: f64, tol: f64) {
        for p in img.planes() {
            for &s in p {
                assert!((s - v).abs() <= tol, "{s} vs {v}");
            }
        }
    }

    #[test]
    fn constant_bayer_gives_constant_rgb() {
        for cfa in bayers() {
            let raw = RawImage::constant(8, 6, 0.37, cfa).unwrap();
            assert_constant(&demosaic_bilinear(&raw).unwrap(), 0.37, 1e-15);
            assert_constant(&demosaic_mhc(&raw).unwrap(), 0.37, 1e-15);
        }
    }

    #[test]
    fn known_samples_pass_through() {
        for cfa in bayers() {
            let raw = random_raw(10, 8, cfa.clone(), 9);
            for rgb in [demosaic_bilinear(&raw).unwrap(), demosaic_mhc(&raw).unwrap()] {
                for y in 0..8 {
                    for x in 0..10 {
                        let p = rgb.plane(cfa.channel_at(x, y)).unwrap();
                        assert_eq!(p[y * 10 + x], raw.get(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn pure_red_indicator() {
        let cfa = CfaDescriptor::rggb();
        let data = (0..64)
            .map(|i| if cfa.channel_at(i % 8, i / 8) == Channel::R { 1.0 } else { 0.0 })
            .collect();
        let raw = RawImage::new(8, 8, data, cfa).unwrap();
        let rgb = demosaic_bilinear(&raw).unwrap();
        assert_eq!(rgb.plane(Channel::R).unwrap()[2 * 8 + 2], 1.0);
        // Every red estimate is 1: red sites are the only non-zero samples.
        assert!(rgb.plane(Channel::R).unwrap().iter().all(|&v| v == 1.0));
        assert!(rgb.plane(Channel::G).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bilinear_matches_scalar_stencils() {
        // Interior reference written out per Bayer site type for RGGB.
        let raw = random_raw(8, 8, CfaDescriptor::rggb(), 21);
        let rgb = demosaic_bilinear(&raw).unwrap();
        let v = |x: usize, y: usize| raw.get(x, y);
        for y in 1..7 {
            for x in 1..7 {
                let cross = (v(x - 1, y) + v(x + 1, y) + v(x, y - 1) + v(x, y + 1)) / 4.0;
                let diag = (v(x - 1, y - 1) + v(x + 1, y - 1) + v(x - 1, y + 1) + v(x + 1, y + 1)) / 4.0;
                let horiz = (v(x - 1, y) + v(x + 1, y)) / 2.0;
                let vert = (v(x, y - 1) + v(x, y + 1)) / 2.0;
                let expect = match (x % 2, y % 2) {
                    (0, 0) => [v(x, y), cross, diag],
                    (1, 1) => [diag, cross, v(x, y)],
                    (1, 0) => [horiz, v(x, y), vert],
                    _ => [vert, v(x, y), horiz],
                };
                for c in 0..3 {
                    let got = rgb.planes()[c][y * 8 + x];
                    assert!((got - expect[c]).abs() < 1e-15, "({x},{y}) c{c}");
                }
            }
        }
    }

    #[test]
    fn kernels_have_unit_dc_gain() {
        for k in [MHC_G_AT_RB, MHC_ROW_AT_G, MHC_COL_AT_G, MHC_RB_AT_BR] {
            let s: f64 = k.iter().flatten().sum();
            assert_eq!(s, 8.0);
        }
    }

    #[test]
    fn non_bayer_and_tiny_inputs_are_rejected() {
        let rgbw = RawImage::constant(8, 8, 0.5, CfaDescriptor::rgbw_default()).unwrap();
        assert!(matches!(demosaic_mhc(&rgbw), Err(Error::DescriptorMismatch { .. })));
        let tiny = RawImage::constant(4, 4, 0.5, CfaDescriptor::rggb()).unwrap();
        assert!(matches!(demosaic_mhc(&tiny), Err(Error::ImageTooSmall(_))));
        let tiny = RawImage::constant(2, 2, 0.5, CfaDescriptor::rggb()).unwrap();
        assert!(demosaic_bilinear(&tiny).is_err());
    }

    #[test]
    fn transfer_values() {
        for t in [Transfer::Srgb, Transfer::Gamma22, Transfer::Linear] {
            assert_eq!(t.apply(0.0), 0.0);
            assert!((t.apply(1.0) - 1.0).abs() < 1e-15);
            assert_eq!(t.apply(-0.5), 0.0);
        }
        assert!((Transfer::Srgb.apply(0.5) - 0.735_356_983_052_449_5).abs() < 1e-12);
        assert!((Transfer::Gamma22.apply(0.25) - 0.532_520_544_719_981_3).abs() < 1e-12);
        assert_eq!(Transfer::Srgb.apply(0.002), 12.92 * 0.002);
    }

    #[test]
    fn transfers_are_strictly_monotonic() {
        for t in [Transfer::Srgb, Transfer::Gamma22, Transfer::Linear] {
            let mut prev = t.apply(0.0);
            for i in 1..=10_000 {
                let cur = t.apply(f64::from(i) / 10_000.0);
                assert!(cur > prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn isp_defaults_on_mid_gray() {
        let raw = RawImage::constant(8, 8, 0.5, CfaDescriptor::rggb()).unwrap();
        let rgb = run_isp(&raw, &IspConfig::default()).unwrap();
        assert_constant(&rgb, 0.735_356_983_052_449_5, 1e-12);
    }

    #[test]
    fn linear_isp_equals_demosaic() {
        let raw = random_raw(12, 10, CfaDescriptor::grbg(), 4);
        let cfg = IspConfig { transfer: Transfer::Linear, ..Default::default() };
        let a = run_isp(&raw, &cfg).unwrap();
        // Random data can overshoot under MHC; compare after the clamp.
        let b = demosaic_mhc(&raw).unwrap();
        for (pa, pb) in a.planes().iter().zip(b.planes()) {
            for (x, y) in pa.iter().zip(pb) {
                assert_eq!(*x, y.clamp(0.0, 1.0));
            }
        }
    }

    #[test]
    fn white_balance_clamps() {
        let raw = RawImage::constant(8, 8, 0.6, CfaDescriptor::rggb()).unwrap();
        let cfg = IspConfig {
            wb_gains: [2.0, 1.0, 1.0],
            transfer: Transfer::Linear,
            ..Default::default()
        };
        let rgb = run_isp(&raw, &cfg).unwrap();
        assert_constant(&PlanarImage::new(8, 8, vec![Channel::R], vec![rgb.planes()[0].clone()]).unwrap(), 1.0, 0.0);
        assert!(rgb.planes()[1].iter().chain(&rgb.planes()[2]).all(|&v| (v - 0.6).abs() < 1e-15));
        let bad = IspConfig { wb_gains: [0.0, 1.0, 1.0], ..Default::default() };
        assert!(run_isp(&raw, &bad).is_err());
    }
}
