//! Aligned RGBW / Bayer pair generation.
//!
//! A full-resolution RGBW capture is diagonally binned into a half-size
//! Bayer frame and a half-size white plane. The Bayer frame is demosaiced,
//! the white plane is attached as a fourth channel, and the resulting RGBW
//! image is mosaiced twice: once with the RGBW pattern (network input) and
//! once with the Bayer pattern (ground truth). Both mosaics read the same
//! planes, so they are aligned by construction.

mod dataset;
mod scenes;

pub use dataset::{derive_seed, synthetic_pairs, write_pairs, SyntheticSetSpec};
pub use scenes::{generate_synthetic_scene, SceneKind, SLANTED_EDGE_DEGREES, WHITE_MIX};

use serde::{Deserialize, Serialize};

use crate::cfa::{CfaDescriptor, Channel};
use crate::error::{Error, Result};
use crate::image::RawImage;
use crate::isp::{demosaic, DemosaicKind};
use crate::mosaic::mosaic;

/// One training / evaluation sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    pub input_rgbw: RawImage,
    pub gt_bayer: RawImage,
    pub scene_id: String,
    pub gain_db: f64,
}

impl PairSample {
    pub fn new(input_rgbw: RawImage, gt_bayer: RawImage, scene_id: impl Into<String>, gain_db: f64) -> Result<Self> {
        input_rgbw.same_shape(&gt_bayer)?;
        input_rgbw.cfa().require_rgbw()?;
        gt_bayer.cfa().require_bayer()?;
        Ok(PairSample {
            input_rgbw,
            gt_bayer,
            scene_id: scene_id.into(),
            gain_db,
        })
    }
}

/// Gains used by the challenge sets.
pub const CHALLENGE_GAINS_DB: [f64; 3] = [0.0, 24.0, 42.0];

/// Output of [`diagonal_bin`]: a half-size Bayer frame and a half-size white plane.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedCapture {
    pub bayer: RawImage,
    pub white: Vec<f64>,
}

/// Averages the two same-channel samples on each diagonal of every 2x2 block.
pub fn diagonal_bin(rgbw: &RawImage) -> Result<BinnedCapture> {
    let (w, h) = (rgbw.width(), rgbw.height());
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::OddDimensions { width: w, height: h });
    }
    let binned_cfa = rgbw.cfa().binned_bayer()?;
    let (bw, bh) = (w / 2, h / 2);
    let mut color = vec![0.0; bw * bh];
    let mut white = vec![0.0; bw * bh];
    for by in 0..bh {
        for bx in 0..bw {
            let (x, y) = (2 * bx, 2 * by);
            let main = [rgbw.get(x, y), rgbw.get(x + 1, y + 1)];
            let anti = [rgbw.get(x + 1, y), rgbw.get(x, y + 1)];
            let (wpair, cpair) = if rgbw.channel_at(x, y) == Channel::W {
                (main, anti)
            } else {
                (anti, main)
            };
            let i = by * bw + bx;
            white[i] = 0.5 * (wpair[0] + wpair[1]);
            color[i] = 0.5 * (cpair[0] + cpair[1]);
        }
    }
    let bayer = RawImage::with_levels(bw, bh, color, binned_cfa, rgbw.black_level(), rgbw.white_level())?;
    Ok(BinnedCapture { bayer, white })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub demosaic: DemosaicKind,
    pub input_cfa: CfaDescriptor,
    pub output_cfa: CfaDescriptor,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            demosaic: DemosaicKind::Mhc5x5,
            input_cfa: CfaDescriptor::rgbw_default(),
            output_cfa: CfaDescriptor::rggb(),
        }
    }
}

/// Runs the full pair pipeline with the default RGBW input and RGGB output patterns.
pub fn generate_pair(capture: &RawImage, demosaic_kind: DemosaicKind) -> Result<PairSample> {
    let cfg = PairConfig {
        demosaic: demosaic_kind,
        ..PairConfig::default()
    };
    generate_pair_with(capture, &cfg, "capture")
}

pub fn generate_pair_with(capture: &RawImage, cfg: &PairConfig, scene_id: &str) -> Result<PairSample> {
    cfg.input_cfa.require_rgbw()?;
    cfg.output_cfa.require_bayer()?;
    let binned = diagonal_bin(capture)?;
    let rgbw = demosaic(&binned.bayer, cfg.demosaic)?.with_plane(Channel::W, binned.white)?;
    let input_rgbw = mosaic(&rgbw, &cfg.input_cfa)?;
    let gt_bayer = mosaic(&rgbw, &cfg.output_cfa)?;
    PairSample::new(input_rgbw, gt_bayer, scene_id, 0.0)
}

/// Center crop whose origin is snapped down to a multiple of the CFA tile so
/// the output keeps the input's phase.
pub fn crop_center(img: &RawImage, w: usize, h: usize) -> Result<RawImage> {
    let (iw, ih) = (img.width(), img.height());
    if w > iw || h > ih || w == 0 || h == 0 {
        return Err(Error::CropTooLarge {
            req_w: w,
            req_h: h,
            width: iw,
            height: ih,
        });
    }
    let (tw, th) = (img.cfa().tile_width(), img.cfa().tile_height());
    let x0 = (iw - w) / 2 / tw * tw;
    let y0 = (ih - h) / 2 / th * th;
    let mut data = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        data.extend_from_slice(&img.data()[y * iw + x0..y * iw + x0 + w]);
    }
    RawImage::with_levels(w, h, data, img.cfa().clone(), img.black_level(), img.white_level())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::PlanarImage;
    use crate::test_util::random_raw;

    #[test]
    fn bins_constant_diagonals() {
        let cfa = CfaDescriptor::rgbw_default();
        let raw = RawImage::new(2, 2, vec![0.4, 0.2, 0.2, 0.4], cfa).unwrap();
        let b = diagonal_bin(&raw).unwrap();
        assert_eq!(b.white, vec![0.4]);
        assert_eq!(b.bayer.data(), &[0.2]);
        assert_eq!(b.bayer.channel_at(0, 0), Channel::R);
    }

    #[test]
    fn white_is_arithmetic_mean() {
        let raw = RawImage::new(2, 2, vec![0.3, 0.1, 0.1, 0.5], CfaDescriptor::rgbw_default()).unwrap();
        assert!((diagonal_bin(&raw).unwrap().white[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn binning_errors() {
        let odd = RawImage::constant(5, 4, 0.1, CfaDescriptor::rgbw_default()).unwrap();
        assert!(matches!(diagonal_bin(&odd), Err(Error::OddDimensions { .. })));
        let bayer = RawImage::constant(4, 4, 0.1, CfaDescriptor::rggb()).unwrap();
        assert!(matches!(diagonal_bin(&bayer), Err(Error::InvalidDescriptor { .. })));
    }

    #[test]
    fn binning_halves_and_preserves_white_mean() {
        let raw = random_raw(16, 12, CfaDescriptor::rgbw_default(), 8);
        let b = diagonal_bin(&raw).unwrap();
        assert_eq!((b.bayer.width(), b.bayer.height()), (8, 6));
        let w_sites: Vec<f64> = (0..12)
            .flat_map(|y| (0..16).map(move |x| (x, y)))
            .filter(|&(x, y)| raw.channel_at(x, y) == Channel::W)
            .map(|(x, y)| raw.get(x, y))
            .collect();
        let site_mean = w_sites.iter().sum::<f64>() / w_sites.len() as f64;
        let bin_mean = b.white.iter().sum::<f64>() / b.white.len() as f64;
        assert!((site_mean - bin_mean).abs() < 1e-14);
    }

    #[test]
    fn constant_capture_gives_constant_pair() {
        let cap = RawImage::constant(32, 32, 0.5, CfaDescriptor::rgbw_default()).unwrap();
        for kind in [DemosaicKind::Mhc5x5, DemosaicKind::Bilinear] {
            let pair = generate_pair(&cap, kind).unwrap();
            assert_eq!((pair.input_rgbw.width(), pair.input_rgbw.height()), (16, 16));
            assert!(pair.input_rgbw.data().iter().all(|&v| v == 0.5));
            assert!(pair.gt_bayer.data().iter().all(|&v| v == 0.5));
            assert_eq!(pair.gain_db, 0.0);
        }
    }

    #[test]
    fn pure_green_scene_traces_through() {
        // Scene: R = B = 0, G = W = g. Capture is its RGBW mosaic.
        use Channel::*;
        let g = 0.6;
        let mut scene = PlanarImage::constant(32, 32, &[R, G, B, W], 0.0).unwrap();
        scene.plane_mut(G).unwrap().fill(g);
        scene.plane_mut(W).unwrap().fill(g);
        let capture = mosaic(&scene, &CfaDescriptor::rgbw_default()).unwrap();
        let pair = generate_pair(&capture, DemosaicKind::Mhc5x5).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let gt = pair.gt_bayer.get(x, y);
                let inp = pair.input_rgbw.get(x, y);
                match pair.gt_bayer.channel_at(x, y) {
                    G => assert!((gt - g).abs() < 1e-15),
                    _ => assert!(gt.abs() < 1e-15),
                }
                match pair.input_rgbw.channel_at(x, y) {
                    G | W => assert!((inp - g).abs() < 1e-15),
                    _ => assert!(inp.abs() < 1e-15),
                }
            }
        }
    }

    #[test]
    fn pair_phases_align() {
        let cap = random_raw(48, 40, CfaDescriptor::rgbw_default(), 77);
        let pair = generate_pair(&cap, DemosaicKind::Mhc5x5).unwrap();
        let mut shared = 0;
        for y in 0..20 {
            for x in 0..24 {
                if pair.gt_bayer.channel_at(x, y) == pair.input_rgbw.channel_at(x, y) {
                    assert_eq!(pair.gt_bayer.get(x, y), pair.input_rgbw.get(x, y));
                    shared += 1;
                }
            }
        }
        assert!(shared > 0);
    }

    #[test]
    fn crop_rules() {
        let img = random_raw(8, 8, CfaDescriptor::rgbw_default(), 1);
        assert_eq!(crop_center(&img, 8, 8).unwrap(), img);

        let q = crop_center(&img, 4, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(q.get(x, y), img.get(x, y));
            }
        }
        assert!(matches!(crop_center(&img, 10, 10), Err(Error::CropTooLarge { .. })));

        // 16x16 -> 4x4: raw center origin (6, 6) snaps to (4, 4).
        let big = random_raw(16, 16, CfaDescriptor::rgbw_default(), 2);
        let c = crop_center(&big, 4, 4).unwrap();
        assert_eq!(c.get(0, 0), big.get(4, 4));
        assert_eq!(c.channel_at(0, 0), big.channel_at(4, 4));
    }
}
