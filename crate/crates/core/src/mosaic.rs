//! Mosaicking planar images onto a CFA and the inverse sparse expansion.

use rayon::prelude::*;

use crate::cfa::{CfaDescriptor, Channel};
use crate::error::{Error, Result};
use crate::image::{PlanarImage, RawImage};

/// Samples each pixel from the plane selected by the CFA at that position.
pub fn mosaic(src: &PlanarImage, cfa: &CfaDescriptor) -> Result<RawImage> {
    let (w, h) = (src.width(), src.height());
    if w < cfa.tile_width() || h < cfa.tile_height() {
        return Err(Error::ImageTooSmall(format!(
            "{w}x{h} image is smaller than the {}x{} CFA tile",
            cfa.tile_width(),
            cfa.tile_height()
        )));
    }
    // Resolve plane slices once per tile position.
    let mut tile_planes = Vec::with_capacity(cfa.layout().len());
    for &c in cfa.layout() {
        tile_planes.push(src.require_plane(c)?);
    }
    let tw = cfa.tile_width();
    let th = cfa.tile_height();
    let mut data = vec![0.0; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let base = (y % th) * tw;
        for (x, out) in row.iter_mut().enumerate() {
            *out = tile_planes[base + x % tw][y * w + x];
        }
    });
    // Keep the raw invariant: clamp into [0, 1].
    RawImage::from_clamped(w, h, data, cfa.clone())
}

/// Splits an RGBW frame into four sparse planes ordered W, G, B, R. Each
/// plane holds the raw value at its own sites and zero elsewhere.
pub fn expand_cfa_channels(raw: &RawImage) -> Result<PlanarImage> {
    raw.cfa().require_rgbw()?;
    let (w, h) = (raw.width(), raw.height());
    let order = Channel::EXPANSION_ORDER;
    let mut planes = vec![vec![0.0; w * h]; order.len()];
    for y in 0..h {
        for x in 0..w {
            let c = raw.channel_at(x, y);
            let slot = order.iter().position(|&o| o == c).expect("RGBW channel");
            planes[slot][y * w + x] = raw.get(x, y);
        }
    }
    PlanarImage::new(w, h, order.to_vec(), planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_planar, random_raw};
    use Channel::*;

    #[test]
    fn constant_planes_give_constant_raw() {
        for cfa in [CfaDescriptor::rgbw_default(), CfaDescriptor::rggb()] {
            let src = PlanarImage::constant(8, 8, &Channel::ALL, 0.5).unwrap();
            let raw = mosaic(&src, &cfa).unwrap();
            assert!(raw.data().iter().all(|&v| v == 0.5));
            assert_eq!(raw.cfa(), &cfa);
        }
    }

    #[test]
    fn indicator_plane_lands_on_red_sites() {
        let mut src = PlanarImage::constant(4, 4, &[R, G, B], 0.0).unwrap();
        src.plane_mut(R).unwrap().fill(1.0);
        let cfa = CfaDescriptor::rggb();
        let raw = mosaic(&src, &cfa).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if cfa.channel_at(x, y) == R { 1.0 } else { 0.0 };
                assert_eq!(raw.get(x, y), expect);
            }
        }
    }

    #[test]
    fn mosaic_matches_per_pixel_selection() {
        let src = random_planar(8, 8, &Channel::ALL, 11);
        let cfa = CfaDescriptor::rgbw_default();
        let raw = mosaic(&src, &cfa).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let plane = src.plane(cfa.channel_at(x, y)).unwrap();
                assert_eq!(raw.get(x, y), plane[y * 8 + x]);
            }
        }
    }

    #[test]
    fn missing_channel_is_reported() {
        let src = PlanarImage::constant(4, 4, &[R, G, B], 0.5).unwrap();
        let err = mosaic(&src, &CfaDescriptor::rgbw_default()).unwrap_err();
        assert!(matches!(err, Error::MissingChannel(W)));
    }

    #[test]
    fn expansion_of_constant_raw() {
        let raw = RawImage::constant(8, 8, 0.25, CfaDescriptor::rgbw_default()).unwrap();
        let planes = expand_cfa_channels(&raw).unwrap();
        assert_eq!(planes.channels(), &[W, G, B, R]);
        for y in 0..8 {
            for x in 0..8 {
                let i = y * 8 + x;
                let sum: f64 = planes.planes().iter().map(|p| p[i]).sum();
                assert_eq!(sum, 0.25);
                let own = planes.plane(raw.channel_at(x, y)).unwrap()[i];
                assert_eq!(own, 0.25);
            }
        }
    }

    #[test]
    fn expansion_of_two_by_two_crop() {
        let cfa = CfaDescriptor::rgbw_default();
        let (a, b, c, d) = (0.1, 0.2, 0.3, 0.4);
        let raw = RawImage::new(2, 2, vec![a, b, c, d], cfa).unwrap();
        let p = expand_cfa_channels(&raw).unwrap();
        assert_eq!(p.plane(W).unwrap(), &[a, 0.0, 0.0, d]);
        assert_eq!(p.plane(R).unwrap(), &[0.0, b, c, 0.0]);
        assert_eq!(p.plane(G).unwrap(), &[0.0; 4]);
        assert_eq!(p.plane(B).unwrap(), &[0.0; 4]);
    }

    #[test]
    fn expansion_rejects_bayer() {
        let raw = RawImage::constant(4, 4, 0.5, CfaDescriptor::rggb()).unwrap();
        assert!(matches!(
            expand_cfa_channels(&raw),
            Err(Error::DescriptorMismatch { .. })
        ));
    }

    #[test]
    fn expansion_round_trips_through_mosaic() {
        let raw = random_raw(8, 8, CfaDescriptor::rgbw_default(), 3);
        let planes = expand_cfa_channels(&raw).unwrap();
        let back = mosaic(&planes, raw.cfa()).unwrap();
        assert_eq!(back, raw);
    }

    #[test]
    fn default_rgbw_bins_to_rggb_structurally() {
        // Non-W sites of each 2x2 sub-block hold one color, and those colors
        // arranged per sub-block reproduce RGGB.
        let cfa = CfaDescriptor::rgbw_default();
        let bayer = CfaDescriptor::rggb();
        for by in 0..2 {
            for bx in 0..2 {
                let colors: Vec<Channel> = (0..2)
                    .flat_map(|dy| (0..2).map(move |dx| (2 * bx + dx, 2 * by + dy)))
                    .map(|(x, y)| cfa.channel_at(x, y))
                    .filter(|&c| c != W)
                    .collect();
                assert_eq!(colors.len(), 2);
                assert_eq!(colors[0], colors[1]);
                assert_eq!(colors[0], bayer.channel_at(bx, by));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn expansion_partitions_and_round_trips(
                w in 1usize..5, h in 1usize..5, seed in any::<u64>()
            ) {
                let raw = random_raw(4 * w, 4 * h, CfaDescriptor::rgbw_default(), seed);
                let planes = expand_cfa_channels(&raw).unwrap();
                for i in 0..raw.data().len() {
                    let nonzero = planes.planes().iter().filter(|p| p[i] != 0.0).count();
                    prop_assert!(nonzero <= 1);
                    let sum: f64 = planes.planes().iter().map(|p| p[i]).sum();
                    prop_assert_eq!(sum, raw.data()[i]);
                }
                prop_assert_eq!(mosaic(&planes, raw.cfa()).unwrap(), raw);
            }
        }
    }
}
