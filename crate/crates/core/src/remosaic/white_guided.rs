use rayon::prelude::*;

use super::check_io;
use super::nearest::lcm;
use crate::border::phase_index;
use crate::cfa::{CfaDescriptor, Channel};
use crate::error::{Error, Result};
use crate::image::RawImage;

/// Dense white plane. W sites keep their sample; every other site takes an
/// edge-adaptive mean of its four W neighbors.
///
/// Out-of-frame neighbors are folded back inside by steps of two pixels,
/// which keeps the quincunx parity and therefore always lands on a W site.
pub fn interpolate_white_plane(rgbw: &RawImage) -> Result<Vec<f64>> {
    let cfa = rgbw.cfa();
    if !cfa.white_is_quincunx() {
        return Err(Error::InvalidDescriptor {
            name: cfa.name().to_string(),
            reason: "white-guided interpolation needs W sites on a quincunx".into(),
        });
    }
    let (w, h) = (rgbw.width(), rgbw.height());
    if w < 2 || h < 2 {
        return Err(Error::ImageTooSmall(format!("white plane needs at least 2x2, got {w}x{h}")));
    }
    let at = |x: isize, y: isize| rgbw.get(phase_index(x, w, 2), phase_index(y, h, 2));
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            if rgbw.channel_at(x, y) == Channel::W {
                *o = rgbw.get(x, y);
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let (n, s) = (at(xi, yi - 1), at(xi, yi + 1));
            let (e, wv) = (at(xi + 1, yi), at(xi - 1, yi));
            let (dv, dh) = ((n - s).abs(), (e - wv).abs());
            *o = if dv < 0.5 * dh {
                0.5 * (n + s)
            } else if dh < 0.5 * dv {
                0.5 * (e + wv)
            } else {
                0.25 * (n + s + e + wv)
            };
        }
    });
    Ok(out)
}

/// Splat taps for one output phase: offsets to input sites of the target
/// channel with their tent weights.
struct SplatTable {
    pw: usize,
    ph: usize,
    taps: Vec<Vec<(isize, isize, f64)>>,
}

impl SplatTable {
    fn new(cfa_in: &CfaDescriptor, cfa_out: &CfaDescriptor) -> Self {
        let pw = lcm(cfa_in.tile_width(), cfa_out.tile_width());
        let ph = lcm(cfa_in.tile_height(), cfa_out.tile_height());
        let area = cfa_in.tile_width() * cfa_in.tile_height();
        let (tw, th) = (cfa_in.tile_width() as isize, cfa_in.tile_height() as isize);
        let mut taps = Vec::with_capacity(pw * ph);
        for py in 0..ph {
            for px in 0..pw {
                let target = cfa_out.channel_at(px, py);
                let count = cfa_in.count(target).max(1);
                // Tent half-width: one site spacing plus one pixel.
                let r = ((area as f64 / count as f64).sqrt().ceil() as isize) + 1;
                let mut list = Vec::new();
                for dy in -(r - 1)..=(r - 1) {
                    for dx in -(r - 1)..=(r - 1) {
                        let sx = (px as isize + dx).rem_euclid(tw) as usize;
                        let sy = (py as isize + dy).rem_euclid(th) as usize;
                        if cfa_in.channel_at(sx, sy) != target {
                            continue;
                        }
                        let wt = (1.0 - dx.abs() as f64 / r as f64) * (1.0 - dy.abs() as f64 / r as f64);
                        list.push((dx, dy, wt));
                    }
                }
                taps.push(list);
            }
        }
        SplatTable { pw, ph, taps }
    }

    fn at(&self, x: usize, y: usize) -> &[(isize, isize, f64)] {
        &self.taps[(y % self.ph) * self.pw + x % self.pw]
    }
}

/// Color-difference remosaic guided by the interpolated white plane.
///
/// For each Bayer target channel `c`, the differences `c - W` at the input's
/// `c` sites are spread to the dense grid with normalized tent weights and
/// added back onto the white plane. Pixels whose input channel already equals
/// the target keep their sample.
pub fn remosaic_white_guided(rgbw: &RawImage, cfa_out: &CfaDescriptor) -> Result<RawImage> {
    check_io(rgbw, cfa_out)?;
    let white = interpolate_white_plane(rgbw)?;
    let (w, h) = (rgbw.width(), rgbw.height());
    let table = SplatTable::new(rgbw.cfa(), cfa_out);
    let diff = |x: usize, y: usize| rgbw.get(x, y) - white[y * w + x];

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            if rgbw.channel_at(x, y) == cfa_out.channel_at(x, y) {
                *o = rgbw.get(x, y);
                continue;
            }
            let (mut acc, mut norm) = (0.0, 0.0);
            for &(dx, dy, wt) in table.at(x, y) {
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                if sx < 0 || sy < 0 || sx >= w as isize || sy >= h as isize {
                    continue;
                }
                acc += wt * diff(sx as usize, sy as usize);
                norm += wt;
            }
            let d = if norm > 0.0 { acc / norm } else { 0.0 };
            *o = (white[y * w + x] + d).clamp(0.0, 1.0);
        }
    });
    Ok(rgbw.with_data(out, cfa_out.clone()))
}
