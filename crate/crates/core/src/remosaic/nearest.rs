use rayon::prelude::*;

use super::check_io;
use crate::cfa::CfaDescriptor;
use crate::error::Result;
use crate::image::RawImage;

/// Offsets to same-channel input sites for one output phase, nearest first
/// (ties: smaller dy, then smaller dx).
pub(super) fn sorted_offsets(cfa_in: &CfaDescriptor, cfa_out: &CfaDescriptor, px: usize, py: usize, radius: isize) -> Vec<(isize, isize)> {
    let target = cfa_out.channel_at(px, py);
    let (tw, th) = (cfa_in.tile_width() as isize, cfa_in.tile_height() as isize);
    let mut offs = Vec::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (x, y) = ((px as isize + dx).rem_euclid(tw), (py as isize + dy).rem_euclid(th));
            if cfa_in.channel_at(x as usize, y as usize) == target {
                offs.push((dx, dy));
            }
        }
    }
    offs.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    offs
}

pub(super) fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

fn exhaustive(rgbw: &RawImage, cfa_out: &CfaDescriptor, x: usize, y: usize) -> f64 {
    let target = cfa_out.channel_at(x, y);
    let mut best: Option<(isize, usize, usize)> = None;
    for sy in 0..rgbw.height() {
        for sx in 0..rgbw.width() {
            if rgbw.channel_at(sx, sy) != target {
                continue;
            }
            let (dx, dy) = (sx as isize - x as isize, sy as isize - y as isize);
            let key = (dx * dx + dy * dy, sy, sx);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
    }
    best.map_or(0.0, |(_, sy, sx)| rgbw.get(sx, sy))
}

/// Each output pixel copies the nearest input sample (Euclidean) of the
/// channel the output pattern requires there.
pub fn remosaic_nearest(rgbw: &RawImage, cfa_out: &CfaDescriptor) -> Result<RawImage> {
    check_io(rgbw, cfa_out)?;
    let cfa_in = rgbw.cfa();
    let pw = lcm(cfa_in.tile_width(), cfa_out.tile_width());
    let ph = lcm(cfa_in.tile_height(), cfa_out.tile_height());
    let radius = 2 * cfa_in.tile_width().max(cfa_in.tile_height()) as isize;
    let table: Vec<Vec<(isize, isize)>> = (0..ph)
        .flat_map(|py| (0..pw).map(move |px| (px, py)))
        .map(|(px, py)| sorted_offsets(cfa_in, cfa_out, px, py, radius))
        .collect();

    let (w, h) = (rgbw.width() as isize, rgbw.height() as isize);
    let mut out = vec![0.0; rgbw.data().len()];
    out.par_chunks_mut(w as usize).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let offs = &table[(y % ph) * pw + x % pw];
            let hit = offs.iter().find(|&&(dx, dy)| {
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h
            });
            *o = match hit {
                // Anything outside the window is farther than `radius`.
                Some(&(dx, dy)) if dx * dx + dy * dy <= radius * radius => {
                    rgbw.get((x as isize + dx) as usize, (y as isize + dy) as usize)
                }
                _ => exhaustive(rgbw, cfa_out, x, y),
            };
        }
    });
    Ok(rgbw.with_data(out, cfa_out.clone()))
}
