//! Deterministic synthetic scenes standing in for real captures.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfa::Channel;
use crate::error::{Error, Result};
use crate::image::PlanarImage;

/// White channel weights for (R, G, B).
pub const WHITE_MIX: [f64; 3] = [0.3, 0.5, 0.2];

pub const SLANTED_EDGE_DEGREES: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    SlantedEdge,
    TextGlyphs,
    Mesh,
    ColorRamp,
    NoiseField,
}

impl SceneKind {
    pub const ALL: [SceneKind; 5] = [
        SceneKind::SlantedEdge,
        SceneKind::TextGlyphs,
        SceneKind::Mesh,
        SceneKind::ColorRamp,
        SceneKind::NoiseField,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneKind::SlantedEdge => "slanted_edge",
            SceneKind::TextGlyphs => "text_glyphs",
            SceneKind::Mesh => "mesh",
            SceneKind::ColorRamp => "color_ramp",
            SceneKind::NoiseField => "noise_field",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownSceneKind(s.to_string()))
    }
}

type Rgb = [f64; 3];

fn random_color(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Rgb {
    [
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
        rng.random_range(lo..hi),
    ]
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// Renders an RGB scene of the given kind and derives
/// `W = 0.3 R + 0.5 G + 0.2 B`. Output is bit-identical for a fixed seed.
pub fn generate_synthetic_scene(kind: SceneKind, w: usize, h: usize, seed: u64) -> Result<PlanarImage> {
    if w < 32 || h < 32 {
        return Err(Error::ImageTooSmall(format!("synthetic scenes need at least 32x32, got {w}x{h}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px: Vec<Rgb> = vec![[0.0; 3]; w * h];
    match kind {
        SceneKind::ColorRamp => color_ramp(&mut px, w, h),
        SceneKind::SlantedEdge => {
            let (a, b) = contrasting_pair(&mut rng);
            slanted_edge(&mut px, w, h, SLANTED_EDGE_DEGREES, a, b);
        }
        SceneKind::Mesh => mesh(&mut px, w, h, &mut rng),
        SceneKind::TextGlyphs => text_glyphs(&mut px, w, h, &mut rng),
        SceneKind::NoiseField => noise_field(&mut px, w, h, &mut rng),
    }
    let mut planes = vec![Vec::with_capacity(w * h); 4];
    for p in &px {
        let p = p.map(|v| v.clamp(0.0, 1.0));
        for c in 0..3 {
            planes[c].push(p[c]);
        }
        planes[3].push(WHITE_MIX[0] * p[0] + WHITE_MIX[1] * p[1] + WHITE_MIX[2] * p[2]);
    }
    PlanarImage::new(w, h, vec![Channel::R, Channel::G, Channel::B, Channel::W], planes)
}

fn contrasting_pair(rng: &mut ChaCha8Rng) -> (Rgb, Rgb) {
    let dark = random_color(rng, 0.05, 0.35);
    let bright = random_color(rng, 0.6, 0.95);
    (dark, bright)
}

fn color_ramp(px: &mut [Rgb], w: usize, h: usize) {
    for y in 0..h {
        for x in 0..w {
            let r = x as f64 / (w - 1) as f64;
            let g = y as f64 / (h - 1) as f64;
            px[y * w + x] = [r, g, 1.0 - 0.5 * (r + g)];
        }
    }
}

/// Vertical-ish edge through the image center, tilted by `degrees`. Each
/// pixel holds the fraction of its horizontal extent lying right of the edge,
/// so a row's coverage sum equals `w - edge_x(row)`.
pub(crate) fn slanted_edge(px: &mut [Rgb], w: usize, h: usize, degrees: f64, left: Rgb, right: Rgb) {
    let slope = degrees.to_radians().tan();
    for y in 0..h {
        let edge = w as f64 / 2.0 + slope * (y as f64 + 0.5 - h as f64 / 2.0);
        for x in 0..w {
            let cover = (x as f64 + 1.0 - edge).clamp(0.0, 1.0);
            px[y * w + x] = lerp(left, right, cover);
        }
    }
}

/// Two families of thin anti-aliased lines over a smooth background, with a
/// period that shrinks across the frame.
fn mesh(px: &mut [Rgb], w: usize, h: usize, rng: &mut ChaCha8Rng) {
    let bg0 = random_color(rng, 0.3, 0.7);
    let bg1 = random_color(rng, 0.3, 0.7);
    let ink = random_color(rng, 0.0, 0.25);
    let period0: f64 = rng.random_range(6.0..10.0);
    let chirp: f64 = rng.random_range(0.3..0.6);
    let angle: f64 = rng.random_range(-0.3..0.3);
    let (s, c) = angle.sin_cos();
    let span = (w.max(h)) as f64;
    let line = |t: f64| -> f64 {
        // Distance to the nearest integer, turned into a 1.2 px wide line.
        let d = (t - t.round()).abs();
        (1.0 - d * 8.0 / 1.2).clamp(0.0, 1.0)
    };
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let u = c * fx - s * fy;
            let v = s * fx + c * fy;
            let p = period0 * (1.0 - chirp * fx / span);
            let m = line(u / p).max(line(v / p));
            let bg = lerp(bg0, bg1, fy / h as f64);
            px[y * w + x] = lerp(bg, ink, m);
        }
    }
}

/// Rows of blocky random glyphs on a paper-like background.
fn text_glyphs(px: &mut [Rgb], w: usize, h: usize, rng: &mut ChaCha8Rng) {
    let paper = random_color(rng, 0.75, 0.95);
    let ink = random_color(rng, 0.02, 0.3);
    px.fill(paper);
    // At least two capture pixels so strokes survive the 2x binning.
    let cell: usize = rng.random_range(2..=4);
    let (gw, gh) = (5 * cell, 7 * cell);
    let (adv, line_h) = (gw + 2 * cell, gh + 4 * cell);
    let mut y0 = 2 * cell;
    while y0 + gh < h {
        let mut x0 = 2 * cell;
        while x0 + gw < w {
            if rng.random_bool(0.15) {
                // Word gap.
                x0 += adv;
                continue;
            }
            let bits: u64 = rng.random();
            for gy in 0..7 {
                for gx in 0..5 {
                    if bits >> (gy * 5 + gx) & 1 == 1 {
                        for yy in 0..cell {
                            for xx in 0..cell {
                                px[(y0 + gy * cell + yy) * w + x0 + gx * cell + xx] = ink;
                            }
                        }
                    }
                }
            }
            x0 += adv;
        }
        y0 += line_h;
    }
}

/// Sum of bilinearly interpolated random lattices, independent per channel.
fn noise_field(px: &mut [Rgb], w: usize, h: usize, rng: &mut ChaCha8Rng) {
    let octaves = [(32.0, 0.5), (12.0, 0.3), (4.0, 0.2)];
    for c in 0..3 {
        let mut acc = vec![0.0; w * h];
        for &(cell, amp) in &octaves {
            let gw = (w as f64 / cell).ceil() as usize + 2;
            let gh = (h as f64 / cell).ceil() as usize + 2;
            let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
            for y in 0..h {
                let fy = y as f64 / cell;
                let (iy, ty) = (fy.floor() as usize, fy.fract());
                for x in 0..w {
                    let fx = x as f64 / cell;
                    let (ix, tx) = (fx.floor() as usize, fx.fract());
                    let l = |xx: usize, yy: usize| lattice[yy * gw + xx];
                    let top = l(ix, iy) * (1.0 - tx) + l(ix + 1, iy) * tx;
                    let bot = l(ix, iy + 1) * (1.0 - tx) + l(ix + 1, iy + 1) * tx;
                    acc[y * w + x] += amp * (top * (1.0 - ty) + bot * ty);
                }
            }
        }
        for (p, v) in px.iter_mut().zip(acc) {
            p[c] = v;
        }
    }
}
