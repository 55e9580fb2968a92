//! Independent reference implementations checked against the library.
//! Each `pub fn` panics on the first disagreement.
//!
//! Every oracle here is a deliberately naive transcription (direct double
//! loops, explicit design matrices, dense pseudo-inverses) that shares no code
//! with the optimized paths under test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgbw_core::metrics::{histogram, SsimParams};
use rgbw_core::raw_io::{read_raw, write_raw, RawEncoding};
use rgbw_core::{
    demosaic_bilinear, demosaic_mhc, diagonal_bin, expand_cfa_channels, kld_bayer, mosaic, psnr, ssim,
    train_filter_bank, CfaDescriptor, CfaRegistry, Channel, KldParams, PairSample, PlanarImage, RawImage,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>()).collect()
}

fn random_planar(w: usize, h: usize, channels: &[Channel], seed: u64) -> PlanarImage {
    let planes = (0..channels.len()).map(|i| random_plane(w * h, seed * 7 + i as u64)).collect();
    PlanarImage::new(w, h, channels.to_vec(), planes).unwrap()
}

fn bayers() -> [CfaDescriptor; 4] {
    [
        CfaDescriptor::rggb(),
        CfaDescriptor::bggr(),
        CfaDescriptor::grbg(),
        CfaDescriptor::gbrg(),
    ]
}

const RGBW: [Channel; 4] = [Channel::R, Channel::G, Channel::B, Channel::W];

// ---------------------------------------------------------------- mosaic ---

pub fn mosaic_expand_round_trip_is_bit_exact() {
    let cfa = CfaDescriptor::rgbw_default();
    let src = random_planar(24, 20, &RGBW, 1);
    let raw = mosaic(&src, &cfa).unwrap();
    let layout = ["WRWG", "RWGW", "WGWB", "GWBW"];
    for y in 0..20 {
        for x in 0..24 {
            let c = Channel::from_char(layout[y % 4].as_bytes()[x % 4] as char).unwrap();
            assert_eq!(raw.get(x, y), src.plane(c).unwrap()[y * 24 + x]);
        }
    }
    let sparse = expand_cfa_channels(&raw).unwrap();
    assert_eq!(sparse.channels(), &[Channel::W, Channel::G, Channel::B, Channel::R]);
    for y in 0..20 {
        for x in 0..24 {
            let i = y * 24 + x;
            let own = raw.channel_at(x, y);
            for (c, plane) in sparse.channels().iter().zip(sparse.planes()) {
                let expect = if *c == own { raw.get(x, y) } else { 0.0 };
                assert_eq!(plane[i].to_bits(), expect.to_bits());
            }
        }
    }
    // Re-mosaicing the sparse planes reproduces the frame exactly.
    assert_eq!(mosaic(&sparse, &cfa).unwrap().data(), raw.data());
}

pub fn diagonal_bin_matches_block_loop() {
    let cfa = CfaDescriptor::rgbw_default();
    let raw = mosaic(&random_planar(32, 16, &RGBW, 2), &cfa).unwrap();
    let binned = diagonal_bin(&raw).unwrap();
    assert_eq!((binned.bayer.width(), binned.bayer.height()), (16, 8));
    for by in 0..8 {
        for bx in 0..16 {
            let mut white = Vec::new();
            let mut color = Vec::new();
            let mut color_ch = None;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (x, y) = (2 * bx + dx, 2 * by + dy);
                match raw.channel_at(x, y) {
                    Channel::W => white.push(raw.get(x, y)),
                    c => {
                        assert!(color_ch.is_none() || color_ch == Some(c));
                        color_ch = Some(c);
                        color.push(raw.get(x, y));
                    }
                }
            }
            assert_eq!((white.len(), color.len()), (2, 2));
            assert_eq!(binned.white[by * 16 + bx], (white[0] + white[1]) / 2.0);
            assert_eq!(binned.bayer.get(bx, by), (color[0] + color[1]) / 2.0);
            assert_eq!(binned.bayer.channel_at(bx, by), color_ch.unwrap());
        }
    }
}

// --------------------------------------------------------------- metrics ---

fn naive_psnr(a: &PlanarImage, b: &PlanarImage) -> f64 {
    let mut se = 0.0;
    let mut n = 0.0;
    for c in 0..a.channels().len() {
        for y in 0..a.height() {
            for x in 0..a.width() {
                let i = y * a.width() + x;
                se += (a.planes()[c][i] - b.planes()[c][i]).powi(2);
                n += 1.0;
            }
        }
    }
    10.0 * (1.0 / (se / n)).log10()
}

fn naive_ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let (size, sigma) = (11usize, 1.5f64);
    let mut win = vec![vec![0.0; size]; size];
    let mut total = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut acc = 0.0;
    let mut count = 0.0;
    for y0 in 0..=h - size {
        for x0 in 0..=w - size {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..size {
                for j in 0..size {
                    let k = win[i][j] / total;
                    ma += k * a[(y0 + i) * w + x0 + j];
                    mb += k * b[(y0 + i) * w + x0 + j];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..size {
                for j in 0..size {
                    let k = win[i][j] / total;
                    let da = a[(y0 + i) * w + x0 + j] - ma;
                    let db = b[(y0 + i) * w + x0 + j] - mb;
                    va += k * da * da;
                    vb += k * db * db;
                    cov += k * da * db;
                }
            }
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1.0;
        }
    }
    acc / count
}

fn naive_kld(pred: &[f64], gt: &[f64]) -> f64 {
    let bins = 256usize;
    let eps = 1e-8;
    let hist = |v: &[f64]| {
        let mut h = vec![0.0f64; bins];
        for &x in v {
            let mut i = (x * bins as f64).floor() as usize;
            if i >= bins {
                i = bins - 1;
            }
            h[i] += 1.0;
        }
        let s: f64 = h.iter().map(|c| c + eps).sum();
        h.into_iter().map(|c| (c + eps) / s).collect::<Vec<_>>()
    };
    let (p, q) = (hist(gt), hist(pred));
    (0..bins).map(|i| p[i] * (p[i] / q[i]).ln()).sum()
}

pub fn metrics_match_naive_references() {
    let rgb = [Channel::R, Channel::G, Channel::B];
    for seed in 0..3 {
        let a = random_planar(32, 32, &rgb, 10 + seed);
        // A correlated second image keeps SSIM away from zero.
        let planes = a
            .planes()
            .iter()
            .zip(random_planar(32, 32, &rgb, 20 + seed).planes())
            .map(|(p, q)| p.iter().zip(q).map(|(x, n)| 0.8 * x + 0.2 * n).collect())
            .collect();
        let b = PlanarImage::new(32, 32, rgb.to_vec(), planes).unwrap();

        assert!((psnr(&a, &b).unwrap() - naive_psnr(&a, &b)).abs() < 1e-8);
        let want: f64 = (0..3)
            .map(|c| naive_ssim_plane(&a.planes()[c], &b.planes()[c], 32, 32))
            .sum::<f64>()
            / 3.0;
        let got = ssim(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-8, "ssim {got} vs {want}");

        let pred = RawImage::new(32, 32, random_plane(1024, 30 + seed), CfaDescriptor::rggb()).unwrap();
        let gt = RawImage::new(32, 32, random_plane(1024, 40 + seed), CfaDescriptor::rggb()).unwrap();
        let got = kld_bayer(&pred, &gt, &KldParams::default()).unwrap();
        let want = naive_kld(pred.data(), gt.data());
        assert!((got - want).abs() < 1e-8, "kld {got} vs {want}");
    }
}

pub fn histogram_edges() {
    let h = histogram(&[0.0, 1.0 / 256.0 - 1e-12, 1.0 / 256.0, 0.999_999, 1.0], 256);
    assert_eq!((h[0], h[1], h[255]), (2, 1, 2));
}

pub fn ssim_taps_are_normalized_gaussian() {
    let taps = SsimParams::default().gaussian_taps();
    assert_eq!(taps.len(), 11);
    assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert!((taps[4] / taps[5] - (-1.0f64 / 4.5).exp()).abs() < 1e-15);
}

// -------------------------------------------------------------- demosaic ---

/// Kernels transcribed from the published gradient-corrected demosaic, in
/// eighths; indexed `[row][col]`.
const G_AT_RB: [[f64; 5]; 5] = [
    [0., 0., -1., 0., 0.],
    [0., 0., 2., 0., 0.],
    [-1., 2., 4., 2., -1.],
    [0., 0., 2., 0., 0.],
    [0., 0., -1., 0., 0.],
];
const H_AT_G: [[f64; 5]; 5] = [
    [0., 0., 0.5, 0., 0.],
    [0., -1., 0., -1., 0.],
    [-1., 4., 5., 4., -1.],
    [0., -1., 0., -1., 0.],
    [0., 0., 0.5, 0., 0.],
];
const OPP_AT_RB: [[f64; 5]; 5] = [
    [0., 0., -1.5, 0., 0.],
    [0., 2., 0., 2., 0.],
    [-1.5, 0., 6., 0., -1.5],
    [0., 2., 0., 2., 0.],
    [0., 0., -1.5, 0., 0.],
];

fn transpose(k: &[[f64; 5]; 5]) -> [[f64; 5]; 5] {
    let mut t = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            t[j][i] = k[i][j];
        }
    }
    t
}

/// Out-of-frame coordinates jump back by whole periods of two so that the
/// sample keeps its Bayer phase.
fn fold(i: isize, len: usize) -> usize {
    let mut j = i;
    while j < 0 {
        j += 2;
    }
    while j >= len as isize {
        j -= 2;
    }
    j as usize
}

fn sample(raw: &RawImage, x: isize, y: isize) -> f64 {
    raw.get(fold(x, raw.width()), fold(y, raw.height()))
}

fn channel(raw: &RawImage, x: isize, y: isize) -> Channel {
    raw.channel_at(fold(x, raw.width()), fold(y, raw.height()))
}

fn conv(raw: &RawImage, k: &[[f64; 5]; 5], x: isize, y: isize) -> f64 {
    let mut s = 0.0;
    for (i, row) in k.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            s += v * sample(raw, x + j as isize - 2, y + i as isize - 2);
        }
    }
    s / 8.0
}

fn reference_mhc(raw: &RawImage) -> [Vec<f64>; 3] {
    let (w, h) = (raw.width(), raw.height());
    let idx = |c: Channel| match c {
        Channel::R => 0,
        Channel::G => 1,
        _ => 2,
    };
    let mut out = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let own = channel(raw, x, y);
            out[idx(own)][i] = sample(raw, x, y);
            if own == Channel::G {
                let left_right = channel(raw, x + 1, y);
                let up_down = channel(raw, x, y + 1);
                out[idx(left_right)][i] = conv(raw, &H_AT_G, x, y);
                out[idx(up_down)][i] = conv(raw, &transpose(&H_AT_G), x, y);
            } else {
                let opposite = if own == Channel::R { Channel::B } else { Channel::R };
                out[1][i] = conv(raw, &G_AT_RB, x, y);
                out[idx(opposite)][i] = conv(raw, &OPP_AT_RB, x, y);
            }
        }
    }
    out
}

pub fn mhc_matches_reference_convolution() {
    for (n, cfa) in bayers().into_iter().enumerate() {
        let raw = RawImage::new(18, 14, random_plane(18 * 14, 50 + n as u64), cfa).unwrap();
        let got = demosaic_mhc(&raw).unwrap();
        let want = reference_mhc(&raw);
        for c in 0..3 {
            for (g, r) in got.planes()[c].iter().zip(&want[c]) {
                assert!((g - r).abs() < 1e-12);
            }
        }
    }
}

pub fn mhc_is_exact_on_affine_signals() {
    // Common slope, different per-channel offsets: each kernel has unit gain
    // on its own color and zero gain, zero first moment on the correction.
    let (w, h) = (20usize, 16usize);
    let (sx, sy) = (0.011, -0.007);
    let offset = [0.30, 0.35, 0.40];
    for cfa in bayers() {
        let mut data = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let c = match cfa.channel_at(x, y) {
                    Channel::R => 0,
                    Channel::G => 1,
                    _ => 2,
                };
                data[y * w + x] = offset[c] + sx * x as f64 + sy * y as f64;
            }
        }
        let raw = RawImage::new(w, h, data, cfa).unwrap();
        let rgb = demosaic_mhc(&raw).unwrap();
        for c in 0..3 {
            for y in 2..h - 2 {
                for x in 2..w - 2 {
                    let want = offset[c] + sx * x as f64 + sy * y as f64;
                    assert!((rgb.planes()[c][y * w + x] - want).abs() < 1e-12);
                }
            }
        }
    }
}

pub fn bilinear_matches_scalar_reference() {
    for (n, cfa) in bayers().into_iter().enumerate() {
        let (w, h) = (12usize, 10usize);
        let raw = RawImage::new(w, h, random_plane(w * h, 60 + n as u64), cfa).unwrap();
        let rgb = demosaic_bilinear(&raw).unwrap();
        for y in 0..h as isize {
            for x in 0..w as isize {
                let own = channel(&raw, x, y);
                for (c, want_ch) in [Channel::R, Channel::G, Channel::B].into_iter().enumerate() {
                    let want = if own == want_ch {
                        sample(&raw, x, y)
                    } else {
                        let mut vals = Vec::new();
                        for dy in -1..=1 {
                            for dx in -1..=1 {
                                if (dx, dy) != (0, 0) && channel(&raw, x + dx, y + dy) == want_ch {
                                    vals.push(sample(&raw, x + dx, y + dy));
                                }
                            }
                        }
                        vals.iter().sum::<f64>() / vals.len() as f64
                    };
                    let got = rgb.planes()[c][y as usize * w + x as usize];
                    assert!((got - want).abs() < 1e-14);
                }
            }
        }
    }
}

// ----------------------------------------------------------- filter bank ---

/// Pairs whose Bayer target is a known 3x3 filter of the RGBW input, with a
/// different filter for every phase of the 4x4 input tile.
pub fn known_filter_pairs(count: usize, size: usize, seed: u64) -> (Vec<PairSample>, Vec<[f64; 9]>) {
    let mut r = rng(seed);
    let kernels: Vec<[f64; 9]> = (0..16)
        .map(|_| {
            let mut k = [0.0; 9];
            for v in &mut k {
                *v = r.random::<f64>();
            }
            let s: f64 = k.iter().sum();
            k.map(|v| 0.9 * v / s)
        })
        .collect();
    let pairs = (0..count)
        .map(|i| {
            let input =
                RawImage::new(size, size, random_plane(size * size, seed * 100 + i as u64), CfaDescriptor::rgbw_default())
                    .unwrap();
            let mut gt = vec![0.0; size * size];
            for y in 1..size - 1 {
                for x in 1..size - 1 {
                    let k = &kernels[(y % 4) * 4 + x % 4];
                    let mut acc = 0.0;
                    for dy in 0..3 {
                        for dx in 0..3 {
                            acc += k[dy * 3 + dx] * input.get(x + dx - 1, y + dy - 1);
                        }
                    }
                    gt[y * size + x] = acc;
                }
            }
            let gt = RawImage::new(size, size, gt, CfaDescriptor::rggb()).unwrap();
            PairSample::new(input, gt, format!("k{i}"), 0.0).unwrap()
        })
        .collect();
    (pairs, kernels)
}

/// Explicit design matrix of one input phase, solved with an SVD pseudo-inverse.
pub fn pinv_solution(pairs: &[PairSample], radius: usize, px: usize, py: usize, lambda: f64) -> Vec<f64> {
    let side = 2 * radius + 1;
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for p in pairs {
        let (w, h) = (p.input_rgbw.width(), p.input_rgbw.height());
        for y in radius..h - radius {
            for x in radius..w - radius {
                if x % 4 != px || y % 4 != py {
                    continue;
                }
                for dy in 0..side {
                    for dx in 0..side {
                        rows.push(p.input_rgbw.get(x + dx - radius, y + dy - radius));
                    }
                }
                ys.push(p.gt_bayer.get(x, y));
            }
        }
    }
    let n = side * side;
    let x = DMatrix::from_row_slice(ys.len(), n, &rows);
    let y = DVector::from_vec(ys);
    let a = x.transpose() * &x + DMatrix::identity(n, n) * lambda;
    let b = x.transpose() * y;
    let pinv = a.pseudo_inverse(1e-14).unwrap();
    (pinv * b).iter().copied().collect()
}

pub fn ridge_training_matches_pseudo_inverse() {
    let (pairs, kernels) = known_filter_pairs(3, 48, 7);
    let bank = train_filter_bank(&pairs, 2, 1e-12).unwrap();
    for py in 0..4 {
        for px in 0..4 {
            let got = bank.kernel(px, py);
            let oracle = pinv_solution(&pairs, 2, px, py, 1e-12);
            let truth = &kernels[py * 4 + px];
            for dy in 0..5 {
                for dx in 0..5 {
                    let t = if (1..4).contains(&dy) && (1..4).contains(&dx) {
                        truth[(dy - 1) * 3 + dx - 1]
                    } else {
                        0.0
                    };
                    let i = dy * 5 + dx;
                    assert!((got[i] - t).abs() < 1e-6, "phase ({px},{py}) tap {i}: {} vs {t}", got[i]);
                    assert!((got[i] - oracle[i]).abs() < 1e-6);
                }
            }
        }
    }

    // With real regularization the bank still equals the dense ridge solution.
    let bank = train_filter_bank(&pairs, 1, 0.5).unwrap();
    for py in 0..4 {
        for px in 0..4 {
            let oracle = pinv_solution(&pairs, 1, px, py, 0.5);
            for (g, o) in bank.kernel(px, py).iter().zip(&oracle) {
                assert!((g - o).abs() < 1e-9);
            }
        }
    }
}

// ----------------------------------------------------------------- RMSC1 ---

pub fn golden_rmsc_fixture() {
    let golden = include_bytes!("../fixtures/golden_rggb_6x4.rmsc");
    // Codes written by an independent script following the documented layout.
    let codes: Vec<u16> = (0..4)
        .flat_map(|y| (0..6).map(move |x| 64 + ((x * 151 + y * 97) % 960) as u16))
        .enumerate()
        .map(|(i, c)| match i {
            0 => 64,
            23 => 1023,
            _ => c,
        })
        .collect();
    let img = read_raw(golden, &CfaRegistry::builtin()).unwrap();
    assert_eq!((img.width(), img.height()), (6, 4));
    assert_eq!(img.cfa(), &CfaDescriptor::rggb());
    for (v, &c) in img.data().iter().zip(&codes) {
        assert_eq!(*v, (f64::from(c) - 64.0) / 959.0);
    }
    assert_eq!(write_raw(&img, &RawEncoding::default()).unwrap(), golden.to_vec());

    let mut header = golden[..24].to_vec();
    assert_eq!(&header[..8], b"RGBWRMS1");
    header[8] = 7;
    assert!(read_raw(&[header.as_slice(), &golden[24..]].concat(), &CfaRegistry::builtin()).is_err());
    assert!(read_raw(&golden[..golden.len() - 1], &CfaRegistry::builtin()).is_err());
}
