//! Per-phase linear remosaic filters learned by ridge regression.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solve::{conjugate_gradient, norm, residual_norm, solve_cholesky, SymMatrix};
use crate::border::phase_index;
use crate::cfa::CfaDescriptor;
use crate::datagen::PairSample;
use crate::error::{Error, Result};
use crate::image::RawImage;

pub const DEFAULT_PATCH_RADIUS: usize = 2;
pub const DEFAULT_LAMBDA: f64 = 1e-4;

const MAGIC_LINE: &str = "rgbw-filter-bank v1";

/// One `(2r+1)^2` kernel per phase of the input tile, row-major over the tile.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    patch_radius: usize,
    cfa_in: CfaDescriptor,
    cfa_out: CfaDescriptor,
    weights: Vec<Vec<f64>>,
    lambda: f64,
}

impl FilterBank {
    pub fn new(
        patch_radius: usize,
        cfa_in: CfaDescriptor,
        cfa_out: CfaDescriptor,
        weights: Vec<Vec<f64>>,
        lambda: f64,
    ) -> Result<Self> {
        let bank = FilterBank {
            patch_radius,
            cfa_in,
            cfa_out,
            weights,
            lambda,
        };
        bank.validate()?;
        Ok(bank)
    }

    /// Kernels with a single unit tap at the center.
    pub fn identity(cfa_in: CfaDescriptor, cfa_out: CfaDescriptor, patch_radius: usize) -> Result<Self> {
        let taps = (2 * patch_radius + 1).pow(2);
        let mut k = vec![0.0; taps];
        k[taps / 2] = 1.0;
        let phases = cfa_in.tile_width() * cfa_in.tile_height();
        Self::new(patch_radius, cfa_in, cfa_out, vec![k; phases], 0.0)
    }

    pub fn zeros(cfa_in: CfaDescriptor, cfa_out: CfaDescriptor, patch_radius: usize) -> Result<Self> {
        let taps = (2 * patch_radius + 1).pow(2);
        let phases = cfa_in.tile_width() * cfa_in.tile_height();
        Self::new(patch_radius, cfa_in, cfa_out, vec![vec![0.0; taps]; phases], 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFilterBank(m));
        self.cfa_in.require_rgbw()?;
        self.cfa_out.require_bayer()?;
        if self.cfa_in.tile_width() % self.cfa_out.tile_width() != 0
            || self.cfa_in.tile_height() % self.cfa_out.tile_height() != 0
        {
            return bad(format!(
                "output tile of `{}` must divide input tile of `{}`",
                self.cfa_out.name(),
                self.cfa_in.name()
            ));
        }
        let phases = self.phases();
        if self.weights.len() != phases {
            return bad(format!("{} kernels for {phases} phases", self.weights.len()));
        }
        let taps = self.taps();
        for (p, k) in self.weights.iter().enumerate() {
            if k.len() != taps {
                return bad(format!("phase {p}: {} taps, expected {taps}", k.len()));
            }
            if k.iter().any(|v| !v.is_finite()) {
                return bad(format!("phase {p}: non-finite tap"));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        Ok(())
    }

    pub fn patch_radius(&self) -> usize {
        self.patch_radius
    }

    pub fn kernel_side(&self) -> usize {
        2 * self.patch_radius + 1
    }

    pub fn taps(&self) -> usize {
        self.kernel_side().pow(2)
    }

    pub fn phases(&self) -> usize {
        self.cfa_in.tile_width() * self.cfa_in.tile_height()
    }

    pub fn cfa_in(&self) -> &CfaDescriptor {
        &self.cfa_in
    }

    pub fn cfa_out(&self) -> &CfaDescriptor {
        &self.cfa_out
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Kernel for input-tile phase `(px, py)`, row-major taps.
    pub fn kernel(&self, px: usize, py: usize) -> &[f64] {
        &self.weights[py * self.cfa_in.tile_width() + px]
    }

    /// Text header terminated by an `end` line, then little-endian f64 taps
    /// phase by phase.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "{MAGIC_LINE}\npatch_radius={}\ncfa_in={}\ncfa_in_layout={}\ncfa_out={}\ncfa_out_layout={}\nlambda={:?}\nphases={}\ntaps={}\nend\n",
            self.patch_radius,
            self.cfa_in.name(),
            layout_rows(&self.cfa_in),
            self.cfa_out.name(),
            layout_rows(&self.cfa_out),
            self.lambda,
            self.phases(),
            self.taps(),
        );
        let mut out = header.into_bytes();
        for k in &self.weights {
            for v in k {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidFilterBank(m.to_string());
        let marker = b"\nend\n";
        let split = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .ok_or_else(|| bad("missing header terminator"))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("header is not UTF-8"))?;
        let body = &bytes[split + marker.len()..];
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC_LINE) {
            return Err(bad("not a filter bank file"));
        }
        let mut fields = std::collections::BTreeMap::new();
        for line in lines {
            let (k, v) = line.split_once('=').ok_or_else(|| bad("header line without '='"))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidFilterBank(format!("missing header field `{k}`")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::InvalidFilterBank(format!("bad value for `{k}`")))
        };
        let patch_radius = num("patch_radius")?;
        let phases = num("phases")?;
        let taps = num("taps")?;
        let lambda: f64 = get("lambda")?.parse().map_err(|_| bad("bad value for `lambda`"))?;
        let cfa_in = CfaDescriptor::from_rows(get("cfa_in")?, get("cfa_in_layout")?)?;
        let cfa_out = CfaDescriptor::from_rows(get("cfa_out")?, get("cfa_out_layout")?)?;
        if taps != (2 * patch_radius + 1).pow(2) {
            return Err(bad("tap count does not match patch radius"));
        }
        let expected = phases
            .checked_mul(taps)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| bad("size overflow"))?;
        if body.len() != expected {
            return Err(Error::Truncated(format!(
                "filter bank body has {} bytes, expected {expected}",
                body.len()
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let weights = values.chunks(taps.max(1)).map(<[f64]>::to_vec).collect();
        Self::new(patch_radius, cfa_in, cfa_out, weights, lambda)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::file(path, e))?)
    }
}

fn layout_rows(cfa: &CfaDescriptor) -> String {
    cfa.layout()
        .chunks(cfa.tile_width())
        .map(|row| row.iter().map(|c| c.as_char()).collect::<String>())
        .collect::<Vec<_>>()
        .join("/")
}

/// Which solver produced a phase's kernel, or which to force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Cholesky, falling back to conjugate gradient.
    Auto,
    Cholesky,
    ConjugateGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub patch_radius: usize,
    pub lambda: f64,
    pub solver: SolverChoice,
    pub cg_tolerance: f64,
    /// Required `‖(XᵀX+λI)w − Xᵀy‖ / ‖Xᵀy‖`.
    pub residual_bound: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            patch_radius: DEFAULT_PATCH_RADIUS,
            lambda: DEFAULT_LAMBDA,
            solver: SolverChoice::Auto,
            cg_tolerance: 1e-10,
            residual_bound: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    pub phase: usize,
    pub rows: usize,
    pub solver: SolverChoice,
    pub cg_iterations: usize,
    /// `‖(XᵀX+λI)w − Xᵀy‖ / ‖Xᵀy‖`, zero when the right-hand side is zero.
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub bank: FilterBank,
    pub fits: Vec<PhaseFit>,
}

/// Normal equations for one phase.
pub(crate) struct NormalEquations {
    pub(crate) ata: SymMatrix,
    pub(crate) aty: Vec<f64>,
    pub(crate) rows: usize,
}

/// Accumulates `XᵀX` (upper triangle) and `Xᵀy` over every interior pixel of
/// input phase `(px, py)`, pair by pair in row-major order.
pub(crate) fn accumulate_phase(pairs: &[PairSample], radius: usize, px: usize, py: usize) -> NormalEquations {
    let side = 2 * radius + 1;
    let n = side * side;
    let mut ata = SymMatrix::zeros(n);
    let mut aty = vec![0.0; n];
    let mut rows = 0;
    let mut patch = vec![0.0; n];
    for pair in pairs {
        let (w, h) = (pair.input_rgbw.width(), pair.input_rgbw.height());
        let (tw, th) = (pair.input_rgbw.cfa().tile_width(), pair.input_rgbw.cfa().tile_height());
        if w < side || h < side {
            continue;
        }
        let src = pair.input_rgbw.data();
        let gt = pair.gt_bayer.data();
        let y0 = first_at_least(radius, py, th);
        let x0 = first_at_least(radius, px, tw);
        for y in (y0..h - radius).step_by(th) {
            for x in (x0..w - radius).step_by(tw) {
                for dy in 0..side {
                    let row = (y + dy - radius) * w + x - radius;
                    patch[dy * side..(dy + 1) * side].copy_from_slice(&src[row..row + side]);
                }
                let target = gt[y * w + x];
                for i in 0..n {
                    let pi = patch[i];
                    aty[i] += pi * target;
                    for j in i..n {
                        *ata.get_mut(i, j) += pi * patch[j];
                    }
                }
                rows += 1;
            }
        }
    }
    ata.symmetrize_from_upper();
    NormalEquations { ata, aty, rows }
}

/// Smallest `v >= lo` with `v % period == phase`.
fn first_at_least(lo: usize, phase: usize, period: usize) -> usize {
    lo + (phase + period - lo % period) % period
}

fn check_pairs(pairs: &[PairSample]) -> Result<(CfaDescriptor, CfaDescriptor)> {
    let first = pairs
        .first()
        .ok_or_else(|| Error::InvalidArgument("training needs at least one pair".into()))?;
    let cfa_in = first.input_rgbw.cfa().clone();
    let cfa_out = first.gt_bayer.cfa().clone();
    for p in pairs {
        if p.input_rgbw.cfa() != &cfa_in {
            return Err(Error::DescriptorMismatch {
                expected: cfa_in.name().to_string(),
                found: p.input_rgbw.cfa().name().to_string(),
            });
        }
        if p.gt_bayer.cfa() != &cfa_out {
            return Err(Error::DescriptorMismatch {
                expected: cfa_out.name().to_string(),
                found: p.gt_bayer.cfa().name().to_string(),
            });
        }
        p.input_rgbw.same_shape(&p.gt_bayer)?;
    }
    Ok((cfa_in, cfa_out))
}

fn solve_phase(phase: usize, eq: NormalEquations, opts: &TrainOptions) -> Result<(Vec<f64>, PhaseFit)> {
    let n = eq.ata.dim();
    if eq.rows <= n {
        return Err(Error::InsufficientData {
            phase,
            rows: eq.rows,
            unknowns: n,
        });
    }
    let mut a = eq.ata;
    a.add_diagonal(opts.lambda);
    let b = eq.aty;
    let bnorm = norm(&b);
    let relative = |x: &[f64]| {
        let r = residual_norm(&a, x, &b);
        if bnorm > 0.0 {
            r / bnorm
        } else {
            r
        }
    };
    let fit = |solver, cg_iterations, relative_residual| PhaseFit {
        phase,
        rows: eq.rows,
        solver,
        cg_iterations,
        relative_residual,
    };

    if opts.solver != SolverChoice::ConjugateGradient {
        match solve_cholesky(&a, &b) {
            Some(x) => {
                let rel = relative(&x);
                if rel <= opts.residual_bound {
                    return Ok((x, fit(SolverChoice::Cholesky, 0, rel)));
                }
                if opts.solver == SolverChoice::Cholesky {
                    return Err(Error::NonConvergence { phase, residual: rel });
                }
            }
            None if opts.solver == SolverChoice::Cholesky => {
                return Err(Error::RankDeficient { phase });
            }
            None => {}
        }
    }

    let cg = conjugate_gradient(&a, &b, opts.cg_tolerance, 10 * n);
    let rel = relative(&cg.x);
    if !cg.converged || rel > opts.residual_bound {
        return Err(Error::NonConvergence { phase, residual: rel });
    }
    if opts.lambda == 0.0 && opts.solver == SolverChoice::Auto {
        // Factorization failed without regularization: the design does not
        // determine the kernel, CG only found one of many minimizers.
        return Err(Error::RankDeficient { phase });
    }
    Ok((cg.x, fit(SolverChoice::ConjugateGradient, cg.iterations, rel)))
}

/// Ridge-regression training with per-phase diagnostics.
pub fn train_filter_bank_detailed(pairs: &[PairSample], opts: &TrainOptions) -> Result<TrainReport> {
    let (cfa_in, cfa_out) = check_pairs(pairs)?;
    if !(opts.lambda >= 0.0 && opts.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {}", opts.lambda)));
    }
    let (tw, th) = (cfa_in.tile_width(), cfa_in.tile_height());
    let solved = (0..tw * th)
        .into_par_iter()
        .map(|phase| {
            let eq = accumulate_phase(pairs, opts.patch_radius, phase % tw, phase / tw);
            solve_phase(phase, eq, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let (weights, fits): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let bank = FilterBank::new(opts.patch_radius, cfa_in, cfa_out, weights, opts.lambda)?;
    Ok(TrainReport { bank, fits })
}

/// Learns one kernel per input phase mapping RGBW patches to the Bayer
/// ground truth at the patch center.
pub fn train_filter_bank(pairs: &[PairSample], patch_radius: usize, lambda: f64) -> Result<FilterBank> {
    let opts = TrainOptions {
        patch_radius,
        lambda,
        ..TrainOptions::default()
    };
    Ok(train_filter_bank_detailed(pairs, &opts)?.bank)
}

/// Applies the phase kernel around every pixel; out-of-frame taps are folded
/// back inside by whole tile periods so they keep their CFA phase.
pub fn apply_filter_bank(rgbw: &RawImage, bank: &FilterBank) -> Result<RawImage> {
    if rgbw.cfa() != bank.cfa_in() {
        return Err(Error::DescriptorMismatch {
            expected: bank.cfa_in().name().to_string(),
            found: rgbw.cfa().name().to_string(),
        });
    }
    let (w, h) = (rgbw.width(), rgbw.height());
    let (tw, th) = (bank.cfa_in.tile_width(), bank.cfa_in.tile_height());
    let r = bank.patch_radius;
    let side = bank.kernel_side();
    let src = rgbw.data();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
        let interior_y = y >= r && y + r < h;
        for (x, o) in row.iter_mut().enumerate() {
            let k = bank.kernel(x % tw, y % th);
            let mut acc = 0.0;
            if interior_y && x >= r && x + r < w {
                for dy in 0..side {
                    let start = (y + dy - r) * w + x - r;
                    acc += src[start..start + side].iter().zip(&k[dy * side..]).map(|(a, b)| a * b).sum::<f64>();
                }
            } else {
                for dy in 0..side {
                    let sy = phase_index(y as isize + dy as isize - r as isize, h, th);
                    for dx in 0..side {
                        let sx = phase_index(x as isize + dx as isize - r as isize, w, tw);
                        acc += k[dy * side + dx] * src[sy * w + sx];
                    }
                }
            }
            *o = acc.clamp(0.0, 1.0);
        }
    });
    Ok(rgbw.with_data(out, bank.cfa_out.clone()))
}
