//! Challenge scoring: PSNR and SSIM on ISP-rendered RGB, KLD on the raw
//! Bayer frame, an optional external LPIPS score, and the combined M4 score
//! `PSNR * SSIM * 2^(1 - LPIPS - KLD)`.

mod lpips;

pub use lpips::{lpips_external, LpipsProvider, DEFAULT_PROVIDER_TIMEOUT};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{PlanarImage, RawImage};
use crate::isp::{run_isp, IspConfig};
use crate::raw_io::write_rgb_png;

pub const PSNR_CAP_DB: f64 = 100.0;
pub const FLAG_LPIPS_ABSENT: &str = "lpips-absent";
pub const FLAG_PSNR_CAPPED: &str = "psnr-capped";

/// `10 log10(max^2 / MSE)` over all pixels and channels, capped at 100 dB.
pub fn psnr(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    psnr_with_max(a, b, 1.0)
}

pub fn psnr_with_max(a: &PlanarImage, b: &PlanarImage, max_val: f64) -> Result<f64> {
    check_planar(a, b)?;
    let mut se = 0.0;
    let mut n = 0usize;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        for (x, y) in pa.iter().zip(pb) {
            let d = x - y;
            se += d * d;
        }
        n += pa.len();
    }
    Ok(psnr_from_mse(se / n as f64, max_val))
}

pub(crate) fn psnr_from_mse(mse: f64, max_val: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (max_val * max_val / mse).log10()).min(PSNR_CAP_DB)
}

fn check_planar(a: &PlanarImage, b: &PlanarImage) -> Result<()> {
    a.same_shape(b)?;
    if a.channels() != b.channels() {
        return Err(Error::DimensionMismatch(format!(
            "channel sets differ: {:?} vs {:?}",
            a.channels(),
            b.channels()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn gaussian_taps(&self) -> Vec<f64> {
        let c = (self.window as f64 - 1.0) / 2.0;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - c).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 || !(self.sigma > 0.0) || !(self.dynamic_range > 0.0) {
            return Err(Error::InvalidArgument(format!("bad SSIM parameters {self:?}")));
        }
        Ok(())
    }
}

/// Mean SSIM over the valid region of one plane pair.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    let win = params.window;
    if width < win || height < win {
        return Err(Error::ImageTooSmall(format!(
            "SSIM window {win} does not fit in {width}x{height}"
        )));
    }
    if a.len() != width * height || b.len() != width * height {
        return Err(Error::DimensionMismatch("SSIM plane length".into()));
    }
    let g = params.gaussian_taps();
    let (ow, oh) = (width - win + 1, height - win + 1);
    // Horizontal pass: [mu_a, mu_b, E[a^2], E[b^2], E[ab]] per (row, output column).
    let horiz: Vec<[f64; 5]> = (0..height)
        .into_par_iter()
        .flat_map_iter(|y| {
            let (ra, rb) = (&a[y * width..(y + 1) * width], &b[y * width..(y + 1) * width]);
            let g = &g;
            (0..ow).map(move |x| {
                let mut m = [0.0; 5];
                for (k, &wk) in g.iter().enumerate() {
                    let (va, vb) = (ra[x + k], rb[x + k]);
                    m[0] += wk * va;
                    m[1] += wk * vb;
                    m[2] += wk * va * va;
                    m[3] += wk * vb * vb;
                    m[4] += wk * va * vb;
                }
                m
            })
        })
        .collect();
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let rows: Vec<f64> = (0..oh)
        .into_par_iter()
        .map(|y| {
            let mut row_sum = 0.0;
            for x in 0..ow {
                let mut m = [0.0; 5];
                for (k, &wk) in g.iter().enumerate() {
                    let h = &horiz[(y + k) * ow + x];
                    for i in 0..5 {
                        m[i] += wk * h[i];
                    }
                }
                row_sum += ssim_from_moments(&m, c1, c2);
            }
            row_sum
        })
        .collect();
    Ok(rows.iter().sum::<f64>() / (ow * oh) as f64)
}

#[inline]
fn ssim_from_moments(m: &[f64; 5], c1: f64, c2: f64) -> f64 {
    let (mu_a, mu_b) = (m[0], m[1]);
    let var_a = m[2] - mu_a * mu_a;
    let var_b = m[3] - mu_b * mu_b;
    let cov = m[4] - mu_a * mu_b;
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

/// Per-channel SSIM averaged over channels.
pub fn ssim(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    ssim_with(a, b, &SsimParams::default())
}

pub fn ssim_with(a: &PlanarImage, b: &PlanarImage, params: &SsimParams) -> Result<f64> {
    check_planar(a, b)?;
    let mut total = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        total += ssim_plane(pa, pb, a.width(), a.height(), params)?;
    }
    Ok(total / a.planes().len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KldParams {
    pub bins: usize,
    pub eps: f64,
}

impl Default for KldParams {
    fn default() -> Self {
        KldParams { bins: 256, eps: 1e-8 }
    }
}

/// Equal-width histogram over `[0, 1]`; 1.0 lands in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &v in values {
        let i = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        h[i] += 1;
    }
    h
}

/// `sum p_i ln(p_i / q_i)` after adding `eps` to every bin of both weight
/// vectors and normalizing each to unit mass.
pub fn kl_divergence(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::DimensionMismatch(format!("histograms of {} and {} bins", p.len(), q.len())));
    }
    let sp: f64 = p.iter().map(|v| v + eps).sum();
    let sq: f64 = q.iter().map(|v| v + eps).sum();
    let mut kl = 0.0;
    for (a, b) in p.iter().zip(q) {
        let pi = (a + eps) / sp;
        let qi = (b + eps) / sq;
        kl += pi * (pi / qi).ln();
    }
    Ok(kl.max(0.0))
}

/// `KL(gt || pred)` between value histograms of the two Bayer frames.
pub fn kld_bayer(pred: &RawImage, gt: &RawImage, params: &KldParams) -> Result<f64> {
    pred.same_shape(gt)?;
    if params.bins == 0 || !(params.eps > 0.0) {
        return Err(Error::InvalidArgument(format!("bad KLD parameters {params:?}")));
    }
    let to_f = |h: Vec<u64>| h.into_iter().map(|c| c as f64).collect::<Vec<_>>();
    let p = to_f(histogram(gt.data(), params.bins));
    let q = to_f(histogram(pred.data(), params.bins));
    kl_divergence(&p, &q, params.eps)
}

pub fn m4(psnr: f64, ssim: f64, lpips: f64, kld: f64) -> f64 {
    psnr * ssim * 2f64.powf(1.0 - lpips - kld)
}

/// Every tunable of the scoring pipeline; embedded in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricKnobs {
    pub ssim: SsimParams,
    pub kld: KldParams,
    /// LPIPS value used in M4 when no provider is configured.
    pub lpips_default: f64,
}

impl Default for MetricKnobs {
    fn default() -> Self {
        MetricKnobs {
            ssim: SsimParams::default(),
            kld: KldParams::default(),
            lpips_default: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum LpipsPolicy {
    /// No provider: use this value and flag the report.
    Default(f64),
    External(Arc<LpipsProvider>),
}

impl Default for LpipsPolicy {
    fn default() -> Self {
        LpipsPolicy::Default(0.0)
    }
}

impl LpipsPolicy {
    pub fn describe(&self) -> String {
        match self {
            LpipsPolicy::Default(v) => format!("default:{v}"),
            LpipsPolicy::External(p) => format!("external:{}", p.command_line()),
        }
    }
}

/// Scores of one predicted Bayer frame against its ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    /// `None` when no provider was used.
    pub lpips: Option<f64>,
    pub kld: f64,
    pub m4: f64,
    pub lpips_policy: String,
    pub flags: Vec<String>,
}

impl MetricReport {
    pub fn new(psnr: f64, ssim: f64, lpips: Option<f64>, lpips_default: f64, kld: f64, lpips_policy: String) -> Self {
        let mut flags = Vec::new();
        if lpips.is_none() {
            flags.push(FLAG_LPIPS_ABSENT.to_string());
        }
        if psnr >= PSNR_CAP_DB {
            flags.push(FLAG_PSNR_CAPPED.to_string());
        }
        MetricReport {
            psnr,
            ssim,
            lpips,
            kld,
            m4: m4(psnr, ssim, lpips.unwrap_or(lpips_default), kld),
            lpips_policy,
            flags,
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

pub fn score_pair(pred: &RawImage, gt: &RawImage, isp: &IspConfig, lpips: &LpipsPolicy) -> Result<MetricReport> {
    score_pair_with(pred, gt, isp, lpips, &MetricKnobs::default())
}

/// Renders both frames with the same ISP, then scores them.
pub fn score_pair_with(
    pred: &RawImage,
    gt: &RawImage,
    isp: &IspConfig,
    lpips: &LpipsPolicy,
    knobs: &MetricKnobs,
) -> Result<MetricReport> {
    pred.same_shape(gt)?;
    if pred.cfa() != gt.cfa() {
        return Err(Error::DescriptorMismatch {
            expected: gt.cfa().name().to_string(),
            found: pred.cfa().name().to_string(),
        });
    }
    let rgb_pred = run_isp(pred, isp)?;
    let rgb_gt = run_isp(gt, isp)?;
    let p = psnr(&rgb_pred, &rgb_gt)?;
    let s = ssim_with(&rgb_pred, &rgb_gt, &knobs.ssim)?;
    let k = kld_bayer(pred, gt, &knobs.kld)?;
    let (lp, default) = match lpips {
        LpipsPolicy::Default(v) => (None, *v),
        LpipsPolicy::External(provider) => {
            let dir = tempfile::tempdir()?;
            let (pa, pb) = (dir.path().join("pred.png"), dir.path().join("gt.png"));
            std::fs::write(&pa, write_rgb_png(&rgb_pred)?).map_err(|e| Error::file(&pa, e))?;
            std::fs::write(&pb, write_rgb_png(&rgb_gt)?).map_err(|e| Error::file(&pb, e))?;
            (Some(lpips_external(&pa, &pb, provider)?), knobs.lpips_default)
        }
    };
    Ok(MetricReport::new(p, s, lp, default, k, lpips.describe()))
}

/// Dataset-level means plus both M4 aggregation modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub psnr: f64,
    pub ssim: f64,
    /// Mean of provider values, present only when every image had one.
    pub lpips: Option<f64>,
    pub kld: f64,
    pub m4_mean_of_m4: f64,
    pub m4_of_means: f64,
}

/// Averages in slice order. `lpips_default` stands in for absent LPIPS
/// values in the M4-of-means figure.
pub fn aggregate(reports: &[MetricReport], lpips_default: f64) -> Option<Aggregate> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let psnr = mean(&|r| r.psnr);
    let ssim = mean(&|r| r.ssim);
    let kld = mean(&|r| r.kld);
    let lpips_used = mean(&|r| r.lpips.unwrap_or(lpips_default));
    let lpips = reports.iter().all(|r| r.lpips.is_some()).then_some(lpips_used);
    Some(Aggregate {
        count: reports.len(),
        psnr,
        ssim,
        lpips,
        kld,
        m4_mean_of_m4: mean(&|r| r.m4),
        m4_of_means: m4(psnr, ssim, lpips_used, kld),
    })
}
