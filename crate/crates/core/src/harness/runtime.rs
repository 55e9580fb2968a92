use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::evaluate::{run_algorithm, Algorithm};
use crate::cfa::CfaDescriptor;
use crate::error::{Error, Result};
use crate::image::RawImage;

pub const SIXTY_FOUR_MEGAPIXELS: f64 = 64e6;
/// Frame size at which runtimes are conventionally measured.
pub const MEASURED_WIDTH: usize = 1200;
pub const MEASURED_HEIGHT: usize = 1800;

/// Linear pixel-count extrapolation of a measured runtime to a 64 MP frame.
pub fn estimate_64m_runtime(measured_s: f64, width: usize, height: usize) -> Result<f64> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!("zero-area frame {width}x{height}")));
    }
    if !(measured_s > 0.0 && measured_s.is_finite()) {
        return Err(Error::InvalidArgument(format!("measured time must be positive, got {measured_s}")));
    }
    Ok(measured_s * SIXTY_FOUR_MEGAPIXELS / (width as f64 * height as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMeasurement {
    pub algorithm: String,
    pub width: usize,
    pub height: usize,
    pub repeats: usize,
    pub threads: usize,
    pub single_thread_s: f64,
    pub multi_thread_s: f64,
    pub single_thread_64m_s: f64,
    pub multi_thread_64m_s: f64,
}

/// Median wall-clock time of `repeats` runs after one untimed warm-up.
pub fn median_seconds<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    if repeats < 3 {
        return Err(Error::InvalidArgument(format!("runtime needs at least 3 repeats, got {repeats}")));
    }
    f()?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        std::hint::black_box(f()?);
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let mid = repeats / 2;
    let median = if repeats % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    // Timer resolution floor so that extrapolation stays defined.
    Ok(median.max(1e-9))
}

/// Times `f` on a one-thread pool and on the current pool.
pub fn measure_runtime_with<T: Send>(
    name: &str,
    input: &RawImage,
    repeats: usize,
    f: impl Fn(&RawImage) -> Result<T> + Sync,
) -> Result<RuntimeMeasurement> {
    if repeats < 3 {
        return Err(Error::InvalidArgument(format!("runtime needs at least 3 repeats, got {repeats}")));
    }
    let single_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let single = single_pool.install(|| median_seconds(repeats, || f(input)))?;
    let multi = median_seconds(repeats, || f(input))?;
    let (w, h) = (input.width(), input.height());
    Ok(RuntimeMeasurement {
        algorithm: name.to_string(),
        width: w,
        height: h,
        repeats,
        threads: rayon::current_num_threads(),
        single_thread_s: single,
        multi_thread_s: multi,
        single_thread_64m_s: estimate_64m_runtime(single, w, h)?,
        multi_thread_64m_s: estimate_64m_runtime(multi, w, h)?,
    })
}

pub fn measure_runtime(
    alg: &Algorithm,
    input: &RawImage,
    gain_db: f64,
    cfa_out: &CfaDescriptor,
    repeats: usize,
) -> Result<RuntimeMeasurement> {
    if matches!(alg, Algorithm::GroundTruth) {
        return Err(Error::InvalidArgument("the ground-truth algorithm cannot be timed".into()));
    }
    measure_runtime_with(alg.name(), input, repeats, |img| run_algorithm(alg, img, gain_db, cfa_out, None))
}
