//! RGBW to Bayer remosaic algorithms.

mod filter_bank;
mod nearest;
pub mod solve;
mod white_guided;

pub use filter_bank::{
    apply_filter_bank, train_filter_bank, train_filter_bank_detailed, FilterBank, PhaseFit, SolverChoice,
    TrainOptions, TrainReport, DEFAULT_LAMBDA, DEFAULT_PATCH_RADIUS,
};
pub use nearest::remosaic_nearest;
pub use white_guided::{interpolate_white_plane, remosaic_white_guided};

use crate::cfa::CfaDescriptor;
use crate::error::{Error, Result};
use crate::image::RawImage;

fn check_io(rgbw: &RawImage, cfa_out: &CfaDescriptor) -> Result<()> {
    rgbw.cfa().require_rgbw()?;
    cfa_out.require_bayer()?;
    if rgbw.width() < rgbw.cfa().tile_width() || rgbw.height() < rgbw.cfa().tile_height() {
        return Err(Error::ImageTooSmall(format!(
            "remosaic needs at least one {}x{} tile, got {}x{}",
            rgbw.cfa().tile_width(),
            rgbw.cfa().tile_height(),
            rgbw.width(),
            rgbw.height()
        )));
    }
    Ok(())
}
