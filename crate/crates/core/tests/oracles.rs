mod common;

#[test]
fn mosaic_expand_round_trip_is_bit_exact() {
    common::mosaic_expand_round_trip_is_bit_exact();
}

#[test]
fn diagonal_bin_matches_block_loop() {
    common::diagonal_bin_matches_block_loop();
}

#[test]
fn metrics_match_naive_references() {
    common::metrics_match_naive_references();
}

#[test]
fn histogram_edges() {
    common::histogram_edges();
}

#[test]
fn ssim_taps_are_normalized_gaussian() {
    common::ssim_taps_are_normalized_gaussian();
}

#[test]
fn mhc_matches_reference_convolution() {
    common::mhc_matches_reference_convolution();
}

#[test]
fn mhc_is_exact_on_affine_signals() {
    common::mhc_is_exact_on_affine_signals();
}

#[test]
fn bilinear_matches_scalar_reference() {
    common::bilinear_matches_scalar_reference();
}

#[test]
fn ridge_training_matches_pseudo_inverse() {
    common::ridge_training_matches_pseudo_inverse();
}

#[test]
fn golden_rmsc_fixture() {
    common::golden_rmsc_fixture();
}
