#pragma once

#include "deskstage/imaging/image.hpp"

namespace deskstage::imaging {

/// Peak signal-to-noise ratio in dB with peak 1.0. Returns +infinity for
/// identical frames.
double psnr(const ImageFrame& a, const ImageFrame& b);

double mse(const ImageFrame& a, const ImageFrame& b);
double rmse(const ImageFrame& a, const ImageFrame& b);

/// Mean absolute error as a percentage of full scale (1.0).
double mae(const ImageFrame& a, const ImageFrame& b);

/// Mean absolute per-value difference, not scaled.
double mean_abs_diff(const ImageFrame& a, const ImageFrame& b);

/// Relative L2 error ||a - b|| / ||b||.
double relative_l2(const ImageFrame& a, const ImageFrame& reference);

}  // namespace deskstage::imaging
