#pragma once

#include "deskstage/capture/sequence.hpp"
#include "deskstage/imaging/resample.hpp"
#include "deskstage/training/config.hpp"

namespace deskstage::training {

using autodiff::Tensor;

/// One training example at network resolution.
struct Batch {
    Tensor<float> source;   // [1, 3, h, w]
    Tensor<float> target;   // [1, 3, h, w]
    Tensor<float> light_s;  // [1, W*H*3], divided by max_radiance
    Tensor<float> light_t;
};

/// Mask bounding box grown by the dilation and widened to the crop aspect.
imaging::Box crop_box(const imaging::Mask& mask, const CropConfig& crop);

/// Crops source and target frames with the source frame's box.
Batch make_batch(const capture::CaptureSequence& seq, std::size_t source, std::size_t target,
                 const CropConfig& crop);

}  // namespace deskstage::training
