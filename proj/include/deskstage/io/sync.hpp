#pragma once

#include <span>
#include <stdexcept>
#include <utility>

#include "deskstage/imaging/image.hpp"

namespace deskstage::io {

class SyncNotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double mean_luminance(const imaging::ImageFrame& frame);

/// First and last frame whose mean luminance exceeds tau times the brightest
/// frame's. The capture proper lies strictly between them.
std::pair<std::size_t, std::size_t> sync_detect(std::span<const imaging::ImageFrame> frames, double tau = 0.9);

}  // namespace deskstage::io
