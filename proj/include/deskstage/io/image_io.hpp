#pragma once

#include <filesystem>
#include <stdexcept>

#include "deskstage/imaging/image.hpp"

namespace deskstage::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit PNG, gray or RGB (alpha is dropped, palettes expanded).
imaging::Srgb8Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const imaging::Srgb8Image& img);

/// Color PFM, little-endian (scale -1), rows stored bottom to top.
imaging::ImageFrame read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const imaging::ImageFrame& img);

imaging::Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const imaging::Mask& mask);

}  // namespace deskstage::io
