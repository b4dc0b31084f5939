#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "deskstage/imaging/image.hpp"

namespace deskstage::imaging {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of the dimensions and the raw little-endian float values, so two
/// frames share a hash exactly when their linear pixel data is identical.
std::string content_hash(const ImageFrame& frame);

}  // namespace deskstage::imaging
