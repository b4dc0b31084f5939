#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deskstage/capture/sequence.hpp"
#include "deskstage/io/image_io.hpp"

namespace deskstage::io {

inline constexpr int kManifestMajor = 1;
inline constexpr int kManifestMinor = 0;

enum class FrameFormat { kPng, kPfm };

struct FrameRecord {
    std::string frame_file;
    std::string frame_sha256;
    std::string light_file;
    std::string light_sha256;
    std::string mask_file;
    std::string mask_sha256;
    /// Hash of the linear pixel values as loaded (see imaging::content_hash).
    std::string pixel_hash;
    /// w, x, y, z, tx, ty, tz
    std::optional<std::array<double, 7>> pose;
};

struct DatasetManifest {
    std::string schema_version;
    std::size_t frame_count = 0;
    double fps = 30.0;
    int image_width = 0;
    int image_height = 0;
    int light_width = 0;
    int light_height = 0;
    float max_radiance = 1.0f;
    bool linear = true;
    FrameFormat format = FrameFormat::kPfm;
    std::string provenance = "simulated";
    capture::FrameRange active;
    std::optional<capture::FrameRange> test;
    std::vector<FrameRecord> frames;
};

/// Layout: frames/%06d.{png,pfm}, lights/%06d.png, masks/%06d.png,
/// manifest.json. PNG frames of linear sequences are sRGB encoded.
DatasetManifest write_dataset(const capture::CaptureSequence& seq, const std::filesystem::path& dir,
                              FrameFormat format);

DatasetManifest read_manifest(const std::filesystem::path& dir);
/// Loads and verifies every file hash.
capture::CaptureSequence read_dataset(const std::filesystem::path& dir);

std::string manifest_json(const DatasetManifest& manifest);

/// Builds a sequence from pre-extracted frame PNGs, light PNGs and mask PNGs
/// with matching sorted file names (real captures).
capture::CaptureSequence ingest_frames(const std::filesystem::path& frames_dir,
                                       const std::filesystem::path& lights_dir,
                                       const std::filesystem::path& masks_dir, float max_radiance);

}  // namespace deskstage::io
