#include "deskstage/io/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deskstage/imaging/color.hpp"
#include "deskstage/imaging/hash.hpp"

namespace deskstage::io {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string numbered(int index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d.%s", index, ext);
    return buf;
}

imaging::Srgb8Image quantize_direct(const imaging::ImageFrame& frame) {
    imaging::Srgb8Image img{frame.width(), frame.height(), 3, {}};
    img.data.resize(frame.value_count());
    auto src = frame.data();
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const float v = std::clamp(src[i], 0.0f, 1.0f);
        img.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

imaging::ImageFrame dequantize_direct(const imaging::Srgb8Image& img) {
    if (img.channels != 3) throw IoError("expected an RGB frame");
    std::vector<float> data(img.data.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = img.data[i] / 255.0f;
    return imaging::ImageFrame(img.width, img.height, std::move(data));
}

ordered_json range_json(const capture::FrameRange& r) { return {r.begin, r.end}; }

capture::FrameRange range_from(const nlohmann::json& j) {
    return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
}

void verify(const fs::path& file, const std::string& expected) {
    if (!fs::exists(file)) throw IoError("missing dataset file " + file.string());
    const auto actual = imaging::sha256_file(file);
    if (actual != expected) throw IoError("hash mismatch for " + file.string());
}

}  // namespace

std::string manifest_json(const DatasetManifest& m) {
    ordered_json j;
    j["schema_version"] = m.schema_version;
    j["frame_count"] = m.frame_count;
    j["fps"] = m.fps;
    j["image_resolution"] = {m.image_width, m.image_height};
    j["light_resolution"] = {m.light_width, m.light_height};
    j["max_radiance"] = m.max_radiance;
    j["linear"] = m.linear;
    j["frame_format"] = m.format == FrameFormat::kPng ? "png" : "pfm";
    j["provenance"] = m.provenance;
    j["active_range"] = range_json(m.active);
    if (m.test) j["test_range"] = range_json(*m.test);
    auto& frames = j["frames"] = ordered_json::array();
    for (const auto& f : m.frames) {
        ordered_json e;
        e["frame"] = f.frame_file;
        e["frame_sha256"] = f.frame_sha256;
        e["light"] = f.light_file;
        e["light_sha256"] = f.light_sha256;
        e["mask"] = f.mask_file;
        e["mask_sha256"] = f.mask_sha256;
        e["pixel_hash"] = f.pixel_hash;
        if (f.pose) e["pose"] = *f.pose;
        frames.push_back(std::move(e));
    }
    return j.dump(1);
}

DatasetManifest write_dataset(const capture::CaptureSequence& seq, const fs::path& dir, FrameFormat format) {
    if (seq.frames.empty()) throw IoError("cannot write an empty dataset");
    fs::create_directories(dir / "frames");
    fs::create_directories(dir / "lights");
    fs::create_directories(dir / "masks");
    DatasetManifest m;
    m.schema_version = std::to_string(kManifestMajor) + "." + std::to_string(kManifestMinor);
    m.frame_count = seq.size();
    m.fps = seq.fps;
    m.image_width = seq.frames[0].image.width();
    m.image_height = seq.frames[0].image.height();
    m.light_width = seq.frames[0].light.width();
    m.light_height = seq.frames[0].light.height();
    m.max_radiance = seq.max_radiance;
    m.linear = seq.linear;
    m.format = format;
    m.provenance = seq.provenance;
    m.active = seq.active;
    m.test = seq.test;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto& f = seq.frames[i];
        if (!f.image.same_shape(seq.frames[0].image) || !f.light.same_shape(seq.frames[0].light)) {
            throw IoError("frame " + std::to_string(i) + " has a different resolution");
        }
        FrameRecord r;
        const int idx = static_cast<int>(i);
        r.frame_file = "frames/" + numbered(idx, format == FrameFormat::kPng ? "png" : "pfm");
        r.light_file = "lights/" + numbered(idx, "png");
        r.mask_file = "masks/" + numbered(idx, "png");
        imaging::ImageFrame stored = f.image;
        if (format == FrameFormat::kPfm) {
            write_pfm(dir / r.frame_file, f.image);
        } else {
            const auto png = seq.linear ? imaging::linear_to_srgb(f.image) : quantize_direct(f.image);
            write_png(dir / r.frame_file, png);
            stored = seq.linear ? imaging::srgb_to_linear(png) : dequantize_direct(png);
        }
        write_png(dir / r.light_file, imaging::light_to_srgb(f.light, seq.max_radiance));
        write_mask_png(dir / r.mask_file, f.mask);
        r.frame_sha256 = imaging::sha256_file(dir / r.frame_file);
        r.light_sha256 = imaging::sha256_file(dir / r.light_file);
        r.mask_sha256 = imaging::sha256_file(dir / r.mask_file);
        r.pixel_hash = imaging::content_hash(stored);
        if (f.pose) {
            const auto& q = f.pose->rotation;
            const auto& t = f.pose->translation;
            r.pose = std::array<double, 7>{q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()};
        }
        m.frames.push_back(std::move(r));
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << manifest_json(m) << '\n';
    return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("missing manifest.json in " + dir.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.schema_version = j.at("schema_version").get<std::string>();
        const int major = std::stoi(m.schema_version.substr(0, m.schema_version.find('.')));
        if (major != kManifestMajor) {
            throw IoError("unsupported manifest schema version " + m.schema_version);
        }
        m.frame_count = j.at("frame_count").get<std::size_t>();
        m.fps = j.at("fps").get<double>();
        m.image_width = j.at("image_resolution").at(0).get<int>();
        m.image_height = j.at("image_resolution").at(1).get<int>();
        m.light_width = j.at("light_resolution").at(0).get<int>();
        m.light_height = j.at("light_resolution").at(1).get<int>();
        m.max_radiance = j.at("max_radiance").get<float>();
        m.linear = j.at("linear").get<bool>();
        const auto fmt = j.at("frame_format").get<std::string>();
        if (fmt != "png" && fmt != "pfm") throw IoError("unknown frame format " + fmt);
        m.format = fmt == "png" ? FrameFormat::kPng : FrameFormat::kPfm;
        m.provenance = j.at("provenance").get<std::string>();
        m.active = range_from(j.at("active_range"));
        if (j.contains("test_range")) m.test = range_from(j.at("test_range"));
        for (const auto& e : j.at("frames")) {
            FrameRecord r;
            r.frame_file = e.at("frame").get<std::string>();
            r.frame_sha256 = e.at("frame_sha256").get<std::string>();
            r.light_file = e.at("light").get<std::string>();
            r.light_sha256 = e.at("light_sha256").get<std::string>();
            r.mask_file = e.at("mask").get<std::string>();
            r.mask_sha256 = e.at("mask_sha256").get<std::string>();
            r.pixel_hash = e.at("pixel_hash").get<std::string>();
            if (e.contains("pose")) r.pose = e.at("pose").get<std::array<double, 7>>();
            m.frames.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid manifest in " + dir.string() + ": " + e.what());
    }
    if (m.frames.size() != m.frame_count) {
        throw IoError("manifest lists " + std::to_string(m.frames.size()) + " frames but declares " +
                      std::to_string(m.frame_count));
    }
    return m;
}

capture::CaptureSequence read_dataset(const fs::path& dir) {
    const DatasetManifest m = read_manifest(dir);
    capture::CaptureSequence seq;
    seq.fps = m.fps;
    seq.linear = m.linear;
    seq.max_radiance = m.max_radiance;
    seq.provenance = m.provenance;
    seq.active = m.active;
    seq.test = m.test;
    for (const auto& r : m.frames) {
        verify(dir / r.frame_file, r.frame_sha256);
        verify(dir / r.light_file, r.light_sha256);
        verify(dir / r.mask_file, r.mask_sha256);
        capture::CaptureFrame f;
        if (m.format == FrameFormat::kPfm) {
            f.image = read_pfm(dir / r.frame_file);
        } else {
            const auto png = read_png(dir / r.frame_file);
            f.image = m.linear ? imaging::srgb_to_linear(png) : dequantize_direct(png);
        }
        f.light = imaging::light_from_srgb(read_png(dir / r.light_file), m.max_radiance);
        f.mask = read_mask_png(dir / r.mask_file);
        if (f.image.width() != m.image_width || f.image.height() != m.image_height ||
            f.light.width() != m.light_width || f.light.height() != m.light_height || !(f.mask.width() == m.image_width && f.mask.height() == m.image_height)) {
            throw IoError("resolution of " + r.frame_file + " disagrees with the manifest");
        }
        if (imaging::content_hash(f.image) != r.pixel_hash) {
            throw IoError("pixel hash mismatch for " + r.frame_file);
        }
        if (r.pose) {
            const auto& p = *r.pose;
            capture::RigidPose pose;
            pose.rotation = Eigen::Quaterniond(p[0], p[1], p[2], p[3]);
            pose.translation = Eigen::Vector3d(p[4], p[5], p[6]);
            f.pose = pose;
        }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

capture::CaptureSequence ingest_frames(const fs::path& frames_dir, const fs::path& lights_dir,
                                       const fs::path& masks_dir, float max_radiance) {
    auto list = [](const fs::path& d) {
        if (!fs::is_directory(d)) throw IoError("not a directory: " + d.string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(d)) {
            if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        return files;
    };
    const auto frames = list(frames_dir);
    const auto lights = list(lights_dir);
    const auto masks = list(masks_dir);
    if (frames.empty()) throw IoError("no frame PNGs in " + frames_dir.string());
    if (lights.size() != frames.size() || masks.size() != frames.size()) {
        throw IoError("frame, light and mask folders hold different numbers of PNGs");
    }
    capture::CaptureSequence seq;
    seq.provenance = "ingested";
    seq.max_radiance = max_radiance;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        capture::CaptureFrame f;
        f.image = imaging::srgb_to_linear(read_png(frames[i]));
        f.light = imaging::light_from_srgb(read_png(lights[i]), max_radiance);
        f.mask = read_mask_png(masks[i]);
        if (f.mask.width() != f.image.width() || f.mask.height() != f.image.height()) {
            throw IoError("mask " + masks[i].string() + " does not match its frame");
        }
        seq.frames.push_back(std::move(f));
    }
    seq.active = {0, seq.frames.size()};
    return seq;
}

}  // namespace deskstage::io
