#include "deskstage/io/image_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>

namespace deskstage::io {

imaging::Srgb8Image read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    imaging::Srgb8Image out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.channels = color ? 3 : 1;
    out.data.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const imaging::Srgb8Image& img) {
    if (img.width < 1 || img.height < 1) throw IoError("cannot write an empty PNG");
    if (img.channels != 1 && img.channels != 3) throw IoError("PNG writer supports 1 or 3 channels");
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
        throw IoError("PNG data length does not match its dimensions");
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

imaging::ImageFrame read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PFM " + path.string());
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (!in || magic != "PF") throw IoError(path.string() + " is not a color PFM");
    if (width < 1 || height < 1) throw IoError("bad PFM dimensions in " + path.string());
    if (scale >= 0.0) throw IoError("big-endian PFM is not supported: " + path.string());
    const std::size_t row = static_cast<std::size_t>(width) * 3;
    std::vector<float> data(row * height);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(data.data() + row * y), static_cast<std::streamsize>(row * sizeof(float)));
    }
    if (!in) throw IoError("truncated PFM " + path.string());
    const double factor = std::abs(scale);
    if (factor != 1.0) {
        for (auto& v : data) v = static_cast<float>(v * factor);
    }
    return imaging::ImageFrame(width, height, std::move(data));
}

void write_pfm(const std::filesystem::path& path, const imaging::ImageFrame& img) {
    if (img.empty()) throw IoError("cannot write an empty PFM");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write PFM " + path.string());
    out << "PF\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
    const std::size_t row = static_cast<std::size_t>(img.width()) * 3;
    for (int y = img.height() - 1; y >= 0; --y) {
        out.write(reinterpret_cast<const char*>(img.data().data() + row * y),
                  static_cast<std::streamsize>(row * sizeof(float)));
    }
    if (!out) throw IoError("failed writing PFM " + path.string());
}

imaging::Mask read_mask_png(const std::filesystem::path& path) {
    const auto img = read_png(path);
    std::vector<std::uint8_t> values(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = img.data[i * img.channels] >= 128 ? 1 : 0;
    return imaging::Mask(img.width, img.height, values);
}

void write_mask_png(const std::filesystem::path& path, const imaging::Mask& mask) {
    imaging::Srgb8Image img;
    img.width = mask.width();
    img.height = mask.height();
    img.channels = 1;
    img.data = mask.to_bytes();
    for (auto& v : img.data) v = v ? 255 : 0;
    write_png(path, img);
}

}  // namespace deskstage::io
