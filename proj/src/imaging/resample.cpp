#include "deskstage/imaging/resample.hpp"

#include <algorithm>
#include <cmath>

namespace deskstage::imaging {

namespace {

float sample_bilinear(const ImageFrame& src, double fx, double fy, int c) {
    fx = std::clamp(fx, 0.0, static_cast<double>(src.width() - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height() - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const int x1 = std::min(x0 + 1, src.width() - 1);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const double top = src.at(x0, y0, c) * (1.0 - tx) + src.at(x1, y0, c) * tx;
    const double bottom = src.at(x0, y1, c) * (1.0 - tx) + src.at(x1, y1, c) * tx;
    return static_cast<float>(top * (1.0 - ty) + bottom * ty);
}

}  // namespace

std::optional<Box> mask_bounds(const Mask& mask) {
    int x_min = mask.width();
    int y_min = mask.height();
    int x_max = -1;
    int y_max = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.get(x, y)) continue;
            x_min = std::min(x_min, x);
            y_min = std::min(y_min, y);
            x_max = std::max(x_max, x);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max < 0) return std::nullopt;
    return Box{static_cast<double>(x_min), static_cast<double>(y_min),
               static_cast<double>(x_max + 1), static_cast<double>(y_max + 1)};
}

Box box_union(const Box& a, const Box& b) {
    return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
            std::max(a.y1, b.y1)};
}

Box dilate(const Box& box, double fraction) {
    const double cx = 0.5 * (box.x0 + box.x1);
    const double cy = 0.5 * (box.y0 + box.y1);
    const double hw = 0.5 * box.width() * (1.0 + fraction);
    const double hh = 0.5 * box.height() * (1.0 + fraction);
    return {cx - hw, cy - hh, cx + hw, cy + hh};
}

Box fit_aspect(const Box& box, double aspect) {
    const double cx = 0.5 * (box.x0 + box.x1);
    const double cy = 0.5 * (box.y0 + box.y1);
    double w = box.width();
    double h = box.height();
    if (w / h < aspect) {
        w = h * aspect;
    } else {
        h = w / aspect;
    }
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

ImageFrame crop_resize(const ImageFrame& src, const Box& box, int out_w, int out_h) {
    if (src.empty()) throw ImagingError("crop_resize: empty source");
    if (out_w <= 0 || out_h <= 0) throw ImagingError("crop_resize: invalid output size");
    if (!(box.width() > 0.0 && box.height() > 0.0)) throw ImagingError("crop_resize: empty box");
    ImageFrame out(out_w, out_h);
    const double sx = box.width() / out_w;
    const double sy = box.height() / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = box.y0 + (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double fx = box.x0 + (x + 0.5) * sx - 0.5;
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = sample_bilinear(src, fx, fy, c);
        }
    }
    return out;
}

void add_resampled(ImageFrame& dst, const ImageFrame& patch, const Box& box) {
    if (patch.empty()) throw ImagingError("add_resampled: empty patch");
    const double sx = patch.width() / box.width();
    const double sy = patch.height() / box.height();
    const int x_begin = std::max(0, static_cast<int>(std::ceil(box.x0 - 0.5)));
    const int y_begin = std::max(0, static_cast<int>(std::ceil(box.y0 - 0.5)));
    const int x_end = std::min(dst.width(), static_cast<int>(std::ceil(box.x1 - 0.5)));
    const int y_end = std::min(dst.height(), static_cast<int>(std::ceil(box.y1 - 0.5)));
    for (int y = y_begin; y < y_end; ++y) {
        const double fy = (y + 0.5 - box.y0) * sy - 0.5;
        for (int x = x_begin; x < x_end; ++x) {
            const double fx = (x + 0.5 - box.x0) * sx - 0.5;
            for (int c = 0; c < 3; ++c) dst.at(x, y, c) += sample_bilinear(patch, fx, fy, c);
        }
    }
}

}  // namespace deskstage::imaging
