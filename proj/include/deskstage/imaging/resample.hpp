#pragma once

#include <optional>

#include "deskstage/imaging/image.hpp"

namespace deskstage::imaging {

/// Axis-aligned region in continuous pixel coordinates; pixel (x, y) covers
/// [x, x+1) x [y, y+1).
struct Box {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

/// Tight bounds of the set pixels; nullopt for an empty mask.
std::optional<Box> mask_bounds(const Mask& mask);

Box box_union(const Box& a, const Box& b);
/// Grow about the center so each side is (1 + fraction) times longer.
Box dilate(const Box& box, double fraction);
/// Grow the shorter side about the center until width / height == aspect.
Box fit_aspect(const Box& box, double aspect);

/// Bilinear resample of the region `box` onto an out_w x out_h grid. Samples
/// outside the source clamp to the border.
ImageFrame crop_resize(const ImageFrame& src, const Box& box, int out_w, int out_h);

/// Inverse of crop_resize: resample `patch` back onto the pixels of `dst`
/// whose centers fall inside `box` and add it there.
void add_resampled(ImageFrame& dst, const ImageFrame& patch, const Box& box);

}  // namespace deskstage::imaging
