#include "deskstage/training/pair_data.hpp"

#include "deskstage/nn/params.hpp"

namespace deskstage::training {

imaging::Box crop_box(const imaging::Mask& mask, const CropConfig& crop) {
    const auto bounds = imaging::mask_bounds(mask);
    if (!bounds) throw TrainingError("cannot crop around an empty mask");
    const auto grown = imaging::dilate(*bounds, crop.dilation);
    return imaging::fit_aspect(grown, static_cast<double>(crop.width) / crop.height);
}

Batch make_batch(const capture::CaptureSequence& seq, std::size_t source, std::size_t target,
                 const CropConfig& crop) {
    if (source >= seq.size() || target >= seq.size()) throw TrainingError("pair index out of range");
    const auto& fs = seq.frames[source];
    const auto& ft = seq.frames[target];
    const auto box = crop_box(fs.mask, crop);
    Batch b;
    b.source = nn::image_to_tensor<float>(imaging::crop_resize(fs.image, box, crop.width, crop.height));
    b.target = nn::image_to_tensor<float>(imaging::crop_resize(ft.image, box, crop.width, crop.height));
    b.light_s = nn::light_to_tensor<float>(fs.light, seq.max_radiance);
    b.light_t = nn::light_to_tensor<float>(ft.light, seq.max_radiance);
    return b;
}

}  // namespace deskstage::training
