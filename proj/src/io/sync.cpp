#include "deskstage/io/sync.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "deskstage/imaging/color.hpp"

namespace deskstage::io {

double mean_luminance(const imaging::ImageFrame& frame) {
    if (frame.empty()) return 0.0;
    double total = 0.0;
    auto d = frame.data();
    for (std::size_t i = 0; i < d.size(); i += 3) total += imaging::luminance(d[i], d[i + 1], d[i + 2]);
    return total / static_cast<double>(frame.pixel_count());
}

std::pair<std::size_t, std::size_t> sync_detect(std::span<const imaging::ImageFrame> frames, double tau) {
    if (frames.size() < 3) throw std::invalid_argument("sync detection needs at least 3 frames");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("sync threshold must lie in (0, 1)");
    std::vector<double> lum(frames.size());
    std::transform(frames.begin(), frames.end(), lum.begin(), mean_luminance);
    const double peak = *std::max_element(lum.begin(), lum.end());
    if (!(peak > 0.0)) throw SyncNotFound("sync-not-found: every frame is dark");
    const double cut = tau * peak;
    std::size_t first = frames.size(), last = 0;
    for (std::size_t i = 0; i < lum.size(); ++i) {
        if (lum[i] > cut) {
            first = std::min(first, i);
            last = i;
        }
    }
    if (first >= last) throw SyncNotFound("sync-not-found: fewer than two flash frames");
    return {first, last};
}

}  // namespace deskstage::io
