#include "deskstage/pairs/pair_miner.hpp"

#include <algorithm>
#include <bit>
#include <optional>

#include "deskstage/imaging/resample.hpp"

namespace deskstage::pairs {

using imaging::Mask;

namespace {

void require_same_shape(const Mask& a, const Mask& b) {
    if (!a.same_shape(b)) throw PairError("mask dimensions differ");
}

struct MaskSummary {
    std::size_t count = 0;
    std::optional<imaging::Box> box;
};

MaskSummary summarize(const Mask& m) { return {m.count(), imaging::mask_bounds(m)}; }

double bound_from_summaries(const MaskSummary& a, const MaskSummary& b) {
    const std::size_t hi = std::max(a.count, b.count);
    if (hi == 0) return 1.0;
    double inter = static_cast<double>(std::min(a.count, b.count));
    if (a.box && b.box) {
        const double w = std::min(a.box->x1, b.box->x1) - std::max(a.box->x0, b.box->x0);
        const double h = std::min(a.box->y1, b.box->y1) - std::max(a.box->y0, b.box->y0);
        inter = std::min(inter, std::max(0.0, w) * std::max(0.0, h));
    } else {
        inter = 0.0;
    }
    return inter / static_cast<double>(hi);
}

}  // namespace

double mask_iou(const Mask& a, const Mask& b) {
    require_same_shape(a, b);
    auto wa = a.words();
    auto wb = b.words();
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        inter += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
        uni += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double iou_upper_bound(const Mask& a, const Mask& b) {
    require_same_shape(a, b);
    return bound_from_summaries(summarize(a), summarize(b));
}

PairIndex mine_pairs(std::span<const Mask> masks, double threshold,
                     std::span<const std::size_t> ids) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw PairError("threshold must lie in (0, 1]");
    if (masks.size() < 2) throw PairError("mine_pairs needs at least two masks");
    if (!ids.empty() && ids.size() != masks.size()) throw PairError("ids length mismatch");
    for (const auto& m : masks) require_same_shape(masks.front(), m);

    std::vector<MaskSummary> summaries;
    summaries.reserve(masks.size());
    for (const auto& m : masks) summaries.push_back(summarize(m));

    auto id = [&](std::size_t i) { return ids.empty() ? i : ids[i]; };

    PairIndex out;
    out.threshold = threshold;
    std::vector<Pair> upper;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        for (std::size_t j = i + 1; j < masks.size(); ++j) {
            if (bound_from_summaries(summaries[i], summaries[j]) < threshold) continue;
            const double iou = mask_iou(masks[i], masks[j]);
            if (iou >= threshold) upper.push_back({i, j, iou});
        }
    }
    out.pairs.reserve(2 * upper.size());
    for (const auto& p : upper) {
        out.pairs.push_back({id(p.source), id(p.target), p.iou});
        out.pairs.push_back({id(p.target), id(p.source), p.iou});
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const Pair& a, const Pair& b) {
        return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    return out;
}

PoseMatch nearest_pose_match(const Mask& query, std::span<const Mask> candidates) {
    if (candidates.empty()) throw PairError("nearest_pose_match needs candidates");
    PoseMatch best{0, -1.0};
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double iou = mask_iou(query, candidates[i]);
        if (iou > best.iou) best = {i, iou};
    }
    return best;
}

}  // namespace deskstage::pairs
