#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "deskstage/imaging/image.hpp"

namespace deskstage::pairs {

class PairError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Pair {
    std::size_t source = 0;
    std::size_t target = 0;
    double iou = 0.0;

    friend bool operator==(const Pair&, const Pair&) = default;
};

/// Ordered training pairs; both (i, j) and (j, i) appear since relighting is
/// directional. Sorted lexicographically by (source, target).
struct PairIndex {
    std::vector<Pair> pairs;
    double threshold = 0.92;
};

inline constexpr double kDefaultIouThreshold = 0.92;

/// |a & b| / |a | b|; 1 when both masks are empty.
double mask_iou(const imaging::Mask& a, const imaging::Mask& b);

/// Cheap upper bound on mask_iou from pixel counts and bounding boxes:
/// min(|a|, |b|, area(box a & box b)) / max(|a|, |b|).
double iou_upper_bound(const imaging::Mask& a, const imaging::Mask& b);

/// Every ordered pair (i, j), i != j, with IoU >= threshold. `ids` maps local
/// positions to the frame indices recorded in the result (identity if empty).
PairIndex mine_pairs(std::span<const imaging::Mask> masks,
                     double threshold = kDefaultIouThreshold,
                     std::span<const std::size_t> ids = {});

struct PoseMatch {
    std::size_t index = 0;
    double iou = 0.0;
};

/// Candidate with the largest mask IoU; ties go to the lowest index.
PoseMatch nearest_pose_match(const imaging::Mask& query,
                             std::span<const imaging::Mask> candidates);

}  // namespace deskstage::pairs
