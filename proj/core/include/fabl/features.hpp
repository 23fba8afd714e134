#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fabl/layout.hpp"
#include "fabl/skeleton.hpp"

namespace fabl {

/// The four skeletal feature modalities, in their fixed order.
enum class Modality : int {
    spatial_displacement = 0,  // joint minus torso, per axis
    temporal_displacement = 1, // joint minus same joint one frame back
    longterm_displacement = 2, // joint minus same joint in the initial frame
    spatial_distance = 3,      // Euclidean distance of joint to torso
};

inline constexpr int kModalityCount = 4;

/// Scalar channels per modality: 3 (x,y,z) for the displacement modalities,
/// 1 for the distance modality.
int modality_channels(int q);
const char* modality_name(int q);

struct HistogramConfig {
    enum class RangePolicy { train_minmax, fixed };

    int bins = 16;
    RangePolicy range_policy = RangePolicy::train_minmax;
    double fixed_lo = 0.0;
    double fixed_hi = 0.0;
    bool normalize = true;
};

/// Resolved histogram ranges, one (lo, hi) pair per (modality, channel).
/// Computed from training data under the train_minmax policy and frozen into
/// the model file so test-time extraction replays the exact same bins.
struct FeatureRanges {
    std::vector<std::vector<std::array<double, 2>>> ranges;

    bool empty() const { return ranges.empty(); }
    int modalities() const { return static_cast<int>(ranges.size()); }
};

struct FeatureVector {
    Eigen::VectorXd values;
    PartitionLayout layout;
};

/// Design matrix: columns are feature vectors sharing one layout.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    PartitionLayout layout;

    int dim() const { return static_cast<int>(values.rows()); }
    int count() const { return static_cast<int>(values.cols()); }
};

/// Per-frame features. Outputs are indexed by joint.
std::vector<std::array<double, 3>> spatial_displacement(const SkeletonFrame& frame);
std::vector<std::array<double, 3>> temporal_displacement(const SkeletonFrame& curr,
                                                         const SkeletonFrame& prev);
std::vector<std::array<double, 3>> longterm_displacement(const SkeletonFrame& curr,
                                                         const SkeletonFrame& initial);
std::vector<double> spatial_distance(const SkeletonFrame& frame);

/// The layout produced by extract_features for this model and config:
/// block (q, r) has dimension bins * channels(q).
PartitionLayout layout_for(const BodyModel& model, const HistogramConfig& cfg);

/// Pooled per-(modality, channel) min/max over all frames, joints and
/// sequences. With a fixed-range policy the configured range is returned for
/// every channel. Degenerate ranges are widened by an epsilon-scaled pad.
FeatureRanges compute_feature_ranges(std::span<const SkeletonSequence> sequences,
                                     const HistogramConfig& cfg);

/// Histograms each feature stream into the block structure of
/// layout_for(model, cfg). Values outside a range clamp into the edge bins;
/// with cfg.normalize every per-channel histogram sums to 1.
FeatureVector extract_features(const SkeletonSequence& seq, const HistogramConfig& cfg,
                               const FeatureRanges& ranges);

/// Single-sequence convenience: ranges are computed from the sequence itself.
FeatureVector extract_features(const SkeletonSequence& seq, const HistogramConfig& cfg);

FeatureMatrix extract_dataset(std::span<const SkeletonSequence> sequences,
                              const HistogramConfig& cfg, const FeatureRanges& ranges);

} // namespace fabl
