#include "fabl/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fabl/error.hpp"

namespace fabl {

namespace {

void check_torso(const SkeletonFrame& frame) {
    if (frame.torso_index < 0 || frame.torso_index >= frame.joint_count())
        throw Error(ErrorCode::index_out_of_range,
                    "torso index " + std::to_string(frame.torso_index) +
                        " out of range for a " + std::to_string(frame.joint_count()) +
                        "-joint frame");
}

void check_same_model(const SkeletonFrame& a, const SkeletonFrame& b) {
    if (a.joint_count() != b.joint_count() || a.torso_index != b.torso_index)
        throw Error(ErrorCode::model_mismatch,
                    "frames disagree on joint count or torso index (" +
                        std::to_string(a.joint_count()) + "/" + std::to_string(a.torso_index) +
                        " vs " + std::to_string(b.joint_count()) + "/" +
                        std::to_string(b.torso_index) + ")");
}

void check_histogram_config(const HistogramConfig& cfg) {
    if (cfg.bins < 1)
        throw Error(ErrorCode::invalid_argument,
                    "histogram bins must be >= 1, got " + std::to_string(cfg.bins));
    if (cfg.range_policy == HistogramConfig::RangePolicy::fixed && !(cfg.fixed_lo < cfg.fixed_hi))
        throw Error(ErrorCode::empty_range, "fixed histogram range needs lo < hi");
}

// Streams every scalar feature value of a sequence to
// visit(modality, joint, channel, value). The two time-difference
// modalities stream frames 1..T-1 (frame 0 has no defined sample); the
// spatial pair streams every frame.
template <typename Visitor>
void for_each_feature_value(const SkeletonSequence& seq, Visitor&& visit) {
    if (seq.frame_count() < 2)
        throw Error(ErrorCode::too_short, "feature extraction needs at least 2 frames");
    const SkeletonFrame& first = seq.frames[0];
    check_torso(first);

    for (int t = 0; t < seq.frame_count(); ++t) {
        const SkeletonFrame& frame = seq.frames[t];
        check_same_model(first, frame);
        const Joint3D& torso = frame.joints[frame.torso_index];
        const int s = frame.joint_count();
        for (int j = 0; j < s; ++j) {
            const Joint3D& joint = frame.joints[j];
            if (!std::isfinite(joint.x) || !std::isfinite(joint.y) || !std::isfinite(joint.z))
                throw Error(ErrorCode::non_finite_coordinate,
                            "frame " + std::to_string(t) + " joint " + std::to_string(j) +
                                " has a non-finite coordinate");
            const double dx = joint.x - torso.x;
            const double dy = joint.y - torso.y;
            const double dz = joint.z - torso.z;
            visit(0, j, 0, dx);
            visit(0, j, 1, dy);
            visit(0, j, 2, dz);
            visit(3, j, 0, std::sqrt(dx * dx + dy * dy + dz * dz));
            if (t > 0) {
                const Joint3D& prev = seq.frames[t - 1].joints[j];
                visit(1, j, 0, joint.x - prev.x);
                visit(1, j, 1, joint.y - prev.y);
                visit(1, j, 2, joint.z - prev.z);
                const Joint3D& initial = first.joints[j];
                visit(2, j, 0, joint.x - initial.x);
                visit(2, j, 1, joint.y - initial.y);
                visit(2, j, 2, joint.z - initial.z);
            }
        }
    }
}

} // namespace

int modality_channels(int q) {
    if (q < 0 || q >= kModalityCount)
        throw Error(ErrorCode::index_out_of_range,
                    "modality index " + std::to_string(q) + " out of range");
    return q == static_cast<int>(Modality::spatial_distance) ? 1 : 3;
}

const char* modality_name(int q) {
    switch (static_cast<Modality>(q)) {
    case Modality::spatial_displacement: return "spatial_displacement";
    case Modality::temporal_displacement: return "temporal_displacement";
    case Modality::longterm_displacement: return "longterm_displacement";
    case Modality::spatial_distance: return "spatial_distance";
    }
    throw Error(ErrorCode::index_out_of_range,
                "modality index " + std::to_string(q) + " out of range");
}

std::vector<std::array<double, 3>> spatial_displacement(const SkeletonFrame& frame) {
    check_torso(frame);
    const Joint3D& torso = frame.joints[frame.torso_index];
    std::vector<std::array<double, 3>> out(frame.joints.size());
    for (size_t j = 0; j < frame.joints.size(); ++j) {
        const Joint3D& joint = frame.joints[j];
        out[j] = {joint.x - torso.x, joint.y - torso.y, joint.z - torso.z};
    }
    return out;
}

std::vector<std::array<double, 3>> temporal_displacement(const SkeletonFrame& curr,
                                                         const SkeletonFrame& prev) {
    check_same_model(curr, prev);
    std::vector<std::array<double, 3>> out(curr.joints.size());
    for (size_t j = 0; j < curr.joints.size(); ++j) {
        const Joint3D& c = curr.joints[j];
        const Joint3D& p = prev.joints[j];
        out[j] = {c.x - p.x, c.y - p.y, c.z - p.z};
    }
    return out;
}

std::vector<std::array<double, 3>> longterm_displacement(const SkeletonFrame& curr,
                                                         const SkeletonFrame& initial) {
    return temporal_displacement(curr, initial);
}

std::vector<double> spatial_distance(const SkeletonFrame& frame) {
    check_torso(frame);
    const Joint3D& torso = frame.joints[frame.torso_index];
    std::vector<double> out(frame.joints.size());
    for (size_t j = 0; j < frame.joints.size(); ++j) {
        const Joint3D& joint = frame.joints[j];
        const double dx = joint.x - torso.x;
        const double dy = joint.y - torso.y;
        const double dz = joint.z - torso.z;
        out[j] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return out;
}

PartitionLayout layout_for(const BodyModel& model, const HistogramConfig& cfg) {
    check_histogram_config(cfg);
    std::vector<std::vector<int>> dims(kModalityCount);
    for (int q = 0; q < kModalityCount; ++q)
        dims[q].assign(model.joint_count(), cfg.bins * modality_channels(q));
    return PartitionLayout(std::move(dims));
}

FeatureRanges compute_feature_ranges(std::span<const SkeletonSequence> sequences,
                                     const HistogramConfig& cfg) {
    check_histogram_config(cfg);
    FeatureRanges out;
    out.ranges.resize(kModalityCount);
    for (int q = 0; q < kModalityCount; ++q)
        out.ranges[q].resize(modality_channels(q));

    if (cfg.range_policy == HistogramConfig::RangePolicy::fixed) {
        for (auto& modality : out.ranges)
            for (auto& range : modality)
                range = {cfg.fixed_lo, cfg.fixed_hi};
        return out;
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    for (auto& modality : out.ranges)
        for (auto& range : modality)
            range = {inf, -inf};

    if (sequences.empty())
        throw Error(ErrorCode::empty_range, "train_minmax ranges need at least one sequence");
    for (const SkeletonSequence& seq : sequences) {
        for_each_feature_value(seq, [&](int q, int, int channel, double value) {
            auto& range = out.ranges[q][channel];
            range[0] = std::min(range[0], value);
            range[1] = std::max(range[1], value);
        });
    }

    // Constant data gives a zero-width range; widen by an epsilon-scaled pad
    // so binning stays well defined.
    for (auto& modality : out.ranges) {
        for (auto& range : modality) {
            if (!(range[1] - range[0] > 0.0)) {
                const double pad =
                    std::max(std::abs(range[0]), 1.0) * 16.0 * std::numeric_limits<double>::epsilon();
                range[0] -= pad;
                range[1] += pad;
            }
        }
    }
    return out;
}

FeatureVector extract_features(const SkeletonSequence& seq, const HistogramConfig& cfg,
                               const FeatureRanges& ranges) {
    check_histogram_config(cfg);
    if (ranges.modalities() != kModalityCount)
        throw Error(ErrorCode::shape_mismatch,
                    "feature ranges cover " + std::to_string(ranges.modalities()) +
                        " modalities, expected " + std::to_string(kModalityCount));
    for (int q = 0; q < kModalityCount; ++q) {
        if (static_cast<int>(ranges.ranges[q].size()) != modality_channels(q))
            throw Error(ErrorCode::shape_mismatch,
                        "feature ranges for modality " + std::to_string(q) +
                            " cover the wrong channel count");
        for (const auto& range : ranges.ranges[q])
            if (!(range[0] < range[1]))
                throw Error(ErrorCode::empty_range,
                            "feature range for modality " + std::to_string(q) + " is empty");
    }
    if (seq.frame_count() < 2)
        throw Error(ErrorCode::too_short, "feature extraction needs at least 2 frames");

    const int s = seq.frames[0].joint_count();
    const int bins = cfg.bins;
    std::vector<std::vector<int>> dims(kModalityCount);
    for (int q = 0; q < kModalityCount; ++q)
        dims[q].assign(s, bins * modality_channels(q));
    PartitionLayout layout{std::move(dims)};

    Eigen::VectorXd values = Eigen::VectorXd::Zero(layout.dim());
    // Per (modality, joint, channel) sample counts for normalization; within
    // a block, channels are consecutive runs of `bins` entries.
    std::vector<double> channel_counts(static_cast<size_t>(kModalityCount) * s * 3, 0.0);

    for_each_feature_value(seq, [&](int q, int joint, int channel, double value) {
        const auto& range = ranges.ranges[q][channel];
        const double width = range[1] - range[0];
        int bin = static_cast<int>(std::floor((value - range[0]) / width * bins));
        bin = std::clamp(bin, 0, bins - 1); // out-of-range values land in the edge bins
        values[layout.block_offset(q, joint) + channel * bins + bin] += 1.0;
        channel_counts[(static_cast<size_t>(q) * s + joint) * 3 + channel] += 1.0;
    });

    if (cfg.normalize) {
        for (int q = 0; q < kModalityCount; ++q) {
            for (int joint = 0; joint < s; ++joint) {
                for (int channel = 0; channel < modality_channels(q); ++channel) {
                    const double count = channel_counts[(static_cast<size_t>(q) * s + joint) * 3 + channel];
                    const int offset = layout.block_offset(q, joint) + channel * bins;
                    values.segment(offset, bins) /= count;
                }
            }
        }
    }
    return FeatureVector{std::move(values), std::move(layout)};
}

FeatureVector extract_features(const SkeletonSequence& seq, const HistogramConfig& cfg) {
    const SkeletonSequence* ptr = &seq;
    return extract_features(seq, cfg, compute_feature_ranges({ptr, 1}, cfg));
}

FeatureMatrix extract_dataset(std::span<const SkeletonSequence> sequences,
                              const HistogramConfig& cfg, const FeatureRanges& ranges) {
    if (sequences.empty())
        throw Error(ErrorCode::empty_training_set, "no sequences to extract");
    FeatureVector first = extract_features(sequences[0], cfg, ranges);
    FeatureMatrix out;
    out.layout = first.layout;
    out.values.resize(first.values.size(), static_cast<Eigen::Index>(sequences.size()));
    out.values.col(0) = first.values;
    for (size_t i = 1; i < sequences.size(); ++i) {
        FeatureVector fv = extract_features(sequences[i], cfg, ranges);
        if (fv.layout != out.layout)
            throw Error(ErrorCode::layout_mismatch,
                        "sequence " + std::to_string(i) + " produced a different layout");
        out.values.col(static_cast<Eigen::Index>(i)) = fv.values;
    }
    return out;
}

} // namespace fabl
