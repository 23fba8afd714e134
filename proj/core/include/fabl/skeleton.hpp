#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fabl {

/// One skeletal joint position in sensor coordinates (meters assumed).
/// Confidence is carried through loading and serialization but is not used
/// by feature extraction.
struct Joint3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double confidence = 1.0;
};

/// One time sample of a full skeleton: a fixed-order joint list plus the
/// index of the center torso joint all spatial features are relative to.
struct SkeletonFrame {
    std::vector<Joint3D> joints;
    int torso_index = 0;

    int joint_count() const { return static_cast<int>(joints.size()); }
};

/// A time-ordered skeleton recording. Temporal features need a previous
/// frame, so a usable sequence has at least two frames.
struct SkeletonSequence {
    std::vector<SkeletonFrame> frames;
    std::optional<int> label;
    std::optional<std::string> subject_id;

    int frame_count() const { return static_cast<int>(frames.size()); }
};

/// A named joint ordering. The joint order declared here is canonical: the
/// feature layout and every group-norm block derives from it.
///
/// `downsample_map`, when non-empty, makes this model usable as a
/// downsampling target: entry k is the index in the source model that this
/// model's joint k is copied from. It must be total over this model's
/// joints and injective into the source.
struct BodyModel {
    std::string name;
    std::vector<std::string> joint_names;
    int torso_index = 0;
    std::vector<int> downsample_map;
    std::string downsample_source;

    int joint_count() const { return static_cast<int>(joint_names.size()); }
    bool has_downsample_map() const { return !downsample_map.empty(); }
};

/// Checks a sequence against a body model: frame count >= 2, every frame has
/// the model's joint count and torso index, and all coordinates are finite.
/// Returns the (unmodified) input on success, throws fabl::Error otherwise.
const SkeletonSequence& validate_sequence(const SkeletonSequence& seq, const BodyModel& model);

/// Re-indexes a sequence from `source`'s joint ordering to `target`'s using
/// target.downsample_map: output joint k is a copy of source joint
/// downsample_map[k]. Coordinates are copied bit-exactly.
SkeletonSequence downsample_sequence(const SkeletonSequence& seq, const BodyModel& source,
                                     const BodyModel& target);

} // namespace fabl
