#include "fabl/skeleton.hpp"

#include <cmath>
#include <string>

#include "fabl/error.hpp"

namespace fabl {

const SkeletonSequence& validate_sequence(const SkeletonSequence& seq, const BodyModel& model) {
    if (seq.frame_count() < 2)
        throw Error(ErrorCode::too_short,
                    "sequence has " + std::to_string(seq.frame_count()) +
                        " frames, need at least 2");
    const int s = model.joint_count();
    for (int i = 0; i < seq.frame_count(); ++i) {
        const SkeletonFrame& frame = seq.frames[i];
        if (frame.joint_count() != s)
            throw Error(ErrorCode::joint_count_mismatch,
                        "frame " + std::to_string(i) + " has " +
                            std::to_string(frame.joint_count()) + " joints, model '" +
                            model.name + "' declares " + std::to_string(s));
        if (frame.torso_index < 0 || frame.torso_index >= s)
            throw Error(ErrorCode::index_out_of_range,
                        "frame " + std::to_string(i) + " torso index " +
                            std::to_string(frame.torso_index) + " out of range [0, " +
                            std::to_string(s) + ")");
        for (int j = 0; j < s; ++j) {
            const Joint3D& joint = frame.joints[j];
            if (!std::isfinite(joint.x) || !std::isfinite(joint.y) || !std::isfinite(joint.z))
                throw Error(ErrorCode::non_finite_coordinate,
                            "frame " + std::to_string(i) + " joint " + std::to_string(j) +
                                " has a non-finite coordinate");
        }
    }
    return seq;
}

SkeletonSequence downsample_sequence(const SkeletonSequence& seq, const BodyModel& source,
                                     const BodyModel& target) {
    if (!target.has_downsample_map())
        throw Error(ErrorCode::missing_mapping,
                    "target model '" + target.name + "' has no downsample map");
    const auto& map = target.downsample_map;
    if (static_cast<int>(map.size()) != target.joint_count())
        throw Error(ErrorCode::missing_mapping,
                    "target model '" + target.name + "' map covers " +
                        std::to_string(map.size()) + " joints, model has " +
                        std::to_string(target.joint_count()));
    for (int k = 0; k < static_cast<int>(map.size()); ++k) {
        if (map[k] < 0 || map[k] >= source.joint_count())
            throw Error(ErrorCode::index_out_of_range,
                        "downsample map entry " + std::to_string(k) + " references source joint " +
                            std::to_string(map[k]) + ", source '" + source.name + "' has " +
                            std::to_string(source.joint_count()));
    }

    SkeletonSequence out;
    out.label = seq.label;
    out.subject_id = seq.subject_id;
    out.frames.reserve(seq.frames.size());
    for (const SkeletonFrame& frame : seq.frames) {
        if (frame.joint_count() != source.joint_count())
            throw Error(ErrorCode::joint_count_mismatch,
                        "frame has " + std::to_string(frame.joint_count()) +
                            " joints, source model '" + source.name + "' declares " +
                            std::to_string(source.joint_count()));
        SkeletonFrame reduced;
        reduced.torso_index = target.torso_index;
        reduced.joints.reserve(map.size());
        for (int src : map)
            reduced.joints.push_back(frame.joints[src]);
        out.frames.push_back(std::move(reduced));
    }
    return out;
}

} // namespace fabl
