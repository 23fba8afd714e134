#include "fabl/body_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fabl/error.hpp"
#include "text_io.hpp"

namespace fabl {
namespace body_models {

// Joint orders are canonical: the feature layout and every group norm index
// off them. generic15 is the paper's 15-part reduced body model; the order
// below is this artifact's declared convention.
BodyModel generic15() {
    BodyModel m;
    m.name = "generic15";
    m.joint_names = {"head",       "neck",       "torso",     "left_shoulder", "left_elbow",
                     "left_hand",  "right_shoulder", "right_elbow", "right_hand", "left_hip",
                     "left_knee",  "left_foot",  "right_hip", "right_knee",    "right_foot"};
    m.torso_index = 2;
    return m;
}

// Kinect SDK v1 ordering used by the MSR Action3D skeleton files. The torso
// center is the spine joint; this is a documented artifact choice, the
// source data does not name one.
BodyModel msr20() {
    BodyModel m;
    m.name = "msr20";
    m.joint_names = {"hip_center",     "spine",          "shoulder_center", "head",
                     "left_shoulder",  "left_elbow",     "left_wrist",      "left_hand",
                     "right_shoulder", "right_elbow",    "right_wrist",     "right_hand",
                     "left_hip",       "left_knee",      "left_ankle",      "left_foot",
                     "right_hip",      "right_knee",     "right_ankle",     "right_foot"};
    m.torso_index = 1;
    return m;
}

// CAD-60 file ordering (head..right_knee carry orientation records, the
// last four are position-only).
BodyModel cad60() {
    BodyModel m;
    m.name = "cad60";
    m.joint_names = {"head",          "neck",        "torso",      "left_shoulder",
                     "left_elbow",    "right_shoulder", "right_elbow", "left_hip",
                     "left_knee",     "right_hip",   "right_knee", "left_hand",
                     "right_hand",    "left_foot",   "right_foot"};
    m.torso_index = 2;
    return m;
}

BodyModel generic15_from_msr20() {
    BodyModel m = generic15();
    m.name = "generic15-from-msr20";
    m.downsample_source = "msr20";
    m.downsample_map = {3, 2, 1, 4, 5, 7, 8, 9, 11, 12, 13, 15, 16, 17, 19};
    return m;
}

BodyModel generic15_from_cad60() {
    BodyModel m = generic15();
    m.name = "generic15-from-cad60";
    m.downsample_source = "cad60";
    m.downsample_map = {0, 1, 2, 3, 4, 11, 5, 6, 12, 7, 8, 13, 9, 10, 14};
    return m;
}

std::optional<BodyModel> find_builtin(const std::string& name) {
    if (name == "generic15") return generic15();
    if (name == "msr20") return msr20();
    if (name == "cad60") return cad60();
    if (name == "generic15-from-msr20") return generic15_from_msr20();
    if (name == "generic15-from-cad60") return generic15_from_cad60();
    return std::nullopt;
}

} // namespace body_models

void validate_body_model(const BodyModel& model) {
    if (model.joint_names.empty())
        throw Error(ErrorCode::invalid_body_model, "model '" + model.name + "' has no joints");
    std::set<std::string> seen;
    for (const std::string& joint : model.joint_names) {
        if (joint.empty())
            throw Error(ErrorCode::invalid_body_model,
                        "model '" + model.name + "' has an empty joint name");
        if (!seen.insert(joint).second)
            throw Error(ErrorCode::invalid_body_model,
                        "model '" + model.name + "' repeats joint name '" + joint + "'");
    }
    if (model.torso_index < 0 || model.torso_index >= model.joint_count())
        throw Error(ErrorCode::invalid_body_model,
                    "model '" + model.name + "' torso index " +
                        std::to_string(model.torso_index) + " out of range");
    if (model.has_downsample_map()) {
        if (static_cast<int>(model.downsample_map.size()) != model.joint_count())
            throw Error(ErrorCode::invalid_body_model,
                        "model '" + model.name + "' downsample map covers " +
                            std::to_string(model.downsample_map.size()) + " joints, model has " +
                            std::to_string(model.joint_count()));
        std::set<int> targets;
        for (int idx : model.downsample_map) {
            if (idx < 0)
                throw Error(ErrorCode::invalid_body_model,
                            "model '" + model.name + "' downsample map has a negative entry");
            if (!targets.insert(idx).second)
                throw Error(ErrorCode::invalid_body_model,
                            "model '" + model.name + "' downsample map repeats source joint " +
                                std::to_string(idx));
        }
    }
}

BodyModel load_body_model(const std::filesystem::path& path) {
    detail::LineReader reader(path);

    auto header = detail::split_fields(reader.require("fabl_body_model header"));
    if (header.size() != 2 || header[0] != "fabl_body_model")
        throw Error(ErrorCode::parse_error, reader.where() + ": expected 'fabl_body_model <version>'");
    const long long version = detail::parse_int(header[1], reader.where());
    if (version != 1)
        throw Error(ErrorCode::parse_error,
                    reader.where() + ": unsupported body model format version " +
                        std::to_string(version));

    BodyModel model;
    int declared_joints = -1;
    std::string_view line;
    while (reader.next(line)) {
        auto fields = detail::split_fields(line);
        const std::string_view key = fields[0];
        if (key == "name" && fields.size() == 2) {
            model.name = std::string(fields[1]);
        } else if (key == "torso_index" && fields.size() == 2) {
            model.torso_index = static_cast<int>(detail::parse_int(fields[1], reader.where()));
        } else if (key == "joints" && fields.size() == 2) {
            declared_joints = static_cast<int>(detail::parse_int(fields[1], reader.where()));
            if (declared_joints <= 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": joint count must be positive");
            for (int i = 0; i < declared_joints; ++i) {
                auto joint_fields = detail::split_fields(reader.require("a joint name"));
                if (joint_fields.size() != 1)
                    throw Error(ErrorCode::parse_error,
                                reader.where() + ": expected one joint name per line");
                model.joint_names.emplace_back(joint_fields[0]);
            }
        } else if (key == "downsample_source" && fields.size() == 2) {
            model.downsample_source = std::string(fields[1]);
        } else if (key == "downsample_map" && fields.size() >= 2) {
            for (size_t i = 1; i < fields.size(); ++i)
                model.downsample_map.push_back(
                    static_cast<int>(detail::parse_int(fields[i], reader.where())));
        } else {
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": unknown or malformed field '" + std::string(key) + "'");
        }
    }
    if (declared_joints < 0)
        throw Error(ErrorCode::parse_error, reader.path() + ": missing 'joints' section");
    validate_body_model(model);
    return model;
}

void save_body_model(const BodyModel& model, const std::filesystem::path& path) {
    validate_body_model(model);
    std::ostringstream out;
    out << "fabl_body_model 1\n";
    out << "name " << model.name << "\n";
    out << "torso_index " << model.torso_index << "\n";
    out << "joints " << model.joint_count() << "\n";
    for (const std::string& joint : model.joint_names)
        out << joint << "\n";
    if (!model.downsample_source.empty())
        out << "downsample_source " << model.downsample_source << "\n";
    if (model.has_downsample_map()) {
        out << "downsample_map";
        for (int idx : model.downsample_map)
            out << " " << idx;
        out << "\n";
    }
    detail::write_file_atomic(path, out.str());
}

BodyModel resolve_body_model(const std::string& reference, const std::filesystem::path& base_dir) {
    if (auto builtin = body_models::find_builtin(reference))
        return *builtin;
    std::filesystem::path path(reference);
    if (path.is_relative() && !base_dir.empty())
        path = base_dir / path;
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::io_error,
                    "body model '" + reference + "' is neither a built-in name nor an existing file");
    return load_body_model(path);
}

} // namespace fabl
