#include "fabl/data_io.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "fabl/body_model.hpp"
#include "fabl/error.hpp"
#include "text_io.hpp"

namespace fabl {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (start <= line.size()) {
        size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    // Trim surrounding spaces per field.
    for (std::string& field : fields) {
        size_t b = field.find_first_not_of(" \t");
        size_t e = field.find_last_not_of(" \t");
        field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
    }
    return fields;
}

} // namespace

SkeletonSequence load_canonical(const std::string& path) {
    detail::LineReader reader(path);

    auto header = detail::split_fields(reader.require("fabl_skeleton header"));
    if (header.size() != 2 || header[0] != "fabl_skeleton")
        throw Error(ErrorCode::parse_error, reader.where() + ": expected 'fabl_skeleton <version>'");
    if (detail::parse_int(header[1], reader.where()) != 1)
        throw Error(ErrorCode::parse_error, reader.where() + ": unsupported skeleton format version");

    int joints = -1;
    int torso_index = 0;
    long long frames = -1;
    SkeletonSequence seq;

    std::string_view line;
    bool in_header = true;
    while (in_header) {
        line = reader.require("a header field or 'data'");
        auto fields = detail::split_fields(line);
        const std::string_view key = fields[0];
        if (key == "data" && fields.size() == 1) {
            in_header = false;
        } else if (key == "joints" && fields.size() == 2) {
            joints = static_cast<int>(detail::parse_int(fields[1], reader.where()));
        } else if (key == "torso_index" && fields.size() == 2) {
            torso_index = static_cast<int>(detail::parse_int(fields[1], reader.where()));
        } else if (key == "frames" && fields.size() == 2) {
            frames = detail::parse_int(fields[1], reader.where());
        } else if (key == "label" && fields.size() == 2) {
            seq.label = static_cast<int>(detail::parse_int(fields[1], reader.where()));
        } else if (key == "subject" && fields.size() == 2) {
            seq.subject_id = std::string(fields[1]);
        } else {
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": unknown or malformed header field '" +
                            std::string(key) + "'");
        }
    }
    if (joints <= 0 || frames < 0)
        throw Error(ErrorCode::parse_error,
                    reader.path() + ": header must declare positive 'joints' and 'frames'");

    for (long long t = 0; t < frames; ++t) {
        SkeletonFrame frame;
        frame.torso_index = torso_index;
        frame.joints.reserve(static_cast<size_t>(joints));
        for (int j = 0; j < joints; ++j) {
            std::string_view row;
            if (!reader.next(row))
                throw Error(ErrorCode::header_mismatch,
                            reader.path() + ": header declares " + std::to_string(frames) +
                                " frames of " + std::to_string(joints) +
                                " joints but the body ends early");
            auto fields = detail::split_fields(row);
            if (fields.size() != 3 && fields.size() != 4)
                throw Error(ErrorCode::parse_error,
                            reader.where() + ": expected 'x y z [confidence]'");
            Joint3D joint;
            joint.x = detail::parse_double(fields[0], reader.where());
            joint.y = detail::parse_double(fields[1], reader.where());
            joint.z = detail::parse_double(fields[2], reader.where());
            if (fields.size() == 4) joint.confidence = detail::parse_double(fields[3], reader.where());
            frame.joints.push_back(joint);
        }
        seq.frames.push_back(std::move(frame));
    }
    if (reader.next(line))
        throw Error(ErrorCode::header_mismatch,
                    reader.where() + ": trailing data beyond the declared " +
                        std::to_string(frames) + " frames");
    return seq;
}

void save_canonical(const SkeletonSequence& seq, const std::string& path) {
    std::ostringstream out;
    out << "fabl_skeleton 1\n";
    const int joints = seq.frames.empty() ? 0 : seq.frames[0].joint_count();
    const int torso = seq.frames.empty() ? 0 : seq.frames[0].torso_index;
    out << "joints " << joints << "\n";
    out << "torso_index " << torso << "\n";
    out << "frames " << seq.frame_count() << "\n";
    if (seq.label) out << "label " << *seq.label << "\n";
    if (seq.subject_id) out << "subject " << *seq.subject_id << "\n";
    out << "data\n";
    for (const SkeletonFrame& frame : seq.frames) {
        if (frame.joint_count() != joints || frame.torso_index != torso)
            throw Error(ErrorCode::joint_count_mismatch,
                        "cannot save a sequence whose frames disagree on joint count or torso");
        for (const Joint3D& joint : frame.joints) {
            out << detail::format_double(joint.x) << " " << detail::format_double(joint.y) << " "
                << detail::format_double(joint.z) << " " << detail::format_double(joint.confidence)
                << "\n";
        }
    }
    detail::write_file_atomic(path, out.str());
}

SkeletonSequence load_msr_skeleton(const std::string& path, const BodyModel& model) {
    detail::LineReader reader(path);
    const int joints = model.joint_count();

    std::vector<Joint3D> rows;
    std::string_view line;
    while (reader.next(line)) {
        auto fields = detail::split_fields(line);
        // Some distributions prefix each frame with a row-count line.
        if (fields.size() == 1) continue;
        if (fields.size() != 4)
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": expected 4 reals per joint row, got " +
                            std::to_string(fields.size()) + " fields");
        Joint3D joint;
        joint.x = detail::parse_double(fields[0], reader.where());
        joint.y = detail::parse_double(fields[1], reader.where());
        joint.z = detail::parse_double(fields[2], reader.where());
        joint.confidence = detail::parse_double(fields[3], reader.where());
        rows.push_back(joint);
    }
    if (rows.empty())
        throw Error(ErrorCode::parse_error, reader.path() + ": file contains no joint rows");
    if (rows.size() % static_cast<size_t>(joints) != 0)
        throw Error(ErrorCode::frame_size_error,
                    reader.path() + ": " + std::to_string(rows.size()) +
                        " joint rows is not divisible by " + std::to_string(joints) +
                        " joints per frame");

    SkeletonSequence seq;
    const size_t frames = rows.size() / static_cast<size_t>(joints);
    seq.frames.resize(frames);
    for (size_t t = 0; t < frames; ++t) {
        SkeletonFrame& frame = seq.frames[t];
        frame.torso_index = model.torso_index;
        frame.joints.assign(rows.begin() + static_cast<long>(t) * joints,
                            rows.begin() + static_cast<long>(t + 1) * joints);
    }
    return seq;
}

SkeletonSequence load_cad60(const std::string& path, const BodyModel& model) {
    detail::LineReader reader(path);
    if (model.joint_count() != 15)
        throw Error(ErrorCode::invalid_body_model,
                    "CAD-60 loader needs a 15-joint model, got " +
                        std::to_string(model.joint_count()));

    // Per line: frame id, 11 oriented joints of 14 fields each
    // (9 orientation + orientation confidence + x y z + position confidence),
    // 4 position-only joints of 4 fields, and a trailing comma.
    constexpr int kOriented = 11;
    constexpr int kPositionOnly = 4;
    constexpr int kFields = 1 + kOriented * 14 + kPositionOnly * 4 + 1;

    SkeletonSequence seq;
    std::string_view line;
    while (reader.next(line)) {
        if (line == "END") break;
        const std::vector<std::string> fields = split_csv(line);
        if (static_cast<int>(fields.size()) != kFields)
            throw Error(ErrorCode::frame_size_error,
                        reader.where() + ": expected " + std::to_string(kFields) +
                            " comma-separated fields, got " + std::to_string(fields.size()));
        SkeletonFrame frame;
        frame.torso_index = model.torso_index;
        frame.joints.resize(15);
        size_t f = 1; // skip the frame id
        for (int j = 0; j < kOriented; ++j) {
            f += 10; // orientation matrix and its confidence are discarded
            Joint3D& joint = frame.joints[static_cast<size_t>(j)];
            joint.x = detail::parse_double(fields[f++], reader.where()) / 1000.0;
            joint.y = detail::parse_double(fields[f++], reader.where()) / 1000.0;
            joint.z = detail::parse_double(fields[f++], reader.where()) / 1000.0;
            joint.confidence = detail::parse_double(fields[f++], reader.where());
        }
        for (int j = 0; j < kPositionOnly; ++j) {
            Joint3D& joint = frame.joints[static_cast<size_t>(kOriented + j)];
            joint.x = detail::parse_double(fields[f++], reader.where()) / 1000.0;
            joint.y = detail::parse_double(fields[f++], reader.where()) / 1000.0;
            joint.z = detail::parse_double(fields[f++], reader.where()) / 1000.0;
            joint.confidence = detail::parse_double(fields[f++], reader.where());
        }
        seq.frames.push_back(std::move(frame));
    }
    if (seq.frames.empty())
        throw Error(ErrorCode::parse_error, reader.path() + ": file contains no frames");
    return seq;
}

DatasetManifest load_manifest(const std::string& path) {
    detail::LineReader reader(path);

    auto header = detail::split_fields(reader.require("fabl_manifest header"));
    if (header.size() != 2 || header[0] != "fabl_manifest")
        throw Error(ErrorCode::parse_error, reader.where() + ": expected 'fabl_manifest <version>'");
    if (detail::parse_int(header[1], reader.where()) != 1)
        throw Error(ErrorCode::parse_error, reader.where() + ": unsupported manifest format version");

    DatasetManifest manifest;
    std::string root_field;
    std::string_view line;
    while (reader.next(line)) {
        auto fields = detail::split_fields(line);
        const std::string_view key = fields[0];
        if (key == "format" && fields.size() == 2) {
            manifest.format = std::string(fields[1]);
        } else if (key == "body_model" && fields.size() == 2) {
            manifest.body_model = std::string(fields[1]);
        } else if (key == "root" && fields.size() == 2) {
            root_field = std::string(fields[1]);
        } else if (key == "entry" && fields.size() == 4) {
            manifest.entries.push_back(ManifestEntry{std::string(fields[1]), std::string(fields[2]),
                                                     std::string(fields[3])});
        } else {
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": unknown or malformed field '" + std::string(key) + "'");
        }
    }

    if (manifest.format != "canonical" && manifest.format != "msr_skeleton" &&
        manifest.format != "cad60")
        throw Error(ErrorCode::parse_error,
                    path + ": format must be canonical, msr_skeleton, or cad60");
    if (manifest.body_model.empty())
        throw Error(ErrorCode::parse_error, path + ": missing 'body_model'");
    if (manifest.entries.empty())
        throw Error(ErrorCode::parse_error, path + ": manifest lists no entries");

    const fs::path base = fs::path(path).parent_path();
    fs::path root = root_field.empty() ? base : fs::path(root_field);
    if (root.is_relative()) root = base / root;
    manifest.root = root.string();
    return manifest;
}

LoadedDataset load_dataset(const DatasetManifest& manifest) {
    LoadedDataset out;
    out.model = resolve_body_model(manifest.body_model, manifest.root);

    // Class ids follow lexicographic order over the original label strings.
    std::map<std::string, int> label_ids;
    for (const ManifestEntry& entry : manifest.entries) label_ids[entry.label] = 0;
    for (auto& [label, id] : label_ids) {
        id = static_cast<int>(out.class_names.size());
        out.class_names.push_back(label);
    }

    out.sequences.reserve(manifest.entries.size());
    for (const ManifestEntry& entry : manifest.entries) {
        const std::string file = (fs::path(manifest.root) / entry.file).string();
        try {
            SkeletonSequence seq;
            if (manifest.format == "canonical")
                seq = load_canonical(file);
            else if (manifest.format == "msr_skeleton")
                seq = load_msr_skeleton(file, out.model);
            else
                seq = load_cad60(file, out.model);
            seq.label = label_ids.at(entry.label);
            if (!entry.subject_id.empty()) seq.subject_id = entry.subject_id;
            validate_sequence(seq, out.model);
            out.sequences.push_back(std::move(seq));
        } catch (const Error& err) {
            throw Error(err.code(), entry.file + ": " + err.message());
        }
    }
    return out;
}

LabelMatrix build_label_matrix(const std::vector<int>& labels, int c,
                               std::vector<std::string> class_names) {
    if (c < 1)
        throw Error(ErrorCode::invalid_argument, "class count must be >= 1");
    if (!class_names.empty() && static_cast<int>(class_names.size()) != c)
        throw Error(ErrorCode::shape_mismatch, "class_names length does not match class count");
    LabelMatrix out;
    out.Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), c);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= c)
            throw Error(ErrorCode::out_of_range_label,
                        "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " out of range [0, " + std::to_string(c) + ")");
        out.Y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    if (class_names.empty())
        for (int j = 0; j < c; ++j) class_names.push_back(std::to_string(j));
    out.class_names = std::move(class_names);
    return out;
}

} // namespace fabl
