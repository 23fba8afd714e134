#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "fabl/skeleton.hpp"

namespace fabl {

struct ManifestEntry {
    std::string file; // relative to the manifest's root
    std::string label;
    std::string subject_id;
};

struct DatasetManifest {
    std::string root;       // resolved against the manifest file's directory
    std::string format;     // canonical | msr_skeleton | cad60
    std::string body_model; // built-in name or path to a model file
    std::vector<ManifestEntry> entries;
};

DatasetManifest load_manifest(const std::string& path);

struct LoadedDataset {
    std::vector<SkeletonSequence> sequences; // labels and subject ids filled in
    std::vector<std::string> class_names;    // lexicographic over original label strings
    BodyModel model;
};

/// Loads and validates every entry. Labels are remapped to 0..c-1 in
/// lexicographic class-name order. Loader errors are rethrown with the
/// offending file name prepended.
LoadedDataset load_dataset(const DatasetManifest& manifest);

SkeletonSequence load_canonical(const std::string& path);
void save_canonical(const SkeletonSequence& seq, const std::string& path);

/// MSR Action3D world-coordinate skeleton text: rows of "x y z confidence",
/// model.joint_count() rows per frame, no separators. Single-field lines
/// (per-frame row counts in some distributions) are skipped.
SkeletonSequence load_msr_skeleton(const std::string& path, const BodyModel& model);

/// CAD-60 CSV rows: frame id, then per joint 3x3 orientation + confidence
/// (discarded) and position x,y,z + confidence for joints 1..11, position-only
/// for joints 12..15, terminated by a trailing comma.
SkeletonSequence load_cad60(const std::string& path, const BodyModel& model);

struct LabelMatrix {
    Eigen::MatrixXd Y; // n x c one-hot
    std::vector<std::string> class_names;
};

LabelMatrix build_label_matrix(const std::vector<int>& labels, int c,
                               std::vector<std::string> class_names = {});

} // namespace fabl
