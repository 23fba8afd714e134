#pragma once

#include <string>
#include <vector>

#include "fabl/features.hpp"
#include "fabl/solver.hpp"

namespace fabl {

/// Versioned text serialization (format docs/formats.md). Doubles are written
/// with shortest round-trip precision, so save/load is value-exact. Writes go
/// to a temp file in the target directory and are renamed into place.
void save_model(const WeightModel& model, const std::string& path);
WeightModel load_model(const std::string& path);

/// Extracted design matrix with everything needed to train or score:
/// columns of X, per-column labels and subject ids, the frozen ranges and
/// histogram config the columns were produced under.
struct FeatureFile {
    FeatureMatrix features;
    std::vector<int> labels;              // -1 where unlabeled
    std::vector<std::string> subject_ids; // empty string where absent
    std::vector<std::string> class_names;
    FeatureRanges ranges;
    HistogramConfig config;
    std::string body_model_name;
};

void save_features(const FeatureFile& file, const std::string& path);
FeatureFile load_features(const std::string& path);

} // namespace fabl
