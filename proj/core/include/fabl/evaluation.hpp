#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fabl/classifier.hpp"
#include "fabl/features.hpp"
#include "fabl/skeleton.hpp"
#include "fabl/solver.hpp"

namespace fabl {

struct ConfusionMatrix {
    Eigen::MatrixXi counts; // rows = true class, cols = predicted
    std::vector<std::string> class_names;

    int classes() const { return static_cast<int>(counts.rows()); }
    long total() const { return counts.sum(); }
    double accuracy() const;
};

struct SplitSpec {
    enum class Mode { subject_wise, k_fold, fixed };

    Mode mode = Mode::subject_wise;
    int k = 5;                    // k_fold only
    std::vector<int> train_ids;   // fixed only, indices into the dataset
    std::vector<int> test_ids;
    std::uint64_t seed = 12345;
};

struct Split {
    std::string name; // held-out subject, fold number, or "fixed"
    std::vector<int> train_indices;
    std::vector<int> test_indices;
};

/// Deterministic folds over instance indices. subject_wise yields one fold
/// per distinct subject (leave-one-subject-out); k_fold shuffles by seed and
/// deals indices round-robin; fixed returns the given ids unchanged.
std::vector<Split> make_splits(std::span<const std::string> subject_ids, int count,
                               const SplitSpec& spec);

struct EvalResult {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

/// accuracy = trace(counts) / total; rows indexed by true label.
EvalResult evaluate(const WeightModel& model, const FeatureMatrix& X,
                    std::span<const int> labels);

struct FoldResult {
    std::string name;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    int train_count = 0;
    int test_count = 0;
    int iterations = 0;
    bool converged = false;
    double final_objective = 0.0;
};

struct CrossValidationResult {
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    ConfusionMatrix pooled; // fold confusion counts summed
};

/// Feature-level cross-validation: splits the columns of train.X, fits on
/// each training fold, scores the held-out fold. Subject ids come from the
/// TrainingSet.
CrossValidationResult cross_validate(const TrainingSet& data, const Hyperparams& hp,
                                     const SplitSpec& spec);

/// Sequence-level cross-validation: histogram ranges are recomputed from each
/// fold's training sequences only, so no test-set statistics leak into
/// extraction.
CrossValidationResult cross_validate(std::span<const SkeletonSequence> sequences,
                                     const std::vector<std::string>& class_names,
                                     const HistogramConfig& cfg, const Hyperparams& hp,
                                     const SplitSpec& spec);

struct AblationCell {
    std::string name; // "full", "feature_only", "part_only", "unregularized"
    Hyperparams hp;
    bool failed = false;
    std::string error;
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
};

struct AblationReport {
    std::vector<AblationCell> cells;
};

/// Runs the four configurations {full, gamma1=0, gamma2=0, both 0} of hp over
/// identical data and splits. A failing cell is marked failed with its error
/// text; the remaining cells still run.
AblationReport run_ablation(const TrainingSet& data, const Hyperparams& hp,
                            const SplitSpec& spec);
AblationReport run_ablation(std::span<const SkeletonSequence> sequences,
                            const std::vector<std::string>& class_names,
                            const HistogramConfig& cfg, const Hyperparams& hp,
                            const SplitSpec& spec);

struct SyntheticSpec {
    int n = 200;
    int block_dim = 4; // dimension of every (modality, joint) block
    int m = 4;
    int s = 10;
    int c = 2;
    std::vector<int> active_joints = {0};
    double noise_sigma = 1.0;
    int subjects = 5; // round-robin subject assignment for subject-wise splits
    std::uint64_t seed = 12345;
};

struct SyntheticDataset {
    TrainingSet data;              // X, one-hot Y, uniform layout, subject ids
    std::vector<int> labels;       // size n
    std::vector<int> active_joints;
};

/// Planted-group data: blocks of active joints carry class-dependent centers
/// plus Gaussian noise, inactive joints carry noise alone. Labels are
/// balanced; identical seeds give identical datasets.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

struct ThroughputResult {
    double predictions_per_second = 0.0;
    double seconds_per_observation = 0.0;
    int n_instances = 0;
    int repeats = 0;
    std::vector<double> run_seconds; // wall-clock per repeat; the median is reported
};

/// Times predict_batch over a seeded random instance matrix. Feature
/// extraction is excluded, matching the paper's per-observation
/// classification timing.
ThroughputResult benchmark_throughput(const WeightModel& model, int n_instances, int repeats,
                                      std::uint64_t seed = 12345);

} // namespace fabl
