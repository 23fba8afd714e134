#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fabl/error.hpp"
#include "fabl/features.hpp"
#include "fabl/layout.hpp"

namespace fabl {

struct TrainingSet {
    Eigen::MatrixXd X; // d x n, columns are instances
    Eigen::MatrixXd Y; // n x c, one-hot rows
    PartitionLayout layout;
    std::vector<std::string> class_names;             // optional, size c when present
    std::vector<std::string> subject_ids;             // optional, size n when present
    std::optional<FeatureRanges> feature_ranges;      // ranges the columns were extracted under
    std::optional<HistogramConfig> histogram_config;

    int dim() const { return static_cast<int>(X.rows()); }
    int count() const { return static_cast<int>(X.cols()); }
    int classes() const { return static_cast<int>(Y.cols()); }
};

/// Throws EmptyTrainingSet / InvalidTrainingSet / ShapeMismatch when the
/// TrainingSet invariants fail (one-hot rows, every class represented,
/// X/Y/layout shape agreement).
void validate_training_set(const TrainingSet& train);

struct Hyperparams {
    double gamma1 = 0.1;
    double gamma2 = 0.1;
    double epsilon = 1e-8;    // group-norm smoothing floor
    double tol = 1e-6;        // relative-objective convergence threshold
    int max_iter = 100;
    double init_ridge = 1e-8; // tiny ridge for the initialization solve
    bool standardize = true;  // center and unit-scale X before training
    int threads = 1;          // per-class solve parallelism
};

void validate_hyperparams(const Hyperparams& hp);

/// Per-dimension affine transform applied to feature vectors before scoring.
/// Identity when empty (standardize = false).
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale; // multiplicative: x_std = (x - mean) * scale

    bool empty() const { return mean.size() == 0; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

struct WeightModel {
    Eigen::MatrixXd W; // d x c
    Eigen::VectorXd b; // length c
    PartitionLayout layout;
    std::vector<std::string> class_names;
    Standardization standardization;
    FeatureRanges feature_ranges;
    HistogramConfig histogram_config;
    std::string body_model_name;
    Hyperparams hyperparams;

    int dim() const { return static_cast<int>(W.rows()); }
    int classes() const { return static_cast<int>(W.cols()); }
};

struct FitTrace {
    std::vector<double> objective_per_iter;
    std::vector<double> m1_per_iter;
    std::vector<double> j1_per_iter;
    int iterations = 0;
    bool converged = false;
};

/// Diagonal reweighting matrices for one class, stored as their diagonals.
struct GroupWeights {
    Eigen::VectorXd diag_m; // modality-block weights, entry j in block (q,.) is 1/(2 max(||w^q||, eps))
    Eigen::VectorXd diag_j; // joint-block weights over gathered joint groups
};

/// b_j = (count of class j) / n.
Eigen::VectorXd compute_intercept(const Eigen::MatrixXd& Y);

/// l2 norm of class column i's modality-q block (all joints of modality q).
double modality_block_norm(const Eigen::VectorXd& w, const PartitionLayout& layout, int q);
/// l2 norm of class column i's joint-k gathered block (joint k across all modalities).
double joint_block_norm(const Eigen::VectorXd& w, const PartitionLayout& layout, int k);

double m1_norm(const Eigen::MatrixXd& W, const PartitionLayout& layout);
double j1_norm(const Eigen::MatrixXd& W, const PartitionLayout& layout);

/// Eq. (4): ||X^T W + 1 b^T - Y||_F^2 + gamma1 ||W||_M1 + gamma2 ||W||_J1.
double objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W,
                 const Eigen::VectorXd& b, double gamma1, double gamma2,
                 const PartitionLayout& layout);

GroupWeights build_group_weights(const Eigen::VectorXd& w, const PartitionLayout& layout,
                                 double epsilon);

/// Solves (X X^T + gamma1 diag_m + gamma2 diag_j) w = X (y - b_i 1_n) by SPD
/// factorization; uses the n x n dual form when n < d and the combined
/// diagonal is strictly positive. Residual is verified against
/// 1e-8 (1 + ||rhs||) with one refinement pass, then a ridge retry, before
/// SingularSystem is raised.
Eigen::VectorXd solve_class_system(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_i,
                                   double b_i, const Eigen::VectorXd& diag_m,
                                   const Eigen::VectorXd& diag_j, double gamma1, double gamma2);

/// Algorithm 1 Step 1: W(1) = (X X^T + init_ridge I)^-1 X (Y - 1 b^T).
Eigen::MatrixXd ridge_init(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const Eigen::VectorXd& b, double init_ridge);

struct FitResult {
    WeightModel model;
    FitTrace trace;
};

/// Raised when training aborts mid-run; carries the trace up to the last
/// completed iteration for post-mortem reports.
class TrainError : public Error {
  public:
    TrainError(ErrorCode code, const std::string& message, FitTrace trace)
        : Error(code, message), trace_(std::move(trace)) {}

    const FitTrace& trace() const { return trace_; }

  private:
    FitTrace trace_;
};

/// Algorithm 1. Standardizes X when hp.standardize, fixes b = Y^T 1 / n,
/// ridge-initializes W, then alternates group-weight rebuilds with c
/// independent SPD solves until the relative objective change drops below
/// hp.tol or hp.max_iter is reached. With gamma1 = gamma2 = 0 the
/// initialization already minimizes Eq. (4) and is returned directly.
FitResult fabl_train(const TrainingSet& train, const Hyperparams& hp);

} // namespace fabl
