#pragma once

#include <vector>

#include <Eigen/Core>

#include "fabl/features.hpp"
#include "fabl/solver.hpp"

namespace fabl {

struct ScoreVector {
    Eigen::VectorXd scores; // length c
    int predicted = 0;      // argmax, lowest index on ties
};

/// Eq. (5): scores_i = (standardized x)^T w_i + b_i, predicted = argmax.
ScoreVector predict_scores(const FeatureVector& x, const WeightModel& model);

/// Element i equals predict_scores(column i) bit-exactly.
std::vector<ScoreVector> predict_batch(const FeatureMatrix& X, const WeightModel& model);

} // namespace fabl
