#pragma once

#include <vector>

#include "fabl/solver.hpp"

namespace fabl {

/// Group-norm attribution for one class: per-joint J1 block norms and
/// per-modality M1 block norms with their normalized shares. When every
/// norm in a family is zero the shares fall back to uniform.
struct ClassImportance {
    int class_index = 0;
    std::vector<double> joint_norms;      // size s, ||w~_i^k||_2
    std::vector<double> joint_shares;     // sums to 1
    std::vector<int> joint_ranking;       // joint indices, descending norm, ties by index
    std::vector<double> modality_norms;   // size m, ||w_i^q||_2
    std::vector<double> modality_shares;  // sums to 1
    std::vector<int> modality_ranking;
};

struct ImportanceReport {
    std::vector<ClassImportance> per_class;
};

ImportanceReport compute_importance(const WeightModel& model);

} // namespace fabl
