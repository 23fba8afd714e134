#include "fabl/importance.hpp"

#include <algorithm>
#include <numeric>

namespace fabl {

namespace {

// Shares are norm / sum(norms); an all-zero family falls back to uniform so
// the report stays well defined.
std::vector<double> to_shares(const std::vector<double>& norms) {
    const double total = std::accumulate(norms.begin(), norms.end(), 0.0);
    std::vector<double> shares(norms.size());
    if (total <= 0.0) {
        std::fill(shares.begin(), shares.end(), 1.0 / static_cast<double>(norms.size()));
        return shares;
    }
    for (size_t i = 0; i < norms.size(); ++i) shares[i] = norms[i] / total;
    return shares;
}

std::vector<int> ranking(const std::vector<double>& norms) {
    std::vector<int> order(norms.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return norms[a] > norms[b]; });
    return order;
}

} // namespace

ImportanceReport compute_importance(const WeightModel& model) {
    const PartitionLayout& layout = model.layout;
    ImportanceReport report;
    report.per_class.reserve(static_cast<size_t>(model.classes()));
    for (int i = 0; i < model.classes(); ++i) {
        ClassImportance entry;
        entry.class_index = i;
        const Eigen::VectorXd w = model.W.col(i);
        entry.joint_norms.resize(layout.joints());
        for (int k = 0; k < layout.joints(); ++k)
            entry.joint_norms[k] = joint_block_norm(w, layout, k);
        entry.modality_norms.resize(layout.modalities());
        for (int q = 0; q < layout.modalities(); ++q)
            entry.modality_norms[q] = modality_block_norm(w, layout, q);
        entry.joint_shares = to_shares(entry.joint_norms);
        entry.modality_shares = to_shares(entry.modality_norms);
        entry.joint_ranking = ranking(entry.joint_norms);
        entry.modality_ranking = ranking(entry.modality_norms);
        report.per_class.push_back(std::move(entry));
    }
    return report;
}

} // namespace fabl
