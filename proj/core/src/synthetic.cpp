#include <random>
#include <string>

#include "fabl/error.hpp"
#include "fabl/evaluation.hpp"

namespace fabl {

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 1 || spec.block_dim < 1 || spec.m < 1 || spec.s < 1 || spec.c < 1 ||
        spec.subjects < 1)
        throw Error(ErrorCode::invalid_argument, "synthetic spec dimensions must be positive");
    if (spec.noise_sigma < 0.0)
        throw Error(ErrorCode::invalid_argument, "noise_sigma must be >= 0");
    if (spec.n < spec.c)
        throw Error(ErrorCode::invalid_argument, "need at least one instance per class");
    if (spec.active_joints.empty())
        throw Error(ErrorCode::invalid_argument, "at least one active joint is required");
    for (int k : spec.active_joints)
        if (k < 0 || k >= spec.s)
            throw Error(ErrorCode::index_out_of_range,
                        "active joint " + std::to_string(k) + " out of range [0, " +
                            std::to_string(spec.s) + ")");

    PartitionLayout layout = PartitionLayout::uniform(spec.m, spec.s, spec.block_dim);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Class centers live only in the active joints' blocks. The amplitude is
    // fixed; noise_sigma sets the signal-to-noise ratio.
    constexpr double kCenterAmplitude = 3.0;
    std::vector<bool> active(spec.s, false);
    for (int k : spec.active_joints) active[k] = true;

    // centers[class](q-block entries for each active joint, layout order)
    const int active_dim = static_cast<int>(spec.active_joints.size()) * spec.m * spec.block_dim;
    Eigen::MatrixXd centers(active_dim, spec.c);
    for (int j = 0; j < spec.c; ++j)
        for (int i = 0; i < active_dim; ++i)
            centers(i, j) = kCenterAmplitude * gauss(rng);

    SyntheticDataset out;
    out.active_joints = spec.active_joints;
    out.labels.resize(spec.n);

    TrainingSet& data = out.data;
    data.layout = layout;
    data.X.resize(layout.dim(), spec.n);
    data.Y = Eigen::MatrixXd::Zero(spec.n, spec.c);
    data.subject_ids.resize(spec.n);
    for (int j = 0; j < spec.c; ++j)
        data.class_names.push_back("class_" + std::to_string(j));

    for (int i = 0; i < spec.n; ++i) {
        const int label = i % spec.c;
        out.labels[i] = label;
        data.Y(i, label) = 1.0;
        // Grouping instances in runs of c keeps every class present for
        // every subject once n >= c * subjects.
        data.subject_ids[i] = "subj_" + std::to_string((i / spec.c) % spec.subjects);

        int center_row = 0;
        for (int q = 0; q < spec.m; ++q) {
            for (int r = 0; r < spec.s; ++r) {
                const int offset = layout.block_offset(q, r);
                for (int e = 0; e < spec.block_dim; ++e) {
                    double value = spec.noise_sigma * gauss(rng);
                    if (active[r]) value += centers(center_row + e, label);
                    data.X(offset + e, i) = value;
                }
                if (active[r]) center_row += spec.block_dim;
            }
        }
    }
    return out;
}

} // namespace fabl
