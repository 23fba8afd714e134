#include "fabl/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "fabl/error.hpp"

namespace fabl {

namespace {

std::vector<int> argmax_labels(const Eigen::MatrixXd& Y) {
    std::vector<int> labels(static_cast<size_t>(Y.rows()));
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        Eigen::Index best = 0;
        Y.row(i).maxCoeff(&best);
        labels[static_cast<size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

void check_indices(const std::vector<int>& ids, int count, const std::string& what) {
    for (int id : ids)
        if (id < 0 || id >= count)
            throw Error(ErrorCode::index_out_of_range,
                        what + " index " + std::to_string(id) + " out of range [0, " +
                            std::to_string(count) + ")");
}

TrainingSet subset_training_set(const TrainingSet& data, const std::vector<int>& indices) {
    TrainingSet sub;
    sub.layout = data.layout;
    sub.class_names = data.class_names;
    sub.feature_ranges = data.feature_ranges;
    sub.histogram_config = data.histogram_config;
    sub.X.resize(data.X.rows(), static_cast<Eigen::Index>(indices.size()));
    sub.Y.resize(static_cast<Eigen::Index>(indices.size()), data.Y.cols());
    for (size_t i = 0; i < indices.size(); ++i) {
        sub.X.col(static_cast<Eigen::Index>(i)) = data.X.col(indices[i]);
        sub.Y.row(static_cast<Eigen::Index>(i)) = data.Y.row(indices[i]);
    }
    if (!data.subject_ids.empty())
        for (int idx : indices) sub.subject_ids.push_back(data.subject_ids[static_cast<size_t>(idx)]);
    return sub;
}

FoldResult run_fold(const TrainingSet& data, const std::vector<int>& labels,
                    const Hyperparams& hp, const Split& split) {
    const TrainingSet train = subset_training_set(data, split.train_indices);
    const FitResult fit = fabl_train(train, hp);

    FeatureMatrix test;
    test.layout = data.layout;
    test.values.resize(data.X.rows(), static_cast<Eigen::Index>(split.test_indices.size()));
    std::vector<int> test_labels;
    test_labels.reserve(split.test_indices.size());
    for (size_t i = 0; i < split.test_indices.size(); ++i) {
        test.values.col(static_cast<Eigen::Index>(i)) = data.X.col(split.test_indices[i]);
        test_labels.push_back(labels[static_cast<size_t>(split.test_indices[i])]);
    }
    const EvalResult eval = evaluate(fit.model, test, test_labels);

    FoldResult fold;
    fold.name = split.name;
    fold.accuracy = eval.accuracy;
    fold.confusion = eval.confusion;
    fold.train_count = static_cast<int>(split.train_indices.size());
    fold.test_count = static_cast<int>(split.test_indices.size());
    fold.iterations = fit.trace.iterations;
    fold.converged = fit.trace.converged;
    fold.final_objective = fit.trace.objective_per_iter.back();
    return fold;
}

CrossValidationResult assemble(std::vector<FoldResult> folds,
                               const std::vector<std::string>& class_names, int c) {
    CrossValidationResult result;
    result.pooled.counts = Eigen::MatrixXi::Zero(c, c);
    result.pooled.class_names = class_names;
    double sum = 0.0;
    for (FoldResult& fold : folds) {
        result.pooled.counts += fold.confusion.counts;
        sum += fold.accuracy;
    }
    result.mean_accuracy = folds.empty() ? 0.0 : sum / static_cast<double>(folds.size());
    result.folds = std::move(folds);
    return result;
}

Hyperparams with_gammas(Hyperparams hp, double gamma1, double gamma2) {
    hp.gamma1 = gamma1;
    hp.gamma2 = gamma2;
    return hp;
}

template <typename RunCell>
AblationReport run_ablation_cells(const Hyperparams& hp, RunCell&& run_cell) {
    // Cell names follow the paper's table rows: feature_only keeps only the
    // modality regularizer (gamma2 = 0), part_only keeps only the joint
    // regularizer (gamma1 = 0).
    const std::pair<const char*, Hyperparams> configs[] = {
        {"full", hp},
        {"feature_only", with_gammas(hp, hp.gamma1, 0.0)},
        {"part_only", with_gammas(hp, 0.0, hp.gamma2)},
        {"unregularized", with_gammas(hp, 0.0, 0.0)},
    };
    AblationReport report;
    for (const auto& [name, cell_hp] : configs) {
        AblationCell cell;
        cell.name = name;
        cell.hp = cell_hp;
        try {
            CrossValidationResult cv = run_cell(cell_hp);
            cell.mean_accuracy = cv.mean_accuracy;
            for (const FoldResult& fold : cv.folds) cell.fold_accuracies.push_back(fold.accuracy);
        } catch (const std::exception& err) {
            cell.failed = true;
            cell.error = err.what();
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

} // namespace

double ConfusionMatrix::accuracy() const {
    const long all = total();
    if (all == 0) return 0.0;
    return static_cast<double>(counts.diagonal().sum()) / static_cast<double>(all);
}

std::vector<Split> make_splits(std::span<const std::string> subject_ids, int count,
                               const SplitSpec& spec) {
    if (count < 1)
        throw Error(ErrorCode::empty_test_set, "cannot split an empty dataset");

    switch (spec.mode) {
    case SplitSpec::Mode::fixed: {
        check_indices(spec.train_ids, count, "fixed train");
        check_indices(spec.test_ids, count, "fixed test");
        Split split;
        split.name = "fixed";
        split.train_indices = spec.train_ids;
        split.test_indices = spec.test_ids;
        return {split};
    }
    case SplitSpec::Mode::k_fold: {
        if (spec.k < 2)
            throw Error(ErrorCode::invalid_argument, "k_fold needs k >= 2");
        if (spec.k > count)
            throw Error(ErrorCode::invalid_argument,
                        "k_fold with k=" + std::to_string(spec.k) + " but only " +
                            std::to_string(count) + " instances");
        std::vector<int> order(static_cast<size_t>(count));
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(spec.seed);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Split> splits(static_cast<size_t>(spec.k));
        for (int f = 0; f < spec.k; ++f) splits[static_cast<size_t>(f)].name = "fold_" + std::to_string(f);
        for (int i = 0; i < count; ++i) {
            const int fold = i % spec.k;
            for (int f = 0; f < spec.k; ++f) {
                auto& split = splits[static_cast<size_t>(f)];
                (f == fold ? split.test_indices : split.train_indices).push_back(order[static_cast<size_t>(i)]);
            }
        }
        // Sorted index lists make fold contents independent of the dealing order.
        for (Split& split : splits) {
            std::sort(split.train_indices.begin(), split.train_indices.end());
            std::sort(split.test_indices.begin(), split.test_indices.end());
        }
        return splits;
    }
    case SplitSpec::Mode::subject_wise: {
        if (static_cast<int>(subject_ids.size()) != count)
            throw Error(ErrorCode::missing_subject_ids,
                        "subject-wise split needs a subject id for every instance");
        for (const std::string& id : subject_ids)
            if (id.empty())
                throw Error(ErrorCode::missing_subject_ids,
                            "subject-wise split found an instance without a subject id");
        // One fold per distinct subject, in lexicographic order (leave one
        // subject out).
        std::map<std::string, std::vector<int>> by_subject;
        for (int i = 0; i < count; ++i) by_subject[subject_ids[static_cast<size_t>(i)]].push_back(i);
        if (by_subject.size() < 2)
            throw Error(ErrorCode::single_subject,
                        "subject-wise split needs at least 2 distinct subjects");
        std::vector<Split> splits;
        for (const auto& [subject, test_indices] : by_subject) {
            Split split;
            split.name = subject;
            split.test_indices = test_indices;
            for (int i = 0; i < count; ++i)
                if (subject_ids[static_cast<size_t>(i)] != subject) split.train_indices.push_back(i);
            splits.push_back(std::move(split));
        }
        return splits;
    }
    }
    throw Error(ErrorCode::invalid_argument, "unknown split mode");
}

EvalResult evaluate(const WeightModel& model, const FeatureMatrix& X, std::span<const int> labels) {
    if (X.count() == 0)
        throw Error(ErrorCode::empty_test_set, "test set has no instances");
    if (static_cast<int>(labels.size()) != X.count())
        throw Error(ErrorCode::shape_mismatch,
                    "label count " + std::to_string(labels.size()) +
                        " does not match instance count " + std::to_string(X.count()));
    const int c = model.classes();
    for (int label : labels)
        if (label < 0 || label >= c)
            throw Error(ErrorCode::out_of_range_label,
                        "label " + std::to_string(label) + " out of range [0, " +
                            std::to_string(c) + ")");

    EvalResult result;
    result.confusion.counts = Eigen::MatrixXi::Zero(c, c);
    result.confusion.class_names = model.class_names;
    const std::vector<ScoreVector> scores = predict_batch(X, model);
    for (size_t i = 0; i < scores.size(); ++i)
        result.confusion.counts(labels[i], scores[i].predicted) += 1;
    result.accuracy = result.confusion.accuracy();
    return result;
}

CrossValidationResult cross_validate(const TrainingSet& data, const Hyperparams& hp,
                                     const SplitSpec& spec) {
    validate_training_set(data);
    const std::vector<int> labels = argmax_labels(data.Y);
    const std::vector<Split> splits = make_splits(data.subject_ids, data.count(), spec);

    std::vector<FoldResult> folds;
    folds.reserve(splits.size());
    for (const Split& split : splits) folds.push_back(run_fold(data, labels, hp, split));

    std::vector<std::string> names = data.class_names;
    if (names.empty())
        for (int j = 0; j < data.classes(); ++j) names.push_back(std::to_string(j));
    return assemble(std::move(folds), names, data.classes());
}

CrossValidationResult cross_validate(std::span<const SkeletonSequence> sequences,
                                     const std::vector<std::string>& class_names,
                                     const HistogramConfig& cfg, const Hyperparams& hp,
                                     const SplitSpec& spec) {
    if (sequences.empty())
        throw Error(ErrorCode::empty_training_set, "no sequences to cross-validate");
    const int c = static_cast<int>(class_names.size());
    if (c < 2)
        throw Error(ErrorCode::invalid_training_set, "cross-validation needs at least 2 classes");

    std::vector<int> labels;
    std::vector<std::string> subject_ids;
    labels.reserve(sequences.size());
    subject_ids.reserve(sequences.size());
    for (size_t i = 0; i < sequences.size(); ++i) {
        if (!sequences[i].label)
            throw Error(ErrorCode::out_of_range_label,
                        "sequence " + std::to_string(i) + " has no label");
        const int label = *sequences[i].label;
        if (label < 0 || label >= c)
            throw Error(ErrorCode::out_of_range_label,
                        "sequence " + std::to_string(i) + " label " + std::to_string(label) +
                            " out of range [0, " + std::to_string(c) + ")");
        labels.push_back(label);
        subject_ids.push_back(sequences[i].subject_id.value_or(""));
    }

    const std::vector<Split> splits =
        make_splits(subject_ids, static_cast<int>(sequences.size()), spec);

    std::vector<FoldResult> folds;
    folds.reserve(splits.size());
    for (const Split& split : splits) {
        // Histogram ranges come from the fold's training sequences only, so
        // extraction never sees test-set statistics.
        std::vector<SkeletonSequence> train_seqs;
        train_seqs.reserve(split.train_indices.size());
        std::vector<int> train_labels;
        for (int idx : split.train_indices) {
            train_seqs.push_back(sequences[static_cast<size_t>(idx)]);
            train_labels.push_back(labels[static_cast<size_t>(idx)]);
        }
        const FeatureRanges ranges = compute_feature_ranges(train_seqs, cfg);
        const FeatureMatrix train_x = extract_dataset(train_seqs, cfg, ranges);

        TrainingSet train;
        train.X = train_x.values;
        train.layout = train_x.layout;
        train.class_names = class_names;
        train.feature_ranges = ranges;
        train.histogram_config = cfg;
        train.Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(train_labels.size()), c);
        for (size_t i = 0; i < train_labels.size(); ++i)
            train.Y(static_cast<Eigen::Index>(i), train_labels[i]) = 1.0;

        const FitResult fit = fabl_train(train, hp);

        std::vector<SkeletonSequence> test_seqs;
        test_seqs.reserve(split.test_indices.size());
        std::vector<int> test_labels;
        for (int idx : split.test_indices) {
            test_seqs.push_back(sequences[static_cast<size_t>(idx)]);
            test_labels.push_back(labels[static_cast<size_t>(idx)]);
        }
        const FeatureMatrix test_x = extract_dataset(test_seqs, cfg, ranges);
        const EvalResult eval = evaluate(fit.model, test_x, test_labels);

        FoldResult fold;
        fold.name = split.name;
        fold.accuracy = eval.accuracy;
        fold.confusion = eval.confusion;
        fold.train_count = static_cast<int>(split.train_indices.size());
        fold.test_count = static_cast<int>(split.test_indices.size());
        fold.iterations = fit.trace.iterations;
        fold.converged = fit.trace.converged;
        fold.final_objective = fit.trace.objective_per_iter.back();
        folds.push_back(std::move(fold));
    }
    return assemble(std::move(folds), class_names, c);
}

AblationReport run_ablation(const TrainingSet& data, const Hyperparams& hp,
                            const SplitSpec& spec) {
    return run_ablation_cells(
        hp, [&](const Hyperparams& cell_hp) { return cross_validate(data, cell_hp, spec); });
}

AblationReport run_ablation(std::span<const SkeletonSequence> sequences,
                            const std::vector<std::string>& class_names,
                            const HistogramConfig& cfg, const Hyperparams& hp,
                            const SplitSpec& spec) {
    return run_ablation_cells(hp, [&](const Hyperparams& cell_hp) {
        return cross_validate(sequences, class_names, cfg, cell_hp, spec);
    });
}

ThroughputResult benchmark_throughput(const WeightModel& model, int n_instances, int repeats,
                                      std::uint64_t seed) {
    if (n_instances < 1000)
        throw Error(ErrorCode::invalid_argument,
                    "throughput benchmark needs at least 1000 instances");
    if (repeats < 1)
        throw Error(ErrorCode::invalid_argument, "repeats must be >= 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    FeatureMatrix batch;
    batch.layout = model.layout;
    batch.values.resize(model.dim(), n_instances);
    for (Eigen::Index j = 0; j < batch.values.cols(); ++j)
        for (Eigen::Index i = 0; i < batch.values.rows(); ++i)
            batch.values(i, j) = uniform(rng);

    ThroughputResult result;
    result.n_instances = n_instances;
    result.repeats = repeats;
    volatile double sink = 0.0; // keep the optimizer from dropping the work
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<ScoreVector> scores = predict_batch(batch, model);
        const auto stop = std::chrono::steady_clock::now();
        sink = sink + scores.back().scores.sum();
        result.run_seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::vector<double> sorted = result.run_seconds;
    std::sort(sorted.begin(), sorted.end());
    const size_t mid = sorted.size() / 2;
    const double median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    const double safe = std::max(median, 1e-12);
    result.predictions_per_second = static_cast<double>(n_instances) / safe;
    result.seconds_per_observation = safe / static_cast<double>(n_instances);
    return result;
}

} // namespace fabl
