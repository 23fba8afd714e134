// fabl: command-line front end for the FABL pipeline.
//
// Subcommands: extract, train, predict, eval, bench, inspect.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fabl/body_model.hpp"
#include "fabl/classifier.hpp"
#include "fabl/data_io.hpp"
#include "fabl/error.hpp"
#include "fabl/evaluation.hpp"
#include "fabl/features.hpp"
#include "fabl/importance.hpp"
#include "fabl/io.hpp"
#include "fabl/model_io.hpp"
#include "fabl/solver.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 12345;

struct HistogramOpts {
    int bins = 16;
    std::string range = "minmax";
    bool no_normalize = false;
};

struct SolverOpts {
    double gamma1 = 0.1;
    double gamma2 = 0.1;
    double epsilon = 1e-8;
    double tol = 1e-6;
    int max_iter = 100;
    double init_ridge = 1e-8;
    bool no_standardize = false;
    int threads = 1;
};

std::string range_check(const std::string& value) {
    if (value == "minmax") return {};
    const size_t comma = value.find(',');
    if (comma != std::string::npos) {
        try {
            const double lo = std::stod(value.substr(0, comma));
            const double hi = std::stod(value.substr(comma + 1));
            if (lo < hi) return {};
        } catch (const std::exception&) {
        }
    }
    return "must be 'minmax' or 'lo,hi' with lo < hi";
}

fabl::HistogramConfig histogram_config(const HistogramOpts& opts) {
    fabl::HistogramConfig cfg;
    cfg.bins = opts.bins;
    cfg.normalize = !opts.no_normalize;
    if (opts.range != "minmax") {
        const size_t comma = opts.range.find(',');
        cfg.range_policy = fabl::HistogramConfig::RangePolicy::fixed;
        cfg.fixed_lo = std::stod(opts.range.substr(0, comma));
        cfg.fixed_hi = std::stod(opts.range.substr(comma + 1));
    }
    return cfg;
}

fabl::Hyperparams hyperparams(const SolverOpts& opts) {
    fabl::Hyperparams hp;
    hp.gamma1 = opts.gamma1;
    hp.gamma2 = opts.gamma2;
    hp.epsilon = opts.epsilon;
    hp.tol = opts.tol;
    hp.max_iter = opts.max_iter;
    hp.init_ridge = opts.init_ridge;
    hp.standardize = !opts.no_standardize;
    hp.threads = opts.threads;
    return hp;
}

void add_histogram_flags(CLI::App* cmd, HistogramOpts& opts) {
    cmd->add_option("--bins", opts.bins, "histogram bins per scalar channel")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--range", opts.range, "histogram range: 'minmax' or fixed 'lo,hi'")
        ->check(range_check)
        ->capture_default_str();
    cmd->add_flag("--no-normalize", opts.no_normalize, "keep raw bin counts instead of sum-1 histograms");
}

void add_solver_flags(CLI::App* cmd, SolverOpts& opts) {
    cmd->add_option("--gamma1", opts.gamma1, "M1 (modality) regularization strength")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--gamma2", opts.gamma2, "J1 (joint) regularization strength")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--epsilon", opts.epsilon, "group-norm smoothing floor")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tol", opts.tol, "relative-objective convergence threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-iter", opts.max_iter, "iteration cap (counting the init solve)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--init-ridge", opts.init_ridge, "ridge for the initialization solve")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_flag("--no-standardize", opts.no_standardize, "skip feature centering and scaling");
    cmd->add_option("--threads", opts.threads, "per-class solve parallelism")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

json histogram_json(const fabl::HistogramConfig& cfg) {
    json out;
    out["bins"] = cfg.bins;
    out["range_policy"] =
        cfg.range_policy == fabl::HistogramConfig::RangePolicy::fixed ? "fixed" : "train_minmax";
    if (cfg.range_policy == fabl::HistogramConfig::RangePolicy::fixed) {
        out["fixed_lo"] = cfg.fixed_lo;
        out["fixed_hi"] = cfg.fixed_hi;
    }
    out["normalize"] = cfg.normalize;
    return out;
}

json hyperparams_json(const fabl::Hyperparams& hp) {
    return json{{"gamma1", hp.gamma1},         {"gamma2", hp.gamma2},
                {"epsilon", hp.epsilon},       {"tol", hp.tol},
                {"max_iter", hp.max_iter},     {"init_ridge", hp.init_ridge},
                {"standardize", hp.standardize}, {"threads", hp.threads}};
}

json confusion_json(const fabl::ConfusionMatrix& cm) {
    json counts = json::array();
    for (int i = 0; i < cm.classes(); ++i) {
        json row = json::array();
        for (int j = 0; j < cm.classes(); ++j) row.push_back(cm.counts(i, j));
        counts.push_back(std::move(row));
    }
    return json{{"class_names", cm.class_names}, {"counts", std::move(counts)}};
}

json trace_json(const fabl::FitTrace& trace) {
    json out;
    out["iterations"] = trace.iterations;
    out["converged"] = trace.converged;
    if (!trace.objective_per_iter.empty()) out["final_objective"] = trace.objective_per_iter.back();
    out["objective_per_iter"] = trace.objective_per_iter;
    out["m1_per_iter"] = trace.m1_per_iter;
    out["j1_per_iter"] = trace.j1_per_iter;
    return out;
}

json cv_json(const fabl::CrossValidationResult& cv) {
    json folds = json::array();
    for (const fabl::FoldResult& fold : cv.folds) {
        folds.push_back(json{{"name", fold.name},
                             {"accuracy", fold.accuracy},
                             {"train_count", fold.train_count},
                             {"test_count", fold.test_count},
                             {"iterations", fold.iterations},
                             {"converged", fold.converged},
                             {"final_objective", fold.final_objective}});
    }
    return json{{"mean_accuracy", cv.mean_accuracy},
                {"folds", std::move(folds)},
                {"pooled_confusion", confusion_json(cv.pooled)}};
}

void write_report(const std::string& path, const json& doc) {
    fabl::io::write_file_atomic(path, doc.dump(2) + "\n");
}

// Loads sequences and applies the optional downsampling step shared by the
// manifest-driven subcommands.
fabl::LoadedDataset load_sequences(const std::string& manifest_path, const std::string& downsample) {
    fabl::LoadedDataset dataset = fabl::load_dataset(fabl::load_manifest(manifest_path));
    if (!downsample.empty()) {
        const fabl::BodyModel source = dataset.model;
        const fabl::BodyModel target = fabl::resolve_body_model(downsample);
        for (fabl::SkeletonSequence& seq : dataset.sequences)
            seq = fabl::downsample_sequence(seq, source, target);
        dataset.model = target;
    }
    return dataset;
}

fabl::TrainingSet training_set_from(const fabl::FeatureFile& file) {
    std::vector<std::string> names = file.class_names;
    int c = static_cast<int>(names.size());
    if (c == 0) {
        int max_label = -1;
        for (int label : file.labels) max_label = std::max(max_label, label);
        c = max_label + 1;
        for (int j = 0; j < c; ++j) names.push_back(std::to_string(j));
    }
    for (int label : file.labels)
        if (label < 0)
            throw fabl::Error(fabl::ErrorCode::invalid_training_set,
                              "features file has unlabeled columns; cannot train");

    fabl::TrainingSet train;
    train.X = file.features.values;
    train.layout = file.features.layout;
    train.Y = fabl::build_label_matrix(file.labels, c).Y;
    train.class_names = std::move(names);
    train.subject_ids = file.subject_ids;
    if (!file.ranges.empty()) train.feature_ranges = file.ranges;
    train.histogram_config = file.config;
    return train;
}

// --- extract ---------------------------------------------------------------

struct ExtractOpts {
    std::string manifest;
    std::string output;
    std::string downsample;
    HistogramOpts histogram;
};

int cmd_extract(const ExtractOpts& opts) {
    const fabl::HistogramConfig cfg = histogram_config(opts.histogram);
    const fabl::LoadedDataset dataset = load_sequences(opts.manifest, opts.downsample);

    const fabl::FeatureRanges ranges = fabl::compute_feature_ranges(dataset.sequences, cfg);
    fabl::FeatureFile file;
    file.features = fabl::extract_dataset(dataset.sequences, cfg, ranges);
    file.ranges = ranges;
    file.config = cfg;
    file.class_names = dataset.class_names;
    file.body_model_name = dataset.model.name;
    for (const fabl::SkeletonSequence& seq : dataset.sequences) {
        file.labels.push_back(seq.label.value_or(-1));
        file.subject_ids.push_back(seq.subject_id.value_or(""));
    }
    fabl::save_features(file, opts.output);
    std::cout << "extracted " << file.features.count() << " instances, d=" << file.features.dim()
              << ", classes=" << file.class_names.size() << " -> " << opts.output << "\n";
    return 0;
}

// --- train -----------------------------------------------------------------

struct TrainOpts {
    std::string features;
    std::string model;
    std::string report;
    SolverOpts solver;
};

int cmd_train(const TrainOpts& opts) {
    const fabl::Hyperparams hp = hyperparams(opts.solver);
    json report;
    report["format_version"] = 1;
    report["command"] = "train";
    report["config"] = {{"features", opts.features},
                        {"model", opts.model},
                        {"hyperparams", hyperparams_json(hp)}};
    const bool ridge_equivalent = hp.gamma1 == 0.0 && hp.gamma2 == 0.0;
    if (ridge_equivalent) report["note"] = "ridge-equivalent mode (gamma1 = gamma2 = 0)";

    const fabl::FeatureFile file = fabl::load_features(opts.features);
    fabl::TrainingSet train = training_set_from(file);
    try {
        fabl::FitResult fit = fabl::fabl_train(train, hp);
        fit.model.body_model_name = file.body_model_name;
        fabl::save_model(fit.model, opts.model);
        report["status"] = "ok";
        report["result"] = trace_json(fit.trace);
        if (!opts.report.empty()) write_report(opts.report, report);
        std::cout << "trained " << train.classes() << "-class model on " << train.count()
                  << " instances in " << fit.trace.iterations << " iterations (converged="
                  << (fit.trace.converged ? "yes" : "no")
                  << ", objective=" << fabl::io::format_double(fit.trace.objective_per_iter.back())
                  << ")" << (ridge_equivalent ? " [ridge-equivalent mode]" : "") << " -> "
                  << opts.model << "\n";
        return 0;
    } catch (const fabl::TrainError& err) {
        // Persist the last good iterations so the failure can be debugged.
        report["status"] = "failed";
        report["error"] = err.what();
        report["result"] = trace_json(err.trace());
        if (!opts.report.empty()) write_report(opts.report, report);
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

// --- predict ---------------------------------------------------------------

struct PredictOpts {
    std::string model;
    std::string features;
    std::string output;
    int top_k = 0;
};

int cmd_predict(const PredictOpts& opts) {
    const fabl::WeightModel model = fabl::load_model(opts.model);
    const fabl::FeatureFile file = fabl::load_features(opts.features);
    const std::vector<fabl::ScoreVector> scores = fabl::predict_batch(file.features, model);

    std::ostringstream out;
    out << "fabl_predictions 1\n";
    if (opts.top_k > 0) {
        out << "# columns: index, then top-" << opts.top_k << " class:score pairs\n";
    } else {
        out << "# columns: index predicted";
        for (const std::string& name : model.class_names) out << " score[" << name << "]";
        out << "\n";
    }
    for (size_t i = 0; i < scores.size(); ++i) {
        out << i;
        if (opts.top_k > 0) {
            std::vector<int> order(static_cast<size_t>(scores[i].scores.size()));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return scores[i].scores[a] > scores[i].scores[b];
            });
            const int k = std::min<int>(opts.top_k, static_cast<int>(order.size()));
            for (int r = 0; r < k; ++r)
                out << " " << model.class_names[static_cast<size_t>(order[static_cast<size_t>(r)])]
                    << ":" << fabl::io::format_double(scores[i].scores[order[static_cast<size_t>(r)]]);
        } else {
            out << " " << model.class_names[static_cast<size_t>(scores[i].predicted)];
            for (Eigen::Index j = 0; j < scores[i].scores.size(); ++j)
                out << " " << fabl::io::format_double(scores[i].scores[j]);
        }
        out << "\n";
    }
    if (opts.output.empty())
        std::cout << out.str();
    else
        fabl::io::write_file_atomic(opts.output, out.str());
    return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalOpts {
    std::string manifest;
    std::string features;
    std::string model;
    std::string report;
    std::string downsample;
    std::string mode = "subject";
    int k = 5;
    std::uint64_t seed = kDefaultSeed;
    bool ablation = false;
    HistogramOpts histogram;
    SolverOpts solver;
};

fabl::SplitSpec split_spec(const EvalOpts& opts) {
    fabl::SplitSpec spec;
    spec.mode = opts.mode == "kfold" ? fabl::SplitSpec::Mode::k_fold
                                     : fabl::SplitSpec::Mode::subject_wise;
    spec.k = opts.k;
    spec.seed = opts.seed;
    return spec;
}

json ablation_json(const fabl::AblationReport& report) {
    json cells = json::array();
    for (const fabl::AblationCell& cell : report.cells) {
        json entry{{"name", cell.name},
                   {"gamma1", cell.hp.gamma1},
                   {"gamma2", cell.hp.gamma2},
                   {"failed", cell.failed}};
        if (cell.failed)
            entry["error"] = cell.error;
        else {
            entry["mean_accuracy"] = cell.mean_accuracy;
            entry["fold_accuracies"] = cell.fold_accuracies;
        }
        cells.push_back(std::move(entry));
    }
    return json{{"cells", std::move(cells)}};
}

void print_ablation(const fabl::AblationReport& report) {
    std::cout << "configuration    gamma1   gamma2   mean accuracy\n";
    for (const fabl::AblationCell& cell : report.cells) {
        std::ostringstream line;
        line.setf(std::ios::left);
        line.width(17);
        line << cell.name;
        line << cell.hp.gamma1 << "      " << cell.hp.gamma2 << "      ";
        if (cell.failed)
            line << "FAILED (" << cell.error << ")";
        else
            line << cell.mean_accuracy;
        std::cout << line.str() << "\n";
    }
}

int cmd_eval(const EvalOpts& opts) {
    json report;
    report["format_version"] = 1;
    report["command"] = "eval";
    const fabl::Hyperparams hp = hyperparams(opts.solver);
    const fabl::HistogramConfig cfg = histogram_config(opts.histogram);
    report["config"] = {{"manifest", opts.manifest},     {"features", opts.features},
                        {"model", opts.model},           {"mode", opts.mode},
                        {"k", opts.k},                   {"seed", opts.seed},
                        {"ablation", opts.ablation},     {"downsample", opts.downsample},
                        {"histogram", histogram_json(cfg)}, {"hyperparams", hyperparams_json(hp)}};

    if (!opts.model.empty()) {
        // Fixed-model evaluation: extract with the model's frozen ranges.
        const fabl::WeightModel model = fabl::load_model(opts.model);
        const fabl::LoadedDataset dataset = load_sequences(opts.manifest, opts.downsample);
        if (!model.body_model_name.empty() && model.body_model_name != dataset.model.name)
            throw fabl::Error(fabl::ErrorCode::model_mismatch,
                              "model was trained on body model '" + model.body_model_name +
                                  "' but the dataset uses '" + dataset.model.name + "'");
        if (model.class_names != dataset.class_names)
            throw fabl::Error(fabl::ErrorCode::model_mismatch,
                              "model class names do not match the dataset's class names");
        const fabl::FeatureMatrix features =
            fabl::extract_dataset(dataset.sequences, model.histogram_config, model.feature_ranges);
        std::vector<int> labels;
        for (const fabl::SkeletonSequence& seq : dataset.sequences)
            labels.push_back(seq.label.value_or(-1));
        const fabl::EvalResult result = fabl::evaluate(model, features, labels);
        report["mode_detail"] = "model-on-dataset";
        report["result"] = {{"accuracy", result.accuracy},
                            {"instances", static_cast<int>(labels.size())},
                            {"confusion", confusion_json(result.confusion)}};
        std::cout << "accuracy " << result.accuracy << " on " << labels.size() << " instances\n";
    } else if (!opts.features.empty()) {
        // Feature-level cross-validation.
        const fabl::FeatureFile file = fabl::load_features(opts.features);
        const fabl::TrainingSet data = training_set_from(file);
        const fabl::SplitSpec spec = split_spec(opts);
        if (opts.ablation) {
            const fabl::AblationReport ablation = fabl::run_ablation(data, hp, spec);
            report["mode_detail"] = "ablation";
            report["result"] = ablation_json(ablation);
            print_ablation(ablation);
        } else {
            const fabl::CrossValidationResult cv = fabl::cross_validate(data, hp, spec);
            report["mode_detail"] = "cross-validation";
            report["result"] = cv_json(cv);
            std::cout << "mean accuracy " << cv.mean_accuracy << " over " << cv.folds.size()
                      << " folds\n";
        }
    } else {
        // Sequence-level cross-validation from a manifest.
        const fabl::LoadedDataset dataset = load_sequences(opts.manifest, opts.downsample);
        const fabl::SplitSpec spec = split_spec(opts);
        if (opts.ablation) {
            const fabl::AblationReport ablation =
                fabl::run_ablation(dataset.sequences, dataset.class_names, cfg, hp, spec);
            report["mode_detail"] = "ablation";
            report["result"] = ablation_json(ablation);
            print_ablation(ablation);
        } else {
            const fabl::CrossValidationResult cv =
                fabl::cross_validate(dataset.sequences, dataset.class_names, cfg, hp, spec);
            report["mode_detail"] = "cross-validation";
            report["result"] = cv_json(cv);
            std::cout << "mean accuracy " << cv.mean_accuracy << " over " << cv.folds.size()
                      << " folds\n";
            for (const fabl::FoldResult& fold : cv.folds)
                std::cout << "  fold " << fold.name << ": accuracy " << fold.accuracy << " ("
                          << fold.test_count << " test instances)\n";
        }
    }
    if (!opts.report.empty()) write_report(opts.report, report);
    return 0;
}

// --- bench -----------------------------------------------------------------

struct BenchOpts {
    std::string model;
    std::string manifest;
    std::string report;
    std::string downsample;
    int joints = 15;
    int bins = 16;
    int classes = 20;
    int instances = 100000;
    int repeats = 5;
    std::uint64_t seed = kDefaultSeed;
    bool end_to_end = false;
};

fabl::WeightModel synthetic_bench_model(const BenchOpts& opts) {
    fabl::BodyModel body;
    body.name = "bench" + std::to_string(opts.joints);
    for (int j = 0; j < opts.joints; ++j) body.joint_names.push_back("joint_" + std::to_string(j));
    fabl::HistogramConfig cfg;
    cfg.bins = opts.bins;

    fabl::WeightModel model;
    model.layout = fabl::layout_for(body, cfg);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    model.W.resize(model.layout.dim(), opts.classes);
    for (Eigen::Index j = 0; j < model.W.cols(); ++j)
        for (Eigen::Index i = 0; i < model.W.rows(); ++i) model.W(i, j) = gauss(rng);
    model.b = Eigen::VectorXd::Constant(opts.classes, 1.0 / opts.classes);
    for (int j = 0; j < opts.classes; ++j) model.class_names.push_back("class_" + std::to_string(j));
    model.histogram_config = cfg;
    return model;
}

int cmd_bench(const BenchOpts& opts) {
    const fabl::WeightModel model =
        opts.model.empty() ? synthetic_bench_model(opts) : fabl::load_model(opts.model);

    json report;
    report["format_version"] = 1;
    report["command"] = "bench";
    report["config"] = {{"model", opts.model},       {"manifest", opts.manifest},
                        {"joints", opts.joints},     {"bins", opts.bins},
                        {"classes", opts.classes},   {"instances", opts.instances},
                        {"repeats", opts.repeats},   {"seed", opts.seed},
                        {"end_to_end", opts.end_to_end}};
    report["dim"] = model.dim();
    report["model_classes"] = model.classes();

    const fabl::ThroughputResult result =
        fabl::benchmark_throughput(model, opts.instances, opts.repeats, opts.seed);
    report["classification"] = {{"predictions_per_second", result.predictions_per_second},
                                {"seconds_per_observation", result.seconds_per_observation},
                                {"n_instances", result.n_instances},
                                {"repeats", result.repeats},
                                {"runs_seconds", result.run_seconds}};
    std::cout << "classification only: " << result.predictions_per_second << " predictions/s ("
              << result.seconds_per_observation << " s/observation, d=" << model.dim()
              << ", c=" << model.classes() << ")\n";

    if (opts.end_to_end) {
        if (opts.manifest.empty())
            throw fabl::Error(fabl::ErrorCode::invalid_argument,
                              "--end-to-end needs --manifest (and a --model trained for it)");
        const fabl::LoadedDataset dataset = load_sequences(opts.manifest, opts.downsample);
        std::vector<double> runs;
        for (int r = 0; r < opts.repeats; ++r) {
            const auto start = std::chrono::steady_clock::now();
            for (const fabl::SkeletonSequence& seq : dataset.sequences) {
                const fabl::FeatureVector x =
                    fabl::extract_features(seq, model.histogram_config, model.feature_ranges);
                (void)fabl::predict_scores(x, model);
            }
            const auto stop = std::chrono::steady_clock::now();
            runs.push_back(std::chrono::duration<double>(stop - start).count());
        }
        std::vector<double> sorted = runs;
        std::sort(sorted.begin(), sorted.end());
        const size_t mid = sorted.size() / 2;
        const double median =
            sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
        const double per_seq = std::max(median, 1e-12) / static_cast<double>(dataset.sequences.size());
        report["end_to_end"] = {{"sequences_per_second", 1.0 / per_seq},
                                {"seconds_per_sequence", per_seq},
                                {"n_sequences", dataset.sequences.size()},
                                {"repeats", opts.repeats},
                                {"runs_seconds", runs}};
        std::cout << "end to end (extract + predict): " << 1.0 / per_seq << " sequences/s ("
                  << per_seq << " s/sequence)\n";
    }
    if (!opts.report.empty()) write_report(opts.report, report);
    return 0;
}

// --- inspect ---------------------------------------------------------------

struct InspectOpts {
    std::string model;
    std::string report;
    int top = 0;
};

int cmd_inspect(const InspectOpts& opts) {
    const fabl::WeightModel model = fabl::load_model(opts.model);
    const fabl::ImportanceReport importance = fabl::compute_importance(model);
    const int joints = model.layout.joints();
    const int modalities = model.layout.modalities();
    const int top_joints = opts.top > 0 ? std::min(opts.top, joints) : joints;
    const int top_modalities = opts.top > 0 ? std::min(opts.top, modalities) : modalities;

    json report;
    report["format_version"] = 1;
    report["command"] = "inspect";
    report["config"] = {{"model", opts.model}, {"top", opts.top}};
    report["dim"] = model.dim();
    report["classes"] = model.classes();
    json per_class = json::array();

    for (const fabl::ClassImportance& entry : importance.per_class) {
        const std::string& name = model.class_names[static_cast<size_t>(entry.class_index)];
        std::cout << "class " << name << "\n";
        std::cout << "  joints by J1 group norm:\n";
        for (int r = 0; r < top_joints; ++r) {
            const int k = entry.joint_ranking[static_cast<size_t>(r)];
            std::cout << "    " << (r + 1) << ". joint " << k << " norm "
                      << entry.joint_norms[static_cast<size_t>(k)] << " share "
                      << entry.joint_shares[static_cast<size_t>(k)] << "\n";
        }
        std::cout << "  modalities by M1 group norm:\n";
        for (int r = 0; r < top_modalities; ++r) {
            const int q = entry.modality_ranking[static_cast<size_t>(r)];
            std::cout << "    " << (r + 1) << ". " << fabl::modality_name(q) << " norm "
                      << entry.modality_norms[static_cast<size_t>(q)] << " share "
                      << entry.modality_shares[static_cast<size_t>(q)] << "\n";
        }
        per_class.push_back(json{{"class", name},
                                 {"joint_norms", entry.joint_norms},
                                 {"joint_shares", entry.joint_shares},
                                 {"joint_ranking", entry.joint_ranking},
                                 {"modality_norms", entry.modality_norms},
                                 {"modality_shares", entry.modality_shares},
                                 {"modality_ranking", entry.modality_ranking}});
    }
    report["per_class"] = std::move(per_class);
    if (!opts.report.empty()) write_report(opts.report, report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FABL: joint feature and body-part learning for skeleton-based recognition"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read option defaults from an INI file (flags override)");

    ExtractOpts extract_opts;
    CLI::App* extract = app.add_subcommand("extract", "Extract histogram features from a manifest");
    extract->add_option("--manifest", extract_opts.manifest, "dataset manifest")->required();
    extract->add_option("--output,-o", extract_opts.output, "features file to write")->required();
    extract->add_option("--downsample", extract_opts.downsample,
                        "downsample to this body model before extraction");
    add_histogram_flags(extract, extract_opts.histogram);

    TrainOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "Train a FABL model from a features file");
    train->add_option("--features", train_opts.features, "features file from 'extract'")->required();
    train->add_option("--model,-o", train_opts.model, "model file to write")->required();
    train->add_option("--report", train_opts.report, "fit report (JSON) to write");
    add_solver_flags(train, train_opts.solver);

    PredictOpts predict_opts;
    CLI::App* predict = app.add_subcommand("predict", "Score instances with a trained model");
    predict->add_option("--model", predict_opts.model, "trained model file")->required();
    predict->add_option("--features", predict_opts.features, "features file to score")->required();
    predict->add_option("--output,-o", predict_opts.output, "predictions file (stdout if absent)");
    predict->add_option("--top-k", predict_opts.top_k, "emit the k best classes per instance")
        ->check(CLI::PositiveNumber);

    EvalOpts eval_opts;
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a model or cross-validate a dataset");
    eval->add_option("--manifest", eval_opts.manifest, "dataset manifest");
    eval->add_option("--features", eval_opts.features, "features file (feature-level CV)");
    eval->add_option("--model", eval_opts.model, "evaluate this model instead of cross-validating");
    eval->add_option("--report", eval_opts.report, "evaluation report (JSON) to write");
    eval->add_option("--downsample", eval_opts.downsample,
                     "downsample to this body model before extraction");
    eval->add_option("--mode", eval_opts.mode, "split mode")
        ->check(CLI::IsMember({"subject", "kfold"}))
        ->capture_default_str();
    eval->add_option("--k", eval_opts.k, "folds for --mode kfold")->capture_default_str();
    eval->add_option("--seed", eval_opts.seed, "split shuffling seed")->capture_default_str();
    eval->add_flag("--ablation", eval_opts.ablation,
                   "run all four configurations (full, feature-only, part-only, unregularized)");
    add_histogram_flags(eval, eval_opts.histogram);
    add_solver_flags(eval, eval_opts.solver);

    BenchOpts bench_opts;
    CLI::App* bench = app.add_subcommand("bench", "Measure prediction throughput");
    bench->add_option("--model", bench_opts.model, "model file (random model if absent)");
    bench->add_option("--manifest", bench_opts.manifest, "manifest for --end-to-end");
    bench->add_option("--report", bench_opts.report, "benchmark report (JSON) to write");
    bench->add_option("--downsample", bench_opts.downsample,
                      "downsample to this body model before extraction");
    bench->add_option("--joints", bench_opts.joints, "joints for the random model")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--bins", bench_opts.bins, "bins for the random model")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--classes", bench_opts.classes, "classes for the random model")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--instances", bench_opts.instances, "instances per timing run")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--repeats", bench_opts.repeats, "timing repeats (median reported)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--seed", bench_opts.seed, "random data seed")->capture_default_str();
    bench->add_flag("--end-to-end", bench_opts.end_to_end,
                    "also time extract + predict per sequence over --manifest");

    InspectOpts inspect_opts;
    CLI::App* inspect = app.add_subcommand("inspect", "Rank joints and modalities by group norm");
    inspect->add_option("--model", inspect_opts.model, "trained model file")->required();
    inspect->add_option("--report", inspect_opts.report, "importance report (JSON) to write");
    inspect->add_option("--top", inspect_opts.top, "show only the top N per ranking")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (extract->parsed()) return cmd_extract(extract_opts);
        if (train->parsed()) return cmd_train(train_opts);
        if (predict->parsed()) return cmd_predict(predict_opts);
        if (eval->parsed()) {
            if (eval_opts.manifest.empty() && eval_opts.features.empty()) {
                std::cerr << "eval: one of --manifest or --features is required\n";
                return 2;
            }
            return cmd_eval(eval_opts);
        }
        if (bench->parsed()) return cmd_bench(bench_opts);
        if (inspect->parsed()) return cmd_inspect(inspect_opts);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
