// Microbenchmarks for the hot paths: feature extraction, single-observation
// prediction, and one IRLS iteration worth of solver work.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fabl/body_model.hpp"
#include "fabl/classifier.hpp"
#include "fabl/evaluation.hpp"
#include "fabl/features.hpp"
#include "fabl/skeleton.hpp"
#include "fabl/solver.hpp"

namespace {

fabl::SkeletonSequence random_sequence(int frames, int joints, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    fabl::SkeletonSequence seq;
    for (int t = 0; t < frames; ++t) {
        fabl::SkeletonFrame frame;
        frame.torso_index = 2;
        for (int j = 0; j < joints; ++j)
            frame.joints.push_back({coord(rng), coord(rng), coord(rng) + 2.5, 1.0});
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

fabl::WeightModel random_model(int joints, int bins, int classes, std::uint64_t seed) {
    fabl::BodyModel body;
    body.name = "bench";
    for (int j = 0; j < joints; ++j) body.joint_names.push_back("j" + std::to_string(j));
    fabl::HistogramConfig cfg;
    cfg.bins = bins;

    fabl::WeightModel model;
    model.layout = fabl::layout_for(body, cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    model.W.resize(model.layout.dim(), classes);
    for (Eigen::Index j = 0; j < model.W.cols(); ++j)
        for (Eigen::Index i = 0; i < model.W.rows(); ++i) model.W(i, j) = gauss(rng);
    model.b = Eigen::VectorXd::Zero(classes);
    for (int j = 0; j < classes; ++j) model.class_names.push_back("c" + std::to_string(j));
    model.histogram_config = cfg;
    return model;
}

fabl::FeatureRanges unit_ranges(const fabl::HistogramConfig& cfg) {
    fabl::HistogramConfig fixed = cfg;
    fixed.range_policy = fabl::HistogramConfig::RangePolicy::fixed;
    fixed.fixed_lo = -4.0;
    fixed.fixed_hi = 4.0;
    return fabl::compute_feature_ranges({}, fixed);
}

void bm_extract(benchmark::State& state) {
    const int frames = static_cast<int>(state.range(0));
    const fabl::SkeletonSequence seq = random_sequence(frames, 15, 99);
    fabl::HistogramConfig cfg;
    const fabl::FeatureRanges ranges = unit_ranges(cfg);
    for (auto _ : state) {
        fabl::FeatureVector x = fabl::extract_features(seq, cfg, ranges);
        benchmark::DoNotOptimize(x.values.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void bm_predict(benchmark::State& state) {
    const int classes = static_cast<int>(state.range(0));
    const fabl::WeightModel model = random_model(15, 16, classes, 7);
    fabl::FeatureVector x;
    x.layout = model.layout;
    x.values = Eigen::VectorXd::Random(model.dim());
    for (auto _ : state) {
        fabl::ScoreVector s = fabl::predict_scores(x, model);
        benchmark::DoNotOptimize(s.predicted);
    }
    state.SetItemsProcessed(state.iterations());
}

void bm_train(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    fabl::SyntheticSpec spec;
    spec.n = n;
    spec.block_dim = 16;
    spec.m = 4;
    spec.s = 15;
    spec.c = 4;
    spec.active_joints = {3, 7};
    const fabl::SyntheticDataset data = fabl::generate_synthetic(spec);
    fabl::Hyperparams hp;
    hp.max_iter = 5; // fixed iteration budget so runs are comparable
    hp.tol = 1e-300; // never converge early
    for (auto _ : state) {
        fabl::FitResult fit = fabl::fabl_train(data.data, hp);
        benchmark::DoNotOptimize(fit.trace.iterations);
    }
}

BENCHMARK(bm_extract)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_predict)->Arg(2)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_train)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
