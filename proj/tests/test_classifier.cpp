#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "fabl/classifier.hpp"
#include "fabl/error.hpp"
#include "fabl/importance.hpp"
#include "fabl/solver.hpp"

#include "oracles.hpp"

namespace {

fabl::WeightModel make_model(int m, int s, int bd, int c, std::uint64_t seed,
                             bool standardized = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    fabl::WeightModel model;
    model.layout = fabl::PartitionLayout::uniform(m, s, bd);
    model.W.resize(model.layout.dim(), c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (int i = 0; i < model.layout.dim(); ++i) model.W(i, j) = gauss(rng);
    model.b.resize(c);
    for (int j = 0; j < c; ++j) model.b[j] = gauss(rng);
    for (int j = 0; j < c; ++j) model.class_names.push_back("class_" + std::to_string(j));
    if (standardized) {
        model.standardization.mean.resize(model.layout.dim());
        model.standardization.scale.resize(model.layout.dim());
        for (int i = 0; i < model.layout.dim(); ++i) {
            model.standardization.mean[i] = gauss(rng);
            model.standardization.scale[i] = 0.5 + std::abs(gauss(rng));
        }
    }
    return model;
}

fabl::FeatureVector make_vector(const fabl::PartitionLayout& layout, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    fabl::FeatureVector x;
    x.layout = layout;
    x.values.resize(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) x.values[i] = gauss(rng);
    return x;
}

} // namespace

TEST_CASE("predict_scores implements Eq. 5 against a loop oracle") {
    const fabl::WeightModel model = make_model(3, 4, 2, 5, 1, true);
    const fabl::FeatureVector x = make_vector(model.layout, 2);
    const fabl::ScoreVector out = fabl::predict_scores(x, model);

    REQUIRE(out.scores.size() == 5);
    int best = 0;
    for (int j = 0; j < 5; ++j) {
        double score = model.b[j];
        for (int i = 0; i < model.dim(); ++i) {
            const double std_x = (x.values[i] - model.standardization.mean[i]) *
                                 model.standardization.scale[i];
            score += std_x * model.W(i, j);
        }
        CHECK(out.scores[j] == doctest::Approx(score).epsilon(1e-12));
        if (out.scores[j] > out.scores[best]) best = j;
    }
    CHECK(out.predicted == best);
}

TEST_CASE("identity standardization when the model was trained raw") {
    const fabl::WeightModel model = make_model(2, 2, 3, 3, 7, false);
    CHECK(model.standardization.empty());
    const fabl::FeatureVector x = make_vector(model.layout, 8);
    const fabl::ScoreVector out = fabl::predict_scores(x, model);
    const Eigen::VectorXd expect = model.W.transpose() * x.values + model.b;
    CHECK((out.scores - expect).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("argmax ties break to the lowest class index") {
    fabl::WeightModel model = make_model(1, 1, 2, 3, 3);
    model.W.setZero();
    model.b << 1.5, 1.5, 1.5; // exact three-way tie
    fabl::FeatureVector x = make_vector(model.layout, 4);
    CHECK(fabl::predict_scores(x, model).predicted == 0);

    model.b << 0.0, 2.0, 2.0; // tie between 1 and 2
    CHECK(fabl::predict_scores(x, model).predicted == 1);
}

TEST_CASE("predict rejects layout and size mismatches") {
    const fabl::WeightModel model = make_model(2, 3, 2, 2, 5);
    fabl::FeatureVector x = make_vector(fabl::PartitionLayout::uniform(2, 3, 3), 6);
    try {
        fabl::predict_scores(x, model);
        FAIL("expected layout_mismatch");
    } catch (const fabl::Error& err) {
        CHECK(err.code() == fabl::ErrorCode::layout_mismatch);
    }
}

TEST_CASE("predict_batch equals per-column predict_scores bit-exactly") {
    const fabl::WeightModel model = make_model(4, 5, 3, 4, 11, true);
    fabl::FeatureMatrix X;
    X.layout = model.layout;
    X.values.resize(model.dim(), 9);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> gauss;
    for (int j = 0; j < 9; ++j)
        for (int i = 0; i < model.dim(); ++i) X.values(i, j) = gauss(rng);

    const std::vector<fabl::ScoreVector> batch = fabl::predict_batch(X, model);
    REQUIRE(batch.size() == 9);
    for (int j = 0; j < 9; ++j) {
        fabl::FeatureVector x;
        x.layout = model.layout;
        x.values = X.values.col(j);
        const fabl::ScoreVector single = fabl::predict_scores(x, model);
        CHECK(batch[static_cast<size_t>(j)].predicted == single.predicted);
        for (int k = 0; k < 4; ++k)
            CHECK(batch[static_cast<size_t>(j)].scores[k] == single.scores[k]);
    }
}

TEST_CASE("importance: norms, shares, and ranking") {
    fabl::WeightModel model = make_model(2, 3, 2, 2, 13);
    model.W.setZero();
    // Class 0: joint 1 carries all mass in modality 0; modality 1 empty.
    const int off01 = model.layout.block_offset(0, 1);
    model.W(off01, 0) = 3.0;
    model.W(off01 + 1, 0) = 4.0; // norm 5 in block (0,1)

    const fabl::ImportanceReport report = fabl::compute_importance(model);
    REQUIRE(report.per_class.size() == 2);
    const fabl::ClassImportance& c0 = report.per_class[0];
    CHECK(c0.joint_norms[1] == doctest::Approx(5.0));
    CHECK(c0.joint_norms[0] == 0.0);
    CHECK(c0.joint_ranking[0] == 1);
    CHECK(c0.joint_shares[1] == doctest::Approx(1.0));
    CHECK(c0.modality_norms[0] == doctest::Approx(5.0));
    CHECK(c0.modality_norms[1] == 0.0);
    CHECK(c0.modality_ranking[0] == 0);

    double share_sum = 0.0;
    for (double v : c0.joint_shares) share_sum += v;
    CHECK(share_sum == doctest::Approx(1.0));

    // Class 1 is all zeros: shares fall back to uniform, ranking by index.
    const fabl::ClassImportance& c1 = report.per_class[1];
    for (double v : c1.joint_shares) CHECK(v == doctest::Approx(1.0 / 3.0));
    CHECK(c1.joint_ranking[0] == 0);
    CHECK(c1.modality_ranking[0] == 0);
}

TEST_CASE("importance matches the group norm oracles on random weights") {
    const fabl::WeightModel model = make_model(3, 4, 3, 2, 21);
    const oracle::Dims dims = oracle::uniform_dims(3, 4, 3);
    const fabl::ImportanceReport report = fabl::compute_importance(model);
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 4; ++k)
            CHECK(report.per_class[static_cast<size_t>(i)].joint_norms[static_cast<size_t>(k)] ==
                  doctest::Approx(oracle::joint_norm(model.W.col(i), dims, k)).epsilon(1e-14));
        for (int q = 0; q < 3; ++q)
            CHECK(report.per_class[static_cast<size_t>(i)].modality_norms[static_cast<size_t>(q)] ==
                  doctest::Approx(oracle::modality_norm(model.W.col(i), dims, q)).epsilon(1e-14));
        // Ranking is consistent with the norms (descending).
        const auto& ranking = report.per_class[static_cast<size_t>(i)].joint_ranking;
        const auto& norms = report.per_class[static_cast<size_t>(i)].joint_norms;
        for (size_t r = 1; r < ranking.size(); ++r)
            CHECK(norms[static_cast<size_t>(ranking[r - 1])] >=
                  norms[static_cast<size_t>(ranking[r])]);
    }
}
