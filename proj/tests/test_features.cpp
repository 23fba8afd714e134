#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fabl/body_model.hpp"
#include "fabl/error.hpp"
#include "fabl/features.hpp"

#include "oracles.hpp"

namespace {

fabl::SkeletonFrame make_frame(std::mt19937_64& rng, int joints = 15, int torso = 2) {
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    fabl::SkeletonFrame frame;
    frame.torso_index = torso;
    for (int j = 0; j < joints; ++j)
        frame.joints.push_back({coord(rng), coord(rng), coord(rng), 1.0});
    return frame;
}

fabl::SkeletonSequence make_sequence(int frames, std::uint64_t seed, int joints = 15) {
    std::mt19937_64 rng(seed);
    fabl::SkeletonSequence seq;
    for (int t = 0; t < frames; ++t) seq.frames.push_back(make_frame(rng, joints));
    return seq;
}

fabl::BodyModel plain_model(int joints = 15) {
    fabl::BodyModel model;
    model.name = "plain";
    model.torso_index = 2;
    for (int j = 0; j < joints; ++j) model.joint_names.push_back("j" + std::to_string(j));
    return model;
}

} // namespace

TEST_CASE("per-frame features match loop oracles") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const fabl::SkeletonFrame curr = make_frame(rng);
        const fabl::SkeletonFrame prev = make_frame(rng);
        const fabl::SkeletonFrame init = make_frame(rng);
        const int torso = curr.torso_index;

        const auto spatial = fabl::spatial_displacement(curr);
        REQUIRE(spatial.size() == 15);
        for (int j = 0; j < 15; ++j) {
            CHECK(spatial[j][0] == curr.joints[j].x - curr.joints[torso].x);
            CHECK(spatial[j][1] == curr.joints[j].y - curr.joints[torso].y);
            CHECK(spatial[j][2] == curr.joints[j].z - curr.joints[torso].z);
        }
        CHECK(spatial[torso][0] == 0.0);
        CHECK(spatial[torso][1] == 0.0);
        CHECK(spatial[torso][2] == 0.0);

        const auto temporal = fabl::temporal_displacement(curr, prev);
        for (int j = 0; j < 15; ++j) {
            CHECK(temporal[j][0] == curr.joints[j].x - prev.joints[j].x);
            CHECK(temporal[j][1] == curr.joints[j].y - prev.joints[j].y);
            CHECK(temporal[j][2] == curr.joints[j].z - prev.joints[j].z);
        }

        const auto longterm = fabl::longterm_displacement(curr, init);
        for (int j = 0; j < 15; ++j)
            CHECK(longterm[j][0] == curr.joints[j].x - init.joints[j].x);

        const auto dist = fabl::spatial_distance(curr);
        for (int j = 0; j < 15; ++j) {
            const double dx = curr.joints[j].x - curr.joints[torso].x;
            const double dy = curr.joints[j].y - curr.joints[torso].y;
            const double dz = curr.joints[j].z - curr.joints[torso].z;
            CHECK(dist[j] == std::sqrt(dx * dx + dy * dy + dz * dz));
            CHECK(dist[j] >= 0.0);
        }
        CHECK(dist[torso] == 0.0);
    }
}

TEST_CASE("layout_for produces the documented dimensions") {
    fabl::HistogramConfig cfg; // 16 bins
    const fabl::PartitionLayout layout = fabl::layout_for(plain_model(15), cfg);
    CHECK(layout.modalities() == 4);
    CHECK(layout.joints() == 15);
    // d = s * (B*3 + B*3 + B*3 + B) = 15 * 160 = 2400 at B = 16.
    CHECK(layout.dim() == 2400);
    CHECK(layout.block_dim(0, 0) == 48);
    CHECK(layout.block_dim(3, 0) == 16);

    cfg.bins = 8;
    CHECK(fabl::layout_for(plain_model(15), cfg).dim() == 1200);
}

TEST_CASE("histograms match a counting oracle") {
    // Two joints, three frames, hand-checkable stream per channel.
    fabl::SkeletonSequence seq = make_sequence(3, 21, 5);
    fabl::HistogramConfig cfg;
    cfg.bins = 4;
    cfg.normalize = false;

    const fabl::FeatureRanges ranges = fabl::compute_feature_ranges({&seq, 1}, cfg);
    const fabl::FeatureVector x = fabl::extract_features(seq, cfg, ranges);

    // Rebuild every (modality, joint, channel) stream with the oracle.
    const int s = 5;
    for (int q = 0; q < 4; ++q) {
        const int channels = fabl::modality_channels(q);
        for (int r = 0; r < s; ++r) {
            for (int ch = 0; ch < channels; ++ch) {
                std::vector<double> stream;
                const int t0 = (q == 1 || q == 2) ? 1 : 0; // temporal modalities skip frame 0
                for (int t = t0; t < seq.frame_count(); ++t) {
                    const auto& frame = seq.frames[static_cast<size_t>(t)];
                    double v = 0.0;
                    if (q == 0) v = fabl::spatial_displacement(frame)[static_cast<size_t>(r)][static_cast<size_t>(ch)];
                    if (q == 1)
                        v = fabl::temporal_displacement(frame, seq.frames[static_cast<size_t>(t - 1)])
                                [static_cast<size_t>(r)][static_cast<size_t>(ch)];
                    if (q == 2)
                        v = fabl::longterm_displacement(frame, seq.frames[0])[static_cast<size_t>(r)]
                                [static_cast<size_t>(ch)];
                    if (q == 3) v = fabl::spatial_distance(frame)[static_cast<size_t>(r)];
                    stream.push_back(v);
                }
                const auto& range = ranges.ranges[static_cast<size_t>(q)][static_cast<size_t>(ch)];
                const std::vector<double> expect =
                    oracle::histogram(stream, range[0], range[1], cfg.bins, cfg.normalize);
                const int off = x.layout.block_offset(q, r) + ch * cfg.bins;
                for (int bin = 0; bin < cfg.bins; ++bin)
                    CHECK(x.values[off + bin] == expect[static_cast<size_t>(bin)]);
            }
        }
    }

    // Unnormalized counts per channel must total the stream length.
    for (int q = 0; q < 4; ++q)
        for (int r = 0; r < s; ++r)
            for (int ch = 0; ch < fabl::modality_channels(q); ++ch) {
                const int off = x.layout.block_offset(q, r) + ch * cfg.bins;
                const double total = x.values.segment(off, cfg.bins).sum();
                const double expect = (q == 1 || q == 2) ? 2.0 : 3.0; // T=3
                CHECK(total == expect);
            }
}

TEST_CASE("normalized histograms sum to one per channel") {
    const fabl::SkeletonSequence seq = make_sequence(9, 3);
    fabl::HistogramConfig cfg;
    const fabl::FeatureVector x = fabl::extract_features(seq, cfg);
    for (int off = 0; off + cfg.bins <= x.values.size(); off += cfg.bins)
        CHECK(std::abs(x.values.segment(off, cfg.bins).sum() - 1.0) <= 1e-12);
}

TEST_CASE("out-of-range values clamp into the edge bins") {
    fabl::SkeletonSequence seq = make_sequence(4, 8);
    fabl::HistogramConfig cfg;
    cfg.bins = 4;
    cfg.normalize = false;
    cfg.range_policy = fabl::HistogramConfig::RangePolicy::fixed;
    cfg.fixed_lo = -0.001;
    cfg.fixed_hi = 0.001; // almost everything lands outside
    const fabl::FeatureRanges ranges = fabl::compute_feature_ranges({&seq, 1}, cfg);
    const fabl::FeatureVector x = fabl::extract_features(seq, cfg, ranges);

    // Every count is in a bin (clamped, not dropped): totals still match.
    for (int q = 0; q < 4; ++q)
        for (int r = 0; r < 15; ++r)
            for (int ch = 0; ch < fabl::modality_channels(q); ++ch) {
                const int off = x.layout.block_offset(q, r) + ch * cfg.bins;
                const double expect = (q == 1 || q == 2) ? 3.0 : 4.0;
                CHECK(x.values.segment(off, cfg.bins).sum() == expect);
            }
}

TEST_CASE("degenerate ranges are widened instead of dividing by zero") {
    // A perfectly static sequence: temporal displacement is identically 0.
    fabl::SkeletonSequence seq;
    fabl::SkeletonFrame frame;
    frame.torso_index = 2;
    for (int j = 0; j < 15; ++j)
        frame.joints.push_back({0.1 * j, 0.2 * j, 1.0 + 0.05 * j, 1.0});
    seq.frames.assign(6, frame);

    fabl::HistogramConfig cfg;
    const fabl::FeatureVector x = fabl::extract_features(seq, cfg);
    CHECK(x.values.allFinite());
    // All mass concentrates in a single bin per channel.
    for (int off = 0; off + cfg.bins <= x.values.size(); off += cfg.bins) {
        CHECK(x.values.segment(off, cfg.bins).maxCoeff() == doctest::Approx(1.0));
        CHECK(std::abs(x.values.segment(off, cfg.bins).sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("ranges pool across sequences per modality and channel") {
    const std::vector<fabl::SkeletonSequence> seqs = {make_sequence(5, 100), make_sequence(7, 101)};
    fabl::HistogramConfig cfg;
    const fabl::FeatureRanges pooled = fabl::compute_feature_ranges(seqs, cfg);
    const fabl::FeatureRanges first = fabl::compute_feature_ranges({seqs.data(), 1}, cfg);
    const fabl::FeatureRanges second = fabl::compute_feature_ranges({seqs.data() + 1, 1}, cfg);

    REQUIRE(pooled.modalities() == 4);
    for (int q = 0; q < 4; ++q)
        for (size_t ch = 0; ch < pooled.ranges[static_cast<size_t>(q)].size(); ++ch) {
            const auto& p = pooled.ranges[static_cast<size_t>(q)][ch];
            const auto& a = first.ranges[static_cast<size_t>(q)][ch];
            const auto& b = second.ranges[static_cast<size_t>(q)][ch];
            CHECK(p[0] == std::min(a[0], b[0]));
            CHECK(p[1] == std::max(a[1], b[1]));
        }

    // Fixed policy ignores the data entirely.
    cfg.range_policy = fabl::HistogramConfig::RangePolicy::fixed;
    cfg.fixed_lo = -3.0;
    cfg.fixed_hi = 3.0;
    const fabl::FeatureRanges fixed = fabl::compute_feature_ranges(seqs, cfg);
    for (int q = 0; q < 4; ++q)
        for (const auto& range : fixed.ranges[static_cast<size_t>(q)]) {
            CHECK(range[0] == -3.0);
            CHECK(range[1] == 3.0);
        }
}

TEST_CASE("temporal modalities stream from frame 1") {
    // T = 2: temporal and long-term histograms hold exactly one sample.
    const fabl::SkeletonSequence seq = make_sequence(2, 55);
    fabl::HistogramConfig cfg;
    cfg.bins = 4;
    cfg.normalize = false;
    const fabl::FeatureVector x = fabl::extract_features(seq, cfg);
    for (int r = 0; r < 15; ++r)
        for (int ch = 0; ch < 3; ++ch) {
            const int off1 = x.layout.block_offset(1, r) + ch * cfg.bins;
            const int off2 = x.layout.block_offset(2, r) + ch * cfg.bins;
            CHECK(x.values.segment(off1, cfg.bins).sum() == 1.0);
            CHECK(x.values.segment(off2, cfg.bins).sum() == 1.0);
        }
}

TEST_CASE("extraction rejects malformed input") {
    fabl::HistogramConfig cfg;

    fabl::SkeletonSequence one = make_sequence(1, 2);
    CHECK_THROWS_AS(fabl::extract_features(one, cfg), fabl::Error);

    fabl::SkeletonSequence ragged = make_sequence(4, 2);
    ragged.frames[2].joints.pop_back();
    CHECK_THROWS_AS(fabl::extract_features(ragged, cfg), fabl::Error);

    fabl::SkeletonSequence nan_seq = make_sequence(4, 2);
    nan_seq.frames[1].joints[3].y = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fabl::extract_features(nan_seq, cfg), fabl::Error);
}

TEST_CASE("extract_dataset stacks columns and checks layouts") {
    const std::vector<fabl::SkeletonSequence> seqs = {make_sequence(5, 200), make_sequence(6, 201),
                                                      make_sequence(7, 202)};
    fabl::HistogramConfig cfg;
    const fabl::FeatureRanges ranges = fabl::compute_feature_ranges(seqs, cfg);
    const fabl::FeatureMatrix X = fabl::extract_dataset(seqs, cfg, ranges);
    CHECK(X.count() == 3);
    CHECK(X.dim() == 2400);
    for (int i = 0; i < 3; ++i) {
        const fabl::FeatureVector x = fabl::extract_features(seqs[static_cast<size_t>(i)], cfg, ranges);
        CHECK((X.values.col(i) - x.values).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("modality metadata") {
    CHECK(fabl::modality_channels(0) == 3);
    CHECK(fabl::modality_channels(1) == 3);
    CHECK(fabl::modality_channels(2) == 3);
    CHECK(fabl::modality_channels(3) == 1);
    CHECK(std::string(fabl::modality_name(0)) == "spatial_displacement");
    CHECK(std::string(fabl::modality_name(3)) == "spatial_distance");
}
