#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "fabl/body_model.hpp"
#include "fabl/data_io.hpp"
#include "fabl/error.hpp"
#include "fabl/io.hpp"
#include "fabl/model_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& test_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "fabl_test_data_io";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename Fn>
std::optional<fabl::ErrorCode> thrown_code(Fn&& fn) {
    try {
        fn();
        return std::nullopt;
    } catch (const fabl::Error& err) {
        return err.code();
    }
}

template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
        return {};
    } catch (const fabl::Error& err) {
        return err.message();
    }
}

fabl::SkeletonSequence sample_sequence() {
    fabl::SkeletonSequence seq;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int t = 0; t < 3; ++t) {
        fabl::SkeletonFrame frame;
        frame.torso_index = 1;
        for (int j = 0; j < 4; ++j)
            frame.joints.push_back({coord(rng), coord(rng), coord(rng), 0.5 + 0.5 * (j % 2)});
        seq.frames.push_back(std::move(frame));
    }
    // Values that expose any precision loss in the text round trip.
    seq.frames[0].joints[0] = {0.1, 1.0 / 3.0, -1.2345678901234567e-7, 1.0};
    seq.frames[1].joints[2] = {1e300, 4.9406564584124654e-324, M_PI, 1.0};
    seq.label = 7;
    seq.subject_id = "alpha";
    return seq;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

double parse_back(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    REQUIRE(res.ec == std::errc());
    return v;
}

} // namespace

TEST_CASE("canonical save/load round trip is value-exact") {
    const fs::path path = test_dir() / "roundtrip.skel";
    const fabl::SkeletonSequence seq = sample_sequence();
    fabl::save_canonical(seq, path.string());

    const fabl::SkeletonSequence back = fabl::load_canonical(path.string());
    REQUIRE(back.frame_count() == 3);
    CHECK(back.label.value() == 7);
    CHECK(back.subject_id.value() == "alpha");
    for (int t = 0; t < 3; ++t) {
        CHECK(back.frames[t].torso_index == 1);
        REQUIRE(back.frames[t].joint_count() == 4);
        for (int j = 0; j < 4; ++j) {
            const auto& a = seq.frames[t].joints[static_cast<size_t>(j)];
            const auto& b = back.frames[t].joints[static_cast<size_t>(j)];
            CHECK(same_bits(a.x, b.x));
            CHECK(same_bits(a.y, b.y));
            CHECK(same_bits(a.z, b.z));
            CHECK(same_bits(a.confidence, b.confidence));
        }
    }

    // Saving the loaded sequence reproduces the file byte for byte.
    const fs::path again = test_dir() / "roundtrip2.skel";
    fabl::save_canonical(back, again.string());
    CHECK(read_text(path) == read_text(again));
}

TEST_CASE("canonical reader defaults confidence and optional header fields") {
    const fs::path path = test_dir() / "bare.skel";
    write_text(path, "fabl_skeleton 1\njoints 2\ntorso_index 0\nframes 1\ndata\n"
                     "1 2 3\n4 5 6\n");
    const fabl::SkeletonSequence seq = fabl::load_canonical(path.string());
    CHECK_FALSE(seq.label.has_value());
    CHECK_FALSE(seq.subject_id.has_value());
    REQUIRE(seq.frame_count() == 1);
    CHECK(seq.frames[0].joints[0].confidence == 1.0);
    CHECK(seq.frames[0].joints[1].x == 4.0);
}

TEST_CASE("canonical reader rejects malformed files with the right codes") {
    using fabl::ErrorCode;
    const auto load = [](const std::string& body) {
        const fs::path path = test_dir() / "bad.skel";
        write_text(path, body);
        return thrown_code([&] { fabl::load_canonical(path.string()); });
    };

    CHECK(load("") == ErrorCode::parse_error);
    CHECK(load("not_a_skeleton 1\n") == ErrorCode::parse_error);
    CHECK(load("fabl_skeleton 2\n") == ErrorCode::parse_error);
    CHECK(load("fabl_skeleton 1\njoints 2\ndata\n") == ErrorCode::parse_error); // no frames
    CHECK(load("fabl_skeleton 1\njoints 2\nframes 1\ncolor blue\ndata\n") ==
          ErrorCode::parse_error);
    CHECK(load("fabl_skeleton 1\njoints 2\nframes 1\ndata\n1 2 3\n") ==
          ErrorCode::header_mismatch); // body ends early
    CHECK(load("fabl_skeleton 1\njoints 1\nframes 1\ndata\n1 2 3\n4 5 6\n") ==
          ErrorCode::header_mismatch); // trailing rows
    CHECK(load("fabl_skeleton 1\njoints 1\nframes 1\ndata\n1 two 3\n") ==
          ErrorCode::parse_error);
    CHECK(load("fabl_skeleton 1\njoints 1\nframes 1\ndata\n1 2\n") == ErrorCode::parse_error);
    CHECK(thrown_code([] { fabl::load_canonical((test_dir() / "absent.skel").string()); }) ==
          ErrorCode::io_error);
}

TEST_CASE("msr loader groups joint rows into fixed-size frames") {
    const fabl::BodyModel model = fabl::body_models::find_builtin("msr20").value();
    REQUIRE(model.joint_count() == 20);

    std::ostringstream body;
    for (int t = 0; t < 2; ++t)
        for (int j = 0; j < 20; ++j)
            body << t + 1 << " " << j * 0.5 << " " << -j << " 1\n";
    const fs::path path = test_dir() / "clip.txt";
    write_text(path, body.str());

    const fabl::SkeletonSequence seq = fabl::load_msr_skeleton(path.string(), model);
    REQUIRE(seq.frame_count() == 2);
    CHECK(seq.frames[0].torso_index == model.torso_index);
    CHECK(seq.frames[0].joints[3].x == 1.0);
    CHECK(seq.frames[1].joints[3].x == 2.0);
    CHECK(seq.frames[0].joints[3].y == 1.5);
    CHECK(seq.frames[1].joints[19].z == -19.0);

    // Per-frame row-count lines, present in some MSR distributions, are
    // skipped and do not change the result.
    std::ostringstream counted;
    for (int t = 0; t < 2; ++t) {
        counted << 20 << "\n";
        for (int j = 0; j < 20; ++j) counted << t + 1 << " " << j * 0.5 << " " << -j << " 1\n";
    }
    const fs::path counted_path = test_dir() / "clip_counted.txt";
    write_text(counted_path, counted.str());
    const fabl::SkeletonSequence seq2 = fabl::load_msr_skeleton(counted_path.string(), model);
    REQUIRE(seq2.frame_count() == 2);
    CHECK(seq2.frames[1].joints[19].z == seq.frames[1].joints[19].z);

    using fabl::ErrorCode;
    write_text(path, body.str() + "9 9 9 1\n"); // 41 rows
    CHECK(thrown_code([&] { fabl::load_msr_skeleton(path.string(), model); }) ==
          ErrorCode::frame_size_error);
    write_text(path, "1 2 3\n");
    CHECK(thrown_code([&] { fabl::load_msr_skeleton(path.string(), model); }) ==
          ErrorCode::parse_error);
    write_text(path, "");
    CHECK(thrown_code([&] { fabl::load_msr_skeleton(path.string(), model); }) ==
          ErrorCode::parse_error);
}

TEST_CASE("cad60 loader converts millimeters and skips orientations") {
    const fabl::BodyModel model = fabl::body_models::find_builtin("cad60").value();
    REQUIRE(model.joint_count() == 15);

    // 1 frame id + 11 oriented joints (9 orientation + conf + xyz + conf) +
    // 4 position-only joints (xyz + conf) + trailing comma = 172 fields.
    const auto frame_line = [](int frame_id) {
        std::ostringstream line;
        line << frame_id;
        for (int j = 0; j < 11; ++j) {
            for (int k = 0; k < 9; ++k) line << "," << 9999; // discarded orientation
            line << "," << 0; // discarded orientation confidence
            line << "," << 100 * (j + 1) << "," << -50 * (j + 1) << "," << 2000 << "," << 1;
        }
        for (int j = 0; j < 4; ++j)
            line << "," << 100 * (12 + j) << "," << 25 << "," << -1000 << "," << 0.5;
        line << ","; // trailing comma yields a final empty field
        return line.str();
    };

    const fs::path path = test_dir() / "cad60.txt";
    write_text(path, frame_line(1) + "\n" + frame_line(2) + "\nEND\nignored after END\n");
    const fabl::SkeletonSequence seq = fabl::load_cad60(path.string(), model);
    REQUIRE(seq.frame_count() == 2);
    REQUIRE(seq.frames[0].joint_count() == 15);
    CHECK(seq.frames[0].torso_index == model.torso_index);
    CHECK(seq.frames[0].joints[0].x == 100.0 / 1000.0);
    CHECK(seq.frames[0].joints[10].y == -550.0 / 1000.0);
    CHECK(seq.frames[0].joints[10].z == 2.0);
    CHECK(seq.frames[0].joints[0].confidence == 1.0);
    CHECK(seq.frames[0].joints[11].x == 1200.0 / 1000.0);
    CHECK(seq.frames[0].joints[14].x == 1500.0 / 1000.0);
    CHECK(seq.frames[0].joints[14].confidence == 0.5);

    using fabl::ErrorCode;
    write_text(path, "1,2,3,\n");
    CHECK(thrown_code([&] { fabl::load_cad60(path.string(), model); }) ==
          ErrorCode::frame_size_error);
    write_text(path, "END\n");
    CHECK(thrown_code([&] { fabl::load_cad60(path.string(), model); }) == ErrorCode::parse_error);
    const fabl::BodyModel big = fabl::body_models::find_builtin("msr20").value();
    CHECK(thrown_code([&] { fabl::load_cad60(path.string(), big); }) ==
          ErrorCode::invalid_body_model);
}

TEST_CASE("manifest parsing resolves the root against the manifest directory") {
    const fs::path dir = test_dir() / "set";
    fs::create_directories(dir / "data");
    fabl::SkeletonSequence seq = sample_sequence();
    seq.label.reset();
    seq.subject_id.reset();
    fabl::save_canonical(seq, (dir / "data" / "a.skel").string());
    fabl::save_canonical(seq, (dir / "data" / "b.skel").string());

    const fs::path manifest_path = dir / "set.manifest";
    write_text(manifest_path, "fabl_manifest 1\nformat canonical\nbody_model generic15\n"
                              "root data\nentry a.skel walk s1\nentry b.skel jump s2\n");
    const fabl::DatasetManifest manifest = fabl::load_manifest(manifest_path.string());
    CHECK(manifest.format == "canonical");
    CHECK(manifest.body_model == "generic15");
    CHECK(fs::path(manifest.root) == dir / "data");
    REQUIRE(manifest.entries.size() == 2);
    CHECK(manifest.entries[0].file == "a.skel");
    CHECK(manifest.entries[0].label == "walk");
    CHECK(manifest.entries[0].subject_id == "s1");

    // Without a root field the manifest directory itself is the root.
    write_text(manifest_path, "fabl_manifest 1\nformat canonical\nbody_model generic15\n"
                              "entry data/a.skel walk s1\n");
    CHECK(fs::path(fabl::load_manifest(manifest_path.string()).root) == dir);

    // An absolute root is taken verbatim.
    write_text(manifest_path, "fabl_manifest 1\nformat canonical\nbody_model generic15\n"
                              "root /somewhere/else\nentry a.skel walk s1\n");
    CHECK(fabl::load_manifest(manifest_path.string()).root == "/somewhere/else");

    using fabl::ErrorCode;
    const auto load = [&](const std::string& body) {
        write_text(manifest_path, body);
        return thrown_code([&] { fabl::load_manifest(manifest_path.string()); });
    };
    CHECK(load("fabl_manifest 2\n") == ErrorCode::parse_error);
    CHECK(load("fabl_manifest 1\nformat parquet\nbody_model g\nentry a w s\n") ==
          ErrorCode::parse_error);
    CHECK(load("fabl_manifest 1\nformat canonical\nentry a w s\n") == ErrorCode::parse_error);
    CHECK(load("fabl_manifest 1\nformat canonical\nbody_model generic15\n") ==
          ErrorCode::parse_error);
    CHECK(load("fabl_manifest 1\nformat canonical\nbody_model g\nentry a.skel walk\n") ==
          ErrorCode::parse_error); // entry needs file, label, subject
}

TEST_CASE("load_dataset remaps labels lexicographically and names failing files") {
    const fs::path dir = test_dir() / "dataset";
    fs::create_directories(dir);
    fabl::SkeletonSequence seq = sample_sequence();
    seq.label.reset();
    seq.subject_id.reset();
    // generic15 needs 15 joints; sample_sequence has 4, so rebuild.
    fabl::SkeletonSequence full;
    for (int t = 0; t < 3; ++t) {
        fabl::SkeletonFrame frame;
        frame.torso_index = fabl::body_models::find_builtin("generic15").value().torso_index;
        for (int j = 0; j < 15; ++j)
            frame.joints.push_back({0.1 * j, 0.2 * t, 0.3, 1.0});
        full.frames.push_back(std::move(frame));
    }
    fabl::save_canonical(full, (dir / "w1.skel").string());
    fabl::save_canonical(full, (dir / "j1.skel").string());
    fabl::save_canonical(full, (dir / "w2.skel").string());

    const fs::path manifest_path = dir / "d.manifest";
    write_text(manifest_path, "fabl_manifest 1\nformat canonical\nbody_model generic15\n"
                              "entry w1.skel walk s1\nentry j1.skel jump s2\n"
                              "entry w2.skel walk s1\n");
    const fabl::LoadedDataset data = fabl::load_dataset(fabl::load_manifest(manifest_path.string()));
    REQUIRE(data.class_names.size() == 2);
    CHECK(data.class_names[0] == "jump");
    CHECK(data.class_names[1] == "walk");
    REQUIRE(data.sequences.size() == 3);
    CHECK(data.sequences[0].label.value() == 1);
    CHECK(data.sequences[1].label.value() == 0);
    CHECK(data.sequences[2].label.value() == 1);
    CHECK(data.sequences[0].subject_id.value() == "s1");
    CHECK(data.model.name == "generic15");

    // A failing entry reports which file broke, not just the parse position.
    write_text(manifest_path, "fabl_manifest 1\nformat canonical\nbody_model generic15\n"
                              "entry missing.skel walk s1\n");
    const std::string msg = thrown_message(
        [&] { fabl::load_dataset(fabl::load_manifest(manifest_path.string())); });
    CHECK(msg.find("missing.skel") == 0);

    // A sequence that loads but fails body-model validation also gets context.
    fabl::save_canonical(seq, (dir / "short.skel").string());
    write_text(manifest_path, "fabl_manifest 1\nformat canonical\nbody_model generic15\n"
                              "entry short.skel walk s1\n");
    const std::string msg2 = thrown_message(
        [&] { fabl::load_dataset(fabl::load_manifest(manifest_path.string())); });
    CHECK(msg2.find("short.skel") == 0);
}

TEST_CASE("model save/load round trip is bit-exact") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss;

    fabl::WeightModel model;
    model.layout = fabl::PartitionLayout({{2, 3}, {1, 4}});
    const int d = model.layout.dim();
    model.W.resize(d, 3);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < 3; ++j) model.W(i, j) = gauss(rng);
    model.W(0, 0) = 1.0 / 3.0;
    model.W(1, 1) = 1e-300;
    model.b.resize(3);
    model.b << 0.25, M_PI, -7.0;
    model.class_names = {"alpha", "beta", "gamma"};
    model.standardization.mean = Eigen::VectorXd::Random(d);
    model.standardization.scale = Eigen::VectorXd::Random(d).cwiseAbs();
    model.feature_ranges.ranges = {{{-1.0, 1.0}, {0.0, 0.1}}, {{-2.5, 2.5}}};
    model.histogram_config.bins = 8;
    model.histogram_config.range_policy = fabl::HistogramConfig::RangePolicy::fixed;
    model.histogram_config.fixed_lo = -3.0;
    model.histogram_config.fixed_hi = 3.0;
    model.histogram_config.normalize = false;
    model.body_model_name = "generic15";
    model.hyperparams.gamma1 = 0.125;
    model.hyperparams.gamma2 = 2.0;
    model.hyperparams.init_ridge = 1e-5;
    model.hyperparams.epsilon = 1e-9;
    model.hyperparams.max_iter = 77;
    model.hyperparams.tol = 1e-7;
    model.hyperparams.standardize = false;

    const fs::path path = test_dir() / "model.fabl";
    fabl::save_model(model, path.string());
    const fabl::WeightModel back = fabl::load_model(path.string());

    CHECK((model.W - back.W).cwiseAbs().maxCoeff() == 0.0);
    CHECK((model.b - back.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.layout.dims() == model.layout.dims());
    CHECK(back.class_names == model.class_names);
    CHECK((model.standardization.mean - back.standardization.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((model.standardization.scale - back.standardization.scale).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.feature_ranges.ranges == model.feature_ranges.ranges);
    CHECK(back.histogram_config.bins == 8);
    CHECK(back.histogram_config.range_policy == fabl::HistogramConfig::RangePolicy::fixed);
    CHECK(back.histogram_config.fixed_lo == -3.0);
    CHECK(back.histogram_config.fixed_hi == 3.0);
    CHECK(back.histogram_config.normalize == false);
    CHECK(back.body_model_name == "generic15");
    CHECK(back.hyperparams.gamma1 == 0.125);
    CHECK(back.hyperparams.gamma2 == 2.0);
    CHECK(back.hyperparams.init_ridge == 1e-5);
    CHECK(back.hyperparams.epsilon == 1e-9);
    CHECK(back.hyperparams.max_iter == 77);
    CHECK(back.hyperparams.tol == 1e-7);
    CHECK(back.hyperparams.standardize == false);

    const fs::path again = test_dir() / "model2.fabl";
    fabl::save_model(back, again.string());
    CHECK(read_text(path) == read_text(again));

    using fabl::ErrorCode;
    write_text(path, "fabl_model 99\n");
    CHECK(thrown_code([&] { fabl::load_model(path.string()); }) == ErrorCode::parse_error);
    CHECK(thrown_code([] { fabl::load_model((test_dir() / "absent.fabl").string()); }) ==
          ErrorCode::io_error);
}

TEST_CASE("feature file round trip keeps unlabeled and anonymous columns") {
    fabl::FeatureFile file;
    file.features.layout = fabl::PartitionLayout::uniform(2, 2, 3);
    file.features.values = Eigen::MatrixXd::Random(file.features.layout.dim(), 4);
    file.features.values(0, 0) = 1.0 / 7.0;
    file.labels = {0, -1, 2, 1};
    file.subject_ids = {"s1", "", "s2", "s3"};
    file.class_names = {"a", "b", "c"};
    file.ranges.ranges = {{{0.0, 1.0}, {0.0, 2.0}, {-1.0, 1.0}},
                          {{-0.5, 0.5}, {0.0, 4.0}, {1.0, 3.0}}};
    file.config.bins = 3;
    file.body_model_name = "msr20";

    const fs::path path = test_dir() / "features.fabl";
    fabl::save_features(file, path.string());
    const fabl::FeatureFile back = fabl::load_features(path.string());

    CHECK((file.features.values - back.features.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.features.layout.dims() == file.features.layout.dims());
    CHECK(back.labels == file.labels);
    CHECK(back.subject_ids == file.subject_ids);
    CHECK(back.class_names == file.class_names);
    CHECK(back.ranges.ranges == file.ranges.ranges);
    CHECK(back.config.bins == 3);
    CHECK(back.body_model_name == "msr20");

    const fs::path again = test_dir() / "features2.fabl";
    fabl::save_features(back, again.string());
    CHECK(read_text(path) == read_text(again));
}

TEST_CASE("format_double picks the shortest exact decimal form") {
    const double cases[] = {0.0,       1.0,   0.1,     1.0 / 3.0, M_PI,   1e308,
                            1e-308,    5e-324, 2.5,    -17.75,    1e16,   123456.789,
                            -1.2345e-7};
    for (double v : cases) {
        const std::string s = fabl::io::format_double(v);
        CAPTURE(s);
        CHECK(same_bits(parse_back(s), v));
    }
    CHECK(fabl::io::format_double(-0.0)[0] == '-'); // sign survives
    CHECK(same_bits(parse_back(fabl::io::format_double(-0.0)), -0.0));
    CHECK(fabl::io::format_double(1.0) == "1");
    CHECK(fabl::io::format_double(0.5) == "0.5");
    CHECK(fabl::io::format_int(-9223372036854775807LL) == "-9223372036854775807");
    CHECK(fabl::io::format_int(0) == "0");
}

TEST_CASE("atomic writes land complete and leave no temp files") {
    const fs::path dir = test_dir() / "atomic";
    fs::create_directories(dir);
    const fs::path target = dir / "out.txt";
    fabl::io::write_file_atomic(target, "first\n");
    CHECK(read_text(target) == "first\n");
    fabl::io::write_file_atomic(target, "second\n");
    CHECK(read_text(target) == "second\n");

    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 1);

    // Missing parents are created, so point the failure case below a file.
    CHECK(thrown_code([&] { fabl::io::write_file_atomic(target / "sub.txt", "y"); }) ==
          fabl::ErrorCode::io_error);
}

TEST_CASE("label matrix helper carries class names through") {
    const fabl::LabelMatrix lm = fabl::build_label_matrix({1, 0}, 2, {"neg", "pos"});
    CHECK(lm.class_names == std::vector<std::string>{"neg", "pos"});
    CHECK(lm.Y(0, 1) == 1.0);
    CHECK(lm.Y(1, 0) == 1.0);
    CHECK(thrown_code([] { fabl::build_label_matrix({0}, 2, {"only"}); }) ==
          fabl::ErrorCode::shape_mismatch);
}
