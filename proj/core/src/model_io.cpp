#include "fabl/model_io.hpp"

#include <sstream>

#include "fabl/error.hpp"
#include "text_io.hpp"

namespace fabl {

namespace {

void check_token_name(const std::string& name, const char* what) {
    if (name.find_first_of(" \t\n\r") != std::string::npos)
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + " '" + name + "' must not contain whitespace");
}

void write_layout(std::ostringstream& out, const PartitionLayout& layout) {
    out << "layout " << layout.modalities() << " " << layout.joints() << "\n";
    for (int q = 0; q < layout.modalities(); ++q) {
        out << "layout_row";
        for (int r = 0; r < layout.joints(); ++r) out << " " << layout.block_dim(q, r);
        out << "\n";
    }
}

// Parses the layout_row lines that follow an already-consumed
// 'layout <m> <s>' header line.
PartitionLayout read_layout_rows(detail::LineReader& reader,
                                 const std::vector<std::string_view>& header_fields) {
    const int m = static_cast<int>(detail::parse_int(header_fields[1], reader.where()));
    const int s = static_cast<int>(detail::parse_int(header_fields[2], reader.where()));
    if (m < 1 || s < 1)
        throw Error(ErrorCode::parse_error, reader.where() + ": layout dimensions must be positive");
    std::vector<std::vector<int>> dims(static_cast<size_t>(m));
    for (int q = 0; q < m; ++q) {
        auto row = detail::split_fields(reader.require("a layout_row line"));
        if (row.size() != static_cast<size_t>(s) + 1 || row[0] != "layout_row")
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": expected 'layout_row' with " + std::to_string(s) +
                            " block dimensions");
        for (int r = 0; r < s; ++r)
            dims[static_cast<size_t>(q)].push_back(
                static_cast<int>(detail::parse_int(row[static_cast<size_t>(r) + 1], reader.where())));
    }
    return PartitionLayout(std::move(dims));
}

void write_histogram(std::ostringstream& out, const HistogramConfig& cfg) {
    out << "histogram " << cfg.bins << " "
        << (cfg.range_policy == HistogramConfig::RangePolicy::fixed ? "fixed" : "train_minmax")
        << " " << detail::format_double(cfg.fixed_lo) << " " << detail::format_double(cfg.fixed_hi)
        << " " << (cfg.normalize ? 1 : 0) << "\n";
}

HistogramConfig read_histogram(detail::LineReader& reader, std::string_view line) {
    auto fields = detail::split_fields(line);
    if (fields.size() != 6)
        throw Error(ErrorCode::parse_error,
                    reader.where() + ": expected 'histogram <bins> <policy> <lo> <hi> <normalize>'");
    HistogramConfig cfg;
    cfg.bins = static_cast<int>(detail::parse_int(fields[1], reader.where()));
    if (fields[2] == "fixed")
        cfg.range_policy = HistogramConfig::RangePolicy::fixed;
    else if (fields[2] == "train_minmax")
        cfg.range_policy = HistogramConfig::RangePolicy::train_minmax;
    else
        throw Error(ErrorCode::parse_error,
                    reader.where() + ": unknown range policy '" + std::string(fields[2]) + "'");
    cfg.fixed_lo = detail::parse_double(fields[3], reader.where());
    cfg.fixed_hi = detail::parse_double(fields[4], reader.where());
    cfg.normalize = detail::parse_int(fields[5], reader.where()) != 0;
    return cfg;
}

void write_ranges(std::ostringstream& out, const FeatureRanges& ranges) {
    for (size_t q = 0; q < ranges.ranges.size(); ++q)
        for (size_t ch = 0; ch < ranges.ranges[q].size(); ++ch)
            out << "range " << q << " " << ch << " "
                << detail::format_double(ranges.ranges[q][ch][0]) << " "
                << detail::format_double(ranges.ranges[q][ch][1]) << "\n";
}

void read_range_line(detail::LineReader& reader, std::string_view line, FeatureRanges& ranges) {
    auto fields = detail::split_fields(line);
    if (fields.size() != 5)
        throw Error(ErrorCode::parse_error, reader.where() + ": expected 'range <q> <ch> <lo> <hi>'");
    const size_t q = static_cast<size_t>(detail::parse_int(fields[1], reader.where()));
    const size_t ch = static_cast<size_t>(detail::parse_int(fields[2], reader.where()));
    if (ranges.ranges.size() <= q) ranges.ranges.resize(q + 1);
    if (ranges.ranges[q].size() <= ch) ranges.ranges[q].resize(ch + 1);
    ranges.ranges[q][ch] = {detail::parse_double(fields[3], reader.where()),
                            detail::parse_double(fields[4], reader.where())};
}

Eigen::VectorXd read_vector(detail::LineReader& reader, std::string_view line, const char* key,
                            Eigen::Index expected) {
    auto fields = detail::split_fields(line);
    if (fields.empty() || fields[0] != key ||
        static_cast<Eigen::Index>(fields.size()) != expected + 1)
        throw Error(ErrorCode::parse_error,
                    reader.where() + ": expected '" + key + "' with " + std::to_string(expected) +
                        " values");
    Eigen::VectorXd out(expected);
    for (Eigen::Index i = 0; i < expected; ++i)
        out[i] = detail::parse_double(fields[static_cast<size_t>(i) + 1], reader.where());
    return out;
}

} // namespace

void save_model(const WeightModel& model, const std::string& path) {
    if (model.W.rows() != model.layout.dim() || model.W.cols() != model.b.size())
        throw Error(ErrorCode::shape_mismatch, "model W/b/layout shapes are inconsistent");
    if (static_cast<Eigen::Index>(model.class_names.size()) != model.W.cols())
        throw Error(ErrorCode::shape_mismatch, "model class_names do not match W columns");
    for (const std::string& name : model.class_names) check_token_name(name, "class name");
    if (!model.body_model_name.empty()) check_token_name(model.body_model_name, "body model name");

    std::ostringstream out;
    out << "fabl_model 1\n";
    out << "dim " << model.dim() << "\n";
    out << "classes " << model.classes() << "\n";
    if (!model.body_model_name.empty()) out << "body_model " << model.body_model_name << "\n";
    write_layout(out, model.layout);
    for (const std::string& name : model.class_names) out << "class " << name << "\n";

    const Hyperparams& hp = model.hyperparams;
    out << "hyperparams " << detail::format_double(hp.gamma1) << " "
        << detail::format_double(hp.gamma2) << " " << detail::format_double(hp.epsilon) << " "
        << detail::format_double(hp.tol) << " " << hp.max_iter << " "
        << detail::format_double(hp.init_ridge) << " " << (hp.standardize ? 1 : 0) << " "
        << hp.threads << "\n";
    write_histogram(out, model.histogram_config);
    write_ranges(out, model.feature_ranges);

    if (!model.standardization.empty()) {
        if (model.standardization.mean.size() != model.dim() ||
            model.standardization.scale.size() != model.dim())
            throw Error(ErrorCode::shape_mismatch, "standardization does not match model dimension");
        out << "mean";
        for (Eigen::Index i = 0; i < model.dim(); ++i)
            out << " " << detail::format_double(model.standardization.mean[i]);
        out << "\nscale";
        for (Eigen::Index i = 0; i < model.dim(); ++i)
            out << " " << detail::format_double(model.standardization.scale[i]);
        out << "\n";
    }

    out << "b";
    for (Eigen::Index i = 0; i < model.b.size(); ++i)
        out << " " << detail::format_double(model.b[i]);
    out << "\n";
    out << "W\n";
    for (Eigen::Index i = 0; i < model.W.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.W.cols(); ++j) {
            if (j > 0) out << " ";
            out << detail::format_double(model.W(i, j));
        }
        out << "\n";
    }
    detail::write_file_atomic(path, out.str());
}

WeightModel load_model(const std::string& path) {
    detail::LineReader reader(path);

    auto header = detail::split_fields(reader.require("fabl_model header"));
    if (header.size() != 2 || header[0] != "fabl_model")
        throw Error(ErrorCode::parse_error, reader.where() + ": expected 'fabl_model <version>'");
    if (detail::parse_int(header[1], reader.where()) != 1)
        throw Error(ErrorCode::parse_error, reader.where() + ": unsupported model format version");

    WeightModel model;
    Eigen::Index dim = -1;
    Eigen::Index classes = -1;
    bool have_layout = false;
    bool have_b = false;

    std::string_view line;
    while (reader.next(line)) {
        auto fields = detail::split_fields(line);
        const std::string_view key = fields[0];
        if (key == "dim" && fields.size() == 2) {
            dim = detail::parse_int(fields[1], reader.where());
        } else if (key == "classes" && fields.size() == 2) {
            classes = detail::parse_int(fields[1], reader.where());
        } else if (key == "body_model" && fields.size() == 2) {
            model.body_model_name = std::string(fields[1]);
        } else if (key == "layout" && fields.size() == 3) {
            model.layout = read_layout_rows(reader, fields);
            have_layout = true;
        } else if (key == "class" && fields.size() == 2) {
            model.class_names.emplace_back(fields[1]);
        } else if (key == "hyperparams" && fields.size() == 9) {
            Hyperparams hp;
            hp.gamma1 = detail::parse_double(fields[1], reader.where());
            hp.gamma2 = detail::parse_double(fields[2], reader.where());
            hp.epsilon = detail::parse_double(fields[3], reader.where());
            hp.tol = detail::parse_double(fields[4], reader.where());
            hp.max_iter = static_cast<int>(detail::parse_int(fields[5], reader.where()));
            hp.init_ridge = detail::parse_double(fields[6], reader.where());
            hp.standardize = detail::parse_int(fields[7], reader.where()) != 0;
            hp.threads = static_cast<int>(detail::parse_int(fields[8], reader.where()));
            model.hyperparams = hp;
        } else if (key == "histogram") {
            model.histogram_config = read_histogram(reader, line);
        } else if (key == "range") {
            read_range_line(reader, line, model.feature_ranges);
        } else if (key == "mean") {
            if (dim < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'mean' before 'dim'");
            model.standardization.mean = read_vector(reader, line, "mean", dim);
        } else if (key == "scale") {
            if (dim < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'scale' before 'dim'");
            model.standardization.scale = read_vector(reader, line, "scale", dim);
        } else if (key == "b") {
            if (classes < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'b' before 'classes'");
            model.b = read_vector(reader, line, "b", classes);
            have_b = true;
        } else if (key == "W" && fields.size() == 1) {
            if (dim < 0 || classes < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'W' before 'dim'/'classes'");
            model.W.resize(dim, classes);
            for (Eigen::Index i = 0; i < dim; ++i) {
                auto row = detail::split_fields(reader.require("a W row"));
                if (static_cast<Eigen::Index>(row.size()) != classes)
                    throw Error(ErrorCode::parse_error,
                                reader.where() + ": W row has " + std::to_string(row.size()) +
                                    " values, expected " + std::to_string(classes));
                for (Eigen::Index j = 0; j < classes; ++j)
                    model.W(i, j) = detail::parse_double(row[static_cast<size_t>(j)], reader.where());
            }
        } else {
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": unknown or malformed field '" + std::string(key) + "'");
        }
    }

    if (dim < 0 || classes < 0 || !have_layout || !have_b || model.W.size() == 0)
        throw Error(ErrorCode::parse_error,
                    path + ": model file is missing dim, classes, layout, b, or W");
    if (model.layout.dim() != dim)
        throw Error(ErrorCode::header_mismatch,
                    path + ": declared dim " + std::to_string(dim) + " does not match the layout (" +
                        std::to_string(model.layout.dim()) + ")");
    if (static_cast<Eigen::Index>(model.class_names.size()) != classes)
        throw Error(ErrorCode::header_mismatch,
                    path + ": declared " + std::to_string(classes) + " classes but lists " +
                        std::to_string(model.class_names.size()) + " names");
    if (!model.standardization.empty() &&
        (model.standardization.mean.size() != dim || model.standardization.scale.size() != dim))
        throw Error(ErrorCode::header_mismatch, path + ": standardization length mismatch");
    return model;
}

void save_features(const FeatureFile& file, const std::string& path) {
    const Eigen::Index d = file.features.values.rows();
    const Eigen::Index n = file.features.values.cols();
    if (d != file.features.layout.dim())
        throw Error(ErrorCode::layout_mismatch, "feature matrix does not match its layout");
    if (static_cast<Eigen::Index>(file.labels.size()) != n ||
        static_cast<Eigen::Index>(file.subject_ids.size()) != n)
        throw Error(ErrorCode::shape_mismatch, "labels/subject_ids do not match the column count");
    for (const std::string& name : file.class_names) check_token_name(name, "class name");
    for (const std::string& subject : file.subject_ids) check_token_name(subject, "subject id");
    if (!file.body_model_name.empty()) check_token_name(file.body_model_name, "body model name");

    std::ostringstream out;
    out << "fabl_features 1\n";
    out << "dim " << d << "\n";
    out << "count " << n << "\n";
    if (!file.body_model_name.empty()) out << "body_model " << file.body_model_name << "\n";
    write_layout(out, file.features.layout);
    for (const std::string& name : file.class_names) out << "class " << name << "\n";
    write_histogram(out, file.config);
    write_ranges(out, file.ranges);

    out << "labels";
    for (int label : file.labels) out << " " << label;
    out << "\n";
    out << "subjects";
    for (const std::string& subject : file.subject_ids)
        out << " " << (subject.empty() ? "-" : subject);
    out << "\n";
    out << "columns\n";
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) {
            if (i > 0) out << " ";
            out << detail::format_double(file.features.values(i, j));
        }
        out << "\n";
    }
    detail::write_file_atomic(path, out.str());
}

FeatureFile load_features(const std::string& path) {
    detail::LineReader reader(path);

    auto header = detail::split_fields(reader.require("fabl_features header"));
    if (header.size() != 2 || header[0] != "fabl_features")
        throw Error(ErrorCode::parse_error, reader.where() + ": expected 'fabl_features <version>'");
    if (detail::parse_int(header[1], reader.where()) != 1)
        throw Error(ErrorCode::parse_error, reader.where() + ": unsupported features format version");

    FeatureFile file;
    Eigen::Index d = -1;
    Eigen::Index n = -1;
    bool have_layout = false;
    bool have_columns = false;

    std::string_view line;
    while (reader.next(line)) {
        auto fields = detail::split_fields(line);
        const std::string_view key = fields[0];
        if (key == "dim" && fields.size() == 2) {
            d = detail::parse_int(fields[1], reader.where());
        } else if (key == "count" && fields.size() == 2) {
            n = detail::parse_int(fields[1], reader.where());
        } else if (key == "body_model" && fields.size() == 2) {
            file.body_model_name = std::string(fields[1]);
        } else if (key == "layout" && fields.size() == 3) {
            file.features.layout = read_layout_rows(reader, fields);
            have_layout = true;
        } else if (key == "class" && fields.size() == 2) {
            file.class_names.emplace_back(fields[1]);
        } else if (key == "histogram") {
            file.config = read_histogram(reader, line);
        } else if (key == "range") {
            read_range_line(reader, line, file.ranges);
        } else if (key == "labels") {
            if (n < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'labels' before 'count'");
            if (static_cast<Eigen::Index>(fields.size()) != n + 1)
                throw Error(ErrorCode::parse_error,
                            reader.where() + ": expected " + std::to_string(n) + " labels");
            for (Eigen::Index i = 0; i < n; ++i)
                file.labels.push_back(static_cast<int>(
                    detail::parse_int(fields[static_cast<size_t>(i) + 1], reader.where())));
        } else if (key == "subjects") {
            if (n < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'subjects' before 'count'");
            if (static_cast<Eigen::Index>(fields.size()) != n + 1)
                throw Error(ErrorCode::parse_error,
                            reader.where() + ": expected " + std::to_string(n) + " subject ids");
            for (Eigen::Index i = 0; i < n; ++i) {
                const std::string_view token = fields[static_cast<size_t>(i) + 1];
                file.subject_ids.emplace_back(token == "-" ? std::string_view() : token);
            }
        } else if (key == "columns" && fields.size() == 1) {
            if (d < 0 || n < 0)
                throw Error(ErrorCode::parse_error, reader.where() + ": 'columns' before 'dim'/'count'");
            file.features.values.resize(d, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                auto row = detail::split_fields(reader.require("a feature column"));
                if (static_cast<Eigen::Index>(row.size()) != d)
                    throw Error(ErrorCode::header_mismatch,
                                reader.where() + ": column has " + std::to_string(row.size()) +
                                    " values, expected " + std::to_string(d));
                for (Eigen::Index i = 0; i < d; ++i)
                    file.features.values(i, j) =
                        detail::parse_double(row[static_cast<size_t>(i)], reader.where());
            }
            have_columns = true;
        } else {
            throw Error(ErrorCode::parse_error,
                        reader.where() + ": unknown or malformed field '" + std::string(key) + "'");
        }
    }

    if (d < 0 || n < 0 || !have_layout || !have_columns)
        throw Error(ErrorCode::parse_error,
                    path + ": features file is missing dim, count, layout, or columns");
    if (file.features.layout.dim() != d)
        throw Error(ErrorCode::header_mismatch,
                    path + ": declared dim " + std::to_string(d) + " does not match the layout (" +
                        std::to_string(file.features.layout.dim()) + ")");
    if (file.labels.empty()) file.labels.assign(static_cast<size_t>(n), -1);
    if (file.subject_ids.empty()) file.subject_ids.assign(static_cast<size_t>(n), std::string());
    return file;
}

} // namespace fabl
