#include "fabl/classifier.hpp"

#include <string>

#include "fabl/error.hpp"

namespace fabl {

ScoreVector predict_scores(const FeatureVector& x, const WeightModel& model) {
    if (x.layout != model.layout)
        throw Error(ErrorCode::layout_mismatch,
                    "feature vector layout does not match the model's layout");
    if (x.values.size() != model.W.rows())
        throw Error(ErrorCode::shape_mismatch,
                    "feature vector length " + std::to_string(x.values.size()) +
                        " does not match model dimension " + std::to_string(model.W.rows()));

    ScoreVector out;
    out.scores = model.W.transpose() * model.standardization.apply(x.values) + model.b;
    out.predicted = 0;
    for (Eigen::Index i = 1; i < out.scores.size(); ++i)
        if (out.scores[i] > out.scores[out.predicted]) out.predicted = static_cast<int>(i);
    return out;
}

std::vector<ScoreVector> predict_batch(const FeatureMatrix& X, const WeightModel& model) {
    if (X.layout != model.layout)
        throw Error(ErrorCode::layout_mismatch,
                    "feature matrix layout does not match the model's layout");
    std::vector<ScoreVector> out;
    out.reserve(static_cast<size_t>(X.count()));
    FeatureVector column;
    column.layout = X.layout;
    for (int i = 0; i < X.count(); ++i) {
        column.values = X.values.col(i);
        out.push_back(predict_scores(column, model));
    }
    return out;
}

} // namespace fabl
