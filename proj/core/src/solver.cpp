#include "fabl/solver.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>

#include "fabl/error.hpp"

namespace fabl {

namespace {

constexpr double kResidualTol = 1e-8; // contract: ||A w - rhs|| <= 1e-8 (1 + ||rhs||)

// A W without forming A = X X^T + diag(add).
Eigen::MatrixXd apply_system(const Eigen::MatrixXd& X, const Eigen::VectorXd& add,
                             const Eigen::MatrixXd& W) {
    Eigen::MatrixXd out = X * (X.transpose() * W);
    if (add.size() > 0) out += add.asDiagonal() * W;
    return out;
}

bool columns_within_tol(const Eigen::MatrixXd& residual, const Eigen::MatrixXd& rhs) {
    for (Eigen::Index j = 0; j < rhs.cols(); ++j)
        if (!(residual.col(j).norm() <= kResidualTol * (1.0 + rhs.col(j).norm())))
            return false;
    return true;
}

// Woodbury route for n < d with a strictly positive diagonal:
// (C + X X^T)^-1 r = C^-1 r - C^-1 X (I_n + X^T C^-1 X)^-1 X^T C^-1 r.
// Factorizes an n x n system instead of d x d.
struct DualSolver {
    const Eigen::MatrixXd& X;
    Eigen::VectorXd cinv;
    Eigen::MatrixXd V; // C^-1 X
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool ok = false;

    DualSolver(const Eigen::MatrixXd& X_in, const Eigen::VectorXd& add) : X(X_in) {
        cinv = add.cwiseInverse();
        V = cinv.asDiagonal() * X;
        Eigen::MatrixXd M = X.transpose() * V;
        M.diagonal().array() += 1.0;
        llt.compute(M);
        ok = llt.info() == Eigen::Success;
    }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
        Eigen::MatrixXd cr = cinv.asDiagonal() * rhs;
        return cr - V * llt.solve(X.transpose() * cr);
    }
};

// Solves (X X^T + diag(add)) W = rhs column-wise by SPD factorization. The
// dual route handles n < d; otherwise a d x d Cholesky, with one iterative
// refinement pass and an escalating ridge retry before giving up. Every
// accepted solution is residual-verified against the unmodified system.
Eigen::MatrixXd solve_shifted_system(const Eigen::MatrixXd& X, const Eigen::VectorXd& add,
                                     const Eigen::MatrixXd& rhs, const Eigen::MatrixXd* xxt) {
    const Eigen::Index d = X.rows();
    const Eigen::Index n = X.cols();

    if (rhs.isZero(0.0)) return Eigen::MatrixXd::Zero(d, rhs.cols());

    auto accept = [&](Eigen::MatrixXd& W, auto&& solve_again) -> bool {
        Eigen::MatrixXd res = apply_system(X, add, W) - rhs;
        if (columns_within_tol(res, rhs)) return true;
        W -= solve_again(res);
        res = apply_system(X, add, W) - rhs;
        return columns_within_tol(res, rhs);
    };

    if (n < d && add.size() > 0 && add.minCoeff() > 0.0) {
        DualSolver dual(X, add);
        if (dual.ok) {
            Eigen::MatrixXd W = dual.solve(rhs);
            if (accept(W, [&](const Eigen::MatrixXd& r) { return dual.solve(r); })) return W;
        }
        // fall through to the primal route
    }

    Eigen::MatrixXd A = xxt ? *xxt : Eigen::MatrixXd(X * X.transpose());
    if (add.size() > 0) A.diagonal() += add;

    const double scale = std::max(A.trace() / static_cast<double>(d), 1.0);
    for (double ridge : {0.0, 1e-12 * scale, 1e-9 * scale, 1e-6 * scale}) {
        Eigen::MatrixXd shifted = A;
        if (ridge > 0.0) shifted.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() != Eigen::Success) continue;
        Eigen::MatrixXd W = llt.solve(rhs);
        if (accept(W, [&](const Eigen::MatrixXd& r) { return llt.solve(r); })) return W;
    }
    throw Error(ErrorCode::singular_system,
                "SPD solve failed residual verification even with a ridge retry (d=" +
                    std::to_string(d) + ", n=" + std::to_string(n) + ")");
}

double residual_sq(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W,
                   const Eigen::VectorXd& b) {
    return (((X.transpose() * W).rowwise() + b.transpose()) - Y).squaredNorm();
}

void check_model_shapes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                        const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                        const PartitionLayout& layout) {
    if (X.rows() != layout.dim() || W.rows() != layout.dim() || X.cols() != Y.rows() ||
        W.cols() != Y.cols() || b.size() != Y.cols())
        throw Error(ErrorCode::shape_mismatch,
                    "inconsistent X/Y/W/b/layout shapes: X " + std::to_string(X.rows()) + "x" +
                        std::to_string(X.cols()) + ", Y " + std::to_string(Y.rows()) + "x" +
                        std::to_string(Y.cols()) + ", W " + std::to_string(W.rows()) + "x" +
                        std::to_string(W.cols()) + ", layout d=" + std::to_string(layout.dim()));
}

} // namespace

void validate_hyperparams(const Hyperparams& hp) {
    if (hp.gamma1 < 0.0 || hp.gamma2 < 0.0)
        throw Error(ErrorCode::invalid_argument, "gamma1 and gamma2 must be >= 0");
    if (!(hp.epsilon > 0.0))
        throw Error(ErrorCode::invalid_argument, "epsilon must be > 0");
    if (!(hp.tol > 0.0))
        throw Error(ErrorCode::invalid_argument, "tol must be > 0");
    if (hp.max_iter < 1)
        throw Error(ErrorCode::invalid_argument, "max_iter must be >= 1");
    if (hp.init_ridge < 0.0)
        throw Error(ErrorCode::invalid_argument, "init_ridge must be >= 0");
    if (hp.threads < 1)
        throw Error(ErrorCode::invalid_argument, "threads must be >= 1");
}

void validate_training_set(const TrainingSet& train) {
    const Eigen::Index n = train.X.cols();
    const Eigen::Index c = train.Y.cols();
    if (n == 0 || train.Y.rows() == 0)
        throw Error(ErrorCode::empty_training_set, "training set has no instances");
    if (train.Y.rows() != n)
        throw Error(ErrorCode::shape_mismatch,
                    "X has " + std::to_string(n) + " columns but Y has " +
                        std::to_string(train.Y.rows()) + " rows");
    if (train.X.rows() != train.layout.dim())
        throw Error(ErrorCode::layout_mismatch,
                    "X has " + std::to_string(train.X.rows()) + " rows but the layout is " +
                        std::to_string(train.layout.dim()) + "-dimensional");
    if (c < 1)
        throw Error(ErrorCode::invalid_training_set, "training set declares no classes");
    if (!train.X.allFinite())
        throw Error(ErrorCode::invalid_training_set, "X contains non-finite values");

    for (Eigen::Index i = 0; i < n; ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < c; ++j) {
            const double v = train.Y(i, j);
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                throw Error(ErrorCode::invalid_training_set,
                            "Y(" + std::to_string(i) + ", " + std::to_string(j) +
                                ") is neither 0 nor 1");
        }
        if (ones != 1)
            throw Error(ErrorCode::invalid_training_set,
                        "Y row " + std::to_string(i) + " is not one-hot");
    }
    for (Eigen::Index j = 0; j < c; ++j)
        if (train.Y.col(j).sum() == 0.0)
            throw Error(ErrorCode::invalid_training_set,
                        "class " + std::to_string(j) + " has no training instances");
    if (!train.class_names.empty() && static_cast<Eigen::Index>(train.class_names.size()) != c)
        throw Error(ErrorCode::shape_mismatch, "class_names length does not match Y columns");
    if (!train.subject_ids.empty() && static_cast<Eigen::Index>(train.subject_ids.size()) != n)
        throw Error(ErrorCode::shape_mismatch, "subject_ids length does not match X columns");
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& x) const {
    if (empty()) return x;
    if (x.size() != mean.size())
        throw Error(ErrorCode::shape_mismatch,
                    "vector of length " + std::to_string(x.size()) +
                        " does not match standardization of length " + std::to_string(mean.size()));
    return (x - mean).cwiseProduct(scale);
}

Eigen::VectorXd compute_intercept(const Eigen::MatrixXd& Y) {
    if (Y.rows() == 0 || Y.cols() == 0)
        throw Error(ErrorCode::empty_training_set, "indicator matrix is empty");
    return Y.colwise().sum().transpose() / static_cast<double>(Y.rows());
}

double modality_block_norm(const Eigen::VectorXd& w, const PartitionLayout& layout, int q) {
    if (w.size() != layout.dim())
        throw Error(ErrorCode::shape_mismatch, "weight vector does not match layout dimension");
    if (q < 0 || q >= layout.modalities())
        throw Error(ErrorCode::index_out_of_range, "modality index out of range");
    return w.segment(layout.modality_offset(q), layout.modality_dim(q)).norm();
}

double joint_block_norm(const Eigen::VectorXd& w, const PartitionLayout& layout, int k) {
    if (w.size() != layout.dim())
        throw Error(ErrorCode::shape_mismatch, "weight vector does not match layout dimension");
    if (k < 0 || k >= layout.joints())
        throw Error(ErrorCode::index_out_of_range, "joint index out of range");
    double sq = 0.0;
    for (int q = 0; q < layout.modalities(); ++q)
        sq += w.segment(layout.block_offset(q, k), layout.block_dim(q, k)).squaredNorm();
    return std::sqrt(sq);
}

double m1_norm(const Eigen::MatrixXd& W, const PartitionLayout& layout) {
    if (W.rows() != layout.dim())
        throw Error(ErrorCode::shape_mismatch, "W rows do not match layout dimension");
    double total = 0.0;
    for (Eigen::Index i = 0; i < W.cols(); ++i)
        for (int q = 0; q < layout.modalities(); ++q)
            total += W.col(i).segment(layout.modality_offset(q), layout.modality_dim(q)).norm();
    return total;
}

double j1_norm(const Eigen::MatrixXd& W, const PartitionLayout& layout) {
    if (W.rows() != layout.dim())
        throw Error(ErrorCode::shape_mismatch, "W rows do not match layout dimension");
    double total = 0.0;
    for (Eigen::Index i = 0; i < W.cols(); ++i) {
        for (int k = 0; k < layout.joints(); ++k) {
            double sq = 0.0;
            for (int q = 0; q < layout.modalities(); ++q)
                sq += W.col(i).segment(layout.block_offset(q, k), layout.block_dim(q, k)).squaredNorm();
            total += std::sqrt(sq);
        }
    }
    return total;
}

double objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W,
                 const Eigen::VectorXd& b, double gamma1, double gamma2,
                 const PartitionLayout& layout) {
    check_model_shapes(X, Y, W, b, layout);
    return residual_sq(X, Y, W, b) + gamma1 * m1_norm(W, layout) + gamma2 * j1_norm(W, layout);
}

GroupWeights build_group_weights(const Eigen::VectorXd& w, const PartitionLayout& layout,
                                 double epsilon) {
    if (!(epsilon > 0.0))
        throw Error(ErrorCode::invalid_argument, "epsilon must be > 0");
    if (w.size() != layout.dim())
        throw Error(ErrorCode::shape_mismatch, "weight vector does not match layout dimension");

    GroupWeights gw;
    gw.diag_m.resize(layout.dim());
    gw.diag_j.resize(layout.dim());
    for (int q = 0; q < layout.modalities(); ++q) {
        const double entry = 1.0 / (2.0 * std::max(modality_block_norm(w, layout, q), epsilon));
        gw.diag_m.segment(layout.modality_offset(q), layout.modality_dim(q)).setConstant(entry);
    }
    for (int k = 0; k < layout.joints(); ++k) {
        const double entry = 1.0 / (2.0 * std::max(joint_block_norm(w, layout, k), epsilon));
        for (int q = 0; q < layout.modalities(); ++q)
            gw.diag_j.segment(layout.block_offset(q, k), layout.block_dim(q, k)).setConstant(entry);
    }
    return gw;
}

Eigen::VectorXd solve_class_system(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_i,
                                   double b_i, const Eigen::VectorXd& diag_m,
                                   const Eigen::VectorXd& diag_j, double gamma1, double gamma2) {
    if (y_i.size() != X.cols())
        throw Error(ErrorCode::shape_mismatch, "y_i length does not match X columns");
    if (diag_m.size() != X.rows() || diag_j.size() != X.rows())
        throw Error(ErrorCode::shape_mismatch, "diagonal lengths do not match X rows");
    if (gamma1 < 0.0 || gamma2 < 0.0)
        throw Error(ErrorCode::invalid_argument, "gamma1 and gamma2 must be >= 0");

    Eigen::VectorXd add;
    if (gamma1 > 0.0 || gamma2 > 0.0) add = gamma1 * diag_m + gamma2 * diag_j;
    const Eigen::VectorXd rhs = X * (y_i.array() - b_i).matrix();
    return solve_shifted_system(X, add, rhs, nullptr);
}

Eigen::MatrixXd ridge_init(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           const Eigen::VectorXd& b, double init_ridge) {
    if (Y.rows() != X.cols() || b.size() != Y.cols())
        throw Error(ErrorCode::shape_mismatch, "X/Y/b shapes are inconsistent");
    if (init_ridge < 0.0)
        throw Error(ErrorCode::invalid_argument, "init_ridge must be >= 0");

    Eigen::MatrixXd U = Y;
    U.rowwise() -= b.transpose();
    const Eigen::MatrixXd rhs = X * U;
    Eigen::VectorXd add;
    if (init_ridge > 0.0) add = Eigen::VectorXd::Constant(X.rows(), init_ridge);
    return solve_shifted_system(X, add, rhs, nullptr);
}

FitResult fabl_train(const TrainingSet& train, const Hyperparams& hp) {
    validate_hyperparams(hp);
    validate_training_set(train);

    const Eigen::Index d = train.X.rows();
    const Eigen::Index n = train.X.cols();
    const Eigen::Index c = train.Y.cols();
    const PartitionLayout& layout = train.layout;

    Eigen::MatrixXd X = train.X;
    Standardization stdz;
    if (hp.standardize) {
        stdz.mean = X.rowwise().mean();
        X.colwise() -= stdz.mean;
        stdz.scale.resize(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double sd = std::sqrt(X.row(i).squaredNorm() / static_cast<double>(n));
            stdz.scale[i] = sd < 1e-12 ? 1.0 : 1.0 / sd;
        }
        X = stdz.scale.asDiagonal() * X;
    }

    const Eigen::VectorXd b = compute_intercept(train.Y);

    // Failures after this point rethrow as TrainError so callers can persist
    // the trace of the last completed iteration.
    FitTrace trace;
    Eigen::MatrixXd W;
    try {
        W = ridge_init(X, train.Y, b, hp.init_ridge);
    } catch (const Error& err) {
        throw TrainError(err.code(), err.message(), std::move(trace));
    }
    auto record = [&](const Eigen::MatrixXd& Wt) -> double {
        const double m1 = m1_norm(Wt, layout);
        const double j1 = j1_norm(Wt, layout);
        const double obj = residual_sq(X, train.Y, Wt, b) + hp.gamma1 * m1 + hp.gamma2 * j1;
        if (!std::isfinite(obj))
            throw Error(ErrorCode::non_finite_objective,
                        "objective became non-finite at iteration " +
                            std::to_string(trace.objective_per_iter.size() + 1));
        trace.objective_per_iter.push_back(obj);
        trace.m1_per_iter.push_back(m1);
        trace.j1_per_iter.push_back(j1);
        trace.iterations = static_cast<int>(trace.objective_per_iter.size());
        return obj;
    };

    double prev = 0.0;
    try {
        prev = record(W);
    } catch (const Error& err) {
        throw TrainError(err.code(), err.message(), std::move(trace));
    }

    auto finish = [&](Eigen::MatrixXd weights) {
        WeightModel model;
        model.W = std::move(weights);
        model.b = b;
        model.layout = layout;
        model.class_names = train.class_names;
        if (model.class_names.empty())
            for (Eigen::Index i = 0; i < c; ++i)
                model.class_names.push_back(std::to_string(i));
        model.standardization = stdz;
        if (train.feature_ranges) model.feature_ranges = *train.feature_ranges;
        if (train.histogram_config) model.histogram_config = *train.histogram_config;
        model.hyperparams = hp;
        return FitResult{std::move(model), std::move(trace)};
    };

    // With both regularizers off the initialization already minimizes Eq. (4)
    // (it solves the ridge-regularized least squares exactly); reweighting
    // would only repeat the same solve.
    if (hp.gamma1 == 0.0 && hp.gamma2 == 0.0) {
        trace.converged = true;
        return finish(std::move(W));
    }

    std::optional<Eigen::MatrixXd> xxt;
    if (n >= d) xxt = Eigen::MatrixXd(X * X.transpose());

    Eigen::MatrixXd U = train.Y;
    U.rowwise() -= b.transpose();
    const Eigen::MatrixXd rhs_all = X * U; // constant across iterations

    auto solve_one = [&](const Eigen::MatrixXd& prev_w, Eigen::MatrixXd& next_w, Eigen::Index i) {
        const GroupWeights gw = build_group_weights(prev_w.col(i), layout, hp.epsilon);
        const Eigen::VectorXd add = hp.gamma1 * gw.diag_m + hp.gamma2 * gw.diag_j;
        next_w.col(i) = solve_shifted_system(X, add, rhs_all.col(i), xxt ? &*xxt : nullptr);
    };

    const int workers = static_cast<int>(std::min<Eigen::Index>(hp.threads, c));
    Eigen::MatrixXd next(d, c);
    while (trace.iterations < hp.max_iter) {
        double obj = 0.0;
        try {
            if (workers <= 1) {
                for (Eigen::Index i = 0; i < c; ++i) solve_one(W, next, i);
            } else {
                // The per-class solves are pure functions of W(t), so any
                // class order gives bit-identical results.
                std::vector<std::exception_ptr> errors(c);
                std::atomic<Eigen::Index> cursor{0};
                std::vector<std::thread> pool;
                pool.reserve(workers);
                for (int t = 0; t < workers; ++t) {
                    pool.emplace_back([&] {
                        for (Eigen::Index i = cursor.fetch_add(1); i < c; i = cursor.fetch_add(1)) {
                            try {
                                solve_one(W, next, i);
                            } catch (...) {
                                errors[i] = std::current_exception();
                            }
                        }
                    });
                }
                for (std::thread& th : pool) th.join();
                for (const std::exception_ptr& err : errors)
                    if (err) std::rethrow_exception(err);
            }
            W = next;
            obj = record(W);
        } catch (const Error& err) {
            throw TrainError(err.code(), err.message(), std::move(trace));
        }
        if (std::abs(prev - obj) / std::max(prev, 1.0) < hp.tol) {
            trace.converged = true;
            break;
        }
        prev = obj;
    }
    return finish(std::move(W));
}

} // namespace fabl
