#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxflow/prox.hpp"

namespace proxflow {

/// A continuously differentiable term f with its gradient and, when known, an
/// estimate of the gradient's Lipschitz constant (used to pick oracle steps).
struct SmoothTerm {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::optional<double> lipschitz_estimate;
};

/// Composite objective F = f + g over ℝ^dim. fstar, when present, is the
/// optimal value together with how it was obtained ("closed-form" or
/// "ista-oracle"); certificates that need F⋆ are skipped when it is absent.
struct CompositeProblem {
    std::string name;
    int dim = 0;
    SmoothTerm f;
    ProxOperator g;
    std::optional<double> fstar;
    std::string fstar_provenance;
};

inline ExtReal cost(const CompositeProblem& p, const Vec& x) {
    return ExtReal(p.f.value(x)) + p.g.value(x);
}

/// Worst relative error of the analytic gradient against central differences
/// with step 1e−6·(1+‖x‖).
inline double gradient_fd_relative_error(const SmoothTerm& f, const Vec& x) {
    const double step = 1e-6 * (1.0 + x.norm());
    Vec probe = x;
    Vec fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + step;
        const double above = f.value(probe);
        probe(i) = x(i) - step;
        const double below = f.value(probe);
        probe(i) = x(i);
        fd(i) = (above - below) / (2.0 * step);
    }
    const Vec grad = f.gradient(x);
    return (fd - grad).norm() / std::max(1.0, grad.norm());
}

/// min ½‖Ax − u‖² + λ‖x‖₁.
inline CompositeProblem lasso_problem(const Mat& A, const Vec& u, double lambda) {
    require_finite(A, "lasso_problem A");
    require_finite(u, "lasso_problem u");
    if (A.rows() != u.size()) throw DomainError("lasso_problem: A rows must match len(u)");
    CompositeProblem p;
    p.name = "lasso";
    p.dim = static_cast<int>(A.cols());
    p.f.value = [A, u](const Vec& x) { return 0.5 * (A * x - u).squaredNorm(); };
    p.f.gradient = [A, u](const Vec& x) { return Vec(A.transpose() * (A * x - u)); };
    p.f.lipschitz_estimate = largest_eigenvalue_sym(A.transpose() * A);
    p.g = make_l1(lambda);
    return p;
}

/// The flow field written out for the ℓ1 case:
/// ẋ = −x + soft_{αλ}((I − αAᵀA)x + αAᵀu). Cross-check for the generic field.
inline Vec lasso_flow_closed_form(const Mat& A, const Vec& u, double lambda, double alpha,
                                  const Vec& x) {
    if (!(alpha > 0.0)) throw DomainError("lasso_flow_closed_form: alpha must be positive");
    const Mat eye = Mat::Identity(A.cols(), A.cols());
    const Vec inner = (eye - alpha * A.transpose() * A) * x + alpha * A.transpose() * u;
    return soft_threshold(alpha * lambda, inner) - x;
}

/// min ½‖y − 𝒜[X]‖² + λ‖X‖_* with 𝒜[X]ᵢ = tr(AᵢᵀX), X stored flat.
inline CompositeProblem matrix_recovery_problem(const std::vector<Mat>& ops, const Vec& y,
                                                double lambda) {
    if (ops.empty()) throw DomainError("matrix_recovery_problem: need at least one operator");
    if (static_cast<Eigen::Index>(ops.size()) != y.size())
        throw DomainError("matrix_recovery_problem: operator count must match len(y)");
    const Eigen::Index rows = ops.front().rows(), cols = ops.front().cols();
    for (const Mat& op : ops) {
        require_finite(op, "matrix_recovery_problem operator");
        if (op.rows() != rows || op.cols() != cols)
            throw DomainError("matrix_recovery_problem: operators must share one shape");
    }
    require_finite(y, "matrix_recovery_problem y");

    CompositeProblem p;
    p.name = "matrix-recovery";
    p.dim = static_cast<int>(rows * cols);
    const int r = static_cast<int>(rows), c = static_cast<int>(cols);
    p.f.value = [ops, y, r, c](const Vec& x) {
        const Mat X = as_matrix(x, r, c);
        double total = 0.0;
        for (std::size_t i = 0; i < ops.size(); ++i) {
            const double miss = ops[i].cwiseProduct(X).sum() - y(static_cast<Eigen::Index>(i));
            total += miss * miss;
        }
        return 0.5 * total;
    };
    p.f.gradient = [ops, y, r, c](const Vec& x) {
        const Mat X = as_matrix(x, r, c);
        Mat grad = Mat::Zero(r, c);
        for (std::size_t i = 0; i < ops.size(); ++i)
            grad += (ops[i].cwiseProduct(X).sum() - y(static_cast<Eigen::Index>(i))) * ops[i];
        return as_vector(grad);
    };
    Mat stacked(static_cast<Eigen::Index>(ops.size()), rows * cols);
    for (std::size_t i = 0; i < ops.size(); ++i)
        stacked.row(static_cast<Eigen::Index>(i)) = as_vector(ops[i]).transpose();
    p.f.lipschitz_estimate = largest_eigenvalue_sym(stacked.transpose() * stacked);
    p.g = make_nuclear(lambda, r, c);
    return p;
}

/// min ½‖Y − XW₁W₂‖_F² + λ‖W₁‖_* + λ‖W₂‖_* over the concatenation (W₁, W₂)
/// with X: N×n, Y: N×m, W₁: n×h, W₂: h×m. The flow applies the generic
/// dynamics blockwise; f is nonconvex, so no optimal value is claimed.
inline CompositeProblem matrix_factorization_problem(const Mat& X, const Mat& Y, int h,
                                                     double lambda) {
    require_finite(X, "matrix_factorization_problem X");
    require_finite(Y, "matrix_factorization_problem Y");
    if (h < 1) throw DomainError("matrix_factorization_problem: h must be positive");
    if (X.rows() != Y.rows())
        throw DomainError("matrix_factorization_problem: X and Y must have equal row counts");
    const int n = static_cast<int>(X.cols()), m = static_cast<int>(Y.cols());
    const Eigen::Index split = static_cast<Eigen::Index>(n) * h;

    CompositeProblem p;
    p.name = "matrix-factorization";
    p.dim = static_cast<int>(split + static_cast<Eigen::Index>(h) * m);
    p.f.value = [X, Y, n, m, h, split](const Vec& w) {
        const Mat W1 = as_matrix(w.head(split), n, h);
        const Mat W2 = as_matrix(w.tail(w.size() - split), h, m);
        return 0.5 * (Y - X * W1 * W2).squaredNorm();
    };
    p.f.gradient = [X, Y, n, m, h, split](const Vec& w) {
        const Mat W1 = as_matrix(w.head(split), n, h);
        const Mat W2 = as_matrix(w.tail(w.size() - split), h, m);
        const Mat resid = Y - X * W1 * W2;
        const Mat g1 = -X.transpose() * resid * W2.transpose();
        const Mat g2 = -W1.transpose() * X.transpose() * resid;
        Vec grad(w.size());
        grad.head(split) = as_vector(g1);
        grad.tail(w.size() - split) = as_vector(g2);
        return grad;
    };
    p.g = make_blockwise({make_nuclear(lambda, n, h), make_nuclear(lambda, h, m)},
                         {split, static_cast<Eigen::Index>(h) * m});
    return p;
}

/// Two interleaved half-circles with Gaussian jitter; labels 0 (upper arc)
/// and 1 (lower arc shifted to (1, 0.5)), balanced and deterministic per seed.
struct LabeledDataset {
    Mat inputs;  // N×d
    Vec labels;  // N entries in {0,1}
};

inline LabeledDataset two_moons(int n, double noise, std::uint64_t seed) {
    if (n < 2) throw DomainError("two_moons: need n >= 2");
    if (noise < 0.0) throw DomainError("two_moons: noise must be nonnegative");
    const int n_outer = n - n / 2, n_inner = n / 2;
    const auto arc = [](int j, int count) {
        return count > 1 ? std::numbers::pi * j / (count - 1) : 0.0;
    };
    Mat inputs(n, 2);
    Vec labels(n);
    for (int j = 0; j < n_outer; ++j) {
        const double t = arc(j, n_outer);
        inputs(j, 0) = std::cos(t);
        inputs(j, 1) = std::sin(t);
        labels(j) = 0.0;
    }
    for (int j = 0; j < n_inner; ++j) {
        const double t = arc(j, n_inner);
        inputs(n_outer + j, 0) = 1.0 - std::cos(t);
        inputs(n_outer + j, 1) = 0.5 - std::sin(t);
        labels(n_outer + j) = 1.0;
    }
    if (noise > 0.0) {
        Rng rng(seed);
        inputs += noise * rng.normal_mat(n, 2);
    }
    return {std::move(inputs), std::move(labels)};
}

/// min ½xᵀQx − bᵀx + g(x) with Q symmetric PSD.
inline CompositeProblem quadratic_problem(const Mat& Q, const Vec& b, ProxOperator g) {
    require_finite(Q, "quadratic_problem Q");
    require_finite(b, "quadratic_problem b");
    if (Q.rows() != Q.cols() || Q.rows() != b.size())
        throw DomainError("quadratic_problem: Q must be square and match len(b)");
    if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() >
        1e-12 * std::max(1.0, Q.lpNorm<Eigen::Infinity>()))
        throw DomainError("quadratic_problem: Q must be symmetric");
    CompositeProblem p;
    p.name = "quadratic";
    p.dim = static_cast<int>(Q.rows());
    p.f.value = [Q, b](const Vec& x) { return 0.5 * x.dot(Q * x) - b.dot(x); };
    p.f.gradient = [Q, b](const Vec& x) { return Vec(Q * x - b); };
    p.f.lipschitz_estimate = largest_eigenvalue_sym(Q);
    p.g = std::move(g);
    return p;
}

}  // namespace proxflow
