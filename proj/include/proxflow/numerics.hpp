#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "proxflow/types.hpp"

namespace proxflow {

struct SvdResult {
    Mat U;      // m × r, orthonormal columns
    Vec sigma;  // r, nonincreasing, nonnegative
    Mat V;      // n × r, orthonormal columns
};

/// Thin SVD M = U Σ Vᵀ via Jacobi rotations (Eigen). Matrices here are desk
/// scale, so robustness matters more than speed. The reconstruction residual
/// is verified before returning; failure to meet tolerance is reported as a
/// numerical error carrying the residual.
inline SvdResult svd(const Mat& M) {
    require_finite(M, "svd");
    Eigen::JacobiSVD<Mat> solver(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult r{solver.matrixU(), solver.singularValues(), solver.matrixV()};

    const double scale = std::max(1.0, M.norm());
    const double residual = (r.U * r.sigma.asDiagonal() * r.V.transpose() - M).norm();
    if (!(residual <= 1e-10 * scale))
        throw NumericalError("svd: reconstruction residual above tolerance", residual);
    return r;
}

struct LogLinearFit {
    double rate;       // negated slope of ln v against t
    double intercept;  // fitted ln v at t = 0
    double r2;         // coefficient of determination, in [0, 1]
};

/// Least-squares fit of ln v against t. Used to read exponential decay rates
/// off recorded cost gaps.
inline LogLinearFit log_linear_fit(const Vec& t, const Vec& v) {
    if (t.size() != v.size() || t.size() < 3)
        throw DomainError("log_linear_fit: need at least 3 matching points");
    if ((v.array() <= 0.0).any())
        throw DomainError("log_linear_fit: values must be positive");

    const Vec y = v.array().log().matrix();
    const double n = static_cast<double>(t.size());
    const double tm = t.mean();
    const double ym = y.mean();
    const double stt = (t.array() - tm).square().sum();
    const double sty = ((t.array() - tm) * (y.array() - ym)).sum();

    double slope = 0.0;
    if (stt > 0.0) slope = sty / stt;
    const double intercept = ym - slope * tm;

    const Vec fit = (intercept + slope * t.array()).matrix();
    const double ss_res = (y - fit).squaredNorm();
    const double ss_tot = (y.array() - ym).square().sum();
    double r2 = 1.0;
    if (ss_tot > n * 1e-30) r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);

    return {-slope, intercept, r2};
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double largest_eigenvalue_sym(const Mat& S, int iterations = 200) {
    require_finite(S, "largest_eigenvalue_sym");
    Rng rng(0x9e3779b97f4a7c15ULL);
    Vec v = rng.normal_vec(S.rows());
    v.normalize();
    double lambda = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Vec w = S * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        lambda = v.dot(S * v);
    }
    return lambda;
}

}  // namespace proxflow
