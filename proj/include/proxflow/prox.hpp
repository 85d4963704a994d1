#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "proxflow/numerics.hpp"
#include "proxflow/types.hpp"

namespace proxflow {

/// Elementwise shrink toward zero: xᵢ − κ·sign(xᵢ) if |xᵢ| > κ, else 0.
inline Vec soft_threshold(double kappa, const Vec& x) {
    if (!(kappa > 0.0)) throw DomainError("soft_threshold: kappa must be positive");
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x(i);
        out(i) = std::abs(xi) > kappa ? xi - kappa * (xi > 0 ? 1.0 : -1.0) : 0.0;
    }
    return out;
}

/// A CCP regularizer g: its extended-real value, the prox map at scale α,
/// a min-norm-subgradient oracle, and a domain membership test.
///
/// Matrix-shaped operators (nuclear norm) act on flattened vectors and carry
/// their shape here, so one integrator serves vector and matrix problems.
struct ProxOperator {
    std::string name;
    std::function<ExtReal(const Vec&)> value;
    std::function<Vec(double, const Vec&)> prox;  // minimizes αg(u) + ½‖u−v‖²
    std::function<std::optional<Vec>(const Vec&)> min_norm_subgradient;
    std::function<bool(const Vec&)> domain_test;

    /// Nearest point of dom g; identity for finite-valued g. Used to draw
    /// admissible sample points.
    std::function<Vec(const Vec&)> project_domain;

    /// Closed-form membership rule for s ∈ ∂g(z), returning a violation
    /// magnitude (0 = certified). Empty when only the sampled convexity
    /// inequality is available (nuclear norm).
    std::function<double(const Vec& z, const Vec& s)> subgradient_violation;

    /// argmin_{v ∈ ∂g(x)} ‖grad + v‖, the min-norm element of ∂(f+g)(x).
    /// Set only where the minimization has a cheap exact answer (ℓ1, zero).
    std::function<Vec(const Vec& x, const Vec& grad)> min_norm_composite;

    int rows = 0, cols = 0;  // shape metadata; 0 for vector-shaped operators
};

inline Mat as_matrix(const Vec& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw DomainError("as_matrix: length does not match shape");
    return Eigen::Map<const Mat>(v.data(), rows, cols);
}

inline Vec as_vector(const Mat& m) {
    return Eigen::Map<const Vec>(m.data(), m.size());
}

/// g(x) = λ‖x‖₁.
inline ProxOperator make_l1(double lambda) {
    if (!(lambda > 0.0)) throw DomainError("make_l1: lambda must be positive");
    ProxOperator op;
    op.name = "l1";
    op.value = [lambda](const Vec& x) { return ExtReal(lambda * x.lpNorm<1>()); };
    op.prox = [lambda](double alpha, const Vec& v) { return soft_threshold(alpha * lambda, v); };
    op.min_norm_subgradient = [lambda](const Vec& x) -> std::optional<Vec> {
        Vec s(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            s(i) = x(i) == 0.0 ? 0.0 : lambda * (x(i) > 0 ? 1.0 : -1.0);
        return s;
    };
    op.domain_test = [](const Vec&) { return true; };
    op.project_domain = [](const Vec& v) { return v; };
    op.subgradient_violation = [lambda](const Vec& z, const Vec& s) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            worst = std::max(worst, std::abs(s(i)) - lambda);
            if (z(i) != 0.0)
                worst = std::max(worst, std::abs(s(i) - lambda * (z(i) > 0 ? 1.0 : -1.0)));
        }
        return worst;
    };
    op.min_norm_composite = [lambda](const Vec& x, const Vec& grad) {
        // at xᵢ ≠ 0 the subgradient is the point λ·sign(xᵢ); at xᵢ = 0 the
        // componentwise minimizer over [−λ, λ] clamps gradᵢ toward zero
        Vec s(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) != 0.0)
                s(i) = grad(i) + lambda * (x(i) > 0 ? 1.0 : -1.0);
            else
                s(i) = std::abs(grad(i)) > lambda
                           ? grad(i) - lambda * (grad(i) > 0 ? 1.0 : -1.0)
                           : 0.0;
        }
        return s;
    };
    return op;
}

/// g(X) = λ‖X‖_* on matrices stored flat; prox is singular-value soft
/// thresholding at level αλ.
inline ProxOperator make_nuclear(double lambda, int rows, int cols) {
    if (!(lambda > 0.0)) throw DomainError("make_nuclear: lambda must be positive");
    if (rows < 1 || cols < 1) throw DomainError("make_nuclear: bad shape");
    ProxOperator op;
    op.name = "nuclear";
    op.rows = rows;
    op.cols = cols;
    op.value = [lambda, rows, cols](const Vec& x) {
        return ExtReal(lambda * svd(as_matrix(x, rows, cols)).sigma.sum());
    };
    op.prox = [lambda, rows, cols](double alpha, const Vec& v) {
        const SvdResult s = svd(as_matrix(v, rows, cols));
        const Vec shrunk = soft_threshold(alpha * lambda, s.sigma);
        return as_vector(Mat(s.U * shrunk.asDiagonal() * s.V.transpose()));
    };
    op.min_norm_subgradient = [lambda, rows, cols](const Vec& x) -> std::optional<Vec> {
        // min-norm element of λ∂‖·‖_* is λ U_r V_rᵀ over the positive
        // singular triplets (the free block W is orthogonal to U_r V_rᵀ).
        const SvdResult s = svd(as_matrix(x, rows, cols));
        const double cut = 1e-12 * std::max(1.0, s.sigma.size() > 0 ? s.sigma(0) : 0.0);
        Mat sub = Mat::Zero(rows, cols);
        for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
            if (s.sigma(i) > cut) sub += s.U.col(i) * s.V.col(i).transpose();
        return as_vector(Mat(lambda * sub));
    };
    op.domain_test = [](const Vec&) { return true; };
    op.project_domain = [](const Vec& v) { return v; };
    return op;
}

/// Indicator of the box [lo, hi]; prox is the clamp, independent of α.
inline ProxOperator make_box_indicator(const Vec& lo, const Vec& hi) {
    require_finite(lo, "make_box_indicator lo");
    require_finite(hi, "make_box_indicator hi");
    if (lo.size() != hi.size() || (lo.array() > hi.array()).any())
        throw DomainError("make_box_indicator: need lo <= hi elementwise");
    ProxOperator op;
    op.name = "box";
    const auto inside = [lo, hi](const Vec& x) {
        return x.size() == lo.size() && (x.array() >= lo.array()).all() &&
               (x.array() <= hi.array()).all();
    };
    op.value = [inside](const Vec& x) {
        return inside(x) ? ExtReal(0.0) : ExtReal::infinity();
    };
    op.prox = [lo, hi](double, const Vec& v) {
        return v.cwiseMax(lo).cwiseMin(hi);
    };
    op.min_norm_subgradient = [lo, hi](const Vec& x) -> std::optional<Vec> {
        // only the interior has a usable min-norm element; the normal cone
        // on the boundary is handled through the membership rule instead
        if ((x.array() > lo.array()).all() && (x.array() < hi.array()).all())
            return Vec(Vec::Zero(x.size()));
        return std::nullopt;
    };
    op.domain_test = inside;
    op.project_domain = [lo, hi](const Vec& v) { return v.cwiseMax(lo).cwiseMin(hi); };
    op.subgradient_violation = [lo, hi](const Vec& z, const Vec& s) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const bool at_lo = z(i) <= lo(i);
            const bool at_hi = z(i) >= hi(i);
            if (at_lo && at_hi) continue;          // pinned component, cone is all of R
            if (at_hi) worst = std::max(worst, -s(i));   // need s ≥ 0
            else if (at_lo) worst = std::max(worst, s(i));
            else worst = std::max(worst, std::abs(s(i)));
        }
        return worst;
    };
    return op;
}

/// g ≡ 0; prox is the identity. Recovers pure gradient flow ẋ = −α∇f(x).
inline ProxOperator make_zero() {
    ProxOperator op;
    op.name = "zero";
    op.value = [](const Vec&) { return ExtReal(0.0); };
    op.prox = [](double, const Vec& v) { return v; };
    op.min_norm_subgradient = [](const Vec& x) -> std::optional<Vec> {
        return Vec(Vec::Zero(x.size()));
    };
    op.domain_test = [](const Vec&) { return true; };
    op.project_domain = [](const Vec& v) { return v; };
    op.subgradient_violation = [](const Vec&, const Vec& s) {
        return s.lpNorm<Eigen::Infinity>();
    };
    op.min_norm_composite = [](const Vec&, const Vec& grad) { return grad; };
    return op;
}

/// Separable sum g(x) = Σ gᵢ(segmentᵢ(x)); the prox of a separable sum acts
/// blockwise. Used for regularizing several matrix blocks at once.
inline ProxOperator make_blockwise(std::vector<ProxOperator> parts,
                                   std::vector<Eigen::Index> sizes) {
    if (parts.empty() || parts.size() != sizes.size())
        throw DomainError("make_blockwise: parts and sizes must match and be nonempty");
    std::vector<Eigen::Index> offsets(parts.size() + 1, 0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1) throw DomainError("make_blockwise: segment sizes must be positive");
        offsets[i + 1] = offsets[i] + sizes[i];
    }
    const Eigen::Index total = offsets.back();
    const auto check_size = [total](const Vec& v) {
        if (v.size() != total) throw DomainError("make_blockwise: operand has wrong length");
    };

    ProxOperator op;
    op.name = "blockwise";
    op.value = [parts, offsets, check_size](const Vec& x) {
        check_size(x);
        ExtReal total_value(0.0);
        for (std::size_t i = 0; i < parts.size(); ++i)
            total_value = total_value +
                          parts[i].value(x.segment(offsets[i], offsets[i + 1] - offsets[i]));
        return total_value;
    };
    op.prox = [parts, offsets, check_size](double alpha, const Vec& v) {
        check_size(v);
        Vec out(v.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Eigen::Index len = offsets[i + 1] - offsets[i];
            out.segment(offsets[i], len) = parts[i].prox(alpha, v.segment(offsets[i], len));
        }
        return out;
    };
    op.min_norm_subgradient = [parts, offsets, check_size](const Vec& x) -> std::optional<Vec> {
        check_size(x);
        Vec out(x.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Eigen::Index len = offsets[i + 1] - offsets[i];
            const auto s = parts[i].min_norm_subgradient(x.segment(offsets[i], len));
            if (!s) return std::nullopt;
            out.segment(offsets[i], len) = *s;
        }
        return out;
    };
    op.domain_test = [parts, offsets](const Vec& x) {
        if (x.size() != offsets.back()) return false;
        for (std::size_t i = 0; i < parts.size(); ++i)
            if (!parts[i].domain_test(x.segment(offsets[i], offsets[i + 1] - offsets[i])))
                return false;
        return true;
    };
    op.project_domain = [parts, offsets, check_size](const Vec& v) {
        check_size(v);
        Vec out(v.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const Eigen::Index len = offsets[i + 1] - offsets[i];
            out.segment(offsets[i], len) = parts[i].project_domain(v.segment(offsets[i], len));
        }
        return out;
    };
    bool all_exact = true;
    for (const auto& part : parts) all_exact = all_exact && bool(part.subgradient_violation);
    if (all_exact) {
        op.subgradient_violation = [parts, offsets, check_size](const Vec& z, const Vec& s) {
            check_size(z);
            double worst = 0.0;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                const Eigen::Index len = offsets[i + 1] - offsets[i];
                worst = std::max(worst,
                                 parts[i].subgradient_violation(z.segment(offsets[i], len),
                                                                s.segment(offsets[i], len)));
            }
            return worst;
        };
    }
    return op;
}

struct ProxOptimalityReport {
    bool passed;
    double worst_violation;       // over sampled subgradient inequalities
    Vec worst_point;              // the sample u realizing it
    double membership_violation;  // closed-form rule, 0 when unavailable
};

/// Verifies that z = prox(α, v) satisfies α⁻¹(v−z) ∈ ∂g(z): the subgradient
/// inequality g(u) ≥ g(z) + sᵀ(u−z) is sampled at 200 points of dom g, and
/// the operator's exact membership rule is applied when it has one.
/// A failed check is a result, not an exception.
inline ProxOptimalityReport check_prox_optimality(const ProxOperator& g, double alpha,
                                                  const Vec& v, double tol,
                                                  std::uint64_t seed = 2024) {
    if (!(alpha > 0.0)) throw DomainError("check_prox_optimality: alpha must be positive");
    const Vec z = g.prox(alpha, v);
    const Vec s = (v - z) / alpha;
    const double gz = g.value(z).finite_value();

    double membership = 0.0;
    if (g.subgradient_violation) membership = g.subgradient_violation(z, s);

    Rng rng(seed);
    const double scale = 1.0 + z.norm();
    double worst = 0.0;
    Vec worst_u = z;
    for (int k = 0; k < 200; ++k) {
        const Vec u = g.project_domain(z + scale * rng.normal_vec(z.size()));
        const double violation = gz + s.dot(u - z) - g.value(u).finite_value();
        if (violation > worst) {
            worst = violation;
            worst_u = u;
        }
    }
    return {worst <= tol && membership <= tol, worst, worst_u, membership};
}

}  // namespace proxflow
