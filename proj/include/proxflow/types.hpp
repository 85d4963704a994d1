#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace proxflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Problem/config inputs that violate a precondition (dimension mismatch,
/// nonpositive scale, point outside the operator domain, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: NaN from a user callback, factorization residual
/// above tolerance, oracle non-convergence.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg,
                            double residual = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(msg), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

/// Trajectory blow-up. Carries the last state and time reached.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& msg, Vec last_state, double t)
        : NumericalError(msg), last_state_(std::move(last_state)), time_(t) {}

    const Vec& last_state() const { return last_state_; }
    double time() const { return time_; }

private:
    Vec last_state_;
    double time_;
};

class UnsupportedOperatorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scalar in [finite] ∪ {+∞}. Regularizer values live here: g is proper, so
/// −∞ is rejected at construction, and NaN (a broken user callback) is too.
class ExtReal {
public:
    ExtReal() : v_(0.0) {}

    ExtReal(double v) : v_(v) {  // NOLINT(google-explicit-constructor)
        if (std::isnan(v)) throw NumericalError("ExtReal: NaN is not a value");
        if (v == -std::numeric_limits<double>::infinity())
            throw DomainError("ExtReal: -inf is not a value (g must be proper)");
    }

    static ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

    bool is_finite() const { return std::isfinite(v_); }

    /// Raw value; +∞ maps onto the IEEE infinity.
    double value() const { return v_; }

    /// Value under the promise of finiteness.
    double finite_value() const {
        if (!is_finite()) throw DomainError("ExtReal: expected a finite value");
        return v_;
    }

    friend ExtReal operator+(ExtReal a, ExtReal b) { return ExtReal(a.v_ + b.v_); }
    friend ExtReal operator-(ExtReal a, double b) { return ExtReal(a.v_ - b); }
    friend bool operator<(ExtReal a, ExtReal b) { return a.v_ < b.v_; }
    friend bool operator<=(ExtReal a, ExtReal b) { return a.v_ <= b.v_; }
    friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }

private:
    double v_;
};

inline void require_finite(const Vec& v, const char* what) {
    if (v.size() < 1) throw DomainError(std::string(what) + ": empty vector");
    if (!v.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
}

inline void require_finite(const Mat& m, const char* what) {
    if (m.rows() < 1 || m.cols() < 1) throw DomainError(std::string(what) + ": empty matrix");
    if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
}

/// Deterministic RNG. Gaussian draws use Box-Muller on top of mt19937_64 so
/// the stream does not depend on the standard library's distribution
/// implementation; seeded runs are reproducible byte for byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // (0, 1)
        // 53-bit mantissa; offset by half an ulp to avoid exact 0.
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = two_pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec normal_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    Mat normal_mat(Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {  // inclusive
        return lo + gen_() % (hi - lo + 1);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace proxflow
