#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "proxflow/certificates.hpp"
#include "proxflow/ista.hpp"
#include "proxflow/mlp.hpp"
#include "proxflow/time_varying.hpp"

namespace proxflow {

/// A ready-to-run instance: problem, start state, and a flow configuration
/// that exercises it well. Instances are deterministic per seed.
struct Demo {
    CompositeProblem problem;
    Vec x0;
    FlowConfig flow;
    std::string description;
};

struct TvDemo {
    TvProblem problem;
    Vec x0;
    FlowConfig flow;
    std::string description;
};

struct DemoInfo {
    const char* name;
    const char* description;
};

inline const std::vector<DemoInfo>& demo_catalog() {
    static const std::vector<DemoInfo> catalog = {
        {"lasso", "20x40 sparse regression, l1 regularizer, reference value from the ISTA oracle"},
        {"quad-l1", "10-dim strongly convex quadratic plus l1"},
        {"matrix-recovery", "5x5 rank-1 recovery from 10 trace measurements, nuclear norm"},
        {"matrix-factorization", "6x4 target factored through rank 2, blockwise nuclear norm"},
        {"mlp-slice", "two free first-layer weights of a frozen tanh classifier on two moons"},
        {"quadratic", "f = 0.5*|x|^2 with g = 0; decays at rate exactly 2 for alpha = 1"},
        {"box", "quadratic pulled toward an interior point of [0,1]^2, indicator g"},
    };
    return catalog;
}

inline const std::vector<DemoInfo>& tv_demo_catalog() {
    static const std::vector<DemoInfo> catalog = {
        {"tv-lasso", "scalar lasso with target u(t) = 1 + 0.1 sin t"},
        {"tv-lasso-settle", "same path until the drift stops smoothly at t = 3pi/2"},
        {"tv-lasso-constant", "frozen target u = 1; tracking reduces to plain decay"},
    };
    return catalog;
}

inline Demo make_demo(const std::string& name, std::uint64_t seed) {
    if (name == "lasso") {
        Rng rng(seed);
        const Mat A = rng.normal_mat(20, 40) / std::sqrt(20.0);
        Vec x_true = Vec::Zero(40);
        int placed = 0;
        while (placed < 5) {
            const auto idx = static_cast<Eigen::Index>(rng.integer(0, 39));
            if (x_true(idx) != 0.0) continue;
            x_true(idx) = rng.uniform() < 0.5 ? -1.0 : 1.0;
            ++placed;
        }
        const Vec u = A * x_true + 0.01 * rng.normal_vec(20);
        const double lambda = 0.2 * (A.transpose() * u).lpNorm<Eigen::Infinity>();
        CompositeProblem p = with_ista_fstar(lasso_problem(A, u, lambda), Vec::Zero(40));
        return {std::move(p), Vec::Zero(40),
                FlowConfig{.alpha = 1.0, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[0].description};
    }
    if (name == "quad-l1") {
        Rng rng(seed);
        const Mat B = rng.normal_mat(10, 10) / std::sqrt(10.0);
        const Mat Q = B.transpose() * B + 0.5 * Mat::Identity(10, 10);
        const Vec b = rng.normal_vec(10);
        CompositeProblem p = quadratic_problem(Q, b, make_l1(0.5));
        p.name = "quad-l1";
        p = with_ista_fstar(std::move(p), Vec::Zero(10));
        Vec x0 = 2.0 * rng.normal_vec(10);
        return {std::move(p), std::move(x0),
                FlowConfig{.alpha = 1.0, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[1].description};
    }
    if (name == "matrix-recovery") {
        Rng rng(seed);
        const Vec a = rng.normal_vec(5), b = rng.normal_vec(5);
        const Mat x_true = 2.0 * (a / a.norm()) * (b / b.norm()).transpose();
        std::vector<Mat> ops;
        ops.reserve(10);
        for (int i = 0; i < 10; ++i) ops.push_back(rng.normal_mat(5, 5) / std::sqrt(5.0));
        Vec y(10);
        for (int i = 0; i < 10; ++i) y(i) = ops[static_cast<std::size_t>(i)].cwiseProduct(x_true).sum();
        CompositeProblem p = matrix_recovery_problem(ops, y, 0.3);
        return {std::move(p), Vec::Zero(25),
                FlowConfig{.alpha = 0.5, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[2].description};
    }
    if (name == "matrix-factorization") {
        Rng rng(seed);
        const Mat X = rng.normal_mat(6, 4) / std::sqrt(6.0);
        const Mat W1 = 0.8 * rng.normal_mat(4, 2);
        const Mat W2 = 0.8 * rng.normal_mat(2, 4);
        const Mat Y = X * W1 * W2 + 0.01 * rng.normal_mat(6, 4);
        CompositeProblem p = matrix_factorization_problem(X, Y, 2, 0.2);
        Vec x0 = 0.5 * rng.normal_vec(p.dim);
        return {std::move(p), std::move(x0),
                FlowConfig{.alpha = 0.5, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[3].description};
    }
    if (name == "mlp-slice") {
        const LabeledDataset data = two_moons(200, 0.1, seed);
        const std::vector<int> widths = {2, 8, 2, 1};
        Rng rng(seed ^ 0x6d6c70u);
        const Vec base = 0.8 * rng.normal_vec(MlpArchitecture{widths}.param_count());
        CompositeProblem p = mlp_slice_problem(widths, data, 0.05, base, {0, 1});
        Vec x0(2);
        x0 << 1.5, -1.0;
        return {std::move(p), std::move(x0),
                FlowConfig{.alpha = 1.0, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[4].description};
    }
    if (name == "quadratic") {
        Rng rng(seed);
        CompositeProblem p = quadratic_problem(Mat::Identity(5, 5), Vec::Zero(5), make_zero());
        p.fstar = 0.0;
        p.fstar_provenance = "closed-form";
        Vec x0 = rng.normal_vec(5);
        return {std::move(p), std::move(x0),
                FlowConfig{.alpha = 1.0, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[5].description};
    }
    if (name == "box") {
        Vec c(2);
        c << 0.5, 0.6;
        CompositeProblem p = quadratic_problem(Mat::Identity(2, 2), c,
                                               make_box_indicator(Vec::Zero(2), Vec::Ones(2)));
        p.name = "box";
        p.fstar = -0.5 * c.squaredNorm();  // minimum at x = c, inside the box
        p.fstar_provenance = "closed-form";
        Vec x0(2);
        x0 << 2.0, -1.0;
        return {std::move(p), std::move(x0),
                FlowConfig{.alpha = 1.0, .step = 1e-2, .method = Method::rk4, .t_end = 200.0,
                           .record_every = 10, .residual_stop = 1e-6},
                demo_catalog()[6].description};
    }
    throw DomainError("unknown demo: " + name);
}

/// Scalar moving-target lasso family: f(x, θ) = ½(x − θ)², g = 0.5|x|.
/// ell_theta bounds |∂F/∂θ| = |θ − x| over the run region (x and θ stay
/// within [−0.2, 1.2] from the given starts).
inline TvDemo make_tv_demo(const std::string& name, std::uint64_t seed) {
    const bool settle = name == "tv-lasso-settle";
    const bool constant = name == "tv-lasso-constant";
    if (!settle && !constant && name != "tv-lasso")
        throw DomainError("unknown time-varying demo: " + name);

    const auto family = [](const Vec& theta) {
        return lasso_problem(Mat::Identity(1, 1), theta, 0.5);
    };
    const double t_stop = 1.5 * std::numbers::pi;  // cos vanishes there, so θ̇ stays continuous
    ParameterPath path;
    path.t_end = settle ? t_stop + 30.0 : 30.0;
    if (constant) {
        path.theta = [](double) {
            Vec v(1);
            v << 1.0;
            return v;
        };
        path.theta_dot = [](double) { return Vec(Vec::Zero(1)); };
    } else if (settle) {
        path.theta = [t_stop](double t) {
            Vec v(1);
            v << 1.0 + 0.1 * std::sin(std::min(t, t_stop));
            return v;
        };
        path.theta_dot = [t_stop](double t) {
            Vec v(1);
            v << (t < t_stop ? 0.1 * std::cos(t) : 0.0);
            return v;
        };
    } else {
        path.theta = [](double t) {
            Vec v(1);
            v << 1.0 + 0.1 * std::sin(t);
            return v;
        };
        path.theta_dot = [](double t) {
            Vec v(1);
            v << 0.1 * std::cos(t);
            return v;
        };
    }
    path.ell_theta = 1.5;

    TvProblem tp;
    tp.family = family;
    tp.path = path;

    double mu = std::numeric_limits<double>::infinity();
    Vec center(1);
    center << 0.5;
    for (int i = 0; i < 5; ++i) {
        const double t = 1.5 * i;
        const CompositeProblem frozen =
            with_ista_fstar(family(path.theta(t)), Vec::Zero(1));
        const auto est = estimate_pl_constant(
            frozen, 1.0, gaussian_cloud_sampler(frozen.g, center, 0.5, seed + static_cast<std::uint64_t>(i)),
            200);
        mu = std::min(mu, est.mu_hat);
    }
    tp.mu = mu;

    TvDemo d;
    d.problem = std::move(tp);
    d.x0 = Vec::Zero(1);
    d.flow = FlowConfig{.alpha = 1.0,
                        .step = 1e-3,
                        .method = Method::euler,
                        .t_end = path.t_end,
                        .record_every = 10};
    d.description =
        tv_demo_catalog()[constant ? 2 : (settle ? 1 : 0)].description;
    return d;
}

}  // namespace proxflow
