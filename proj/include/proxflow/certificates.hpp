#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxflow/dynamics.hpp"

namespace proxflow {

/// Outcome of one empirical inequality check. All checks certify over finite
/// trajectories or sample clouds, never over all of ℝⁿ.
struct CertificateReport {
    std::string name;
    bool passed = false;
    double worst_violation = 0.0;
    double slack_used = 0.0;
    std::optional<double> witness_time;
    std::optional<Vec> witness_point;
    std::map<std::string, double> details;
};

inline CertificateReport make_report(std::string name, double worst, double slack) {
    CertificateReport r;
    r.name = std::move(name);
    r.worst_violation = worst;
    r.slack_used = slack;
    r.passed = worst <= slack;
    return r;
}

using Sampler = std::function<Vec()>;

/// Gaussian cloud around a fixed center, projected into dom g.
inline Sampler gaussian_cloud_sampler(const ProxOperator& g, Vec center, double scale,
                                      std::uint64_t seed) {
    require_finite(center, "gaussian_cloud_sampler center");
    auto rng = std::make_shared<Rng>(seed);
    return [rng, project = g.project_domain, center = std::move(center), scale]() {
        return project(center + scale * rng->normal_vec(center.size()));
    };
}

/// Gaussian cloud around states visited by a trajectory (including the
/// initial condition), projected into dom g. A quarter of the draws return a
/// recorded state verbatim; the rest perturb one with a radius log-uniform
/// over three decades below scale. Exact states matter: isotropic noise near
/// the tail averages over directions and hides the flat ones the flow
/// actually follows, which would overestimate constants taken as cloud
/// minima.
inline Sampler trajectory_cloud_sampler(const CompositeProblem& p, const Trajectory& traj,
                                        double scale, std::uint64_t seed) {
    if (traj.states.empty()) throw DomainError("trajectory_cloud_sampler: empty trajectory");
    auto rng = std::make_shared<Rng>(seed);
    auto states = std::make_shared<std::vector<Vec>>(traj.states);
    return [rng, states, project = p.g.project_domain, scale]() {
        const Vec& base = (*states)[rng->integer(0, states->size() - 1)];
        if (rng->uniform() < 0.25) return project(base);
        const double radius = scale * std::pow(10.0, -3.0 * rng->uniform());
        return project(base + radius * rng->normal_vec(base.size()));
    };
}

inline std::vector<Vec> draw_cloud(const Sampler& sample, int n) {
    std::vector<Vec> cloud;
    cloud.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cloud.push_back(sample());
    return cloud;
}

/// Replays a fixed cloud, so several checks can share identical points.
inline Sampler replay_sampler(std::vector<Vec> points) {
    auto state = std::make_shared<std::pair<std::vector<Vec>, std::size_t>>(std::move(points), 0);
    return [state]() {
        if (state->second >= state->first.size())
            throw DomainError("replay_sampler: cloud exhausted");
        return state->first[state->second++];
    };
}

/// 𝒟_g(x,α) = (2/α)·max_y {⟨∇f(x), x−y⟩ − ‖x−y‖²/(2α) + g(x) − g(y)},
/// evaluated in closed form at the maximizer y = prox_{αg}(x − α∇f(x)).
inline double moreau_decrease(const CompositeProblem& p, double alpha, const Vec& x) {
    if (!(alpha > 0.0)) throw DomainError("moreau_decrease: alpha must be positive");
    if (!p.g.domain_test(x)) throw DomainError("moreau_decrease: x outside dom g");
    const Vec grad = p.f.gradient(x);
    const Vec z = p.g.prox(alpha, x - alpha * grad);
    const Vec d = x - z;
    return (2.0 / alpha) * (grad.dot(d) - d.squaredNorm() / (2.0 * alpha) +
                            p.g.value(x).finite_value() - p.g.value(z).finite_value());
}

/// Cost never increases along a trajectory beyond 1e−9 + 10·dt²·scale, and
/// once finite it never returns to +∞.
inline CertificateReport check_monotone_cost(const Trajectory& traj) {
    if (traj.size() < 1) throw DomainError("check_monotone_cost: empty trajectory");
    double worst = 0.0;
    std::optional<double> witness;
    long first_finite = -1;
    long pairs = 0;
    bool seen_finite = false;
    for (Eigen::Index k = 0; k < traj.size(); ++k) {
        if (traj.costs[k].is_finite()) {
            if (!seen_finite) first_finite = k;
            seen_finite = true;
        } else if (seen_finite) {
            CertificateReport r = make_report(
                "monotone-cost", std::numeric_limits<double>::infinity(), 1e-9);
            r.witness_time = traj.times(k);
            r.details["finite_to_infinite_index"] = static_cast<double>(k);
            return r;
        }
    }
    for (Eigen::Index k = 0; k + 1 < traj.size(); ++k) {
        if (!traj.costs[k].is_finite() || !traj.costs[k + 1].is_finite()) continue;
        ++pairs;
        const double dt = traj.times(k + 1) - traj.times(k);
        const double lo = traj.costs[k].value(), hi = traj.costs[k + 1].value();
        const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
        const double violation = (hi - lo) - 10.0 * dt * dt * scale;
        if (violation > worst) {
            worst = violation;
            witness = traj.times(k + 1);
        }
    }
    CertificateReport r = make_report("monotone-cost", worst, 1e-9);
    r.witness_time = witness;
    r.details["checked_pairs"] = static_cast<double>(pairs);
    r.details["first_finite_index"] = static_cast<double>(first_finite);
    return r;
}

/// Largest excess of the forward difference quotient of the cost over the
/// flow decrease bound −(1/α)‖ẋ‖², across consecutive finite-cost samples.
inline double dini_excess(const Trajectory& traj, const CompositeProblem& p, double alpha,
                          double* at_time = nullptr) {
    double worst = 0.0;
    bool any = false;
    for (Eigen::Index k = 0; k + 1 < traj.size(); ++k) {
        if (!traj.costs[k].is_finite() || !traj.costs[k + 1].is_finite()) continue;
        const double dt = traj.times(k + 1) - traj.times(k);
        const double quotient = (traj.costs[k + 1].value() - traj.costs[k].value()) / dt;
        const double flow_sq =
            prox_grad_vector_field(p, alpha, traj.states[k]).field.squaredNorm();
        const double excess = quotient + flow_sq / alpha;
        if (!any || excess > worst) {
            worst = excess;
            if (at_time != nullptr) *at_time = traj.times(k);
            any = true;
        }
    }
    return any ? worst : 0.0;
}

/// D⁺V ≤ −(1/α)‖ẋ‖² in discrete form: the quotient may exceed the bound by
/// at most slack_c·dt (explicit Euler contributes O(dt) to the quotient).
inline CertificateReport check_dini_bound(const Trajectory& traj, const CompositeProblem& p,
                                          double alpha, double slack_c) {
    double worst = -std::numeric_limits<double>::infinity();
    std::optional<double> witness;
    long pairs = 0;
    double max_excess = 0.0;
    for (Eigen::Index k = 0; k + 1 < traj.size(); ++k) {
        if (!traj.costs[k].is_finite() || !traj.costs[k + 1].is_finite()) continue;
        ++pairs;
        const double dt = traj.times(k + 1) - traj.times(k);
        const double quotient = (traj.costs[k + 1].value() - traj.costs[k].value()) / dt;
        const double flow_sq =
            prox_grad_vector_field(p, alpha, traj.states[k]).field.squaredNorm();
        const double excess = quotient + flow_sq / alpha;
        max_excess = std::max(max_excess, excess);
        const double violation = excess - slack_c * dt;
        if (violation > worst) {
            worst = violation;
            witness = traj.times(k);
        }
    }
    CertificateReport r = make_report("dini-bound", pairs > 0 ? worst : 0.0, 0.0);
    r.witness_time = witness;
    r.details["checked_pairs"] = static_cast<double>(pairs);
    r.details["slack_coefficient"] = slack_c;
    r.details["max_excess"] = max_excess;
    return r;
}

/// Per-problem Dini slack coefficient from an Euler step-halving pair: the
/// observed excess should scale linearly in the step, so 1.5× the larger
/// excess-per-step is a safe linear envelope. ratio is NaN when the excess
/// is too small to measure.
struct DiniCalibration {
    double slack_c;
    double excess_coarse;
    double excess_fine;
    double ratio;
};

inline DiniCalibration calibrate_dini_slack(const CompositeProblem& p, double alpha, double step,
                                            double t_end, const Vec& x0,
                                            Method method = Method::euler) {
    FlowConfig cfg{.alpha = alpha, .step = step, .method = method, .t_end = t_end};
    const Trajectory coarse = integrate(p, cfg, x0);
    cfg.step = step / 2.0;
    const Trajectory fine = integrate(p, cfg, x0);
    const double e1 = dini_excess(coarse, p, alpha);
    const double e2 = dini_excess(fine, p, alpha);
    const double ratio = e1 > 1e-12 ? e2 / e1 : std::numeric_limits<double>::quiet_NaN();
    double slack_c = 1.5 * std::max({e1 / step, e2 / (step / 2.0), 0.0});
    if (!(slack_c > 0.0)) slack_c = 1e-6;
    return {slack_c, e1, e2, ratio};
}

/// Empirical proximal PL constant: the cloud minimum of 𝒟_g(x,α)/(2(F−F⋆)).
struct PLEstimate {
    double mu_hat;
    double alpha;
    int n_samples;  // admissible samples (optimality gap above 1e−12)
    Vec min_witness;
};

inline PLEstimate estimate_pl_constant(const CompositeProblem& p, double alpha,
                                       const Sampler& sample, int n) {
    if (!p.fstar) throw DomainError("estimate_pl_constant: problem has no optimal value");
    double best = std::numeric_limits<double>::infinity();
    Vec witness;
    int admissible = 0;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample();
        const double gap = cost(p, x).finite_value() - *p.fstar;
        if (gap <= 1e-12) continue;
        ++admissible;
        const double mu = moreau_decrease(p, alpha, x) / (2.0 * gap);
        if (mu < best) {
            best = mu;
            witness = x;
        }
    }
    if (admissible == 0) throw DomainError("estimate_pl_constant: no admissible samples");
    return {std::max(0.0, best), alpha, admissible, std::move(witness)};
}

/// ½‖ẋ‖² ≥ μα²(F − F⋆) over the cloud; passing certifies decay rate 2μα.
inline CertificateReport check_condition12(const CompositeProblem& p, double alpha, double mu,
                                           const Sampler& sample, int n) {
    if (!p.fstar) throw DomainError("check_condition12: problem has no optimal value");
    double worst = 0.0;
    std::optional<Vec> witness;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample();
        const double gap = cost(p, x).finite_value() - *p.fstar;
        const double flow_sq = prox_grad_vector_field(p, alpha, x).field.squaredNorm();
        const double violation = mu * alpha * alpha * gap - 0.5 * flow_sq;
        if (violation > worst) {
            worst = violation;
            witness = x;
        }
    }
    CertificateReport r = make_report("condition12", worst, 1e-10);
    r.witness_point = witness;
    r.details["mu"] = mu;
    r.details["n_samples"] = n;
    return r;
}

struct MinNormSubgradResult {
    Vec s;
    double norm;
};

/// Min-norm element of ∂F(x) = {∇f(x) + v : v ∈ ∂g(x)}, where g has an
/// exact componentwise rule (ℓ1, zero).
inline MinNormSubgradResult min_norm_composite_subgradient(const CompositeProblem& p,
                                                           const Vec& x) {
    if (!p.g.min_norm_composite)
        throw UnsupportedOperatorError(
            "min_norm_composite_subgradient: no exact rule for operator " + p.g.name);
    Vec s = p.g.min_norm_composite(x, p.f.gradient(x));
    const double norm = s.norm();
    return {std::move(s), norm};
}

/// min_{s∈∂F(x)} ‖s‖² ≥ 2μ̂(F − F⋆) over the cloud; also reports the largest
/// μ̂ the cloud would accept.
inline CertificateReport check_kl(const CompositeProblem& p, const Sampler& sample, int n,
                                  double mu_hat) {
    if (!p.fstar) throw DomainError("check_kl: problem has no optimal value");
    double worst = 0.0;
    double largest_mu = std::numeric_limits<double>::infinity();
    std::optional<Vec> witness;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample();
        const double gap = cost(p, x).finite_value() - *p.fstar;
        const double s_sq = min_norm_composite_subgradient(p, x).s.squaredNorm();
        const double violation = 2.0 * mu_hat * gap - s_sq;
        if (violation > worst) {
            worst = violation;
            witness = x;
        }
        if (gap > 1e-12) largest_mu = std::min(largest_mu, s_sq / (2.0 * gap));
    }
    CertificateReport r = make_report("kl", worst, 1e-10);
    r.witness_point = witness;
    r.details["mu"] = mu_hat;
    r.details["largest_passing_mu"] = largest_mu;
    return r;
}

/// Pointwise inequality α‖s‖ ≥ ‖x − z‖ for every s ∈ ∂F(x), checked at the
/// min-norm element; this is the step that turns a flow-decrease condition
/// into a subgradient (KL) condition.
inline CertificateReport check_lemma_cauchy_schwarz(const CompositeProblem& p, double alpha,
                                                    const Sampler& sample, int n) {
    double worst = -std::numeric_limits<double>::infinity();
    std::optional<Vec> witness;
    for (int i = 0; i < n; ++i) {
        const Vec x = sample();
        const double s_norm = min_norm_composite_subgradient(p, x).norm;
        const double dist = stationarity_residual(p, alpha, x);
        const double violation = dist - alpha * s_norm;
        if (violation > worst) {
            worst = violation;
            witness = x;
        }
    }
    CertificateReport r = make_report("cauchy-schwarz", n > 0 ? worst : 0.0, 1e-9);
    r.witness_point = witness;
    r.details["n_samples"] = n;
    return r;
}

/// 𝒟_g(x,·) is nonincreasing in α: for α′ ≤ α, 𝒟_g(x,α′) ≥ 𝒟_g(x,α).
inline CertificateReport check_dg_alpha_monotone(const CompositeProblem& p,
                                                 const Sampler& sample, int n,
                                                 const Vec& alphas) {
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
        if (!(alphas(i) > 0.0))
            throw DomainError("check_dg_alpha_monotone: alphas must be positive");
        if (i > 0 && !(alphas(i) > alphas(i - 1)))
            throw DomainError("check_dg_alpha_monotone: alphas must be strictly increasing");
    }
    double worst = 0.0;
    std::optional<Vec> witness;
    for (int k = 0; k < n; ++k) {
        const Vec x = sample();
        Vec d(alphas.size());
        for (Eigen::Index i = 0; i < alphas.size(); ++i) d(i) = moreau_decrease(p, alphas(i), x);
        for (Eigen::Index i = 0; i < alphas.size(); ++i)
            for (Eigen::Index j = i + 1; j < alphas.size(); ++j) {
                const double violation = d(j) - d(i);
                if (violation > worst) {
                    worst = violation;
                    witness = x;
                }
            }
    }
    CertificateReport r = make_report("alpha-monotone", worst, 1e-10);
    r.witness_point = witness;
    r.details["n_samples"] = n;
    r.details["n_alphas"] = static_cast<double>(alphas.size());
    return r;
}

inline CertificateReport check_dg_alpha_monotone(const CompositeProblem& p, const Vec& x,
                                                 const Vec& alphas) {
    return check_dg_alpha_monotone(p, replay_sampler({x}), 1, alphas);
}

/// Exponential decay rate of F − F⋆, fitted on the window where the gap lies
/// in [1e−8, 1e−1].
struct RateEstimate {
    double rate;
    double r2;
    int n_points;
};

inline RateEstimate estimate_exp_rate(const Trajectory& traj, double fstar) {
    std::vector<double> ts, gaps;
    for (Eigen::Index k = 0; k < traj.size(); ++k) {
        if (!traj.costs[k].is_finite()) continue;
        const double gap = traj.costs[k].value() - fstar;
        if (gap >= 1e-8 && gap <= 1e-1) {
            ts.push_back(traj.times(k));
            gaps.push_back(gap);
        }
    }
    if (ts.size() < 3)
        throw DomainError("estimate_exp_rate: too few samples in the fitting window");
    const auto fit = log_linear_fit(
        Eigen::Map<const Vec>(ts.data(), static_cast<Eigen::Index>(ts.size())),
        Eigen::Map<const Vec>(gaps.data(), static_cast<Eigen::Index>(gaps.size())));
    return {fit.rate, fit.r2, static_cast<int>(ts.size())};
}

}  // namespace proxflow
