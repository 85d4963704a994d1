#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "proxflow/certificates.hpp"
#include "proxflow/ista.hpp"

namespace proxflow {

/// θ(t) with its derivative and the Lipschitz constant of F(x,·) in θ over
/// the run region.
struct ParameterPath {
    std::function<Vec(double)> theta;
    std::function<Vec(double)> theta_dot;
    double ell_theta = 0.0;
    double t_end = 0.0;
};

/// Worst relative mismatch of theta_dot against central differences of theta
/// at n seeded times in (0, t_end).
inline double path_derivative_fd_error(const ParameterPath& path, int n = 20,
                                       std::uint64_t seed = 99) {
    Rng rng(seed);
    double worst = 0.0;
    const double step = 1e-6;
    for (int i = 0; i < n; ++i) {
        const double t = step + (path.t_end - 2.0 * step) * rng.uniform();
        const Vec fd = (path.theta(t + step) - path.theta(t - step)) / (2.0 * step);
        const Vec d = path.theta_dot(t);
        worst = std::max(worst, (fd - d).norm() / std::max(1.0, d.norm()));
    }
    return worst;
}

/// Parameter-varying family F(x, θ): frozen snapshots are ordinary composite
/// problems; mu is the empirical proximal PL constant certified for the
/// frozen snapshots (the minimum over sampled times).
struct TvProblem {
    std::function<CompositeProblem(const Vec&)> family;
    ParameterPath path;
    IstaConfig inner_oracle_cfg{.step = 0.0, .tol = 1e-10, .max_iters = 2'000'000};
    double mu = 0.0;
};

/// Instantaneous optimality gap V(t) = F(x(t),θ(t)) − F⋆(θ(t)) with the two
/// envelope forms evaluated at each recorded time. The path and V(0) are
/// kept so checks can recompute envelopes for a different μ.
struct TrackingRecord {
    Vec times;
    Vec V;
    Vec bound_gronwall;
    Vec bound_paper;
    Vec theta_dot_norms;
    double v0 = 0.0;
    double alpha = 0.0;
    double step = 0.0;  // integrator step, the scale of discretization slack
    ParameterPath path;
};

enum class BoundForm { gronwall, paper };

/// e^{−μαt}V₀ + prefactor·∫₀ᵗ e^{−μα(t−τ)}‖θ̇(τ)‖dτ by composite Simpson on
/// 2048 panels. The gronwall form uses prefactor 2ℓ_θ (the direct
/// integration of D⁺V ≤ −μαV + 2ℓ_θ‖θ̇‖); the paper form uses 2ℓ_θ/(μα).
inline double tracking_bound(double v0, double mu, double alpha, const ParameterPath& path,
                             double t, BoundForm form) {
    if (!(mu > 0.0) || !(alpha > 0.0))
        throw DomainError("tracking_bound: mu and alpha must be positive");
    if (t < 0.0) throw DomainError("tracking_bound: t must be nonnegative");
    const double decay = mu * alpha;
    double integral = 0.0;
    if (t > 0.0) {
        constexpr int panels = 2048;
        const double dt = t / panels;
        const auto integrand = [&](double tau) {
            return std::exp(-decay * (t - tau)) * path.theta_dot(tau).norm();
        };
        double acc = integrand(0.0) + integrand(t);
        for (int i = 1; i < panels; ++i)
            acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * dt);
        integral = acc * dt / 3.0;
    }
    const double prefactor = form == BoundForm::paper ? 2.0 * path.ell_theta / decay
                                                      : 2.0 * path.ell_theta;
    return std::exp(-decay * t) * v0 + prefactor * integral;
}

/// Integrates ẋ = −x + prox_{αg}(x − α∇f(x,θ(t))) and records V(t) against
/// both envelopes. F⋆(t) comes from the ISTA oracle on the frozen problem,
/// warm-started at the previous optimum.
inline TrackingRecord integrate_tv(const TvProblem& tp, const FlowConfig& cfg, const Vec& x0) {
    validate_flow_config(cfg);
    require_finite(x0, "integrate_tv x0");
    if (!(tp.mu > 0.0)) throw DomainError("integrate_tv: problem needs a positive mu");

    const double h = cfg.step;
    const long n_steps = std::max<long>(1, std::lround(cfg.t_end / h));
    const auto field_at = [&](double t, const Vec& x) {
        return prox_grad_vector_field(tp.family(tp.path.theta(t)), cfg.alpha, x).field;
    };

    std::vector<double> times, gaps, dot_norms;
    Vec x = x0;
    Vec warm = x0;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        if (k % cfg.record_every == 0 || k == n_steps) {
            const CompositeProblem frozen = tp.family(tp.path.theta(t));
            IstaResult opt{};
            try {
                opt = ista_solve(frozen, warm, tp.inner_oracle_cfg);
            } catch (const NumericalError& err) {
                throw NumericalError("integrate_tv: inner oracle failed at t=" +
                                         std::to_string(t) + " (" + err.what() + ")",
                                     err.residual());
            }
            warm = opt.x;
            const double gap = cost(frozen, x).finite_value() - opt.fvalue;
            if (gap < -1e-9)
                throw NumericalError("integrate_tv: negative optimality gap at t=" +
                                         std::to_string(t),
                                     -gap);
            times.push_back(t);
            gaps.push_back(gap);
            dot_norms.push_back(tp.path.theta_dot(t).norm());
        }
        if (k == n_steps) break;

        if (cfg.method == Method::euler) {
            x += h * field_at(t, x);
        } else {
            const Vec k1 = field_at(t, x);
            const Vec k2 = field_at(t + 0.5 * h, x + 0.5 * h * k1);
            const Vec k3 = field_at(t + 0.5 * h, x + 0.5 * h * k2);
            const Vec k4 = field_at(t + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!x.allFinite())
            throw NumericalError("integrate_tv: state became non-finite at t=" +
                                 std::to_string(t + h));
        if (x.norm() > 1e12)
            throw DivergenceError("integrate_tv: state norm exceeded 1e12", x, t + h);
    }

    TrackingRecord rec;
    const auto count = static_cast<Eigen::Index>(times.size());
    rec.times = Eigen::Map<const Vec>(times.data(), count);
    rec.V = Eigen::Map<const Vec>(gaps.data(), count);
    rec.theta_dot_norms = Eigen::Map<const Vec>(dot_norms.data(), count);
    rec.v0 = gaps.front();
    rec.alpha = cfg.alpha;
    rec.step = h;
    rec.path = tp.path;
    rec.bound_gronwall.resize(count);
    rec.bound_paper.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        rec.bound_gronwall(i) =
            tracking_bound(rec.v0, tp.mu, cfg.alpha, tp.path, rec.times(i), BoundForm::gronwall);
        rec.bound_paper(i) =
            tracking_bound(rec.v0, tp.mu, cfg.alpha, tp.path, rec.times(i), BoundForm::paper);
    }
    return rec;
}

/// V(t) stays under the Grönwall envelope recomputed for the given μ, up to
/// slack_c·h of discretization slack (h = the integrator step). The
/// paper-form envelope is reported in the details but not asserted (its
/// prefactor carries an extra 1/(μα)).
inline CertificateReport check_tracking(const TrackingRecord& rec, double mu, double alpha,
                                        double slack_c = 10.0) {
    if (rec.times.size() < 1) throw DomainError("check_tracking: empty record");
    if (!(mu > 0.0) || !(alpha > 0.0))
        throw DomainError("check_tracking: mu and alpha must be positive");
    const double slack = slack_c * std::max(rec.step, 1e-12);

    double worst = -std::numeric_limits<double>::infinity();
    double worst_paper = -std::numeric_limits<double>::infinity();
    std::optional<double> witness;
    for (Eigen::Index i = 0; i < rec.times.size(); ++i) {
        const double bound =
            tracking_bound(rec.v0, mu, alpha, rec.path, rec.times(i), BoundForm::gronwall);
        const double violation = rec.V(i) - bound;
        if (violation > worst) {
            worst = violation;
            witness = rec.times(i);
        }
        worst_paper = std::max(
            worst_paper,
            rec.V(i) -
                tracking_bound(rec.v0, mu, alpha, rec.path, rec.times(i), BoundForm::paper));
    }
    CertificateReport r = make_report("tracking", worst, slack);
    r.witness_time = witness;
    r.details["mu"] = mu;
    r.details["alpha"] = alpha;
    r.details["worst_violation_paper_form"] = worst_paper;
    r.details["n_samples"] = static_cast<double>(rec.times.size());
    return r;
}

inline void write_tracking_csv(std::ostream& out, const TrackingRecord& rec) {
    out << "t,V,bound_gronwall,bound_paper,theta_dot_norm\n";
    for (Eigen::Index i = 0; i < rec.times.size(); ++i)
        out << format_double(rec.times(i)) << ',' << format_double(rec.V(i)) << ','
            << format_double(rec.bound_gronwall(i)) << ',' << format_double(rec.bound_paper(i))
            << ',' << format_double(rec.theta_dot_norms(i)) << "\n";
}

}  // namespace proxflow
