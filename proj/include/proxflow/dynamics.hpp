#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "proxflow/problems.hpp"

namespace proxflow {

enum class Method { euler, rk4 };

inline Method parse_method(const std::string& name) {
    if (name == "euler") return Method::euler;
    if (name == "rk4") return Method::rk4;
    throw DomainError("unknown integration method: " + name);
}

inline const char* method_name(Method m) { return m == Method::euler ? "euler" : "rk4"; }

struct FlowConfig {
    double alpha = 1.0;  // prox scale of the dynamics
    double step = 1e-3;
    Method method = Method::euler;
    double t_end = 20.0;
    int record_every = 1;
    std::optional<double> residual_stop;  // stop early once ‖x−z‖ falls below
};

inline void validate_flow_config(const FlowConfig& cfg) {
    if (!(cfg.alpha > 0.0)) throw DomainError("flow config: alpha must be positive");
    if (!(cfg.step > 0.0)) throw DomainError("flow config: step must be positive");
    if (!(cfg.t_end > 0.0)) throw DomainError("flow config: t_end must be positive");
    if (cfg.step > cfg.t_end) throw DomainError("flow config: step must not exceed t_end");
    if (cfg.record_every < 1) throw DomainError("flow config: record_every must be >= 1");
    if (cfg.residual_stop && !(*cfg.residual_stop >= 0.0))
        throw DomainError("flow config: residual_stop must be nonnegative");
}

/// One evaluation of ẋ = −x + prox_{αg}(x − α∇f(x)); z is the prox point,
/// reused by callers that need the stationarity residual ‖x − z‖ = ‖field‖.
struct FlowEval {
    Vec field;
    Vec z;
};

inline FlowEval prox_grad_vector_field(const CompositeProblem& p, double alpha, const Vec& x) {
    if (!(alpha > 0.0)) throw DomainError("vector field: alpha must be positive");
    require_finite(x, "vector field state");
    const Vec grad = p.f.gradient(x);
    if (!grad.allFinite()) throw NumericalError("vector field: gradient returned non-finite values");
    Vec z = p.g.prox(alpha, x - alpha * grad);
    if (!z.allFinite()) throw NumericalError("vector field: prox returned non-finite values");
    return {z - x, std::move(z)};
}

/// ‖x − prox_{αg}(x − α∇f(x))‖; zero exactly at points with 0 ∈ ∇f(x)+∂g(x).
inline double stationarity_residual(const CompositeProblem& p, double alpha, const Vec& x) {
    return prox_grad_vector_field(p, alpha, x).field.norm();
}

struct Trajectory {
    Vec times;
    std::vector<Vec> states;
    std::vector<ExtReal> costs;  // F(x(t)); +∞ while the state is outside dom g
    Vec residuals;               // ‖x − z‖ per recorded sample
    Vec flow_norms_sq;           // ‖ẋ‖² per recorded sample
    std::optional<double> fstar;
    double step = 0.0;
    Method method = Method::euler;

    Eigen::Index size() const { return times.size(); }
};

/// Fixed-step explicit integration of the flow. Records sample k=0, every
/// record_every-th step, and the final step; t_end is rounded to a whole
/// number of steps. States above norm 1e12 abort with a divergence error.
inline Trajectory integrate(const CompositeProblem& p, const FlowConfig& cfg, const Vec& x0) {
    validate_flow_config(cfg);
    require_finite(x0, "integrate x0");
    if (p.dim > 0 && x0.size() != p.dim) throw DomainError("integrate: x0 has wrong dimension");

    const double h = cfg.step;
    const long n_steps = std::max<long>(1, std::lround(cfg.t_end / h));
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<ExtReal> costs;
    std::vector<double> residuals;

    Vec x = x0;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        const FlowEval eval = prox_grad_vector_field(p, cfg.alpha, x);
        const double residual = eval.field.norm();
        const bool stopping =
            k == n_steps || (cfg.residual_stop && residual <= *cfg.residual_stop);
        if (stopping || k % cfg.record_every == 0) {
            const ExtReal c = cost(p, x);
            if (p.fstar && c.is_finite() && c.value() < *p.fstar - 1e-9)
                throw NumericalError("integrate: cost fell below the recorded optimal value",
                                     *p.fstar - c.value());
            times.push_back(t);
            states.push_back(x);
            costs.push_back(c);
            residuals.push_back(residual);
        }
        if (stopping) break;

        if (cfg.method == Method::euler) {
            x += h * eval.field;
        } else {
            const Vec k1 = eval.field;
            const Vec k2 = prox_grad_vector_field(p, cfg.alpha, x + 0.5 * h * k1).field;
            const Vec k3 = prox_grad_vector_field(p, cfg.alpha, x + 0.5 * h * k2).field;
            const Vec k4 = prox_grad_vector_field(p, cfg.alpha, x + h * k3).field;
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!x.allFinite())
            throw NumericalError("integrate: state became non-finite at t=" +
                                 std::to_string(t + h));
        if (x.norm() > 1e12)
            throw DivergenceError("integrate: state norm exceeded 1e12", x, t + h);
    }

    Trajectory traj;
    traj.times = Eigen::Map<const Vec>(times.data(), static_cast<Eigen::Index>(times.size()));
    traj.states = std::move(states);
    traj.costs = std::move(costs);
    traj.residuals =
        Eigen::Map<const Vec>(residuals.data(), static_cast<Eigen::Index>(residuals.size()));
    traj.flow_norms_sq = traj.residuals.array().square().matrix();
    traj.fstar = p.fstar;
    traj.step = h;
    traj.method = cfg.method;
    return traj;
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                                 bool include_states = false) {
    out << "t,cost,residual,flow_norm_sq";
    if (include_states && !traj.states.empty())
        for (Eigen::Index i = 0; i < traj.states.front().size(); ++i) out << ",x" << i;
    out << "\n";
    for (Eigen::Index k = 0; k < traj.size(); ++k) {
        out << format_double(traj.times(k)) << ',' << format_double(traj.costs[k].value()) << ','
            << format_double(traj.residuals(k)) << ',' << format_double(traj.flow_norms_sq(k));
        if (include_states)
            for (Eigen::Index i = 0; i < traj.states[k].size(); ++i)
                out << ',' << format_double(traj.states[k](i));
        out << "\n";
    }
}

}  // namespace proxflow
