#pragma once

#include <utility>

#include "proxflow/problems.hpp"

namespace proxflow {

/// Discrete proximal gradient iteration x⁺ = prox_{step·g}(x − step∇f(x)),
/// run to a small prox-residual. Used only to produce reference optimal
/// values F⋆ on convex problems; the flow itself never uses it.
struct IstaConfig {
    double step = 0.0;  // 0 = use 1/lipschitz_estimate
    double tol = 1e-12;
    long max_iters = 2'000'000;
};

struct IstaResult {
    Vec x;
    double fvalue;
    long iterations;
    double residual;
};

inline double ista_step_size(const CompositeProblem& p, const IstaConfig& cfg) {
    if (cfg.step > 0.0) return cfg.step;
    if (!p.f.lipschitz_estimate || !(*p.f.lipschitz_estimate > 0.0))
        throw DomainError("ista: no step given and no positive Lipschitz estimate");
    return 1.0 / *p.f.lipschitz_estimate;
}

/// Exactly n iterations, no stopping test.
inline Vec ista_iterate(const CompositeProblem& p, Vec x, double step, long iters) {
    if (!(step > 0.0)) throw DomainError("ista_iterate: step must be positive");
    for (long k = 0; k < iters; ++k) x = p.g.prox(step, x - step * p.f.gradient(x));
    return x;
}

inline IstaResult ista_solve(const CompositeProblem& p, Vec x, IstaConfig cfg = {}) {
    const double step = ista_step_size(p, cfg);
    double residual = std::numeric_limits<double>::infinity();
    for (long k = 0; k < cfg.max_iters; ++k) {
        Vec next = p.g.prox(step, x - step * p.f.gradient(x));
        residual = (next - x).norm();
        x = std::move(next);
        if (residual <= cfg.tol) {
            const double fvalue = cost(p, x).finite_value();
            return {std::move(x), fvalue, k + 1, residual};
        }
    }
    throw NumericalError("ista: residual above tolerance after max iterations", residual);
}

/// Copy of p with fstar filled in by the discrete oracle.
inline CompositeProblem with_ista_fstar(CompositeProblem p, const Vec& x0, IstaConfig cfg = {}) {
    const IstaResult r = ista_solve(p, x0, cfg);
    p.fstar = r.fvalue;
    p.fstar_provenance = "ista-oracle";
    return p;
}

}  // namespace proxflow
