#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "proxflow/problems.hpp"

namespace proxflow {

/// Fully connected tanh network. Parameters are packed per layer l as the
/// column-major weight matrix (widths[l+1] × widths[l]) followed by the bias.
struct MlpArchitecture {
    std::vector<int> widths;  // e.g. {2, 8, 2, 1}

    int layers() const { return static_cast<int>(widths.size()) - 1; }

    int param_count() const {
        int count = 0;
        for (int l = 0; l < layers(); ++l) count += widths[l + 1] * (widths[l] + 1);
        return count;
    }
};

inline void validate_mlp(const MlpArchitecture& arch) {
    if (arch.widths.size() < 2) throw DomainError("mlp: need at least one layer");
    for (int w : arch.widths)
        if (w < 1) throw DomainError("mlp: widths must be positive");
    if (arch.widths.back() != 1) throw DomainError("mlp: output must be one-dimensional");
}

/// Mean binary cross-entropy of the network over the dataset, with the tanh
/// output o ∈ (−1,1) read as probability p = (o+1)/2, clamped to
/// [1e−12, 1−1e−12]. Writes the parameter gradient when grad is non-null;
/// the clamp contributes zero derivative where active.
inline double mlp_bce(const MlpArchitecture& arch, const Vec& params, const Mat& inputs,
                      const Vec& labels, Vec* grad = nullptr) {
    validate_mlp(arch);
    if (params.size() != arch.param_count()) throw DomainError("mlp_bce: bad parameter count");
    if (inputs.cols() != arch.widths.front()) throw DomainError("mlp_bce: bad input width");
    if (inputs.rows() != labels.size()) throw DomainError("mlp_bce: inputs/labels mismatch");
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        if (labels(i) != 0.0 && labels(i) != 1.0)
            throw DomainError("mlp_bce: labels must be 0 or 1");

    const int n_layers = arch.layers();
    const Eigen::Index n = inputs.rows();
    std::vector<Mat> weights(n_layers);
    std::vector<Vec> biases(n_layers);
    Eigen::Index offset = 0;
    for (int l = 0; l < n_layers; ++l) {
        const Eigen::Index out_w = arch.widths[l + 1], in_w = arch.widths[l];
        weights[l] = as_matrix(params.segment(offset, out_w * in_w), static_cast<int>(out_w),
                               static_cast<int>(in_w));
        offset += out_w * in_w;
        biases[l] = params.segment(offset, out_w);
        offset += out_w;
    }

    std::vector<Mat> acts(n_layers + 1);  // acts[l]: widths[l] × n
    acts[0] = inputs.transpose();
    for (int l = 0; l < n_layers; ++l)
        acts[l + 1] =
            ((weights[l] * acts[l]).colwise() + biases[l]).array().tanh().matrix();

    constexpr double eps = 1e-12;
    double loss = 0.0;
    Vec dloss_dp = Vec::Zero(n);  // per-sample dBCE/dp, zeroed where the clamp is active
    for (Eigen::Index i = 0; i < n; ++i) {
        const double raw = 0.5 * (acts[n_layers](0, i) + 1.0);
        const double prob = std::clamp(raw, eps, 1.0 - eps);
        loss -= labels(i) * std::log(prob) + (1.0 - labels(i)) * std::log(1.0 - prob);
        if (raw > eps && raw < 1.0 - eps)
            dloss_dp(i) = (prob - labels(i)) / (prob * (1.0 - prob));
    }
    loss /= static_cast<double>(n);

    if (grad != nullptr) {
        grad->resize(params.size());
        // delta: dLoss/d(pre-activation), via d tanh = 1 − a²; dp/do = 1/2
        Mat delta = (dloss_dp.transpose() * 0.5 / static_cast<double>(n)).eval();
        delta = delta.cwiseProduct(
            (1.0 - acts[n_layers].array().square()).matrix().row(0));
        offset = params.size();
        for (int l = n_layers - 1; l >= 0; --l) {
            const Eigen::Index out_w = arch.widths[l + 1], in_w = arch.widths[l];
            const Vec gbias = delta.rowwise().sum();
            const Mat gweight = delta * acts[l].transpose();
            offset -= out_w;
            grad->segment(offset, out_w) = gbias;
            offset -= out_w * in_w;
            grad->segment(offset, out_w * in_w) = as_vector(gweight);
            if (l > 0)
                delta = (weights[l].transpose() * delta)
                            .cwiseProduct((1.0 - acts[l].array().square()).matrix());
        }
    }
    return loss;
}

/// min mean-BCE(w) + λ‖w‖₁ over all network parameters. Nonconvex; no
/// optimal value is claimed.
inline CompositeProblem sparse_mlp_problem(const std::vector<int>& widths,
                                           const LabeledDataset& data, double lambda) {
    MlpArchitecture arch{widths};
    validate_mlp(arch);
    if (data.inputs.cols() != widths.front())
        throw DomainError("sparse_mlp_problem: dataset width must match input layer");
    CompositeProblem p;
    p.name = "sparse-mlp";
    p.dim = arch.param_count();
    p.f.value = [arch, data](const Vec& w) { return mlp_bce(arch, w, data.inputs, data.labels); };
    p.f.gradient = [arch, data](const Vec& w) {
        Vec grad;
        mlp_bce(arch, w, data.inputs, data.labels, &grad);
        return grad;
    };
    p.g = make_l1(lambda);
    return p;
}

/// Two-dimensional restriction of sparse_mlp_problem: all parameters frozen
/// at base except the listed free coordinates. The ℓ1 mass of the frozen
/// coordinates is a constant and is folded into f, so F matches the full
/// objective on the slice.
inline CompositeProblem mlp_slice_problem(const std::vector<int>& widths,
                                          const LabeledDataset& data, double lambda,
                                          const Vec& base,
                                          const std::vector<int>& free_indices) {
    MlpArchitecture arch{widths};
    validate_mlp(arch);
    if (base.size() != arch.param_count())
        throw DomainError("mlp_slice_problem: base has wrong parameter count");
    if (free_indices.empty()) throw DomainError("mlp_slice_problem: need free coordinates");
    for (int idx : free_indices)
        if (idx < 0 || idx >= base.size())
            throw DomainError("mlp_slice_problem: free index out of range");

    double frozen_l1 = lambda * base.lpNorm<1>();
    for (int idx : free_indices) frozen_l1 -= lambda * std::abs(base(idx));

    const auto expand = [base, free_indices](const Vec& v) {
        Vec full = base;
        for (std::size_t i = 0; i < free_indices.size(); ++i)
            full(free_indices[i]) = v(static_cast<Eigen::Index>(i));
        return full;
    };

    CompositeProblem p;
    p.name = "mlp-slice";
    p.dim = static_cast<int>(free_indices.size());
    p.f.value = [arch, data, expand, frozen_l1](const Vec& v) {
        return mlp_bce(arch, expand(v), data.inputs, data.labels) + frozen_l1;
    };
    p.f.gradient = [arch, data, expand, free_indices](const Vec& v) {
        Vec full_grad;
        mlp_bce(arch, expand(v), data.inputs, data.labels, &full_grad);
        Vec grad(static_cast<Eigen::Index>(free_indices.size()));
        for (std::size_t i = 0; i < free_indices.size(); ++i)
            grad(static_cast<Eigen::Index>(i)) = full_grad(free_indices[i]);
        return grad;
    };
    p.g = make_l1(lambda);
    return p;
}

}  // namespace proxflow
