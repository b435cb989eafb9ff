#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vegan/autodiff.hpp"
#include "vegan/rng.hpp"

namespace vegan {

enum class Activation { Elu, Relu };
enum class OutputActivation { Identity, Sigmoid, Softplus };

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::Elu;
    OutputActivation output_activation = OutputActivation::Identity;

    void validate() const {
        if (layer_sizes.size() < 2)
            throw ContractError("mlp spec: need at least input and output widths");
        for (auto w : layer_sizes)
            if (w < 1) throw ContractError("mlp spec: widths must be >= 1");
    }
};

/// Parameter bundle for one MLP: per layer a weight matrix (in x out) and a
/// 1 x out bias, all registered as graph leaves.
struct Mlp {
    MlpSpec spec;
    std::vector<Var> weights;
    std::vector<Var> biases;

    std::size_t input_dim() const { return spec.layer_sizes.front(); }
    std::size_t output_dim() const { return spec.layer_sizes.back(); }

    std::vector<Var> params() const {
        std::vector<Var> out;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            out.push_back(weights[i]);
            out.push_back(biases[i]);
        }
        return out;
    }
};

/// Glorot-uniform weights, zero biases; deterministic given seed.
inline Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed, const std::string& name = "mlp") {
    spec.validate();
    Mlp mlp;
    mlp.spec = spec;
    Rng rng(seed);
    for (std::size_t layer = 0; layer + 1 < spec.layer_sizes.size(); ++layer) {
        const std::size_t fan_in = spec.layer_sizes[layer];
        const std::size_t fan_out = spec.layer_sizes[layer + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor w = Tensor::zeros({fan_in, fan_out});
        for (auto& v : w.data) v = rng.uniform(-bound, bound);
        mlp.weights.push_back(make_param(std::move(w), name + ".w" + std::to_string(layer)));
        mlp.biases.push_back(make_param(Tensor::zeros({1, fan_out}),
                                        name + ".b" + std::to_string(layer)));
    }
    return mlp;
}

inline Var apply_hidden_activation(const Var& x, Activation a) {
    return a == Activation::Elu ? elu(x) : relu(x);
}

inline Var mlp_forward(const Mlp& mlp, const Var& x) {
    if (x->value.rank() != 2 || x->value.cols() != mlp.input_dim())
        throw DimensionError("mlp forward: input width " + x->value.shape_str() +
                             " does not match spec");
    Var h = x;
    const std::size_t last = mlp.weights.size() - 1;
    for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
        h = add(matmul(h, mlp.weights[i]), mlp.biases[i]);
        if (i < last) {
            h = apply_hidden_activation(h, mlp.spec.activation);
        } else {
            switch (mlp.spec.output_activation) {
                case OutputActivation::Identity: break;
                case OutputActivation::Sigmoid: h = sigmoid(h); break;
                case OutputActivation::Softplus: h = softplus(h); break;
            }
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

enum class OptimizerKind { Sgd, Adam };

/// First-order optimizer over a fixed parameter list. Adam uses the
/// bias-corrected moment updates with decoupled weight decay.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, std::vector<Var> params, double learning_rate = 1e-3,
              double weight_decay = 1e-2)
        : kind_(kind), params_(std::move(params)), lr_(learning_rate), wd_(weight_decay) {
        if (lr_ <= 0.0) throw ContractError("optimizer: learning rate must be positive");
        if (kind_ == OptimizerKind::Adam) {
            for (const auto& p : params_) {
                m_.push_back(std::vector<double>(p->value.numel(), 0.0));
                v_.push_back(std::vector<double>(p->value.numel(), 0.0));
            }
        }
    }

    const std::vector<Var>& params() const { return params_; }
    std::uint64_t step_count() const { return step_; }

    /// Applies one update from the gradients currently stored on the params.
    void step() {
        for (const auto& p : params_)
            if (p->grad.data.size() != p->value.data.size())
                throw ContractError("optimizer: missing gradient for " + p->name);
        ++step_;
        if (kind_ == OptimizerKind::Sgd) {
            for (const auto& p : params_)
                for (std::size_t i = 0; i < p->value.numel(); ++i)
                    p->value.data[i] -= lr_ * (p->grad.data[i] + wd_ * p->value.data[i]);
            return;
        }
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p->value.numel(); ++i) {
                const double g = p->grad.data[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                p->value.data[i] -= lr_ * wd_ * p->value.data[i];
                p->value.data[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps);
            }
        }
    }

    void zero_grad() {
        for (const auto& p : params_) {
            p->ensure_grad();
            p->zero_grad();
        }
    }

private:
    OptimizerKind kind_;
    std::vector<Var> params_;
    double lr_;
    double wd_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace vegan
