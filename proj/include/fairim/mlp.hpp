#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairim/common.hpp"
#include "fairim/rng.hpp"

namespace fairim {

enum class Activation : std::uint8_t { Identity, Relu, Sigmoid };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw config_error("unknown activation '" + name + "'");
}

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., output
    std::vector<Activation> activations;   // one per weight layer

    void validate() const {
        if (layer_sizes.size() < 2) throw config_error("mlp: need at least 2 layers");
        if (activations.size() != layer_sizes.size() - 1)
            throw config_error("mlp: expected " + std::to_string(layer_sizes.size() - 1) +
                               " activations, got " + std::to_string(activations.size()));
        for (std::size_t s : layer_sizes)
            if (s == 0) throw config_error("mlp: zero-width layer");
    }
};

// Dense feed-forward network; rows of a batch matrix are samples.
struct Mlp {
    MlpSpec spec;
    std::vector<Eigen::MatrixXd> weights;  // layer l: (out x in)
    std::vector<Eigen::VectorXd> biases;

    std::size_t input_dim() const { return spec.layer_sizes.front(); }
    std::size_t output_dim() const { return spec.layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

// Glorot-uniform initialization in +-sqrt(6/(fan_in+fan_out)), weights filled
// row-major from the portable stream; biases start at zero.
inline Mlp init_mlp(const MlpSpec& spec, SplitMix64& rng) {
    spec.validate();
    Mlp mlp;
    mlp.spec = spec;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(spec.layer_sizes[l]);
        const auto out = static_cast<Eigen::Index>(spec.layer_sizes[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        Eigen::MatrixXd w(out, in);
        for (Eigen::Index i = 0; i < out; ++i)
            for (Eigen::Index j = 0; j < in; ++j)
                w(i, j) = (2.0 * rng.next_unit() - 1.0) * limit;
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(Eigen::VectorXd::Zero(out));
    }
    return mlp;
}

namespace detail {

inline Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::Identity: return z;
        case Activation::Relu: return z.cwiseMax(0.0);
        case Activation::Sigmoid:
            return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
    return z;
}

// derivative expressed through pre-activation z and activation a
inline Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                                       Activation act) {
    switch (act) {
        case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
        case Activation::Relu:
            return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
        case Activation::Sigmoid: return a.array() * (1.0 - a.array());
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace detail

struct ForwardCache {
    std::vector<Eigen::MatrixXd> layer_inputs;     // a_0 .. a_{L-1}
    std::vector<Eigen::MatrixXd> pre_activations;  // z_1 .. z_L
    std::vector<Eigen::MatrixXd> activations;      // a_1 .. a_L
};

inline Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& input,
                               ForwardCache* cache = nullptr) {
    if (static_cast<std::size_t>(input.cols()) != mlp.input_dim())
        throw config_error("mlp forward: input width " + std::to_string(input.cols()) +
                           " does not match input dim " + std::to_string(mlp.input_dim()));
    Eigen::MatrixXd a = input;
    if (cache) {
        cache->layer_inputs.clear();
        cache->pre_activations.clear();
        cache->activations.clear();
    }
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        if (cache) cache->layer_inputs.push_back(a);
        Eigen::MatrixXd z = a * mlp.weights[l].transpose();
        z.rowwise() += mlp.biases[l].transpose();
        a = detail::apply_activation(z, mlp.spec.activations[l]);
        if (cache) {
            cache->pre_activations.push_back(std::move(z));
            cache->activations.push_back(a);
        }
    }
    return a;
}

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static Gradients zeros_like(const Mlp& mlp) {
        Gradients g;
        for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
            g.weights.emplace_back(
                Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
            g.biases.emplace_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
        }
        return g;
    }

    Gradients& accumulate(const Gradients& other, double scale) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += scale * other.weights[l];
            biases[l] += scale * other.biases[l];
        }
        return *this;
    }
};

namespace detail {

inline void check_cache(const Mlp& mlp, const ForwardCache& cache,
                        const Eigen::MatrixXd& grad) {
    if (cache.activations.size() != mlp.layer_count() ||
        cache.layer_inputs.size() != mlp.layer_count())
        throw config_error("mlp backward: cache does not match network depth");
    if (grad.rows() != cache.activations.back().rows() ||
        grad.cols() != cache.activations.back().cols())
        throw config_error("mlp backward: gradient shape does not match forward output");
}

// shared backward walk; `delta` is dL/dz for the last layer
inline Eigen::MatrixXd backprop(const Mlp& mlp, const ForwardCache& cache,
                                Eigen::MatrixXd delta, Gradients& grads) {
    grads.weights.resize(mlp.layer_count());
    grads.biases.resize(mlp.layer_count());
    for (std::size_t l = mlp.layer_count(); l-- > 0;) {
        grads.weights[l] = delta.transpose() * cache.layer_inputs[l];
        grads.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            delta = (delta * mlp.weights[l])
                        .cwiseProduct(activation_grad(cache.pre_activations[l - 1],
                                                      cache.activations[l - 1],
                                                      mlp.spec.activations[l - 1]));
        } else {
            delta = delta * mlp.weights[0];
        }
    }
    return delta;  // dL/d(input)
}

}  // namespace detail

// Exact gradients of the composed network; `output_grad` is dL/d(output).
// Returns dL/d(input).
inline Eigen::MatrixXd backward(const Mlp& mlp, const ForwardCache& cache,
                                const Eigen::MatrixXd& output_grad, Gradients& grads) {
    detail::check_cache(mlp, cache, output_grad);
    Eigen::MatrixXd delta = output_grad.cwiseProduct(detail::activation_grad(
        cache.pre_activations.back(), cache.activations.back(),
        mlp.spec.activations.back()));
    return detail::backprop(mlp, cache, std::move(delta), grads);
}

// Variant for losses differentiated directly with respect to the final
// pre-activation (fused sigmoid + cross-entropy path).
inline Eigen::MatrixXd backward_from_logits(const Mlp& mlp, const ForwardCache& cache,
                                            const Eigen::MatrixXd& logit_grad,
                                            Gradients& grads) {
    detail::check_cache(mlp, cache, logit_grad);
    return detail::backprop(mlp, cache, logit_grad, grads);
}

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    std::size_t t = 0;

    static AdamState zeros_like(const Mlp& mlp) {
        AdamState s;
        for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
            s.m_w.emplace_back(
                Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
            s.v_w.emplace_back(
                Eigen::MatrixXd::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
            s.m_b.emplace_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
            s.v_b.emplace_back(Eigen::VectorXd::Zero(mlp.biases[l].size()));
        }
        return s;
    }
};

inline void adam_step(Mlp& mlp, AdamState& state, const Gradients& grads,
                      const AdamParams& params) {
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(params.beta1, t);
    const double bc2 = 1.0 - std::pow(params.beta2, t);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        state.m_w[l] = params.beta1 * state.m_w[l] + (1.0 - params.beta1) * grads.weights[l];
        state.v_w[l] = params.beta2 * state.v_w[l] +
                       (1.0 - params.beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
        state.m_b[l] = params.beta1 * state.m_b[l] + (1.0 - params.beta1) * grads.biases[l];
        state.v_b[l] = params.beta2 * state.v_b[l] +
                       (1.0 - params.beta2) * grads.biases[l].cwiseProduct(grads.biases[l]);

        mlp.weights[l].array() -= params.learning_rate * (state.m_w[l].array() / bc1) /
                                  ((state.v_w[l].array() / bc2).sqrt() + params.epsilon);
        mlp.biases[l].array() -= params.learning_rate * (state.m_b[l].array() / bc1) /
                                 ((state.v_b[l].array() / bc2).sqrt() + params.epsilon);
    }
}

inline void clip_weights(Mlp& mlp, double clip) {
    for (auto& w : mlp.weights) w = w.cwiseMax(-clip).cwiseMin(clip);
    for (auto& b : mlp.biases) b = b.cwiseMax(-clip).cwiseMin(clip);
}

inline double max_abs_weight(const Mlp& mlp) {
    double m = 0.0;
    for (const auto& w : mlp.weights) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& b : mlp.biases) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
}

inline bool has_non_finite(const Mlp& mlp) {
    for (const auto& w : mlp.weights)
        if (!w.allFinite()) return true;
    for (const auto& b : mlp.biases)
        if (!b.allFinite()) return true;
    return false;
}

}  // namespace fairim
