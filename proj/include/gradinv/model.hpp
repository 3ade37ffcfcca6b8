#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gradinv/autodiff.hpp"
#include "gradinv/image.hpp"

namespace gradinv {

// Flat vector of every model parameter. All of w0, wT, P1 and the dvec live
// in this space.
using ParamVector = std::vector<double>;

enum class Activation { relu, tanh };

// MLP classifier described entirely by a flat ParamVector, so any point in
// weight space (including surrogate points that belong to no trained model)
// can be evaluated through the same pure functions.
struct ModelSpec {
    int64_t in_c = 1, in_h = 8, in_w = 8;
    std::vector<int64_t> hidden;
    int64_t classes = 4;
    Activation act = Activation::relu;

    int64_t input_dim() const { return in_c * in_h * in_w; }
    // (fan_in, fan_out) per affine layer, input through classifier head
    std::vector<std::pair<int64_t, int64_t>> layer_dims() const;
    int64_t param_count() const;
    void validate() const;
};

// Glorot-uniform weights, zero biases, deterministic in (spec, seed).
ParamVector init_params(const ModelSpec& spec, uint64_t seed);

// Logits for a batch; w and x may each be constants or differentiable leaves.
Tensor forward_logits(const ModelSpec& spec, const Tensor& w, const Tensor& x);

// Mean cross-entropy over the batch, recorded on the graph.
Tensor loss(const ModelSpec& spec, const Tensor& w, const Tensor& x,
            const std::vector<int>& labels);
Tensor loss(const ModelSpec& spec, const Tensor& w, const ImageBatch& batch);

// d(loss)/dw as a ParamVector-shaped tensor. With create_graph=true the result
// remains differentiable w.r.t. both w and the batch pixels.
Tensor grad_params(const ModelSpec& spec, const Tensor& w, const Tensor& x,
                   const std::vector<int>& labels, bool create_graph);

// Plain-vector convenience used by the client simulator.
ParamVector grad_params_value(const ModelSpec& spec, const ParamVector& w,
                              const ImageBatch& batch);
double loss_value(const ModelSpec& spec, const ParamVector& w, const ImageBatch& batch);

// Flatten batch pixels to a constant (B, C*H*W) tensor.
Tensor batch_to_tensor(const ImageBatch& batch);

}  // namespace gradinv
