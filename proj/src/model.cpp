#include "gradinv/model.hpp"

#include <cmath>
#include <stdexcept>

#include "gradinv/rng.hpp"

namespace gradinv {

std::vector<std::pair<int64_t, int64_t>> ModelSpec::layer_dims() const {
    std::vector<std::pair<int64_t, int64_t>> dims;
    int64_t in = input_dim();
    for (int64_t h : hidden) {
        dims.emplace_back(in, h);
        in = h;
    }
    dims.emplace_back(in, classes);
    return dims;
}

int64_t ModelSpec::param_count() const {
    int64_t n = 0;
    for (auto [in, out] : layer_dims()) n += (in + 1) * out;
    return n;
}

void ModelSpec::validate() const {
    if (in_c <= 0 || in_h <= 0 || in_w <= 0)
        throw std::runtime_error("ModelSpec: input dims must be positive");
    if (classes < 2) throw std::runtime_error("ModelSpec: at least two classes required");
    for (int64_t h : hidden)
        if (h <= 0) throw std::runtime_error("ModelSpec: hidden sizes must be positive");
}

ParamVector init_params(const ModelSpec& spec, uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ParamVector w;
    w.reserve(static_cast<size_t>(spec.param_count()));
    for (auto [in, out] : spec.layer_dims()) {
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        for (int64_t i = 0; i < in * out; ++i) w.push_back(rng.uniform(-a, a));
        for (int64_t i = 0; i < out; ++i) w.push_back(0.0);
    }
    return w;
}

Tensor batch_to_tensor(const ImageBatch& batch) {
    return Tensor::constant({batch.b, batch.image_size()}, batch.pixels);
}

Tensor forward_logits(const ModelSpec& spec, const Tensor& w, const Tensor& x) {
    if (w.shape().size() != 1 || w.shape()[0] != spec.param_count())
        throw std::runtime_error("model: parameter vector has " +
                                 std::to_string(w.size()) + " entries, spec expects " +
                                 std::to_string(spec.param_count()));
    if (x.shape().size() != 2 || x.shape()[1] != spec.input_dim())
        throw std::runtime_error("model: input shape " + shape_str(x.shape()) +
                                 " does not match input dim " +
                                 std::to_string(spec.input_dim()));
    const int64_t batch = x.shape()[0];
    auto dims = spec.layer_dims();
    Tensor h = x;
    int64_t offset = 0;
    for (size_t l = 0; l < dims.size(); ++l) {
        auto [in, out] = dims[l];
        Tensor wl = reshape(slice1d(w, offset, in * out), {in, out});
        offset += in * out;
        Tensor bl = slice1d(w, offset, out);
        offset += out;
        h = add(matmul(h, wl), broadcast_row(bl, batch));
        if (l + 1 < dims.size())
            h = spec.act == Activation::relu ? relu(h) : tanh(h);
    }
    return h;
}

Tensor loss(const ModelSpec& spec, const Tensor& w, const Tensor& x,
            const std::vector<int>& labels) {
    Tensor logits = forward_logits(spec, w, x);
    const int64_t batch = logits.shape()[0];
    const int64_t classes = logits.shape()[1];
    if (static_cast<int64_t>(labels.size()) != batch)
        throw std::runtime_error("model: label count does not match batch size");
    // log-sum-exp with a detached row max for stability
    std::vector<double> mx(static_cast<size_t>(batch), -1e300);
    const auto& lv = logits.values();
    for (int64_t i = 0; i < batch; ++i)
        for (int64_t c = 0; c < classes; ++c)
            mx[static_cast<size_t>(i)] =
                std::max(mx[static_cast<size_t>(i)], lv[static_cast<size_t>(i * classes + c)]);
    Tensor m = Tensor::constant({batch, 1}, mx);
    Tensor z = sub(logits, broadcast_col(m, classes));
    Tensor lse = add(log(rowsum(exp(z))), m);
    Tensor nll = sub(lse, gather_labels(logits, labels));
    return mean(nll);
}

Tensor loss(const ModelSpec& spec, const Tensor& w, const ImageBatch& batch) {
    return loss(spec, w, batch_to_tensor(batch), batch.labels);
}

Tensor grad_params(const ModelSpec& spec, const Tensor& w, const Tensor& x,
                   const std::vector<int>& labels, bool create_graph) {
    Tensor l = loss(spec, w, x, labels);
    return grad(l, {w}, create_graph)[0];
}

ParamVector grad_params_value(const ModelSpec& spec, const ParamVector& w,
                              const ImageBatch& batch) {
    Tensor wt = Tensor::leaf({static_cast<int64_t>(w.size())}, w);
    return grad_params(spec, wt, batch_to_tensor(batch), batch.labels, false).values();
}

double loss_value(const ModelSpec& spec, const ParamVector& w, const ImageBatch& batch) {
    Tensor wt = Tensor::constant({static_cast<int64_t>(w.size())}, w);
    return loss(spec, wt, batch).item();
}

}  // namespace gradinv
