#include "gradinv/autodiff.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace gradinv {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

namespace {

[[noreturn]] void op_error(const char* op, const std::string& what) {
    throw std::runtime_error(std::string("autodiff op '") + op + "': " + what);
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        op_error(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_finite(const char* op, const std::vector<double>& data) {
    for (double v : data)
        if (!std::isfinite(v))
            op_error(op, "non-finite value produced");
}

}  // namespace

MemStats& mem_stats() {
    thread_local MemStats stats;
    return stats;
}

void reset_peak_mem() {
    MemStats& m = mem_stats();
    m.peak_bytes = m.live_bytes;
}

Node::Node(Shape s, std::vector<double> d, bool rg, const char* opname)
    : shape(std::move(s)), data(std::move(d)), requires_grad(rg), op(opname) {
    MemStats& m = mem_stats();
    m.live_bytes += static_cast<int64_t>(data.size() * sizeof(double));
    m.nodes_created += 1;
    if (m.live_bytes > m.peak_bytes) m.peak_bytes = m.live_bytes;
}

Node::~Node() {
    mem_stats().live_bytes -= static_cast<int64_t>(data.size() * sizeof(double));
}

const Shape& Tensor::shape() const { return node->shape; }
int64_t Tensor::size() const { return static_cast<int64_t>(node->data.size()); }
const std::vector<double>& Tensor::values() const { return node->data; }
bool Tensor::requires_grad() const { return node->requires_grad; }

double Tensor::item() const {
    if (!node->shape.empty())
        op_error(node->op, "item() on non-scalar tensor of shape " + shape_str(node->shape));
    return node->data[0];
}

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        op_error("constant", "shape " + shape_str(shape) + " does not match data length " +
                                 std::to_string(data.size()));
    check_finite("constant", data);
    return Tensor(std::make_shared<Node>(std::move(shape), std::move(data), false, "constant"));
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        op_error("leaf", "shape " + shape_str(shape) + " does not match data length " +
                             std::to_string(data.size()));
    check_finite("leaf", data);
    return Tensor(std::make_shared<Node>(std::move(shape), std::move(data), true, "leaf"));
}

Tensor Tensor::scalar(double v) { return constant({}, {v}); }

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    std::vector<double> d(static_cast<size_t>(shape_numel(shape)), 0.0);
    return Tensor(std::make_shared<Node>(shape, std::move(d), requires_grad,
                                         requires_grad ? "leaf" : "constant"));
}

Tensor Tensor::full(const Shape& shape, double v) {
    std::vector<double> d(static_cast<size_t>(shape_numel(shape)), v);
    return constant(shape, std::move(d));
}

Tensor Tensor::detach() const {
    return Tensor(std::make_shared<Node>(node->shape, node->data, false, "constant"));
}

namespace {

Tensor make_op(const char* op, Shape shape, std::vector<double> data,
               std::vector<Tensor> parents, BackwardFn backward) {
    check_finite(op, data);
    bool rg = false;
    for (const Tensor& p : parents) rg = rg || p.requires_grad();
    auto node = std::make_shared<Node>(std::move(shape), std::move(data), rg, op);
    if (rg) {
        node->parents.reserve(parents.size());
        for (Tensor& p : parents) node->parents.push_back(p.node);
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

bool is_scalar(const Tensor& t) { return t.shape().empty(); }

}  // namespace

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return make_op("add", a.shape(), std::move(out), {a, b},
                   [](const Tensor& adj, size_t) { return adj; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return make_op("sub", a.shape(), std::move(out), {a, b},
                   [](const Tensor& adj, size_t pi) {
                       return pi == 0 ? adj : scale(adj, -1.0);
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape() || is_scalar(a) || is_scalar(b)))
        op_error("mul", "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const Shape& shape = is_scalar(a) ? b.shape() : a.shape();
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(static_cast<size_t>(shape_numel(shape)));
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = av[is_scalar(a) ? 0 : i] * bv[is_scalar(b) ? 0 : i];
    return make_op("mul", shape, std::move(out), {a, b},
                   [a, b](const Tensor& adj, size_t pi) -> Tensor {
                       const Tensor& self = pi == 0 ? a : b;
                       const Tensor& other = pi == 0 ? b : a;
                       Tensor g = mul(adj, other);
                       if (is_scalar(self) && !is_scalar(g)) return sum(g);
                       return g;
                   });
}

Tensor div(const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape() || is_scalar(b)))
        op_error("div", "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[is_scalar(b) ? 0 : i];
    return make_op("div", a.shape(), std::move(out), {a, b},
                   [a, b](const Tensor& adj, size_t pi) -> Tensor {
                       if (pi == 0) return div(adj, b);
                       Tensor num = mul(adj, a);
                       if (is_scalar(b) && !is_scalar(num)) num = sum(num);
                       return scale(div(num, mul(b, b)), -1.0);
                   });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.values());
    for (double& v : out) v *= c;
    return make_op("scale", a.shape(), std::move(out), {a},
                   [c](const Tensor& adj, size_t) { return scale(adj, c); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

// ---- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        op_error("matmul", "rank-2 operands required, got " + shape_str(a.shape()) + " and " +
                               shape_str(b.shape()));
    const int64_t m = trans_a ? a.shape()[1] : a.shape()[0];
    const int64_t ka = trans_a ? a.shape()[0] : a.shape()[1];
    const int64_t kb = trans_b ? b.shape()[1] : b.shape()[0];
    const int64_t n = trans_b ? b.shape()[0] : b.shape()[1];
    if (ka != kb)
        op_error("matmul", "inner dimension mismatch " + shape_str(a.shape()) +
                               (trans_a ? "^T" : "") + " x " + shape_str(b.shape()) +
                               (trans_b ? "^T" : ""));
    const auto& av = a.values();
    const auto& bv = b.values();
    const int64_t lda = a.shape()[1];
    const int64_t ldb = b.shape()[1];
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t k = 0; k < ka; ++k) {
            const double aik = trans_a ? av[static_cast<size_t>(k * lda + i)]
                                       : av[static_cast<size_t>(i * lda + k)];
            if (aik == 0.0) continue;
            const double* brow = trans_b ? nullptr : &bv[static_cast<size_t>(k * ldb)];
            double* orow = &out[static_cast<size_t>(i * n)];
            if (!trans_b) {
                for (int64_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
            } else {
                for (int64_t j = 0; j < n; ++j)
                    orow[j] += aik * bv[static_cast<size_t>(j * ldb + k)];
            }
        }
    }
    return make_op("matmul", {m, n}, std::move(out), {a, b},
                   [a, b, trans_a, trans_b](const Tensor& adj, size_t pi) -> Tensor {
                       if (pi == 0)
                           return trans_a ? matmul(b, adj, trans_b, true)
                                          : matmul(adj, b, false, !trans_b);
                       return trans_b ? matmul(adj, a, true, trans_a)
                                      : matmul(a, adj, !trans_a, false);
                   });
}

// ---- nonlinearities ---------------------------------------------------------

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.values());
    std::vector<double> mask(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        mask[i] = out[i] > 0.0 ? 1.0 : 0.0;
        if (out[i] < 0.0) out[i] = 0.0;
    }
    Tensor mask_t = Tensor::constant(a.shape(), std::move(mask));
    return make_op("relu", a.shape(), std::move(out), {a},
                   [mask_t](const Tensor& adj, size_t) { return mul(adj, mask_t); });
}

Tensor tanh(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::tanh(v);
    Tensor result = make_op("tanh", a.shape(), std::move(out), {a}, nullptr);
    if (result.requires_grad()) {
        std::weak_ptr<Node> self = result.node;
        Tensor ones = Tensor::full(a.shape(), 1.0);
        result.node->backward = [self, ones](const Tensor& adj, size_t) {
            Tensor out_t(self.lock());
            return mul(adj, sub(ones, mul(out_t, out_t)));
        };
    }
    return result;
}

Tensor exp(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::exp(v);
    Tensor result = make_op("exp", a.shape(), std::move(out), {a}, nullptr);
    if (result.requires_grad()) {
        std::weak_ptr<Node> self = result.node;
        result.node->backward = [self](const Tensor& adj, size_t) {
            return mul(adj, Tensor(self.lock()));
        };
    }
    return result;
}

Tensor log(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::log(v);
    return make_op("log", a.shape(), std::move(out), {a},
                   [a](const Tensor& adj, size_t) { return div(adj, a); });
}

Tensor sqrt_eps(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::sqrt(v + kSqrtEps);
    Tensor result = make_op("sqrt_eps", a.shape(), std::move(out), {a}, nullptr);
    if (result.requires_grad()) {
        std::weak_ptr<Node> self = result.node;
        result.node->backward = [self](const Tensor& adj, size_t) {
            return div(scale(adj, 0.5), Tensor(self.lock()));
        };
    }
    return result;
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    Shape in_shape = a.shape();
    return make_op("sum", {}, {acc}, {a}, [in_shape](const Tensor& adj, size_t) {
        return broadcast_scalar(adj, in_shape);
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) op_error("mean", "empty tensor");
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    const double inv_n = 1.0 / static_cast<double>(a.size());
    Shape in_shape = a.shape();
    return make_op("mean", {}, {acc * inv_n}, {a},
                   [in_shape, inv_n](const Tensor& adj, size_t) {
                       return scale(broadcast_scalar(adj, in_shape), inv_n);
                   });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    check_same_shape("dot", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    double acc = 0.0;
    for (size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
    return make_op("dot", {}, {acc}, {a, b}, [a, b](const Tensor& adj, size_t pi) {
        return mul(adj, pi == 0 ? b : a);
    });
}

Tensor l2norm(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v * v;
    Tensor result = make_op("l2norm", {}, {std::sqrt(acc)}, {a}, nullptr);
    if (result.requires_grad()) {
        std::weak_ptr<Node> self = result.node;
        result.node->backward = [self, a](const Tensor& adj, size_t) {
            return mul(adj, div(a, Tensor(self.lock())));
        };
    }
    return result;
}

// ---- shape ops --------------------------------------------------------------

Tensor rowsum(const Tensor& a) {
    if (a.shape().size() != 2)
        op_error("rowsum", "rank-2 operand required, got " + shape_str(a.shape()));
    const int64_t rows = a.shape()[0], cols = a.shape()[1];
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(rows), 0.0);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) out[static_cast<size_t>(i)] += av[static_cast<size_t>(i * cols + j)];
    return make_op("rowsum", {rows, 1}, std::move(out), {a},
                   [cols](const Tensor& adj, size_t) { return broadcast_col(adj, cols); });
}

Tensor colsum(const Tensor& a) {
    if (a.shape().size() != 2)
        op_error("colsum", "rank-2 operand required, got " + shape_str(a.shape()));
    const int64_t rows = a.shape()[0], cols = a.shape()[1];
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(cols), 0.0);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) out[static_cast<size_t>(j)] += av[static_cast<size_t>(i * cols + j)];
    return make_op("colsum", {cols}, std::move(out), {a},
                   [rows](const Tensor& adj, size_t) { return broadcast_row(adj, rows); });
}

Tensor broadcast_col(const Tensor& a, int64_t cols) {
    if (a.shape().size() != 2 || a.shape()[1] != 1)
        op_error("broadcast_col", "(R,1) operand required, got " + shape_str(a.shape()));
    const int64_t rows = a.shape()[0];
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(rows * cols));
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) out[static_cast<size_t>(i * cols + j)] = av[static_cast<size_t>(i)];
    return make_op("broadcast_col", {rows, cols}, std::move(out), {a},
                   [](const Tensor& adj, size_t) { return rowsum(adj); });
}

Tensor broadcast_row(const Tensor& a, int64_t rows) {
    if (a.shape().size() != 1)
        op_error("broadcast_row", "rank-1 operand required, got " + shape_str(a.shape()));
    const int64_t cols = a.shape()[0];
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(rows * cols));
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) out[static_cast<size_t>(i * cols + j)] = av[static_cast<size_t>(j)];
    return make_op("broadcast_row", {rows, cols}, std::move(out), {a},
                   [](const Tensor& adj, size_t) { return colsum(adj); });
}

Tensor broadcast_scalar(const Tensor& a, const Shape& shape) {
    if (!is_scalar(a))
        op_error("broadcast_scalar", "rank-0 operand required, got " + shape_str(a.shape()));
    std::vector<double> out(static_cast<size_t>(shape_numel(shape)), a.values()[0]);
    return make_op("broadcast_scalar", shape, std::move(out), {a},
                   [](const Tensor& adj, size_t) { return sum(adj); });
}

Tensor gather_labels(const Tensor& a, const std::vector<int>& labels) {
    if (a.shape().size() != 2)
        op_error("gather_labels", "rank-2 operand required, got " + shape_str(a.shape()));
    const int64_t rows = a.shape()[0], cols = a.shape()[1];
    if (static_cast<int64_t>(labels.size()) != rows)
        op_error("gather_labels", "label count " + std::to_string(labels.size()) +
                                      " does not match rows " + std::to_string(rows));
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(rows));
    for (int64_t i = 0; i < rows; ++i) {
        const int y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= cols)
            op_error("gather_labels", "label " + std::to_string(y) + " out of range for " +
                                          std::to_string(cols) + " classes");
        out[static_cast<size_t>(i)] = av[static_cast<size_t>(i * cols + y)];
    }
    std::vector<int> ls = labels;
    return make_op("gather_labels", {rows, 1}, std::move(out), {a},
                   [ls, cols](const Tensor& adj, size_t) {
                       return scatter_labels(adj, ls, cols);
                   });
}

Tensor scatter_labels(const Tensor& a, const std::vector<int>& labels, int64_t cols) {
    if (a.shape().size() != 2 || a.shape()[1] != 1)
        op_error("scatter_labels", "(B,1) operand required, got " + shape_str(a.shape()));
    const int64_t rows = a.shape()[0];
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(rows * cols), 0.0);
    for (int64_t i = 0; i < rows; ++i)
        out[static_cast<size_t>(i * cols + labels[static_cast<size_t>(i)])] = av[static_cast<size_t>(i)];
    std::vector<int> ls = labels;
    return make_op("scatter_labels", {rows, cols}, std::move(out), {a},
                   [ls](const Tensor& adj, size_t) { return gather_labels(adj, ls); });
}

Tensor slice1d(const Tensor& a, int64_t offset, int64_t len) {
    if (a.shape().size() != 1)
        op_error("slice1d", "rank-1 operand required, got " + shape_str(a.shape()));
    const int64_t total = a.shape()[0];
    if (offset < 0 || len < 0 || offset + len > total)
        op_error("slice1d", "range [" + std::to_string(offset) + "," +
                                std::to_string(offset + len) + ") out of bounds for " +
                                std::to_string(total));
    const auto& av = a.values();
    std::vector<double> out(av.begin() + offset, av.begin() + offset + len);
    return make_op("slice1d", {len}, std::move(out), {a},
                   [offset, total](const Tensor& adj, size_t) {
                       return scatter1d(adj, offset, total);
                   });
}

Tensor scatter1d(const Tensor& a, int64_t offset, int64_t total) {
    if (a.shape().size() != 1)
        op_error("scatter1d", "rank-1 operand required, got " + shape_str(a.shape()));
    const int64_t len = a.shape()[0];
    if (offset < 0 || offset + len > total)
        op_error("scatter1d", "range out of bounds");
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(total), 0.0);
    for (int64_t i = 0; i < len; ++i) out[static_cast<size_t>(offset + i)] = av[static_cast<size_t>(i)];
    return make_op("scatter1d", {total}, std::move(out), {a},
                   [offset, len](const Tensor& adj, size_t) {
                       return slice1d(adj, offset, len);
                   });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
    if (shape_numel(shape) != a.size())
        op_error("reshape", "cannot reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
    Shape old_shape = a.shape();
    return make_op("reshape", shape, a.values(), {a},
                   [old_shape](const Tensor& adj, size_t) { return reshape(adj, old_shape); });
}

Tensor crop_hw(const Tensor& a, int64_t h0, int64_t w0, int64_t h, int64_t w) {
    if (a.shape().size() != 4)
        op_error("crop_hw", "rank-4 operand required, got " + shape_str(a.shape()));
    const int64_t B = a.shape()[0], C = a.shape()[1], H = a.shape()[2], W = a.shape()[3];
    if (h0 < 0 || w0 < 0 || h0 + h > H || w0 + w > W)
        op_error("crop_hw", "crop window out of bounds");
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(B * C * h * w));
    size_t o = 0;
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < h; ++i)
                for (int64_t j = 0; j < w; ++j)
                    out[o++] = av[static_cast<size_t>((((b * C) + c) * H + h0 + i) * W + w0 + j)];
    return make_op("crop_hw", {B, C, h, w}, std::move(out), {a},
                   [h0, w0, H, W](const Tensor& adj, size_t) {
                       return pad_hw(adj, h0, w0, H, W);
                   });
}

Tensor pad_hw(const Tensor& a, int64_t h0, int64_t w0, int64_t h, int64_t w) {
    if (a.shape().size() != 4)
        op_error("pad_hw", "rank-4 operand required, got " + shape_str(a.shape()));
    const int64_t B = a.shape()[0], C = a.shape()[1], Hs = a.shape()[2], Ws = a.shape()[3];
    if (h0 < 0 || w0 < 0 || h0 + Hs > h || w0 + Ws > w)
        op_error("pad_hw", "pad target smaller than source");
    const auto& av = a.values();
    std::vector<double> out(static_cast<size_t>(B * C * h * w), 0.0);
    size_t o = 0;
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < Hs; ++i)
                for (int64_t j = 0; j < Ws; ++j)
                    out[static_cast<size_t>((((b * C) + c) * h + h0 + i) * w + w0 + j)] = av[o++];
    return make_op("pad_hw", {B, C, h, w}, std::move(out), {a},
                   [h0, w0, Hs, Ws](const Tensor& adj, size_t) {
                       return crop_hw(adj, h0, w0, Hs, Ws);
                   });
}

// ---- reverse sweep ----------------------------------------------------------

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& leaves,
                         bool create_graph) {
    if (!output.defined()) op_error("grad", "undefined output");
    if (!output.shape().empty())
        op_error("grad", "output must be rank-0, got " + shape_str(output.shape()));
    for (const Tensor& l : leaves)
        if (!l.defined() || !l.requires_grad())
            op_error("grad", "leaf does not require grad (not a graph leaf)");

    // topological order over the requires_grad subgraph
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    if (output.requires_grad()) {
        struct Frame { Node* n; size_t next_parent; };
        std::vector<Frame> stack;
        stack.push_back({output.node.get(), 0});
        visited.insert(output.node.get());
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next_parent < f.n->parents.size()) {
                Node* p = f.n->parents[f.next_parent++].get();
                if (p->requires_grad && !visited.count(p)) {
                    visited.insert(p);
                    stack.push_back({p, 0});
                }
            } else {
                topo.push_back(f.n);
                stack.pop_back();
            }
        }
    }

    std::unordered_map<Node*, Tensor> adjoint;
    adjoint.reserve(topo.size());
    adjoint[output.node.get()] = Tensor::scalar(1.0);

    // topo is post-order, so iterating it backwards visits consumers first
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        auto a_it = adjoint.find(n);
        if (a_it == adjoint.end()) continue;  // unreachable from output
        const Tensor a = a_it->second;
        if (!n->backward) continue;  // leaf
        for (size_t pi = 0; pi < n->parents.size(); ++pi) {
            Node* p = n->parents[pi].get();
            if (!p->requires_grad) continue;
            Tensor contrib = n->backward(a, pi);
            if (contrib.shape() != p->shape)
                op_error(n->op, "backward produced shape " + shape_str(contrib.shape()) +
                                    " for parent of shape " + shape_str(p->shape));
            auto existing = adjoint.find(p);
            if (existing == adjoint.end())
                adjoint.emplace(p, contrib);
            else
                existing->second = add(existing->second, contrib);
        }
    }

    std::vector<Tensor> results;
    results.reserve(leaves.size());
    for (const Tensor& l : leaves) {
        auto it = adjoint.find(l.node.get());
        if (it == adjoint.end()) {
            results.push_back(Tensor::zeros(l.shape(), false));
        } else {
            results.push_back(create_graph ? it->second : it->second.detach());
        }
    }
    return results;
}

std::vector<double> hvp(const std::function<Tensor(const Tensor&)>& f,
                        const std::vector<double>& w, const std::vector<double>& v) {
    if (w.size() != v.size())
        op_error("hvp", "dimension mismatch: w has " + std::to_string(w.size()) +
                            " entries, v has " + std::to_string(v.size()));
    Tensor w_leaf = Tensor::leaf({static_cast<int64_t>(w.size())}, w);
    Tensor s = f(w_leaf);
    Tensor g = grad(s, {w_leaf}, true)[0];
    Tensor vc = Tensor::constant({static_cast<int64_t>(v.size())}, v);
    Tensor q = dot(g, vc);
    Tensor h = grad(q, {w_leaf}, false)[0];
    return h.values();
}

}  // namespace gradinv
