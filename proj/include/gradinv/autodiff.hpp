#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gradinv {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;

// Value-semantic handle to a node of the recorded computation graph.
// The graph is the DAG formed by parent links: operands always precede the
// node that consumes them, and a finished node is immutable. Backward rules
// are themselves expressed through recorded ops, so gradients produced with
// create_graph=true can be differentiated again (double backprop).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node(std::move(n)) {}

    static Tensor constant(Shape shape, std::vector<double> data);
    static Tensor leaf(Shape shape, std::vector<double> data);
    static Tensor scalar(double v);  // rank-0 constant
    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double v);

    bool defined() const { return node != nullptr; }
    const Shape& shape() const;
    int64_t size() const;
    const std::vector<double>& values() const;
    double item() const;  // rank-0 only
    bool requires_grad() const;
    Tensor detach() const;

    std::shared_ptr<Node> node;
};

using BackwardFn = std::function<Tensor(const Tensor& adjoint, size_t parent_index)>;

struct Node {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;

    Node(Shape s, std::vector<double> d, bool rg, const char* opname);
    ~Node();
};

// Per-thread accounting of tensor storage. One attack/simulation owns its
// thread, so peaks read here are per-run even under a parallel sweep.
struct MemStats {
    int64_t live_bytes = 0;
    int64_t peak_bytes = 0;
    int64_t nodes_created = 0;
};
MemStats& mem_stats();
void reset_peak_mem();

// ---- recorded operations ------------------------------------------------
// Every function appends one node; shape mismatches throw std::runtime_error
// naming the op and the offending shapes. All results are checked finite.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // equal shapes, or either rank-0
Tensor div(const Tensor& a, const Tensor& b);  // equal shapes, or b rank-0
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt_eps(const Tensor& a);  // sqrt(x + kSqrtEps), differentiable at 0
Tensor sum(const Tensor& a);       // -> rank-0
Tensor mean(const Tensor& a);      // -> rank-0
Tensor dot(const Tensor& a, const Tensor& b);   // -> rank-0
Tensor l2norm(const Tensor& a);                 // -> rank-0
Tensor rowsum(const Tensor& a);                 // (R,C) -> (R,1)
Tensor colsum(const Tensor& a);                 // (R,C) -> (C)
Tensor broadcast_col(const Tensor& a, int64_t cols);   // (R,1) -> (R,cols)
Tensor broadcast_row(const Tensor& a, int64_t rows);   // (C)   -> (rows,C)
Tensor broadcast_scalar(const Tensor& a, const Shape& shape);  // rank-0 -> shape
Tensor gather_labels(const Tensor& a, const std::vector<int>& labels);  // (B,C) -> (B,1)
Tensor scatter_labels(const Tensor& a, const std::vector<int>& labels, int64_t cols);
Tensor slice1d(const Tensor& a, int64_t offset, int64_t len);
Tensor scatter1d(const Tensor& a, int64_t offset, int64_t total);
Tensor reshape(const Tensor& a, const Shape& shape);
// spatial crop/zero-pad on the trailing two dims of a rank-4 tensor
Tensor crop_hw(const Tensor& a, int64_t h0, int64_t w0, int64_t h, int64_t w);
Tensor pad_hw(const Tensor& a, int64_t h0, int64_t w0, int64_t h, int64_t w);

inline constexpr double kSqrtEps = 1e-8;

// ---- differentiation ------------------------------------------------------
// Reverse sweep from a rank-0 output. Each returned tensor matches its leaf's
// shape. With create_graph=true the results stay attached to the graph and can
// be differentiated again; otherwise they are detached constants. A leaf that
// requires grad but is unreachable from the output yields zeros; a tensor that
// never required grad is rejected.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& leaves,
                         bool create_graph);

// Hessian-vector product of a scalar function via double backprop.
std::vector<double> hvp(const std::function<Tensor(const Tensor&)>& f,
                        const std::vector<double>& w, const std::vector<double>& v);

}  // namespace gradinv
