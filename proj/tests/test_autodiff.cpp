#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradinv/autodiff.hpp"
#include "gradinv/rng.hpp"
#include "oracles.hpp"

using namespace gradinv;

namespace {

Tensor vec_leaf(const std::vector<double>& v) {
    return Tensor::leaf({static_cast<int64_t>(v.size())}, v);
}

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("hand-checked forward values") {
    Tensor a = Tensor::constant({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::constant({2, 1}, {1, 1});
    Tensor y = matmul(a, b);
    CHECK(y.values() == std::vector<double>{3, 7});

    Tensor r = relu(Tensor::constant({3}, {-1, 0, 2}));
    CHECK(r.values() == std::vector<double>{0, 0, 2});

    CHECK(l2norm(Tensor::constant({2}, {3, 4})).item() == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("shape mismatch raises structured error") {
    Tensor a = Tensor::constant({2}, {1, 2});
    Tensor b = Tensor::constant({3}, {1, 2, 3});
    CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), std::runtime_error);
    CHECK_THROWS_AS(matmul(a, b), std::runtime_error);
    CHECK_THROWS_AS(grad(Tensor::constant({2}, {1, 2}), {}, false), std::runtime_error);
}

TEST_CASE("first derivative of x*x") {
    Tensor x = vec_leaf({3.0});
    Tensor f = sum(mul(x, x));
    auto g = grad(f, {x}, false);
    CHECK(g[0].values()[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("second derivative via create_graph") {
    // f(x) = x*x, g = grad(f)^2 = 4x^2, dg/dx = 8x -> 24 at x=3
    Tensor x = vec_leaf({3.0});
    Tensor f = sum(mul(x, x));
    Tensor gx = grad(f, {x}, true)[0];
    Tensor g2 = sum(mul(gx, gx));
    auto dd = grad(g2, {x}, false);
    CHECK(dd[0].values()[0] == doctest::Approx(24.0).epsilon(1e-14));
}

TEST_CASE("per-op gradients match finite differences") {
    Rng rng(7);
    // each entry: name, builder mapping a leaf vector to a scalar
    using Builder = std::function<Tensor(const Tensor&)>;
    std::vector<std::pair<const char*, Builder>> cases = {
        {"add", [](const Tensor& x) { return sum(add(x, scale(x, 2.0))); }},
        {"sub", [](const Tensor& x) { return sum(sub(scale(x, 3.0), x)); }},
        {"mul", [](const Tensor& x) { return sum(mul(x, x)); }},
        {"div", [](const Tensor& x) {
             return sum(div(x, add(sum(mul(x, x)), Tensor::scalar(2.0))));
         }},
        {"tanh", [](const Tensor& x) { return sum(tanh(x)); }},
        {"exp", [](const Tensor& x) { return sum(exp(x)); }},
        {"sqrt_eps", [](const Tensor& x) { return sum(sqrt_eps(mul(x, x))); }},
        {"mean", [](const Tensor& x) { return mean(mul(x, tanh(x))); }},
        {"dot", [](const Tensor& x) { return dot(x, tanh(x)); }},
        {"l2norm", [](const Tensor& x) { return l2norm(x); }},
        {"matmul", [](const Tensor& x) {
             Tensor m = reshape(x, {3, 4});
             return sum(matmul(m, m, false, true));
         }},
        {"rowsum/broadcast", [](const Tensor& x) {
             Tensor m = reshape(x, {3, 4});
             return sum(mul(broadcast_col(rowsum(m), 4), m));
         }},
        {"colsum/broadcast", [](const Tensor& x) {
             Tensor m = reshape(x, {3, 4});
             return sum(mul(broadcast_row(colsum(m), 3), m));
         }},
        {"slice/scatter", [](const Tensor& x) {
             return sum(mul(scatter1d(slice1d(x, 2, 5), 1, 12), x));
         }},
        {"gather_labels", [](const Tensor& x) {
             Tensor m = reshape(x, {3, 4});
             return sum(gather_labels(m, {1, 0, 3}));
         }},
        {"crop/pad", [](const Tensor& x) {
             Tensor im = reshape(x, {1, 1, 3, 4});
             return sum(mul(crop_hw(im, 0, 1, 2, 3), crop_hw(im, 1, 0, 2, 3)));
         }},
    };

    for (auto& [name, builder] : cases) {
        CAPTURE(name);
        std::vector<double> x0 = random_vec(rng, 12, 0.2, 1.0);
        Tensor x = vec_leaf(x0);
        Tensor f = builder(x);
        auto analytic = grad(f, {x}, false)[0].values();
        auto numeric = oracles::fd_gradient(
            [&](const std::vector<double>& v) { return builder(vec_leaf(v)).item(); }, x0);
        CHECK(oracles::max_grad_rel_err(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
    std::vector<double> x0 = {-0.8, -0.3, 0.4, 0.9, -0.5, 0.7};
    auto f = [](const Tensor& x) { return sum(mul(relu(x), x)); };
    Tensor x = vec_leaf(x0);
    auto analytic = grad(f(x), {x}, false)[0].values();
    auto numeric = oracles::fd_gradient(
        [&](const std::vector<double>& v) { return f(vec_leaf(v)).item(); }, x0);
    CHECK(oracles::max_grad_rel_err(analytic, numeric) < 1e-6);
}

TEST_CASE("two-layer MLP gradient matches finite differences") {
    Rng rng(21);
    const int64_t in = 5, hid = 4, out = 3, batch = 2;
    const size_t n_params = static_cast<size_t>(in * hid + hid + hid * out + out);
    std::vector<double> w0 = random_vec(rng, n_params, -0.7, 0.7);
    std::vector<double> xv = random_vec(rng, static_cast<size_t>(batch * in));
    std::vector<int> labels = {2, 0};

    auto loss_at = [&](const Tensor& w) {
        Tensor x = Tensor::constant({batch, in}, xv);
        Tensor w1 = reshape(slice1d(w, 0, in * hid), {in, hid});
        Tensor b1 = slice1d(w, in * hid, hid);
        Tensor h = tanh(add(matmul(x, w1), broadcast_row(b1, batch)));
        Tensor w2 = reshape(slice1d(w, in * hid + hid, hid * out), {hid, out});
        Tensor b2 = slice1d(w, in * hid + hid + hid * out, out);
        Tensor logits = add(matmul(h, w2), broadcast_row(b2, batch));
        // cross entropy from primitives
        Tensor z = exp(logits);
        Tensor lse = log(rowsum(z));
        Tensor nll = sub(lse, gather_labels(logits, labels));
        return mean(nll);
    };

    Tensor w = vec_leaf(w0);
    auto analytic = grad(loss_at(w), {w}, false)[0].values();
    auto numeric = oracles::fd_gradient(
        [&](const std::vector<double>& v) { return loss_at(vec_leaf(v)).item(); }, w0);
    CHECK(oracles::max_grad_rel_err(analytic, numeric) < 1e-6);
}

TEST_CASE("second-order gradient matches finite differences of the first") {
    Rng rng(33);
    std::vector<double> x0 = random_vec(rng, 6, -0.9, 0.9);
    auto f = [](const Tensor& x) { return sum(mul(tanh(x), exp(scale(x, 0.5)))); };

    // scalar s(x) = || grad f ||^2, differentiated again
    auto s_at = [&](const std::vector<double>& v) {
        Tensor x = vec_leaf(v);
        Tensor g = grad(f(x), {x}, true)[0];
        return dot(g, g);
    };
    Tensor x = vec_leaf(x0);
    Tensor g = grad(f(x), {x}, true)[0];
    auto analytic = grad(dot(g, g), {x}, false)[0].values();
    auto numeric = oracles::fd_gradient(
        [&](const std::vector<double>& v) { return s_at(v).item(); }, x0);
    CHECK(oracles::max_grad_rel_err(analytic, numeric, 1e-5) < 1e-4);
}

TEST_CASE("hvp: identity Hessian") {
    auto f = [](const Tensor& w) { return scale(dot(w, w), 0.5); };
    std::vector<double> w = {0.3, -1.2, 2.0};
    std::vector<double> v = {1.0, 2.0, -0.5};
    auto hv = hvp(f, w, v);
    for (size_t i = 0; i < v.size(); ++i) CHECK(hv[i] == doctest::Approx(v[i]).epsilon(1e-14));
}

TEST_CASE("hvp: quadratic form with symmetric A") {
    // f(w) = 0.5 w^T A w  ->  Hv = A v
    const std::vector<double> a = {2.0, -1.0, 0.5, -1.0, 3.0, 0.0, 0.5, 0.0, 1.5};
    Tensor A = Tensor::constant({3, 3}, a);
    auto f = [&](const Tensor& w) {
        Tensor wm = reshape(w, {3, 1});
        return scale(sum(mul(wm, matmul(A, wm))), 0.5);
    };
    std::vector<double> w = {1.0, -2.0, 0.5};
    std::vector<double> v = {0.3, 0.7, -1.1};
    auto hv = hvp(f, w, v);
    for (int i = 0; i < 3; ++i) {
        double want = 0.0;
        for (int j = 0; j < 3; ++j) want += a[static_cast<size_t>(i * 3 + j)] * v[static_cast<size_t>(j)];
        CHECK(hv[static_cast<size_t>(i)] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("hvp: MLP loss matches finite differences of the gradient") {
    Rng rng(5);
    const int64_t in = 4, hid = 3, out = 2, batch = 2;
    const size_t n_params = static_cast<size_t>(in * hid + hid + hid * out + out);
    std::vector<double> w0 = random_vec(rng, n_params, -0.6, 0.6);
    std::vector<double> xv = random_vec(rng, static_cast<size_t>(batch * in));
    std::vector<int> labels = {1, 0};

    auto loss_at = [&](const Tensor& w) {
        Tensor x = Tensor::constant({batch, in}, xv);
        Tensor w1 = reshape(slice1d(w, 0, in * hid), {in, hid});
        Tensor b1 = slice1d(w, in * hid, hid);
        Tensor h = tanh(add(matmul(x, w1), broadcast_row(b1, batch)));
        Tensor w2 = reshape(slice1d(w, in * hid + hid, hid * out), {hid, out});
        Tensor b2 = slice1d(w, in * hid + hid + hid * out, out);
        Tensor logits = add(matmul(h, w2), broadcast_row(b2, batch));
        Tensor lse = log(rowsum(exp(logits)));
        return mean(sub(lse, gather_labels(logits, labels)));
    };

    std::vector<double> v = random_vec(rng, n_params);
    auto hv = hvp(loss_at, w0, v);

    // oracle: (grad(w + h v) - grad(w - h v)) / 2h
    const double h = 1e-5;
    auto grad_at = [&](const std::vector<double>& wv) {
        Tensor w = vec_leaf(wv);
        return grad(loss_at(w), {w}, false)[0].values();
    };
    std::vector<double> wp = w0, wm = w0;
    for (size_t i = 0; i < w0.size(); ++i) {
        wp[i] += h * v[i];
        wm[i] -= h * v[i];
    }
    auto gp = grad_at(wp);
    auto gm = grad_at(wm);
    std::vector<double> fd(w0.size());
    for (size_t i = 0; i < w0.size(); ++i) fd[i] = (gp[i] - gm[i]) / (2.0 * h);
    CHECK(oracles::max_grad_rel_err(hv, fd, 1e-5) < 1e-4);
}

TEST_CASE("replay determinism: identical inputs give bit-identical outputs") {
    auto run = [] {
        Rng rng(99);
        std::vector<double> x0(16), y0(16);
        for (auto& v : x0) v = rng.uniform(-1, 1);
        for (auto& v : y0) v = rng.uniform(-1, 1);
        Tensor x = vec_leaf(x0);
        Tensor y = Tensor::constant({16}, y0);
        Tensor f = add(l2norm(sub(tanh(x), y)), mean(exp(scale(x, 0.3))));
        auto g = grad(f, {x}, false)[0].values();
        g.push_back(f.item());
        return g;
    };
    auto a = run();
    auto b = run();
    CHECK(a == b);  // exact bit equality
}

TEST_CASE("memory accounting tracks live tensor bytes") {
    MemStats& m = mem_stats();
    const int64_t before = m.live_bytes;
    {
        Tensor x = Tensor::zeros({1000});
        CHECK(m.live_bytes >= before + 8000);
    }
    CHECK(m.live_bytes == before);
}

TEST_CASE("unreachable leaf yields zeros, non-leaf is rejected") {
    Tensor x = vec_leaf({1.0, 2.0});
    Tensor y = vec_leaf({3.0});
    Tensor f = sum(mul(x, x));
    auto g = grad(f, {y}, false);
    CHECK(g[0].values() == std::vector<double>{0.0});
    Tensor c = Tensor::constant({2}, {1, 2});
    CHECK_THROWS_AS(grad(f, {c}, false), std::runtime_error);
}
