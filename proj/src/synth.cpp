#include "gradinv/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "gradinv/rng.hpp"

namespace gradinv {

SynthKind synth_kind_from_name(const std::string& name) {
    if (name == "gaussian_blobs" || name == "blobs") return SynthKind::gaussian_blobs;
    if (name == "stripes") return SynthKind::stripes;
    throw std::runtime_error("unknown synthetic dataset kind '" + name + "'");
}

namespace {

constexpr double kTau = 6.28318530717958647692;

void render_blob(double* im, int64_t c, int64_t h, int64_t w, double cy, double cx,
                 double sigma, double amp) {
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t y = 0; y < h; ++y) {
            for (int64_t x = 0; x < w; ++x) {
                const double dy = (static_cast<double>(y) - cy) / sigma;
                const double dx = (static_cast<double>(x) - cx) / sigma;
                im[(ch * h + y) * w + x] = amp * std::exp(-0.5 * (dy * dy + dx * dx));
            }
        }
    }
}

void render_stripes(double* im, int64_t c, int64_t h, int64_t w, double angle, double freq,
                    double phase) {
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double scale = kTau * freq / static_cast<double>(std::max(h, w));
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t y = 0; y < h; ++y) {
            for (int64_t x = 0; x < w; ++x) {
                const double u = ca * static_cast<double>(x) + sa * static_cast<double>(y);
                im[(ch * h + y) * w + x] = 0.5 + 0.42 * std::sin(scale * u + phase);
            }
        }
    }
}

}  // namespace

ImageBatch synth_dataset(SynthKind kind, int64_t c, int64_t h, int64_t w, int64_t n,
                         int64_t classes, uint64_t seed) {
    if (n < classes)
        throw std::runtime_error("synth_dataset: need n >= classes so every class appears");
    if (c < 1 || h < 2 || w < 2) throw std::runtime_error("synth_dataset: bad image dims");

    ImageBatch out;
    out.b = n;
    out.c = c;
    out.h = h;
    out.w = w;
    out.pixels.assign(static_cast<size_t>(n * c * h * w), 0.0);
    out.labels.resize(static_cast<size_t>(n));

    // class prototypes drawn once from the seed
    std::vector<double> proto_cy(static_cast<size_t>(classes)), proto_cx(static_cast<size_t>(classes));
    std::vector<double> proto_angle(static_cast<size_t>(classes)), proto_freq(static_cast<size_t>(classes));
    {
        Rng rng(derive_seed(seed, 0));
        for (int64_t k = 0; k < classes; ++k) {
            proto_cy[static_cast<size_t>(k)] = rng.uniform(0.25, 0.75) * static_cast<double>(h - 1);
            proto_cx[static_cast<size_t>(k)] = rng.uniform(0.25, 0.75) * static_cast<double>(w - 1);
            proto_angle[static_cast<size_t>(k)] =
                kTau * (static_cast<double>(k) + rng.uniform(0.0, 0.4)) /
                (2.0 * static_cast<double>(classes));
            proto_freq[static_cast<size_t>(k)] = 1.0 + static_cast<double>(k);
        }
    }

    const double sigma = std::max(1.0, static_cast<double>(std::min(h, w)) / 5.0);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t k = i % classes;
        out.labels[static_cast<size_t>(i)] = static_cast<int>(k);
        Rng rng(derive_seed(seed, 1 + static_cast<uint64_t>(i)));
        double* im = out.pixels.data() + i * out.image_size();
        if (kind == SynthKind::gaussian_blobs) {
            const double cy = proto_cy[static_cast<size_t>(k)] + rng.uniform(-0.8, 0.8);
            const double cx = proto_cx[static_cast<size_t>(k)] + rng.uniform(-0.8, 0.8);
            const double amp = 0.85 + rng.uniform(-0.05, 0.1);
            render_blob(im, c, h, w, cy, cx, sigma, amp);
        } else {
            const double phase = rng.uniform(0.0, kTau);
            render_stripes(im, c, h, w, proto_angle[static_cast<size_t>(k)],
                           proto_freq[static_cast<size_t>(k)], phase);
        }
        for (int64_t p = 0; p < out.image_size(); ++p) {
            im[p] += rng.uniform(-0.03, 0.03);
            im[p] = std::min(1.0, std::max(0.0, im[p]));
        }
    }
    return out;
}

}  // namespace gradinv
