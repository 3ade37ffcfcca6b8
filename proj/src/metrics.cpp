#include "gradinv/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gradinv {

double psnr(const double* a, const double* b, int64_t n) {
    if (n <= 0) throw std::runtime_error("psnr: empty image");
    double mse = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(n);
    if (mse < 1e-10) return kPsnrCap;
    return 10.0 * std::log10(1.0 / mse);
}

double psnr_images(const ImageBatch& a, int64_t ia, const ImageBatch& b, int64_t ib) {
    if (a.image_size() != b.image_size())
        throw std::runtime_error("psnr: image shape mismatch");
    return psnr(a.image(ia), b.image(ib), a.image_size());
}

namespace {

constexpr int64_t kWin = 8;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double ssim_channel(const double* a, const double* b, int64_t h, int64_t w) {
    const int64_t nwin = kWin * kWin;
    double total = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i + kWin <= h; ++i) {
        for (int64_t j = 0; j + kWin <= w; ++j) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int64_t y = 0; y < kWin; ++y) {
                for (int64_t x = 0; x < kWin; ++x) {
                    const double va = a[(i + y) * w + (j + x)];
                    const double vb = b[(i + y) * w + (j + x)];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            const double n = static_cast<double>(nwin);
            const double mu_a = sa / n, mu_b = sb / n;
            const double var_a = saa / n - mu_a * mu_a;
            const double var_b = sbb / n - mu_b * mu_b;
            const double cov = sab / n - mu_a * mu_b;
            const double num = (2 * mu_a * mu_b + kC1) * (2 * cov + kC2);
            const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace

double ssim(const double* a, const double* b, int64_t c, int64_t h, int64_t w) {
    if (h < kWin || w < kWin)
        throw std::runtime_error("ssim: image smaller than the 8x8 window");
    double total = 0.0;
    for (int64_t ch = 0; ch < c; ++ch)
        total += ssim_channel(a + ch * h * w, b + ch * h * w, h, w);
    return total / static_cast<double>(c);
}

double ssim_images(const ImageBatch& a, int64_t ia, const ImageBatch& b, int64_t ib) {
    if (a.c != b.c || a.h != b.h || a.w != b.w)
        throw std::runtime_error("ssim: image shape mismatch");
    return ssim(a.image(ia), b.image(ib), a.c, a.h, a.w);
}

// O(n^3) Kuhn-Munkres with potentials
std::vector<int> hungarian_min(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n)
            throw std::runtime_error("hungarian_min: cost matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<size_t>(j)] > 0)
            row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

MatchResult match_batch(const ImageBatch& recon, const ImageBatch& truth) {
    if (recon.b != truth.b)
        throw std::runtime_error("match_batch: batch sizes differ (" + std::to_string(recon.b) +
                                 " vs " + std::to_string(truth.b) + ")");
    const int n = static_cast<int>(recon.b);
    std::vector<std::vector<double>> cost(static_cast<size_t>(n),
                                          std::vector<double>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost[static_cast<size_t>(i)][static_cast<size_t>(j)] = -psnr_images(recon, i, truth, j);

    MatchResult result;
    result.permutation = hungarian_min(cost);
    result.per_image_psnr.resize(static_cast<size_t>(n));
    result.per_image_ssim.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int j = result.permutation[static_cast<size_t>(i)];
        result.per_image_psnr[static_cast<size_t>(i)] = psnr_images(recon, i, truth, j);
        result.per_image_ssim[static_cast<size_t>(i)] = ssim_images(recon, i, truth, j);
        result.mean_psnr += result.per_image_psnr[static_cast<size_t>(i)];
        result.mean_ssim += result.per_image_ssim[static_cast<size_t>(i)];
    }
    result.mean_psnr /= n;
    result.mean_ssim /= n;
    return result;
}

}  // namespace gradinv
