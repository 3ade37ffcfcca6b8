#pragma once

#include <cstdint>
#include <vector>

#include "gradinv/image.hpp"

namespace gradinv {

// Reconstruction quality metrics. Images are (C,H,W) slices of an ImageBatch
// with pixel values in [0,1].

inline constexpr double kPsnrCap = 100.0;       // returned when MSE < 1e-10
inline constexpr double kPsnrCorrupted = 18.0;  // below this a reconstruction counts as corrupted

// 10 log10(1 / MSE), capped at 100 dB
double psnr(const double* a, const double* b, int64_t n);
double psnr_images(const ImageBatch& a, int64_t ia, const ImageBatch& b, int64_t ib);

// mean local SSIM over 8x8 uniform windows (stride 1), per channel then
// averaged; C1 = 0.01^2, C2 = 0.03^2 at dynamic range 1
double ssim(const double* a, const double* b, int64_t c, int64_t h, int64_t w);
double ssim_images(const ImageBatch& a, int64_t ia, const ImageBatch& b, int64_t ib);

// minimum-cost assignment (square matrix); returns the matched column per row
std::vector<int> hungarian_min(const std::vector<std::vector<double>>& cost);

struct MatchResult {
    std::vector<int> permutation;  // reconstruction index -> ground-truth index
    std::vector<double> per_image_psnr;
    std::vector<double> per_image_ssim;
    double mean_psnr = 0;
    double mean_ssim = 0;
};

// optimal assignment maximizing total PSNR; metrics reported under it
MatchResult match_batch(const ImageBatch& recon, const ImageBatch& truth);

}  // namespace gradinv
