#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradinv/image.hpp"

namespace gradinv {

// IDX (MNIST/FEMNIST) readers. Big-endian headers, magic 0x00000803 for image
// files and 0x00000801 for label files. Errors carry the byte offset of the
// problem.
ImageBatch load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// images plus optional labels; without a label file all labels are zero
ImageBatch load_idx(const std::string& images_path, const std::string& labels_path = "");

// binary PGM (P5, maxval 255); pixels in [0,1] quantized by rounding
void write_pgm(const std::string& path, int64_t h, int64_t w, const double* pixels);
void read_pgm(const std::string& path, int64_t& h, int64_t& w, std::vector<double>& pixels);

}  // namespace gradinv
