#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gradinv {

// Batch of images with pixel values in [0,1] and integer labels.
struct ImageBatch {
    int64_t b = 0, c = 0, h = 0, w = 0;
    std::vector<double> pixels;  // row-major (b, c, h, w)
    std::vector<int> labels;     // size b

    int64_t pixel_count() const { return b * c * h * w; }
    int64_t image_size() const { return c * h * w; }

    const double* image(int64_t i) const { return pixels.data() + i * image_size(); }

    ImageBatch subset(const std::vector<int64_t>& idx) const {
        ImageBatch out;
        out.b = static_cast<int64_t>(idx.size());
        out.c = c;
        out.h = h;
        out.w = w;
        out.pixels.reserve(static_cast<size_t>(out.b * image_size()));
        out.labels.reserve(idx.size());
        for (int64_t i : idx) {
            if (i < 0 || i >= b) throw std::runtime_error("ImageBatch::subset: index out of range");
            out.pixels.insert(out.pixels.end(), image(i), image(i) + image_size());
            out.labels.push_back(labels[static_cast<size_t>(i)]);
        }
        return out;
    }
};

}  // namespace gradinv
