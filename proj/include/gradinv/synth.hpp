#pragma once

#include <cstdint>
#include <string>

#include "gradinv/image.hpp"

namespace gradinv {

enum class SynthKind { gaussian_blobs, stripes };

SynthKind synth_kind_from_name(const std::string& name);

// Deterministic class-structured images in [0,1]. Labels are assigned
// round-robin, so every class appears when n >= classes. Class identity is
// carried by the blob location (gaussian_blobs) or stripe angle/frequency
// (stripes); per-image jitter and noise keep samples distinct.
ImageBatch synth_dataset(SynthKind kind, int64_t c, int64_t h, int64_t w, int64_t n,
                         int64_t classes, uint64_t seed);

}  // namespace gradinv
