#include "gradinv/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gradinv {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

[[noreturn]] void idx_error(const std::string& path, const std::string& what, size_t offset) {
    throw std::runtime_error("idx: " + what + " at offset " + std::to_string(offset) + " in " +
                             path);
}

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("idx: cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

uint32_t read_be32(const std::vector<unsigned char>& buf, size_t offset,
                   const std::string& path) {
    if (offset + 4 > buf.size()) idx_error(path, "truncated header", offset);
    return (static_cast<uint32_t>(buf[offset]) << 24) |
           (static_cast<uint32_t>(buf[offset + 1]) << 16) |
           (static_cast<uint32_t>(buf[offset + 2]) << 8) | static_cast<uint32_t>(buf[offset + 3]);
}

char hexdigit(uint32_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hex32(uint32_t v) {
    std::string s = "0x";
    for (int shift = 28; shift >= 0; shift -= 4) s += hexdigit(v >> shift);
    return s;
}

}  // namespace

ImageBatch load_idx_images(const std::string& path) {
    auto buf = read_all(path);
    const uint32_t magic = read_be32(buf, 0, path);
    if (magic != kImageMagic)
        idx_error(path, "bad magic " + hex32(magic) + " (want " + hex32(kImageMagic) + ")", 0);
    const uint32_t count = read_be32(buf, 4, path);
    const uint32_t rows = read_be32(buf, 8, path);
    const uint32_t cols = read_be32(buf, 12, path);
    const size_t need = 16 + static_cast<size_t>(count) * rows * cols;
    if (buf.size() < need)
        idx_error(path,
                  "truncated file: have " + std::to_string(buf.size()) + " bytes, need " +
                      std::to_string(need),
                  buf.size());

    ImageBatch out;
    out.b = count;
    out.c = 1;
    out.h = rows;
    out.w = cols;
    out.pixels.resize(static_cast<size_t>(count) * rows * cols);
    for (size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = static_cast<double>(buf[16 + i]) / 255.0;
    out.labels.assign(count, 0);
    return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
    auto buf = read_all(path);
    const uint32_t magic = read_be32(buf, 0, path);
    if (magic != kLabelMagic)
        idx_error(path, "bad magic " + hex32(magic) + " (want " + hex32(kLabelMagic) + ")", 0);
    const uint32_t count = read_be32(buf, 4, path);
    if (buf.size() < 8 + count)
        idx_error(path, "truncated file", buf.size());
    std::vector<int> labels(count);
    for (uint32_t i = 0; i < count; ++i) labels[i] = buf[8 + i];
    return labels;
}

ImageBatch load_idx(const std::string& images_path, const std::string& labels_path) {
    ImageBatch batch = load_idx_images(images_path);
    if (!labels_path.empty()) {
        auto labels = load_idx_labels(labels_path);
        if (static_cast<int64_t>(labels.size()) != batch.b)
            throw std::runtime_error("idx: " + std::to_string(labels.size()) + " labels for " +
                                     std::to_string(batch.b) + " images");
        batch.labels = std::move(labels);
    }
    return batch;
}

void write_pgm(const std::string& path, int64_t h, int64_t w, const double* pixels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot open " + path + " for writing");
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(h * w));
    for (int64_t i = 0; i < h * w; ++i) {
        const double v = std::min(1.0, std::max(0.0, pixels[i]));
        row[static_cast<size_t>(i)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!out) throw std::runtime_error("pgm: short write to " + path);
}

void read_pgm(const std::string& path, int64_t& h, int64_t& w, std::vector<double>& pixels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    std::string magic;
    int64_t maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255)
        throw std::runtime_error("pgm: unsupported format in " + path);
    in.get();  // single whitespace after header
    std::vector<unsigned char> raw(static_cast<size_t>(h * w));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error("pgm: truncated data in " + path);
    pixels.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) pixels[i] = static_cast<double>(raw[i]) / 255.0;
}

}  // namespace gradinv
