#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlab/dataset.hpp"

namespace sgdlab {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

[[noreturn]] void idx_error(const std::string& path, std::size_t offset,
                            const std::string& what) {
    throw std::runtime_error("idx: " + path + ": " + what + " at byte offset " +
                             std::to_string(offset));
}

std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) idx_error(path, offset, "truncated header");
    offset += 4;
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<unsigned char> read_bytes(std::ifstream& in, const std::string& path,
                                      std::size_t& offset, std::size_t count) {
    std::vector<unsigned char> buf(count);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count)))
        idx_error(path, offset + static_cast<std::size_t>(in.gcount()), "truncated payload");
    offset += count;
    return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 bool center_columns) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    std::size_t img_off = 0;
    const std::uint32_t img_magic = read_be32(img, images_path, img_off);
    if (img_magic != kImagesMagic)
        idx_error(images_path, 0, "bad images magic 0x" + std::to_string(img_magic));
    const std::uint32_t count = read_be32(img, images_path, img_off);
    const std::uint32_t rows = read_be32(img, images_path, img_off);
    const std::uint32_t cols = read_be32(img, images_path, img_off);
    const std::size_t pixels = std::size_t(rows) * cols;
    const auto img_bytes = read_bytes(img, images_path, img_off, std::size_t(count) * pixels);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);
    std::size_t lab_off = 0;
    const std::uint32_t lab_magic = read_be32(lab, labels_path, lab_off);
    if (lab_magic != kLabelsMagic)
        idx_error(labels_path, 0, "bad labels magic 0x" + std::to_string(lab_magic));
    const std::uint32_t lab_count = read_be32(lab, labels_path, lab_off);
    if (lab_count != count)
        idx_error(labels_path, 4,
                  "label count " + std::to_string(lab_count) + " != image count " +
                      std::to_string(count));
    const auto lab_bytes = read_bytes(lab, labels_path, lab_off, count);

    Dataset ds;
    ds.X = Mat(count, pixels);
    ds.Y = Mat(count, 10);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t p = 0; p < pixels; ++p)
            ds.X(i, p) = static_cast<double>(img_bytes[i * pixels + p]) / 255.0;
        const unsigned char label = lab_bytes[i];
        if (label > 9)
            idx_error(labels_path, 8 + i, "label " + std::to_string(int(label)) + " out of range");
        ds.Y(i, label) = 1.0;
    }

    if (center_columns && count > 0) {
        for (std::size_t p = 0; p < pixels; ++p) {
            double mean = 0.0;
            for (std::size_t i = 0; i < count; ++i) mean += ds.X(i, p);
            mean /= static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i) ds.X(i, p) -= mean;
        }
    }
    ds.name = "idx:" + images_path;
    return ds;
}

}  // namespace sgdlab
