#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "artdream/ndgrid/tensor.hpp"

namespace artdream::motionlab {

// 8-bit RGB, row-major interleaved.
struct Image8 {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> rgb;

    friend bool operator==(const Image8&, const Image8&) = default;
};

Image8 read_png(const std::filesystem::path& path);
void write_png(const Image8& image, const std::filesystem::path& path);

// (3, h, w) floats in [0, 1]; quantization rounds to nearest.
ndgrid::Tensor to_tensor(const Image8& image);
Image8 from_tensor(const ndgrid::Tensor& image);

ndgrid::Tensor load_image(const std::filesystem::path& path);
void save_image(const ndgrid::Tensor& image, const std::filesystem::path& path);

}  // namespace artdream::motionlab
