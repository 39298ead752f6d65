#pragma once

#include <cstddef>

#include "artdream/ndgrid/tensor.hpp"

namespace artdream::ndgrid {

// Axis-aligned region in source pixel units.
struct Region {
    double x = 0, y = 0, width = 0, height = 0;
};

// Bilinear resample of `region` of a (c, h, w) image onto an out_h x out_w grid,
// pixel-center aligned, borders clamped.
Tensor resample_bilinear(const Tensor& image, const Region& region, std::size_t out_h, std::size_t out_w);
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

// Replicate-pad bottom/right edges so both extents become multiples of `multiple`.
Tensor pad_to_multiple(const Tensor& image, std::size_t multiple);
Tensor crop(const Tensor& image, std::size_t y, std::size_t x, std::size_t h, std::size_t w);

// Circular shift by (dy, dx); roll(roll(t, dy, dx), -dy, -dx) == t.
Tensor roll(const Tensor& image, long dy, long dx);

void clamp_unit(Tensor& image);

}  // namespace artdream::ndgrid
