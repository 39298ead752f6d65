#include "artdream/ndgrid/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace artdream::ndgrid {

Tensor resample_bilinear(const Tensor& image, const Region& region, std::size_t out_h, std::size_t out_w) {
    image.require_rank(3, "resample input");
    if (out_h == 0 || out_w == 0) throw ShapeError("resample: output extents must be positive");
    if (region.width <= 0 || region.height <= 0) throw ShapeError("resample: empty source region");
    const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const double sy = region.height / static_cast<double>(out_h);
    const double sx = region.width / static_cast<double>(out_w);

    Tensor out({c, out_h, out_w});
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        double fy = region.y + (static_cast<double>(oy) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const double ty = fy - static_cast<double>(y0);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            double fx = region.x + (static_cast<double>(ox) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const double tx = fx - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double top = image.at(ch, y0, x0) * (1 - tx) + image.at(ch, y0, x1) * tx;
                const double bot = image.at(ch, y1, x0) * (1 - tx) + image.at(ch, y1, x1) * tx;
                out.at(ch, oy, ox) = static_cast<float>(top * (1 - ty) + bot * ty);
            }
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
    image.require_rank(3, "resize input");
    if (image.dim(1) == out_h && image.dim(2) == out_w) return image;
    return resample_bilinear(
        image, Region{0, 0, static_cast<double>(image.dim(2)), static_cast<double>(image.dim(1))}, out_h, out_w);
}

Tensor pad_to_multiple(const Tensor& image, std::size_t multiple) {
    image.require_rank(3, "pad input");
    if (multiple <= 1) return image;
    const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const std::size_t ph = (h + multiple - 1) / multiple * multiple;
    const std::size_t pw = (w + multiple - 1) / multiple * multiple;
    if (ph == h && pw == w) return image;
    Tensor out({c, ph, pw});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < ph; ++y)
            for (std::size_t x = 0; x < pw; ++x) out.at(ch, y, x) = image.at(ch, std::min(y, h - 1), std::min(x, w - 1));
    return out;
}

Tensor crop(const Tensor& image, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
    image.require_rank(3, "crop input");
    if (y + h > image.dim(1) || x + w > image.dim(2)) throw ShapeError("crop: window outside image");
    const std::size_t c = image.dim(0);
    Tensor out({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t yy = 0; yy < h; ++yy)
            for (std::size_t xx = 0; xx < w; ++xx) out.at(ch, yy, xx) = image.at(ch, y + yy, x + xx);
    return out;
}

Tensor roll(const Tensor& image, long dy, long dx) {
    image.require_rank(3, "roll input");
    const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const auto wrap = [](long v, std::size_t n) {
        const long m = static_cast<long>(n);
        return static_cast<std::size_t>(((v % m) + m) % m);
    };
    Tensor out({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y) {
            const std::size_t ty = wrap(static_cast<long>(y) + dy, h);
            for (std::size_t x = 0; x < w; ++x) {
                out.at(ch, ty, wrap(static_cast<long>(x) + dx, w)) = image.at(ch, y, x);
            }
        }
    return out;
}

void clamp_unit(Tensor& image) {
    for (auto& v : image.data()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace artdream::ndgrid
