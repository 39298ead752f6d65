#include "artdream/motionlab/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "artdream/error.hpp"

namespace artdream::motionlab {

Image8 read_png(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        const std::string msg = img.message;
        png_image_free(&img);
        if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
        throw FormatError("cannot read PNG " + path.string() + ": " + msg);
    }
    img.format = PNG_FORMAT_RGB;
    Image8 out;
    out.height = img.height;
    out.width = img.width;
    out.rgb.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

void write_png(const Image8& image, const std::filesystem::path& path) {
    if (image.height == 0 || image.width == 0 || image.rgb.size() != image.height * image.width * 3) {
        throw ShapeError("write_png: image buffer does not match its extent");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.rgb.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot write PNG " + path.string() + ": " + msg);
    }
}

ndgrid::Tensor to_tensor(const Image8& image) {
    ndgrid::Tensor t({3, image.height, image.width});
    const std::size_t plane = image.height * image.width;
    auto d = t.data();
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < 3; ++c) d[c * plane + i] = static_cast<float>(image.rgb[i * 3 + c]) / 255.0f;
    return t;
}

Image8 from_tensor(const ndgrid::Tensor& t) {
    t.require_rank(3, "from_tensor");
    if (t.dim(0) != 3) throw ShapeError("from_tensor: expected 3 channels");
    Image8 out;
    out.height = t.dim(1);
    out.width = t.dim(2);
    const std::size_t plane = out.height * out.width;
    out.rgb.resize(plane * 3);
    const auto d = t.data();
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            const float v = std::clamp(d[c * plane + i], 0.0f, 1.0f);
            out.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    return out;
}

ndgrid::Tensor load_image(const std::filesystem::path& path) { return to_tensor(read_png(path)); }

void save_image(const ndgrid::Tensor& image, const std::filesystem::path& path) { write_png(from_tensor(image), path); }

}  // namespace artdream::motionlab
