#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "artdream/ndgrid/tensor.hpp"

namespace artdream::epainterly {

using ndgrid::Tensor;
using Color = std::array<float, 3>;

double luminance(const Color& c);

struct Palette {
    std::vector<Color> colors;  // sorted by luminance
    std::uint64_t seed = 0;
    bool padded = false;        // fewer distinct colors than requested

    [[nodiscard]] std::size_t size() const noexcept { return colors.size(); }
    // Nearest color by squared RGB distance; ties to the lower index.
    [[nodiscard]] std::uint32_t nearest(const Color& c) const;
};

// k-means with k-means++ seeding over the pixels of a (3, h, w) image.
Palette extract_palette(const Tensor& image, std::size_t k, std::uint64_t seed);

struct OrientationField {
    std::size_t height = 0, width = 0;
    std::vector<float> angle;      // [0, pi), along edges
    std::vector<float> coherence;  // [0, 1]

    [[nodiscard]] float angle_at(std::size_t y, std::size_t x) const { return angle[y * width + x]; }
    [[nodiscard]] float coherence_at(std::size_t y, std::size_t x) const { return coherence[y * width + x]; }
};

inline constexpr double kStructureSigma = 2.0;

OrientationField orientation_field(const Tensor& image, double sigma = kStructureSigma);

struct Stroke {
    std::uint32_t pass = 0;
    std::uint32_t order = 0;  // global draw order
    float x = 0, y = 0;       // center, pixel units
    float angle = 0;          // radians, direction of the long axis
    float length = 0;         // end to end, including the round caps
    float width = 0;
    std::uint32_t palette_index = 0;
};

using StrokeSet = std::vector<Stroke>;

struct PassParams {
    double length_min = 24, length_max = 36;
    double width_min = 12, width_max = 18;
    double density = 12;  // particles per 1000 px^2
};

enum class Background { source, white, gray };

struct RenderParams {
    std::size_t k = 16;
    std::vector<PassParams> passes{PassParams{24, 36, 12, 18, 12}, PassParams{8, 16, 5, 10, 32}};
    double angle_noise = 0.15;      // std-dev of the angle perturbation, radians
    double error_threshold = 0.08;  // later passes only paint where the 5x5 error exceeds this
    Background background = Background::source;
    std::uint64_t seed = 0;

    void validate() const;
};

RenderParams render_params_from_json(const std::string& text);
std::string render_params_to_json(const RenderParams& params);
RenderParams load_render_params(const std::filesystem::path& path);

StrokeSet place_strokes(const Tensor& image, const Palette& palette, const OrientationField& field,
                        const RenderParams& params);

struct Rendering {
    Tensor image;
    std::vector<std::uint8_t> covered;  // per pixel, 1 where some stroke reaches alpha >= 0.5

    [[nodiscard]] double coverage() const;
};

// Painter's algorithm over anti-aliased capsules onto a copy of `background`.
Rendering render_strokes(const StrokeSet& strokes, const Palette& palette, const Tensor& background);
Tensor composite(const StrokeSet& strokes, const Palette& palette, const Tensor& background);

Tensor make_background(const Tensor& source, Background kind);

struct PainterlyResult {
    Palette palette;
    StrokeSet strokes;
    Rendering rendering;
};

// palette -> field -> strokes -> composite
PainterlyResult paint(const Tensor& image, const RenderParams& params);

void write_strokes_csv(const StrokeSet& strokes, const std::filesystem::path& path);
StrokeSet read_strokes_csv(const std::filesystem::path& path);
std::string strokes_to_csv(const StrokeSet& strokes);

}  // namespace artdream::epainterly
