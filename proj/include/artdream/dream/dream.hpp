#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "artdream/artnet/model.hpp"
#include "artdream/ndgrid/tensor.hpp"

namespace artdream::dream {

using artnet::LayerId;
using ndgrid::Tensor;
using Model = artnet::Model<float>;

enum class Mode { free, guided };
enum class Objective { dot_max, dist_min };

const char* to_string(Mode mode);
const char* to_string(Objective objective);

struct DreamRecipe {
    std::string model;                // weights file; relative paths resolve against the recipe file
    Mode mode = Mode::free;
    std::optional<std::string> guide;  // guided mode only
    LayerId layer{3};
    std::size_t iterations = 10;      // per octave
    std::size_t octaves = 3;
    double octave_scale = 1.4;
    double step_size = 1.5;           // in units of mean |gradient|
    Objective objective = Objective::dot_max;
    std::size_t patch_size = 1;
    double jitter = 2.0;              // max circular shift in pixels; 0 disables
    std::uint64_t seed = 0;

    void validate() const;
};

// Strict JSON mapping: unknown keys are rejected; model, mode, layer,
// iterations, octaves and seed are required.
DreamRecipe recipe_from_json(const std::string& text);
std::string recipe_to_json(const DreamRecipe& recipe);
DreamRecipe load_recipe(const std::filesystem::path& path);
// FNV-1a over the canonical JSON form.
std::uint64_t recipe_hash(const DreamRecipe& recipe);

// Non-overlapping p x p spatial patches of a feature map, each flattened to
// channels * p * p values in (channel, dy, dx) order.
struct GuideFeatures {
    LayerId layer;
    std::size_t patch_size = 1;
    std::size_t length = 0;   // values per patch
    std::vector<float> data;  // count * length
    std::vector<std::pair<std::size_t, std::size_t>> origins;  // (y, x) in feature-map cells

    [[nodiscard]] std::size_t count() const noexcept { return origins.size(); }
    [[nodiscard]] const float* patch(std::size_t i) const { return data.data() + i * length; }
};

// Ragged edges that do not fill a whole patch are dropped.
GuideFeatures patch_features(const Tensor& feature_map, LayerId layer, std::size_t patch_size);
GuideFeatures extract_guide_features(const Model& model, const Tensor& guide_image, LayerId layer,
                                     std::size_t patch_size);

// For each canvas patch, the guide patch maximizing the dot product (dot_max)
// or minimizing squared distance (dist_min). Ties go to the smallest index.
std::vector<std::size_t> match_patches(const GuideFeatures& canvas, const GuideFeatures& guide,
                                       Objective objective);

// Objective value for a fixed matching.
double matched_objective(const GuideFeatures& canvas, const GuideFeatures& guide,
                         const std::vector<std::size_t>& matching, Objective objective);

struct CanvasState {
    Tensor canvas;  // 3 x h x w, values in [0, 1]
    std::size_t octave = 0;
    std::size_t iteration = 0;
};

struct StepResult {
    CanvasState state;
    double objective = 0.0;  // value before the update
    bool skipped = false;    // mean |gradient| below 1e-12, canvas left unchanged
};

inline constexpr double kZeroGradient = 1e-12;

// One ascent step on J = sum_i <f_i, g_m(i)> (dot_max) or
// J = -sum_i ||f_i - g_m(i)||^2 (dist_min).
StepResult guided_step(const Model& model, const CanvasState& state, const GuideFeatures& guide,
                       const DreamRecipe& recipe, std::mt19937_64& rng);

// One ascent step on J = 0.5 * ||A_layer||^2.
StepResult free_step(const Model& model, const CanvasState& state, const DreamRecipe& recipe,
                     std::mt19937_64& rng);

struct DreamOutput {
    Tensor image;
    std::size_t steps = 0;
    std::size_t skipped = 0;
};

// Coarse-to-fine octave pyramid. `guide` is required in guided mode.
DreamOutput run_dream(const Model& model, const DreamRecipe& recipe, const Tensor& source,
                      const GuideFeatures* guide = nullptr);

}  // namespace artdream::dream
