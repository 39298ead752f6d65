#include "artdream/dream/dream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "artdream/ndgrid/image_ops.hpp"

namespace artdream::dream {

using nlohmann::json;

const char* to_string(Mode mode) { return mode == Mode::free ? "free" : "guided"; }
const char* to_string(Objective objective) { return objective == Objective::dot_max ? "dot_max" : "dist_min"; }

void DreamRecipe::validate() const {
    if (octaves < 1) throw ValidationError("recipe: octaves must be at least 1");
    if (!(octave_scale >= 1.0) || !std::isfinite(octave_scale)) throw ValidationError("recipe: octave_scale must be >= 1");
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw ValidationError("recipe: step_size must be >= 0");
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw ValidationError("recipe: jitter must be >= 0");
    if (patch_size < 1) throw ValidationError("recipe: patch_size must be at least 1");
    if (layer.index() < 1) throw ValidationError("recipe: invalid layer");
    if (mode == Mode::guided && (!guide || guide->empty())) {
        throw ValidationError("recipe: guided mode requires a guide image");
    }
}

namespace {

const std::set<std::string, std::less<>> kRecipeKeys = {"model",      "mode",     "guide",     "layer",
                                                        "iterations", "octaves",  "octave_scale",
                                                        "step_size",  "objective", "patch_size",
                                                        "jitter",     "seed"};

template <typename T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("recipe field '") + key + "': " + e.what());
    }
}

std::size_t count_field(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ValidationError(std::string("recipe field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

}  // namespace

DreamRecipe recipe_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("recipe is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("recipe must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kRecipeKeys.contains(key)) throw ValidationError("recipe: unknown key '" + key + "'");
    }
    for (const char* key : {"model", "mode", "layer", "iterations", "octaves", "seed"}) {
        if (!j.contains(key)) throw ValidationError(std::string("recipe: missing required key '") + key + "'");
    }

    DreamRecipe r;
    r.model = field<std::string>(j, "model");
    const auto mode = field<std::string>(j, "mode");
    if (mode == "free") {
        r.mode = Mode::free;
    } else if (mode == "guided") {
        r.mode = Mode::guided;
    } else {
        throw ValidationError("recipe: mode must be 'free' or 'guided', got '" + mode + "'");
    }
    if (j.contains("guide") && !j["guide"].is_null()) r.guide = field<std::string>(j, "guide");
    r.layer = LayerId::parse(field<std::string>(j, "layer"));
    r.iterations = count_field(j, "iterations");
    r.octaves = count_field(j, "octaves");
    if (j.contains("octave_scale")) r.octave_scale = field<double>(j, "octave_scale");
    if (j.contains("step_size")) r.step_size = field<double>(j, "step_size");
    if (j.contains("objective")) {
        const auto obj = field<std::string>(j, "objective");
        if (obj == "dot_max") {
            r.objective = Objective::dot_max;
        } else if (obj == "dist_min") {
            r.objective = Objective::dist_min;
        } else {
            throw ValidationError("recipe: objective must be 'dot_max' or 'dist_min', got '" + obj + "'");
        }
    }
    if (j.contains("patch_size")) r.patch_size = count_field(j, "patch_size");
    if (j.contains("jitter")) r.jitter = field<double>(j, "jitter");
    const auto& seed = j.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
        throw ValidationError("recipe field 'seed' must be a non-negative integer");
    }
    r.seed = seed.get<std::uint64_t>();
    r.validate();
    return r;
}

std::string recipe_to_json(const DreamRecipe& r) {
    json j;
    j["model"] = r.model;
    j["mode"] = to_string(r.mode);
    j["guide"] = r.guide ? json(*r.guide) : json(nullptr);
    j["layer"] = r.layer.name();
    j["iterations"] = r.iterations;
    j["octaves"] = r.octaves;
    j["octave_scale"] = r.octave_scale;
    j["step_size"] = r.step_size;
    j["objective"] = to_string(r.objective);
    j["patch_size"] = r.patch_size;
    j["jitter"] = r.jitter;
    j["seed"] = r.seed;
    return j.dump();
}

DreamRecipe load_recipe(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open recipe " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return recipe_from_json(ss.str());
}

std::uint64_t recipe_hash(const DreamRecipe& recipe) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : recipe_to_json(recipe)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

GuideFeatures patch_features(const Tensor& fmap, LayerId layer, std::size_t p) {
    fmap.require_rank(3, "patch_features input");
    if (p == 0) throw ValidationError("patch size must be positive");
    const std::size_t c = fmap.dim(0), h = fmap.dim(1), w = fmap.dim(2);
    if (h < p || w < p) {
        throw ValidationError("feature map " + std::to_string(h) + "x" + std::to_string(w) + " at " + layer.name() +
                              " is smaller than one " + std::to_string(p) + "x" + std::to_string(p) + " patch");
    }
    GuideFeatures out;
    out.layer = layer;
    out.patch_size = p;
    out.length = c * p * p;
    const std::size_t rows = h / p, cols = w / p;
    out.data.reserve(rows * cols * out.length);
    for (std::size_t py = 0; py < rows; ++py) {
        for (std::size_t px = 0; px < cols; ++px) {
            out.origins.emplace_back(py * p, px * p);
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t dy = 0; dy < p; ++dy)
                    for (std::size_t dx = 0; dx < p; ++dx) out.data.push_back(fmap.at(ch, py * p + dy, px * p + dx));
        }
    }
    return out;
}

namespace {

Tensor padded_for(const Model& model, const Tensor& image, LayerId layer) {
    model.spec().require_layer(layer);
    return ndgrid::pad_to_multiple(image, model.spec().reduction_at(layer));
}

// Adjoint of pad_to_multiple's edge replication.
Tensor fold_padding(const Tensor& grad, std::size_t h, std::size_t w) {
    const std::size_t c = grad.dim(0), ph = grad.dim(1), pw = grad.dim(2);
    if (ph == h && pw == w) return grad;
    Tensor out({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < ph; ++y)
            for (std::size_t x = 0; x < pw; ++x) out.at(ch, std::min(y, h - 1), std::min(x, w - 1)) += grad.at(ch, y, x);
    return out;
}

float squared_distance(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t k = 0; k < n; ++k) {
        const float d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

float inner(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

// Shared ascent machinery: jitter, forward, objective-specific upstream,
// backward to pixels, normalized update, clamp.
template <typename UpstreamFn>
StepResult ascend(const Model& model, const CanvasState& state, const DreamRecipe& recipe, std::mt19937_64& rng,
                  UpstreamFn&& upstream_for) {
    const auto& canvas = state.canvas;
    canvas.require_rank(3, "dream canvas");
    long dy = 0, dx = 0;
    const auto reach = static_cast<long>(std::floor(recipe.jitter));
    if (reach > 0) {
        std::uniform_int_distribution<long> shift(-reach, reach);
        dy = shift(rng);
        dx = shift(rng);
    }
    const Tensor shifted = (dy == 0 && dx == 0) ? canvas : ndgrid::roll(canvas, dy, dx);
    const Tensor padded = padded_for(model, shifted, recipe.layer);
    const Tensor features = model.forward_to_layer(padded, recipe.layer);

    double objective = 0.0;
    const Tensor upstream = upstream_for(features, objective);
    Tensor grad = fold_padding(model.grad_wrt_input(padded, recipe.layer, upstream), canvas.dim(1), canvas.dim(2));
    if (dy != 0 || dx != 0) grad = ndgrid::roll(grad, -dy, -dx);

    double mean_abs = 0.0;
    for (float g : grad.data()) mean_abs += std::abs(g);
    mean_abs /= static_cast<double>(grad.size());

    StepResult res{state, objective, false};
    res.state.iteration = state.iteration + 1;
    if (mean_abs < kZeroGradient) {
        res.skipped = true;
        return res;
    }
    const auto scale = static_cast<float>(recipe.step_size / mean_abs);
    auto px = res.state.canvas.data();
    const auto g = grad.data();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::clamp(px[i] + scale * g[i], 0.0f, 1.0f);
    res.state.canvas.check_finite("dream step");
    return res;
}

}  // namespace

GuideFeatures extract_guide_features(const Model& model, const Tensor& guide_image, LayerId layer,
                                     std::size_t patch_size) {
    const Tensor fmap = model.forward_to_layer(padded_for(model, guide_image, layer), layer);
    return patch_features(fmap, layer, patch_size);
}

std::vector<std::size_t> match_patches(const GuideFeatures& canvas, const GuideFeatures& guide,
                                       Objective objective) {
    if (canvas.length != guide.length) {
        throw ShapeError("match_patches: canvas patches have length " + std::to_string(canvas.length) +
                         ", guide patches " + std::to_string(guide.length));
    }
    if (guide.count() == 0) throw ValidationError("match_patches: guide has no patches");
    std::vector<std::size_t> matching(canvas.count());
    for (std::size_t i = 0; i < canvas.count(); ++i) {
        const float* f = canvas.patch(i);
        std::size_t best = 0;
        if (objective == Objective::dot_max) {
            float best_score = inner(f, guide.patch(0), guide.length);
            for (std::size_t j = 1; j < guide.count(); ++j) {
                const float s = inner(f, guide.patch(j), guide.length);
                if (s > best_score) {
                    best_score = s;
                    best = j;
                }
            }
        } else {
            float best_dist = squared_distance(f, guide.patch(0), guide.length);
            for (std::size_t j = 1; j < guide.count(); ++j) {
                const float d = squared_distance(f, guide.patch(j), guide.length);
                if (d < best_dist) {
                    best_dist = d;
                    best = j;
                }
            }
        }
        matching[i] = best;
    }
    return matching;
}

double matched_objective(const GuideFeatures& canvas, const GuideFeatures& guide,
                         const std::vector<std::size_t>& matching, Objective objective) {
    if (matching.size() != canvas.count() || canvas.length != guide.length) {
        throw ShapeError("matched_objective: matching does not fit the patch sets");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < matching.size(); ++i) {
        const float* f = canvas.patch(i);
        const float* g = guide.patch(matching.at(i));
        total += objective == Objective::dot_max ? static_cast<double>(inner(f, g, guide.length))
                                                 : -static_cast<double>(squared_distance(f, g, guide.length));
    }
    return total;
}

StepResult guided_step(const Model& model, const CanvasState& state, const GuideFeatures& guide,
                       const DreamRecipe& recipe, std::mt19937_64& rng) {
    if (guide.layer != recipe.layer || guide.patch_size != recipe.patch_size) {
        throw ValidationError("guided_step: guide features were extracted for " + guide.layer.name() + "/p=" +
                              std::to_string(guide.patch_size) + ", recipe asks for " + recipe.layer.name() +
                              "/p=" + std::to_string(recipe.patch_size));
    }
    return ascend(model, state, recipe, rng, [&](const Tensor& features, double& objective) {
        const auto canvas_feats = patch_features(features, recipe.layer, recipe.patch_size);
        const auto matching = match_patches(canvas_feats, guide, recipe.objective);
        objective = matched_objective(canvas_feats, guide, matching, recipe.objective);

        Tensor up(features.shape());
        const std::size_t c = features.dim(0), p = recipe.patch_size;
        for (std::size_t i = 0; i < matching.size(); ++i) {
            const auto [oy, ox] = canvas_feats.origins[i];
            const float* f = canvas_feats.patch(i);
            const float* g = guide.patch(matching[i]);
            std::size_t k = 0;
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t y = 0; y < p; ++y)
                    for (std::size_t x = 0; x < p; ++x, ++k) {
                        up.at(ch, oy + y, ox + x) =
                            recipe.objective == Objective::dot_max ? g[k] : -2.0f * (f[k] - g[k]);
                    }
        }
        return up;
    });
}

StepResult free_step(const Model& model, const CanvasState& state, const DreamRecipe& recipe,
                     std::mt19937_64& rng) {
    return ascend(model, state, recipe, rng, [](const Tensor& features, double& objective) {
        double sq = 0.0;
        for (float v : features.data()) sq += static_cast<double>(v) * v;
        objective = 0.5 * sq;
        return features;
    });
}

DreamOutput run_dream(const Model& model, const DreamRecipe& recipe, const Tensor& source,
                      const GuideFeatures* guide) {
    recipe.validate();
    model.spec().require_layer(recipe.layer);
    source.require_rank(3, "dream source");
    if (recipe.mode == Mode::guided && guide == nullptr) {
        throw ValidationError("run_dream: guided mode requires guide features");
    }
    const std::size_t h = source.dim(1), w = source.dim(2);
    if (std::min(h, w) < 32) throw ValidationError("run_dream: source must be at least 32x32");
    for (float v : source.data()) {
        if (v < 0.0f || v > 1.0f) throw ValidationError("run_dream: source pixels must lie in [0, 1]");
    }
    const double coarsest = static_cast<double>(std::min(h, w)) /
                            std::pow(recipe.octave_scale, static_cast<double>(recipe.octaves - 1));
    if (coarsest < 16.0) {
        throw ValidationError("run_dream: coarsest octave would be " + std::to_string(coarsest) +
                              " px; need at least 16");
    }

    std::mt19937_64 rng(recipe.seed);
    DreamOutput out;
    Tensor detail;  // canvas minus base at the previous octave
    CanvasState state;
    for (std::size_t o = 0; o < recipe.octaves; ++o) {
        const double factor = std::pow(recipe.octave_scale, static_cast<double>(recipe.octaves - 1 - o));
        const auto oh = static_cast<std::size_t>(std::lround(static_cast<double>(h) / factor));
        const auto ow = static_cast<std::size_t>(std::lround(static_cast<double>(w) / factor));
        const Tensor base = ndgrid::resize_bilinear(source, oh, ow);
        state.canvas = base;
        if (!detail.empty()) {
            const Tensor up = ndgrid::resize_bilinear(detail, oh, ow);
            state.canvas += up;
            ndgrid::clamp_unit(state.canvas);
        }
        state.octave = o;
        state.iteration = 0;
        for (std::size_t it = 0; it < recipe.iterations; ++it) {
            auto step = recipe.mode == Mode::free ? free_step(model, state, recipe, rng)
                                                  : guided_step(model, state, *guide, recipe, rng);
            ++out.steps;
            if (step.skipped) ++out.skipped;
            state = std::move(step.state);
        }
        detail = state.canvas;
        auto d = detail.data();
        const auto b = base.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
    }
    out.image = std::move(state.canvas);
    return out;
}

}  // namespace artdream::dream
