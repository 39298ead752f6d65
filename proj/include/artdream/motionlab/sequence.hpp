#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artdream/dream/dream.hpp"
#include "artdream/epainterly/painterly.hpp"
#include "artdream/motionlab/image_io.hpp"
#include "artdream/motionlab/rational.hpp"

namespace artdream::motionlab {

struct FrameSequence {
    std::vector<Image8> frames;
    Rational fps{30};
    Rational retime_factor{1};               // accumulated over retime calls
    std::optional<Rational> nominal_duration;  // seconds; defaults to count / fps
    std::optional<std::uint64_t> recipe_hash;

    [[nodiscard]] std::size_t count() const noexcept { return frames.size(); }
    [[nodiscard]] Rational duration() const;
    void validate() const;  // count >= 1, fps > 0, equal extents
};

inline constexpr const char* kManifestName = "sequence.json";

std::string frame_name(std::size_t number);  // frame_000001.png, 1-based

FrameSequence load_sequence(const std::filesystem::path& directory);
void write_sequence(const FrameSequence& seq, const std::filesystem::path& directory);

// Builds a sequence from a directory of PNGs without a manifest, in name order.
FrameSequence import_frames(const std::filesystem::path& directory, Rational fps);

struct RetimeSpec {
    Rational factor{1};
    std::optional<Rational> output_fps;  // defaults to the input fps

    void validate() const;
};

// Input frame shown at output frame j.
std::size_t source_index(std::size_t j, Rational factor, Rational input_fps, Rational output_fps);
std::size_t retimed_count(std::size_t input_count, Rational factor, Rational input_fps, Rational output_fps);

FrameSequence retime(const FrameSequence& seq, const RetimeSpec& spec);

std::uint64_t frame_seed(std::uint64_t base_seed, std::size_t frame_index);

struct StylizeOptions {
    std::size_t workers = 0;  // 0 = hardware concurrency
};

// Dream then paint every frame independently; per-frame seeds come from
// frame_seed(recipe.seed / render.seed, index).
FrameSequence stylize_sequence(const FrameSequence& seq, const dream::Model& model, const dream::DreamRecipe& recipe,
                               const dream::GuideFeatures* guide, const epainterly::RenderParams& render,
                               const StylizeOptions& options = {});

}  // namespace artdream::motionlab
