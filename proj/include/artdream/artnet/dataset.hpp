#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "artdream/ndgrid/tensor.hpp"

namespace artdream::artnet {

using ndgrid::Tensor;

// Hierarchical style labels such as "van_gogh/early/dark_palette". Only
// leaves are training classes; interior nodes are metadata. Leaves are
// indexed in lexicographic path order.
class LabelTree {
public:
    static LabelTree from_paths(const std::vector<std::string>& leaf_paths);

    [[nodiscard]] std::size_t leaf_count() const noexcept { return leaves_.size(); }
    [[nodiscard]] const std::vector<std::string>& leaves() const noexcept { return leaves_; }
    [[nodiscard]] bool contains(std::string_view path) const;
    [[nodiscard]] bool is_leaf(std::string_view path) const;
    // Throws ValidationError when `path` is not a leaf of the tree.
    [[nodiscard]] std::size_t leaf_index(std::string_view path) const;
    // Number of distinct nodes (excluding the root) at the given depth, 1-based.
    [[nodiscard]] std::size_t width_at_depth(std::size_t depth) const;

    static std::vector<std::string> split_path(std::string_view path);

private:
    struct Node {
        std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
    };
    const Node* find(std::string_view path) const;

    std::shared_ptr<Node> root_ = std::make_shared<Node>();
    std::vector<std::string> leaves_;
};

struct CropRect {
    std::size_t x = 0, y = 0, side = 0;
    friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct TileRecord {
    std::string source_id;
    CropRect crop;
    Tensor tile;  // 3 x S x S
    std::string label;
};

struct TilingOptions {
    std::size_t tiles_per_image = 50;
    std::vector<double> scale_set{1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0};
    std::size_t tile_side = 64;
};

// Multi-scale random square crops, bilinearly resampled to tile_side.
// Crop side is floor(scale * min(h, w)) for a scale drawn uniformly from
// scale_set; the offset is uniform over all in-bounds positions.
std::vector<TileRecord> tile_image(const Tensor& image, const std::string& source_id, const std::string& label,
                                   const TilingOptions& options, std::uint64_t seed);

// Training manifest: CSV `tile_path,label_path`, paths relative to the
// manifest's directory.
struct ManifestEntry {
    std::filesystem::path tile_path;
    std::string label;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);

}  // namespace artdream::artnet
