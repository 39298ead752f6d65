#include "artdream/artnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "artdream/error.hpp"
#include "artdream/ndgrid/image_ops.hpp"

namespace artdream::artnet {

std::vector<std::string> LabelTree::split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t slash = path.find('/', start);
        const auto part = path.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
        if (part.empty()) throw ValidationError("label path '" + std::string(path) + "' has an empty component");
        parts.emplace_back(part);
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return parts;
}

LabelTree LabelTree::from_paths(const std::vector<std::string>& leaf_paths) {
    LabelTree tree;
    std::set<std::string> unique(leaf_paths.begin(), leaf_paths.end());
    for (const auto& path : unique) {
        Node* node = tree.root_.get();
        for (const auto& part : split_path(path)) {
            auto& child = node->children[part];
            if (!child) child = std::make_unique<Node>();
            node = child.get();
        }
    }
    for (const auto& path : unique) {
        if (!tree.find(path)->children.empty()) {
            throw ValidationError("label '" + path + "' is both a leaf and an interior category");
        }
        tree.leaves_.push_back(path);
    }
    return tree;
}

const LabelTree::Node* LabelTree::find(std::string_view path) const {
    const Node* node = root_.get();
    for (const auto& part : split_path(path)) {
        const auto it = node->children.find(part);
        if (it == node->children.end()) return nullptr;
        node = it->second.get();
    }
    return node;
}

bool LabelTree::contains(std::string_view path) const { return find(path) != nullptr; }

bool LabelTree::is_leaf(std::string_view path) const {
    const Node* n = find(path);
    return n != nullptr && n->children.empty();
}

std::size_t LabelTree::leaf_index(std::string_view path) const {
    const auto it = std::lower_bound(leaves_.begin(), leaves_.end(), path);
    if (it == leaves_.end() || *it != path) {
        throw ValidationError("label '" + std::string(path) + "' is not a leaf of the label tree");
    }
    return static_cast<std::size_t>(it - leaves_.begin());
}

std::size_t LabelTree::width_at_depth(std::size_t depth) const {
    std::vector<const Node*> level{root_.get()};
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<const Node*> next;
        for (const Node* n : level)
            for (const auto& [name, child] : n->children) next.push_back(child.get());
        level = std::move(next);
    }
    return level.size();
}

std::vector<TileRecord> tile_image(const Tensor& image, const std::string& source_id, const std::string& label,
                                   const TilingOptions& options, std::uint64_t seed) {
    image.require_rank(3, "tile_image input");
    if (options.tile_side == 0) throw ValidationError("tiling: tile side must be positive");
    if (options.scale_set.empty()) throw ValidationError("tiling: scale set is empty");
    for (double s : options.scale_set) {
        if (!(s > 0.0 && s <= 1.0)) throw ValidationError("tiling: scales must lie in (0, 1]");
    }
    const std::size_t h = image.dim(1), w = image.dim(2);
    const std::size_t min_extent = std::min(h, w);
    const double smallest = *std::min_element(options.scale_set.begin(), options.scale_set.end());
    const auto smallest_side = static_cast<std::size_t>(std::floor(smallest * static_cast<double>(min_extent)));
    if (min_extent < options.tile_side || 2 * smallest_side < options.tile_side) {
        throw ValidationError("tiling: image " + std::to_string(h) + "x" + std::to_string(w) +
                              " too small; smallest scale gives side " + std::to_string(smallest_side) +
                              ", need at least " + std::to_string((options.tile_side + 1) / 2));
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_scale(0, options.scale_set.size() - 1);
    std::vector<TileRecord> tiles;
    tiles.reserve(options.tiles_per_image);
    for (std::size_t i = 0; i < options.tiles_per_image; ++i) {
        const double scale = options.scale_set[pick_scale(rng)];
        const auto side = static_cast<std::size_t>(std::floor(scale * static_cast<double>(min_extent)));
        std::uniform_int_distribution<std::size_t> pick_x(0, w - side);
        std::uniform_int_distribution<std::size_t> pick_y(0, h - side);
        const std::size_t x = pick_x(rng);
        const std::size_t y = pick_y(rng);
        const ndgrid::Region region{static_cast<double>(x), static_cast<double>(y), static_cast<double>(side),
                                    static_cast<double>(side)};
        tiles.push_back({source_id, {x, y, side},
                         ndgrid::resample_bilinear(image, region, options.tile_side, options.tile_side), label});
    }
    return tiles;
}

namespace {

std::string trim_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open manifest " + manifest.string());
    std::string line;
    if (!std::getline(in, line) || trim_cr(line) != "tile_path,label_path") {
        throw FormatError(manifest.string() + ": expected header 'tile_path,label_path'");
    }
    const auto base = manifest.parent_path();
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim_cr(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw FormatError(manifest.string() + ":" + std::to_string(line_no) + ": expected two columns");
        }
        std::string label = line.substr(comma + 1);
        (void)LabelTree::split_path(label);
        entries.push_back({base / line.substr(0, comma), std::move(label)});
    }
    return entries;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(manifest, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + manifest.string());
    out << "tile_path,label_path\n";
    const auto base = std::filesystem::absolute(manifest).parent_path();
    for (const auto& e : entries) {
        auto rel = e.tile_path.is_absolute() ? std::filesystem::relative(e.tile_path, base) : e.tile_path;
        out << rel.generic_string() << ',' << e.label << '\n';
    }
    if (!out) throw IoError("failed writing manifest " + manifest.string());
}

}  // namespace artdream::artnet
