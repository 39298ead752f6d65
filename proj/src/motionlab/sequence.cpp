#include "artdream/motionlab/sequence.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace artdream::motionlab {

namespace fs = std::filesystem;
using nlohmann::json;

Rational FrameSequence::duration() const {
    if (nominal_duration) return *nominal_duration;
    return Rational(static_cast<std::int64_t>(frames.size())) / fps;
}

void FrameSequence::validate() const {
    if (frames.empty()) throw ValidationError("frame sequence is empty");
    if (!fps.positive()) throw ValidationError("frame sequence fps must be positive");
    if (!retime_factor.positive()) throw ValidationError("frame sequence retime factor must be positive");
    const auto& first = frames.front();
    if (first.height == 0 || first.width == 0) throw ValidationError("frame 1 has zero extent");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.height != first.height || f.width != first.width) {
            throw FormatError("frame " + std::to_string(i + 1) + " is " + std::to_string(f.height) + "x" +
                              std::to_string(f.width) + " but frame 1 is " + std::to_string(first.height) + "x" +
                              std::to_string(first.width));
        }
        if (f.rgb.size() != f.height * f.width * 3) throw ShapeError("frame buffer size mismatch");
    }
}

std::string frame_name(std::size_t number) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.png", number);
    return buf;
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::uint64_t parse_hash(const std::string& s) {
    if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw FormatError("manifest recipe_hash must be 16 lowercase hex digits");
    }
    return std::stoull(s, nullptr, 16);
}

// frame number -> path, for every frame_NNNNNN.png in the directory
std::map<std::size_t, fs::path> list_frames(const fs::path& dir) {
    static const std::regex pattern(R"(frame_(\d{6})\.png)");
    std::map<std::size_t, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        std::smatch m;
        if (std::regex_match(name, m, pattern)) {
            out.emplace(std::stoul(m[1].str()), entry.path());
        } else if (name.starts_with("frame_") && name.ends_with(".png")) {
            throw FormatError(dir.string() + ": frame file '" + name + "' is not named frame_NNNNNN.png");
        }
    }
    return out;
}

}  // namespace

FrameSequence load_sequence(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    const auto files = list_frames(dir);
    if (files.empty()) throw FormatError(dir.string() + ": directory contains no frames");
    std::size_t expected = 1;
    for (const auto& [number, path] : files) {
        if (number != expected) {
            throw FormatError(dir.string() + ": gap in frame numbering, expected " + frame_name(expected) +
                              " but found " + path.filename().string());
        }
        ++expected;
    }
    const auto manifest_path = dir / kManifestName;
    std::ifstream in(manifest_path);
    if (!in) throw IoError(dir.string() + ": missing manifest " + kManifestName);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    FrameSequence seq;
    try {
        if (!j.is_object()) throw FormatError(manifest_path.string() + ": manifest must be an object");
        for (const auto& [key, value] : j.items()) {
            if (key != "fps" && key != "frame_count" && key != "retime_factor" && key != "recipe_hash" &&
                key != "duration") {
                throw FormatError(manifest_path.string() + ": unknown manifest key '" + key + "'");
            }
        }
        for (const char* key : {"fps", "frame_count", "retime_factor", "recipe_hash"}) {
            if (!j.contains(key)) throw FormatError(manifest_path.string() + ": manifest lacks '" + key + "'");
        }
        seq.fps = Rational::parse(j.at("fps").get<std::string>());
        seq.retime_factor = Rational::parse(j.at("retime_factor").get<std::string>());
        if (!j.at("recipe_hash").is_null()) seq.recipe_hash = parse_hash(j.at("recipe_hash").get<std::string>());
        if (j.contains("duration")) seq.nominal_duration = Rational::parse(j.at("duration").get<std::string>());
        const auto count = j.at("frame_count").get<std::size_t>();
        if (count != files.size()) {
            throw FormatError(manifest_path.string() + ": manifest lists " + std::to_string(count) +
                              " frames but the directory holds " + std::to_string(files.size()));
        }
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    for (const auto& [number, path] : files) seq.frames.push_back(read_png(path));
    seq.validate();
    return seq;
}

void write_sequence(const FrameSequence& seq, const fs::path& dir) {
    seq.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
    for (const auto& [number, path] : list_frames(dir)) fs::remove(path);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) write_png(seq.frames[i], dir / frame_name(i + 1));

    json j;
    j["fps"] = seq.fps.str();
    j["frame_count"] = seq.frames.size();
    j["retime_factor"] = seq.retime_factor.str();
    j["recipe_hash"] = seq.recipe_hash ? json(hash_hex(*seq.recipe_hash)) : json(nullptr);
    j["duration"] = seq.duration().str();
    const auto tmp = dir / (std::string(kManifestName) + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, dir / kManifestName, ec);
    if (ec) throw IoError("cannot move manifest into place in " + dir.string() + ": " + ec.message());
}

FrameSequence import_frames(const fs::path& dir, Rational fps) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> pngs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") pngs.push_back(entry.path());
    }
    if (pngs.empty()) throw FormatError(dir.string() + ": directory contains no frames");
    std::sort(pngs.begin(), pngs.end());
    FrameSequence seq;
    seq.fps = fps;
    for (const auto& p : pngs) seq.frames.push_back(read_png(p));
    seq.validate();
    return seq;
}

void RetimeSpec::validate() const {
    if (!factor.positive()) throw ValidationError("retime factor must be positive");
    if (output_fps && !output_fps->positive()) throw ValidationError("retime output fps must be positive");
}

std::size_t source_index(std::size_t j, Rational f, Rational in, Rational out) {
    // j / f * (in / out) = j * f.den * in.num * out.den / (f.num * in.den * out.num)
    const __int128 n = static_cast<__int128>(j) * f.den() * in.num() * out.den();
    const __int128 d = static_cast<__int128>(f.num()) * in.den() * out.num();
    return static_cast<std::size_t>(n / d);
}

std::size_t retimed_count(std::size_t count, Rational f, Rational in, Rational out) {
    const __int128 n = static_cast<__int128>(count) * f.num() * in.den() * out.num();
    const __int128 d = static_cast<__int128>(f.den()) * in.num() * out.den();
    return static_cast<std::size_t>((n + d - 1) / d);
}

FrameSequence retime(const FrameSequence& seq, const RetimeSpec& spec) {
    spec.validate();
    seq.validate();
    const Rational out_fps = spec.output_fps.value_or(seq.fps);
    FrameSequence out;
    out.fps = out_fps;
    out.retime_factor = seq.retime_factor * spec.factor;
    out.nominal_duration = seq.duration() * spec.factor;
    out.recipe_hash = seq.recipe_hash;
    const std::size_t n = retimed_count(seq.count(), spec.factor, seq.fps, out_fps);
    out.frames.reserve(n);
    for (std::size_t j = 0; j < n; ++j) out.frames.push_back(seq.frames[source_index(j, spec.factor, seq.fps, out_fps)]);
    return out;
}

std::uint64_t frame_seed(std::uint64_t base, std::size_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

std::exception_ptr annotate(std::size_t index, std::exception_ptr e) {
    const std::string where = "frame " + std::to_string(index + 1) + ": ";
    try {
        std::rethrow_exception(e);
    } catch (const ValidationError& x) {
        return std::make_exception_ptr(ValidationError(where + x.what()));
    } catch (const IoError& x) {
        return std::make_exception_ptr(IoError(where + x.what()));
    } catch (const std::exception& x) {
        return std::make_exception_ptr(Error(where + x.what()));
    }
}

}  // namespace

FrameSequence stylize_sequence(const FrameSequence& seq, const dream::Model& model, const dream::DreamRecipe& recipe,
                               const dream::GuideFeatures* guide, const epainterly::RenderParams& render,
                               const StylizeOptions& options) {
    seq.validate();
    recipe.validate();
    render.validate();
    if (recipe.mode == dream::Mode::guided && guide == nullptr) {
        throw ValidationError("stylize_sequence: guided recipe without guide features");
    }
    const std::size_t n = seq.count();
    std::vector<Image8> frames(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                auto r = recipe;
                r.seed = frame_seed(recipe.seed, i);
                auto rp = render;
                rp.seed = frame_seed(render.seed, i);
                const auto dreamed = dream::run_dream(model, r, to_tensor(seq.frames[i]), guide);
                frames[i] = from_tensor(epainterly::paint(dreamed.image, rp).rendering.image);
            } catch (...) {
                errors[i] = annotate(i, std::current_exception());
            }
        }
    };
    std::size_t workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    FrameSequence out;
    out.frames = std::move(frames);
    out.fps = seq.fps;
    out.retime_factor = seq.retime_factor;
    out.nominal_duration = seq.nominal_duration;
    out.recipe_hash = dream::recipe_hash(recipe);
    return out;
}

}  // namespace artdream::motionlab
