#include "artdream/epainterly/painterly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace artdream::epainterly {

double luminance(const Color& c) { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; }

namespace {

constexpr double kPi = std::numbers::pi;

void require_rgb(const Tensor& image, const char* what) {
    image.require_rank(3, what);
    if (image.dim(0) != 3) throw ShapeError(std::string(what) + ": expected 3 channels, got " + std::to_string(image.dim(0)));
}

Color pixel(const Tensor& image, std::size_t y, std::size_t x) {
    return {image.at(0, y, x), image.at(1, y, x), image.at(2, y, x)};
}

double dist2(const Color& a, const Color& b) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a[c]) - b[c];
        s += d * d;
    }
    return s;
}

bool luminance_less(const Color& a, const Color& b) {
    const double la = luminance(a), lb = luminance(b);
    if (la != lb) return la < lb;
    return a < b;
}

}  // namespace

std::uint32_t Palette::nearest(const Color& c) const {
    if (colors.empty()) throw ValidationError("palette is empty");
    std::uint32_t best = 0;
    double best_d = dist2(c, colors[0]);
    for (std::uint32_t i = 1; i < colors.size(); ++i) {
        const double d = dist2(c, colors[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Palette extract_palette(const Tensor& image, std::size_t k, std::uint64_t seed) {
    require_rgb(image, "extract_palette");
    if (k < 2 || k > 64) throw ValidationError("palette size must lie in [2, 64], got " + std::to_string(k));
    const std::size_t h = image.dim(1), w = image.dim(2), n = h * w;
    std::vector<Color> px;
    px.reserve(n);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) px.push_back(pixel(image, y, x));

    Palette out;
    out.seed = seed;

    // distinct colors, stopping as soon as there are enough
    std::vector<Color> distinct;
    {
        std::set<Color> seen;
        for (const auto& c : px) {
            if (seen.insert(c).second) {
                distinct.push_back(c);
                if (distinct.size() >= k) break;
            }
        }
    }
    if (distinct.size() < k) {
        std::sort(distinct.begin(), distinct.end(), luminance_less);
        out.colors = std::move(distinct);
        out.padded = true;
        return out;
    }

    std::mt19937_64 rng(seed);
    std::vector<Color> centers;
    centers.reserve(k);
    centers.push_back(px[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(px[i], centers[0]);
    while (centers.size() < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            if (r < d2[i]) {
                pick = i;
                break;
            }
            r -= d2[i];
        }
        while (d2[pick] <= 0.0) --pick;  // rounding at the tail
        centers.push_back(px[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(px[i], centers.back()));
    }

    std::vector<std::uint32_t> assign(n, 0);
    for (int iter = 0; iter < 50; ++iter) {
        Palette tmp;
        tmp.colors = centers;
        for (std::size_t i = 0; i < n; ++i) assign[i] = tmp.nearest(px[i]);
        std::vector<std::array<double, 3>> sum(k, {0, 0, 0});
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) sum[assign[i]][c] += px[i][c];
            ++count[assign[i]];
        }
        double moved = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] == 0) continue;
            Color next;
            for (int c = 0; c < 3; ++c) next[c] = static_cast<float>(sum[j][c] / static_cast<double>(count[j]));
            moved = std::max(moved, std::sqrt(dist2(next, centers[j])));
            centers[j] = next;
        }
        if (moved < 1e-4) break;
    }
    std::sort(centers.begin(), centers.end(), luminance_less);
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
    out.colors = std::move(centers);
    return out;
}

OrientationField orientation_field(const Tensor& image, double sigma) {
    require_rgb(image, "orientation_field");
    if (!(sigma > 0.0)) throw ValidationError("orientation_field: sigma must be positive");
    const std::size_t h = image.dim(1), w = image.dim(2);
    std::vector<double> lum(h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) lum[y * w + x] = luminance(pixel(image, y, x));

    auto L = [&](long y, long x) {
        y = std::clamp(y, 0L, static_cast<long>(h) - 1);
        x = std::clamp(x, 0L, static_cast<long>(w) - 1);
        return lum[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };
    std::vector<double> jxx(h * w), jxy(h * w), jyy(h * w);
    for (long y = 0; y < static_cast<long>(h); ++y) {
        for (long x = 0; x < static_cast<long>(w); ++x) {
            const double gx = (L(y - 1, x + 1) + 2 * L(y, x + 1) + L(y + 1, x + 1)) -
                              (L(y - 1, x - 1) + 2 * L(y, x - 1) + L(y + 1, x - 1));
            const double gy = (L(y + 1, x - 1) + 2 * L(y + 1, x) + L(y + 1, x + 1)) -
                              (L(y - 1, x - 1) + 2 * L(y - 1, x) + L(y - 1, x + 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
            jxx[i] = gx * gx;
            jxy[i] = gx * gy;
            jyy[i] = gy * gy;
        }
    }

    const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        ksum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : kernel) v /= ksum;
    auto blur = [&](std::vector<double>& f) {
        std::vector<double> tmp(h * w, 0.0);
        for (std::size_t y = 0; y < h; ++y)
            for (long x = 0; x < static_cast<long>(w); ++x) {
                double acc = 0.0;
                for (long i = -radius; i <= radius; ++i) {
                    const long xx = std::clamp(x + i, 0L, static_cast<long>(w) - 1);
                    acc += kernel[static_cast<std::size_t>(i + radius)] * f[y * w + static_cast<std::size_t>(xx)];
                }
                tmp[y * w + static_cast<std::size_t>(x)] = acc;
            }
        for (long y = 0; y < static_cast<long>(h); ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long i = -radius; i <= radius; ++i) {
                    const long yy = std::clamp(y + i, 0L, static_cast<long>(h) - 1);
                    acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy) * w + x];
                }
                f[static_cast<std::size_t>(y) * w + x] = acc;
            }
    };
    blur(jxx);
    blur(jxy);
    blur(jyy);

    OrientationField field;
    field.height = h;
    field.width = w;
    field.angle.assign(h * w, 0.0f);
    field.coherence.assign(h * w, 0.0f);
    for (std::size_t i = 0; i < h * w; ++i) {
        const double trace = jxx[i] + jyy[i];
        if (trace <= 1e-12) continue;
        const double diff = jxx[i] - jyy[i];
        const double spread = std::sqrt(diff * diff + 4.0 * jxy[i] * jxy[i]);
        double theta = 0.5 * std::atan2(2.0 * jxy[i], diff) + 0.5 * kPi;
        theta = std::fmod(theta, kPi);
        if (theta < 0.0) theta += kPi;
        auto a = static_cast<float>(theta);
        if (!(a < static_cast<float>(kPi))) a = 0.0f;
        field.angle[i] = a;
        field.coherence[i] = static_cast<float>(std::clamp(spread / trace, 0.0, 1.0));
    }
    return field;
}

void RenderParams::validate() const {
    if (k < 1 || k > 64) throw ValidationError("render params: k must lie in [1, 64]");
    if (passes.empty()) throw ValidationError("render params: at least one pass is required");
    for (std::size_t i = 0; i < passes.size(); ++i) {
        const auto& p = passes[i];
        const std::string where = "render params pass " + std::to_string(i) + ": ";
        if (!(p.length_min > 0 && p.length_max >= p.length_min)) throw ValidationError(where + "bad length range");
        if (!(p.width_min > 0 && p.width_max >= p.width_min)) throw ValidationError(where + "bad width range");
        if (!(p.density >= 0) || !std::isfinite(p.density)) throw ValidationError(where + "density must be >= 0");
        if (!std::isfinite(p.length_max) || !std::isfinite(p.width_max)) throw ValidationError(where + "non-finite range");
    }
    if (!(angle_noise >= 0) || !std::isfinite(angle_noise)) throw ValidationError("render params: angle_noise must be >= 0");
    if (!(error_threshold >= 0) || !std::isfinite(error_threshold)) {
        throw ValidationError("render params: error_threshold must be >= 0");
    }
}

namespace {

using nlohmann::json;

const char* background_name(Background b) {
    switch (b) {
        case Background::white: return "white";
        case Background::gray: return "gray";
        default: return "source";
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
            throw ValidationError(where + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace

RenderParams render_params_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("render params are not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("render params must be a JSON object");
    reject_unknown(j, {"k", "passes", "angle_noise", "error_threshold", "background", "seed"}, "render params");
    RenderParams p;
    try {
        if (j.contains("k")) p.k = j["k"].get<std::size_t>();
        if (j.contains("passes")) {
            p.passes.clear();
            for (const auto& pj : j["passes"]) {
                if (!pj.is_object()) throw ValidationError("render params: each pass must be an object");
                reject_unknown(pj, {"length_min", "length_max", "width_min", "width_max", "density"}, "render pass");
                PassParams pp;
                pp.length_min = pj.value("length_min", pp.length_min);
                pp.length_max = pj.value("length_max", pp.length_max);
                pp.width_min = pj.value("width_min", pp.width_min);
                pp.width_max = pj.value("width_max", pp.width_max);
                pp.density = pj.value("density", pp.density);
                p.passes.push_back(pp);
            }
        }
        if (j.contains("angle_noise")) p.angle_noise = j["angle_noise"].get<double>();
        if (j.contains("error_threshold")) p.error_threshold = j["error_threshold"].get<double>();
        if (j.contains("background")) {
            const auto b = j["background"].get<std::string>();
            if (b == "source") {
                p.background = Background::source;
            } else if (b == "white") {
                p.background = Background::white;
            } else if (b == "gray") {
                p.background = Background::gray;
            } else {
                throw ValidationError("render params: background must be source, white or gray");
            }
        }
        if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("render params: ") + e.what());
    }
    p.validate();
    return p;
}

std::string render_params_to_json(const RenderParams& p) {
    json passes = json::array();
    for (const auto& pp : p.passes) {
        passes.push_back({{"length_min", pp.length_min},
                          {"length_max", pp.length_max},
                          {"width_min", pp.width_min},
                          {"width_max", pp.width_max},
                          {"density", pp.density}});
    }
    json j{{"k", p.k},
           {"passes", passes},
           {"angle_noise", p.angle_noise},
           {"error_threshold", p.error_threshold},
           {"background", background_name(p.background)},
           {"seed", p.seed}};
    return j.dump();
}

RenderParams load_render_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open render params " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return render_params_from_json(ss.str());
}

namespace {

struct Extent {
    std::size_t h, w;
};

// Rasterizes one capsule, calling fn(index, alpha) for every touched pixel.
template <typename Fn>
void rasterize(const Stroke& s, Extent e, Fn&& fn) {
    const double r = 0.5 * s.width;
    const double half = std::max(0.0, 0.5 * (static_cast<double>(s.length) - s.width));
    const double ux = std::cos(static_cast<double>(s.angle)), uy = std::sin(static_cast<double>(s.angle));
    const double reach = half + r + 1.0;
    const long x0 = std::max(0L, static_cast<long>(std::floor(s.x - reach)));
    const long x1 = std::min(static_cast<long>(e.w) - 1, static_cast<long>(std::ceil(s.x + reach)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(s.y - reach)));
    const long y1 = std::min(static_cast<long>(e.h) - 1, static_cast<long>(std::ceil(s.y + reach)));
    for (long y = y0; y <= y1; ++y) {
        for (long x = x0; x <= x1; ++x) {
            const double dx = static_cast<double>(x) - s.x, dy = static_cast<double>(y) - s.y;
            const double along = std::clamp(dx * ux + dy * uy, -half, half);
            const double ex = dx - along * ux, ey = dy - along * uy;
            const double sd = std::sqrt(ex * ex + ey * ey) - r;
            const double alpha = std::clamp(0.5 - sd, 0.0, 1.0);
            if (alpha > 0.0) fn(static_cast<std::size_t>(y) * e.w + static_cast<std::size_t>(x), alpha);
        }
    }
}

void paint_stroke(const Stroke& s, const Color& color, Tensor& image, std::vector<std::uint8_t>& covered) {
    const Extent e{image.dim(1), image.dim(2)};
    auto data = image.data();
    const std::size_t plane = e.h * e.w;
    rasterize(s, e, [&](std::size_t i, double alpha) {
        if (alpha >= 1.0) {
            for (std::size_t c = 0; c < 3; ++c) data[c * plane + i] = color[c];
        } else {
            const auto a = static_cast<float>(alpha);
            for (std::size_t c = 0; c < 3; ++c) {
                data[c * plane + i] = std::clamp(a * color[c] + (1.0f - a) * data[c * plane + i], 0.0f, 1.0f);
            }
        }
        if (alpha >= 0.5) covered[i] = 1;
    });
}

double wrap_angle(double a) {
    a = std::fmod(a, kPi);
    if (a < 0.0) a += kPi;
    return a;
}

// 5x5 box mean of the per-pixel error, unpainted pixels counting as 1.
std::vector<double> local_error(const Rendering& canvas, const Tensor& source) {
    const std::size_t h = source.dim(1), w = source.dim(2), plane = h * w;
    const auto a = canvas.image.data();
    const auto b = source.data();
    std::vector<double> integral((h + 1) * (w + 1), 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t i = y * w + x;
            double err = 1.0;
            if (canvas.covered[i]) {
                err = 0.0;
                for (std::size_t c = 0; c < 3; ++c) err += std::abs(a[c * plane + i] - b[c * plane + i]);
                err /= 3.0;
            }
            integral[(y + 1) * (w + 1) + x + 1] =
                err + integral[y * (w + 1) + x + 1] + integral[(y + 1) * (w + 1) + x] - integral[y * (w + 1) + x];
        }
    }
    std::vector<double> out(plane);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t ya = y >= 2 ? y - 2 : 0, yb = std::min(h, y + 3);
            const std::size_t xa = x >= 2 ? x - 2 : 0, xb = std::min(w, x + 3);
            const double s = integral[yb * (w + 1) + xb] - integral[ya * (w + 1) + xb] - integral[yb * (w + 1) + xa] +
                             integral[ya * (w + 1) + xa];
            out[y * w + x] = s / static_cast<double>((yb - ya) * (xb - xa));
        }
    }
    return out;
}

}  // namespace

Tensor make_background(const Tensor& source, Background kind) {
    require_rgb(source, "background");
    switch (kind) {
        case Background::white: return Tensor(source.shape(), 1.0f);
        case Background::gray: return Tensor(source.shape(), 0.5f);
        default: return source;
    }
}

StrokeSet place_strokes(const Tensor& image, const Palette& palette, const OrientationField& field,
                        const RenderParams& params) {
    params.validate();
    require_rgb(image, "place_strokes");
    if (palette.colors.empty()) throw ValidationError("place_strokes: palette is empty");
    const std::size_t h = image.dim(1), w = image.dim(2);
    if (field.height != h || field.width != w) {
        throw ShapeError("place_strokes: orientation field is " + std::to_string(field.height) + "x" +
                         std::to_string(field.width) + " but the image is " + std::to_string(h) + "x" +
                         std::to_string(w));
    }
    std::mt19937_64 rng(params.seed ^ 0x5851f42d4c957f2dULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Tensor background = make_background(image, params.background);

    StrokeSet strokes;
    std::uint32_t order = 0;
    for (std::size_t pass = 0; pass < params.passes.size(); ++pass) {
        const auto& pp = params.passes[pass];
        const auto count = static_cast<std::size_t>(std::floor(pp.density * static_cast<double>(h * w) / 1000.0));
        std::vector<double> error;
        if (pass > 0 && count > 0) error = local_error(render_strokes(strokes, palette, background), image);
        for (std::size_t i = 0; i < count; ++i) {
            const double x = unit(rng) * static_cast<double>(w);
            const double y = unit(rng) * static_cast<double>(h);
            const double jitter = noise(rng) * params.angle_noise;
            const double length = pp.length_min + unit(rng) * (pp.length_max - pp.length_min);
            const double width = pp.width_min + unit(rng) * (pp.width_max - pp.width_min);
            const auto py = std::min(h - 1, static_cast<std::size_t>(y));
            const auto px = std::min(w - 1, static_cast<std::size_t>(x));
            if (!error.empty() && !(error[py * w + px] > params.error_threshold)) continue;
            Stroke s;
            s.pass = static_cast<std::uint32_t>(pass);
            s.order = order++;
            s.x = static_cast<float>(x);
            s.y = static_cast<float>(y);
            s.angle = static_cast<float>(wrap_angle(field.angle_at(py, px) + jitter));
            if (!(s.angle < static_cast<float>(kPi))) s.angle = 0.0f;
            s.length = static_cast<float>(length);
            s.width = static_cast<float>(std::min(width, length));
            s.palette_index = palette.nearest(pixel(image, py, px));
            strokes.push_back(s);
        }
    }
    return strokes;
}

double Rendering::coverage() const {
    if (covered.empty()) return 0.0;
    std::size_t n = 0;
    for (auto c : covered) n += c;
    return static_cast<double>(n) / static_cast<double>(covered.size());
}

Rendering render_strokes(const StrokeSet& strokes, const Palette& palette, const Tensor& background) {
    require_rgb(background, "composite background");
    Rendering out{background, std::vector<std::uint8_t>(background.dim(1) * background.dim(2), 0)};
    for (const auto& s : strokes) {
        if (s.palette_index >= palette.size()) {
            throw ValidationError("stroke " + std::to_string(s.order) + " uses palette index " +
                                  std::to_string(s.palette_index) + " of " + std::to_string(palette.size()));
        }
        paint_stroke(s, palette.colors[s.palette_index], out.image, out.covered);
    }
    return out;
}

Tensor composite(const StrokeSet& strokes, const Palette& palette, const Tensor& background) {
    return render_strokes(strokes, palette, background).image;
}

PainterlyResult paint(const Tensor& image, const RenderParams& params) {
    params.validate();
    require_rgb(image, "paint");
    PainterlyResult out;
    if (params.k == 1) {
        // single color: mean of the image
        Color mean{0, 0, 0};
        const std::size_t plane = image.dim(1) * image.dim(2);
        for (std::size_t c = 0; c < 3; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < plane; ++i) s += image.data()[c * plane + i];
            mean[c] = static_cast<float>(s / static_cast<double>(plane));
        }
        out.palette.colors = {mean};
        out.palette.seed = params.seed;
    } else {
        out.palette = extract_palette(image, params.k, params.seed);
    }
    const auto field = orientation_field(image);
    out.strokes = place_strokes(image, out.palette, field, params);
    out.rendering = render_strokes(out.strokes, out.palette, make_background(image, params.background));
    return out;
}

std::string strokes_to_csv(const StrokeSet& strokes) {
    std::ostringstream os;
    os.precision(9);
    os << "pass,order,x,y,angle,length,width,palette_index\n";
    for (const auto& s : strokes) {
        os << s.pass << ',' << s.order << ',' << s.x << ',' << s.y << ',' << s.angle << ',' << s.length << ','
           << s.width << ',' << s.palette_index << '\n';
    }
    return os.str();
}

void write_strokes_csv(const StrokeSet& strokes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << strokes_to_csv(strokes);
    if (!out) throw IoError("write failed for " + path.string());
}

StrokeSet read_strokes_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "pass,order,x,y,angle,length,width,palette_index") {
        throw FormatError(path.string() + ": unexpected stroke CSV header");
    }
    StrokeSet out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        Stroke s;
        char c1, c2, c3, c4, c5, c6, c7;
        if (!(is >> s.pass >> c1 >> s.order >> c2 >> s.x >> c3 >> s.y >> c4 >> s.angle >> c5 >> s.length >> c6 >>
              s.width >> c7 >> s.palette_index) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',' || c6 != ',' || c7 != ',') {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed stroke row");
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace artdream::epainterly
