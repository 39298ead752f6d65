#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "artdream/artnet/weights_io.hpp"
#include "artdream/dream/dream.hpp"
#include "artdream/epainterly/painterly.hpp"
#include "artdream/error.hpp"
#include "artdream/motionlab/image_io.hpp"
#include "artdream/motionlab/sequence.hpp"
#include "artdream/psychstats/stats.hpp"
#include "artdream/studio/plan.hpp"

namespace py = pybind11;
using namespace artdream;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

// (h, w, 3) array -> (3, h, w) tensor
ndgrid::Tensor to_tensor(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ValidationError("expected an (height, width, 3) array");
    const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
    ndgrid::Tensor t({3, h, w});
    auto r = a.unchecked<3>();
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = r(y, x, c);
    return t;
}

Array to_array(const ndgrid::Tensor& t) {
    const auto h = t.shape()[1], w = t.shape()[2];
    Array a({h, w, std::size_t{3}});
    auto m = a.mutable_unchecked<3>();
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) m(y, x, c) = t.at(c, y, x);
    return a;
}

py::dict record_dict(const psychstats::RatingRecord& r) {
    py::dict d;
    d["participant_id"] = r.participant_id;
    d["pair_id"] = psychstats::to_string(r.pair);
    d["speed"] = psychstats::to_string(r.speed);
    d["presentation_index"] = r.presentation_index;
    for (auto dim : psychstats::kDimensions) d[psychstats::to_string(dim)] = r.score(dim);
    d["timestamp_iso8601"] = r.timestamp;
    return d;
}

py::dict ttest_dict(const psychstats::TTestResult& r) {
    py::dict d;
    d["n"] = r.n;
    d["df"] = r.df;
    d["mean_diff"] = r.mean_diff;
    d["sd_diff"] = r.sd_diff;
    d["t"] = r.t;
    d["p"] = r.p;
    return d;
}

std::optional<psychstats::Pair> pair_arg(const std::optional<std::string>& s) {
    if (!s) return std::nullopt;
    auto p = psychstats::parse_pair(*s);
    if (!p) throw ValidationError("unknown pair '" + *s + "'");
    return p;
}

psychstats::Dimension dimension_arg(const std::string& s) {
    for (auto d : psychstats::kDimensions)
        if (s == psychstats::to_string(d)) return d;
    throw ValidationError("unknown dimension '" + s + "'");
}

std::vector<psychstats::RatingRecord> records_from_text(const std::string& csv) {
    return psychstats::ingest_ratings(csv).records;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "artdream native core";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    auto io = py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", io.ptr());

    // psychstats
    m.def("t_two_sided_p", &psychstats::t_two_sided_p, py::arg("t"), py::arg("df"));
    m.def("incomplete_beta", &psychstats::incomplete_beta, py::arg("x"), py::arg("a"), py::arg("b"));
    m.def(
        "paired_t",
        [](const std::vector<double>& x, const std::vector<double>& y) { return ttest_dict(psychstats::paired_t(x, y)); },
        py::arg("x"), py::arg("y"));
    m.def(
        "ingest_ratings",
        [](const std::string& csv) {
            const auto res = psychstats::ingest_ratings(csv);
            py::dict d;
            py::list records, rejected, excluded_records;
            for (const auto& r : res.records) records.append(record_dict(r));
            for (const auto& r : res.excluded_records) excluded_records.append(record_dict(r));
            for (const auto& r : res.rejected) rejected.append(py::make_tuple(r.line, r.reason));
            d["records"] = records;
            d["rejected"] = rejected;
            d["excluded"] = std::vector<std::string>(res.excluded.begin(), res.excluded.end());
            d["excluded_records"] = excluded_records;
            return d;
        },
        py::arg("csv_text"));
    m.def(
        "summarize",
        [](const std::string& csv) {
            py::list out;
            for (const auto& c : psychstats::summarize(records_from_text(csv))) {
                py::dict d;
                d["dimension"] = psychstats::to_string(c.dimension);
                d["speed"] = psychstats::to_string(c.speed);
                d["pair"] = c.pair ? py::cast(psychstats::to_string(*c.pair)) : py::none();
                d["n"] = c.n;
                d["mean"] = c.mean;
                d["sd"] = c.sd ? py::cast(*c.sd) : py::none();
                out.append(d);
            }
            return out;
        },
        py::arg("csv_text"));
    m.def(
        "compare_speeds",
        [](const std::string& csv, const std::string& dimension, const std::optional<std::string>& pair) {
            return ttest_dict(psychstats::compare_speeds(records_from_text(csv), dimension_arg(dimension), pair_arg(pair)));
        },
        py::arg("csv_text"), py::arg("dimension"), py::arg("pair") = py::none());
    m.def(
        "preference_partition",
        [](const std::string& csv) {
            const auto p = psychstats::preference_partition(records_from_text(csv));
            py::dict d;
            d["always_slow"] = p.always_slow;
            d["always_fast"] = p.always_fast;
            d["slow_abstract_fast_portrait"] = p.slow_abstract_fast_portrait;
            d["slow_portrait_fast_abstract"] = p.slow_portrait_fast_abstract;
            d["tied"] = p.tied;
            return d;
        },
        py::arg("csv_text"));
    m.def(
        "analysis_report", [](const std::string& csv) { return psychstats::analysis_report(records_from_text(csv)); },
        py::arg("csv_text"));

    // motionlab
    m.def(
        "retimed_count",
        [](std::size_t n, const std::string& factor, const std::string& in_fps, const std::optional<std::string>& out_fps) {
            const auto in = motionlab::Rational::parse(in_fps);
            return motionlab::retimed_count(n, motionlab::Rational::parse(factor), in,
                                            out_fps ? motionlab::Rational::parse(*out_fps) : in);
        },
        py::arg("count"), py::arg("factor"), py::arg("fps"), py::arg("output_fps") = py::none());
    m.def(
        "source_index",
        [](std::size_t j, const std::string& factor, const std::string& in_fps, const std::optional<std::string>& out_fps) {
            const auto in = motionlab::Rational::parse(in_fps);
            return motionlab::source_index(j, motionlab::Rational::parse(factor), in,
                                           out_fps ? motionlab::Rational::parse(*out_fps) : in);
        },
        py::arg("j"), py::arg("factor"), py::arg("fps"), py::arg("output_fps") = py::none());
    m.def(
        "retime_sequence",
        [](const std::filesystem::path& in, const std::filesystem::path& out, const std::string& factor,
           const std::optional<std::string>& out_fps) {
            motionlab::RetimeSpec spec;
            spec.factor = motionlab::Rational::parse(factor);
            if (out_fps) spec.output_fps = motionlab::Rational::parse(*out_fps);
            const auto res = motionlab::retime(motionlab::load_sequence(in), spec);
            motionlab::write_sequence(res, out);
            return res.count();
        },
        py::arg("input_dir"), py::arg("output_dir"), py::arg("factor"), py::arg("output_fps") = py::none());
    m.def("frame_seed", &motionlab::frame_seed, py::arg("base_seed"), py::arg("frame_index"));
    m.def(
        "load_image", [](const std::filesystem::path& p) { return to_array(motionlab::load_image(p)); }, py::arg("path"));
    m.def(
        "save_image", [](const Array& a, const std::filesystem::path& p) { motionlab::save_image(to_tensor(a), p); },
        py::arg("image"), py::arg("path"));

    // epainterly
    m.def(
        "paint",
        [](const Array& image, std::uint64_t seed, const std::optional<std::string>& params_json) {
            auto params = params_json ? epainterly::render_params_from_json(*params_json) : epainterly::RenderParams{};
            params.seed = seed;
            params.validate();
            const auto res = epainterly::paint(to_tensor(image), params);
            return py::make_tuple(to_array(res.rendering.image), res.rendering.coverage(), res.strokes.size());
        },
        py::arg("image"), py::kw_only(), py::arg("seed"), py::arg("params_json") = py::none(),
        "Returns (rendering, coverage, stroke_count).");

    // dream
    m.def(
        "dream",
        [](const Array& image, const std::string& recipe_json, const std::filesystem::path& weights,
           const std::optional<Array>& guide) {
            auto recipe = dream::recipe_from_json(recipe_json);
            recipe.validate();
            const auto model = artnet::Model<float>::from_weights(artnet::load_weights(weights));
            std::optional<dream::GuideFeatures> g;
            if (recipe.mode == dream::Mode::guided) {
                if (!guide) throw ValidationError("guided recipe needs a guide image");
                g = dream::extract_guide_features(model, to_tensor(*guide), recipe.layer, recipe.patch_size);
            }
            return to_array(dream::run_dream(model, recipe, to_tensor(image), g ? &*g : nullptr).image);
        },
        py::arg("image"), py::arg("recipe_json"), py::arg("weights"), py::arg("guide") = py::none());
    m.def(
        "recipe_hash", [](const std::string& json) { return dream::recipe_hash(dream::recipe_from_json(json)); },
        py::arg("recipe_json"));

    // studio
    m.def(
        "make_plan",
        [](std::uint64_t seed, const std::string& id) {
            py::list trials;
            for (const auto& t : studio::make_plan(seed, id).trials) {
                py::dict d;
                d["presentation_index"] = t.presentation_index;
                d["pair_id"] = psychstats::to_string(t.pair);
                d["speed"] = psychstats::to_string(t.speed);
                d["stimulus_ref"] = t.stimulus_ref;
                trials.append(d);
            }
            return trials;
        },
        py::arg("study_seed"), py::arg("participant_id"));
}
