#include "artdream/studio/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "artdream/artnet/dataset.hpp"
#include "artdream/artnet/train.hpp"
#include "artdream/artnet/weights_io.hpp"
#include "artdream/dream/dream.hpp"
#include "artdream/epainterly/painterly.hpp"
#include "artdream/error.hpp"
#include "artdream/motionlab/image_io.hpp"
#include "artdream/motionlab/sequence.hpp"
#include "artdream/psychstats/stats.hpp"
#include "artdream/studio/config.hpp"
#include "artdream/studio/plan.hpp"
#include "artdream/studio/service.hpp"

namespace artdream::studio {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_shutdown{false};

extern "C" void on_signal(int) { request_shutdown(); }

fs::path resolve_against(const fs::path& base_file, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_file.parent_path() / path;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write to " + path.string() + " failed");
}

std::string labels_path(const fs::path& weights) { return weights.string() + ".labels"; }

// Everything CLI11 collects, grouped per subcommand.
struct TileArgs {
    std::string input, output;
    std::uint64_t seed = 0;
    std::size_t tiles_per_image = 50, tile_side = 64;
    std::vector<double> scales{1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0};
};

struct TrainArgs {
    std::string manifest, output;
    std::uint64_t seed = 0;
    std::size_t epochs = 50, batch_size = 16;
    double lr = 0.05, momentum = 0.9;
    std::vector<std::size_t> widths{16, 32, 64, 128};
};

struct DreamArgs {
    std::string recipe, input, output, guide;
    std::optional<std::size_t> iterations;
    std::optional<std::uint64_t> seed;
};

struct RenderArgs {
    std::string input, output, params, strokes;
    std::uint64_t seed = 0;
    std::optional<std::size_t> k;
};

struct RetimeArgs {
    std::string input, output, factor, fps;
};

struct StylizeArgs {
    std::string recipe, params, input, output;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
};

struct StatsArgs {
    std::string ratings, format = "text", output;
};

struct PlanArgs {
    std::string config, participant;
    std::optional<std::uint64_t> seed;
};

struct ServeArgs {
    std::string config, bind, port_file;
};

artnet::Model<float> load_model(const fs::path& weights) {
    return artnet::Model<float>::from_weights(artnet::load_weights(weights));
}

struct LoadedRecipe {
    dream::DreamRecipe recipe;
    artnet::Model<float> model;
    std::optional<dream::GuideFeatures> guide;
};

LoadedRecipe load_recipe_bundle(const fs::path& recipe_path, const std::string& guide_override) {
    auto recipe = dream::load_recipe(recipe_path);
    if (!guide_override.empty()) recipe.guide = guide_override;
    recipe.validate();
    auto model = load_model(resolve_against(recipe_path, recipe.model));
    std::optional<dream::GuideFeatures> guide;
    if (recipe.mode == dream::Mode::guided) {
        const fs::path gp = guide_override.empty() ? resolve_against(recipe_path, *recipe.guide) : fs::path(*recipe.guide);
        guide = dream::extract_guide_features(model, motionlab::load_image(gp), recipe.layer, recipe.patch_size);
    }
    return {std::move(recipe), std::move(model), std::move(guide)};
}

int cmd_tile(const TileArgs& a, std::ostream& out) {
    const fs::path in(a.input), root(a.output);
    if (!fs::is_directory(in)) throw IoError("input directory " + in.string() + " does not exist");
    std::vector<fs::path> images;
    for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".png") images.push_back(e.path());
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) throw ValidationError("no .png images under " + in.string());

    artnet::TilingOptions opts;
    opts.tiles_per_image = a.tiles_per_image;
    opts.tile_side = a.tile_side;
    opts.scale_set = a.scales;

    std::vector<artnet::ManifestEntry> entries;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const fs::path rel = fs::relative(images[i], in);
        const std::string label = rel.parent_path().generic_string();
        if (label.empty()) {
            throw ValidationError("image " + rel.string() + " is not inside a label directory (style/sub/...)");
        }
        const std::string id = rel.generic_string();
        const auto tiles =
            artnet::tile_image(motionlab::load_image(images[i]), id, label, opts, motionlab::frame_seed(a.seed, i));
        const fs::path dir = root / "tiles" / rel.parent_path();
        fs::create_directories(dir);
        for (std::size_t t = 0; t < tiles.size(); ++t) {
            char suffix[16];
            std::snprintf(suffix, sizeof suffix, "_%03zu.png", t + 1);
            const fs::path file = dir / (images[i].stem().string() + suffix);
            motionlab::save_image(tiles[t].tile, file);
            entries.push_back({fs::relative(file, root), label});
        }
    }
    artnet::write_manifest(root / "manifest.csv", entries);
    out << images.size() << " images -> " << entries.size() << " tiles, manifest " << (root / "manifest.csv").string()
        << "\n";
    return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const fs::path manifest(a.manifest);
    const auto entries = artnet::read_manifest(manifest);
    if (entries.empty()) throw ValidationError("manifest " + manifest.string() + " has no entries");
    std::vector<artnet::LabeledImage> data;
    std::set<std::string> leaves;
    for (const auto& e : entries) {
        data.push_back({motionlab::load_image(manifest.parent_path() / e.tile_path), e.label});
        leaves.insert(e.label);
    }
    const auto labels = artnet::LabelTree::from_paths({leaves.begin(), leaves.end()});
    if (labels.leaf_count() < 2) throw ValidationError("training needs at least two style labels");
    const auto spec = artnet::ModelSpec::chain(3, a.widths, labels.leaf_count());

    artnet::TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch_size;
    cfg.learning_rate = a.lr;
    cfg.momentum = a.momentum;
    cfg.seed = a.seed;
    const auto result = artnet::train(spec, data, labels, cfg, [&](std::size_t epoch, double loss, double acc, const auto&) {
        out << "epoch " << epoch + 1 << " loss " << loss << " accuracy " << acc << "\n";
        return true;
    });
    artnet::save_weights(result.weights, a.output);
    std::string lines;
    for (const auto& l : labels.leaves()) lines += l + "\n";
    write_text(labels_path(a.output), lines);
    const double acc = artnet::evaluate_accuracy(artnet::Model<float>(spec, result.weights), data, labels);
    out << "train accuracy " << acc << ", weights " << a.output << "\n";
    return kExitOk;
}

int cmd_dream(const DreamArgs& a, std::ostream& out) {
    auto bundle = load_recipe_bundle(a.recipe, a.guide);
    if (a.iterations) bundle.recipe.iterations = *a.iterations;
    if (a.seed) bundle.recipe.seed = *a.seed;
    bundle.recipe.validate();
    const auto source = motionlab::load_image(a.input);
    const auto result =
        dream::run_dream(bundle.model, bundle.recipe, source, bundle.guide ? &*bundle.guide : nullptr);
    motionlab::save_image(result.image, a.output);
    out << "dream: " << result.steps << " steps (" << result.skipped << " skipped), wrote " << a.output << "\n";
    return kExitOk;
}

epainterly::RenderParams render_params(const std::string& file, std::uint64_t seed) {
    auto p = file.empty() ? epainterly::RenderParams{} : epainterly::load_render_params(file);
    p.seed = seed;
    return p;
}

int cmd_render(const RenderArgs& a, std::ostream& out) {
    auto params = render_params(a.params, a.seed);
    if (a.k) params.k = *a.k;
    params.validate();
    const auto image = motionlab::load_image(a.input);
    const auto result = epainterly::paint(image, params);
    motionlab::save_image(result.rendering.image, a.output);
    if (!a.strokes.empty()) epainterly::write_strokes_csv(result.strokes, a.strokes);
    out << result.strokes.size() << " strokes, coverage " << result.rendering.coverage() << ", wrote " << a.output
        << "\n";
    return kExitOk;
}

int cmd_retime(const RetimeArgs& a, std::ostream& out) {
    motionlab::RetimeSpec spec;
    spec.factor = motionlab::Rational::parse(a.factor);
    if (!a.fps.empty()) spec.output_fps = motionlab::Rational::parse(a.fps);
    spec.validate();
    const auto seq = motionlab::load_sequence(a.input);
    const auto res = motionlab::retime(seq, spec);
    motionlab::write_sequence(res, a.output);
    out << seq.count() << " frames -> " << res.count() << " frames, duration " << res.duration().to_double()
        << " s\n";
    return kExitOk;
}

int cmd_stylize(const StylizeArgs& a, std::ostream& out) {
    const auto bundle = load_recipe_bundle(a.recipe, "");
    const auto params = render_params(a.params, a.seed);
    params.validate();
    const auto seq = motionlab::load_sequence(a.input);
    motionlab::StylizeOptions opts;
    opts.workers = a.workers;
    const auto res = motionlab::stylize_sequence(seq, bundle.model, bundle.recipe,
                                                 bundle.guide ? &*bundle.guide : nullptr, params, opts);
    motionlab::write_sequence(res, a.output);
    out << "stylized " << res.count() << " frames into " << a.output << "\n";
    return kExitOk;
}

int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
    if (a.format != "text" && a.format != "csv") throw ValidationError("--format must be text or csv");
    const auto res = psychstats::ingest_ratings_file(a.ratings);
    for (const auto& r : res.rejected) err << a.ratings << ":" << r.line << ": " << r.reason << "\n";
    for (const auto& id : res.excluded) err << "excluded participant " << id << " (incomplete cells)\n";
    const std::string text = a.format == "csv" ? psychstats::format_summary_csv(psychstats::summarize(res.records))
                                               : psychstats::analysis_report(res.records);
    if (a.output.empty()) {
        out << text;
    } else {
        write_text(a.output, text);
    }
    return kExitOk;
}

int cmd_plan(const PlanArgs& a, std::ostream& out) {
    if (a.config.empty() == !a.seed) throw ValidationError("plan needs exactly one of --config or --seed");
    const std::uint64_t seed = a.seed ? *a.seed : load_study_config(a.config).seed;
    out << plan_to_json(make_plan(seed, a.participant)) << "\n";
    return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    auto config = load_study_config(a.config);
    if (!a.bind.empty()) std::tie(config.host, config.port) = parse_bind(a.bind);
    StudyService service(std::move(config));
    const int port = service.bind();
    g_shutdown = false;
    if (!a.port_file.empty()) write_text(a.port_file, std::to_string(port) + "\n");
    out << "listening on http://" << service.config().host << ":" << port << std::endl;

    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    std::jthread watcher([&](std::stop_token st) {
        while (!st.stop_requested() && !g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(20));
        service.stop();
    });
    service.run();
    watcher.request_stop();
    watcher.join();
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
    out << "stopped\n";
    return kExitOk;
}

}  // namespace

void request_shutdown() noexcept { g_shutdown = true; }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"studio: art-style dreaming, painterly rendering, retiming and rating analysis", "studio"};
    app.require_subcommand(1);

    TileArgs tile;
    auto* c_tile = app.add_subcommand("tile", "cut labelled source images into multi-scale training tiles");
    c_tile->add_option("--input", tile.input, "directory of <label path>/<image>.png")->required();
    c_tile->add_option("--output", tile.output, "output directory (tiles/ and manifest.csv)")->required();
    c_tile->add_option("--seed", tile.seed)->required();
    c_tile->add_option("--tiles-per-image", tile.tiles_per_image)->capture_default_str()->check(CLI::PositiveNumber);
    c_tile->add_option("--tile-side", tile.tile_side)->capture_default_str()->check(CLI::PositiveNumber);
    c_tile->add_option("--scales", tile.scales, "crop scales relative to the short side")->delimiter(',');

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "train the style classifier on a tile manifest");
    c_train->add_option("--manifest", train.manifest)->required();
    c_train->add_option("--output", train.output, "weights file")->required();
    c_train->add_option("--seed", train.seed)->required();
    c_train->add_option("--epochs", train.epochs)->capture_default_str();
    c_train->add_option("--batch-size", train.batch_size)->capture_default_str();
    c_train->add_option("--lr", train.lr)->capture_default_str();
    c_train->add_option("--momentum", train.momentum)->capture_default_str();
    c_train->add_option("--widths", train.widths, "conv block widths")->delimiter(',');

    DreamArgs dream_a;
    auto* c_dream = app.add_subcommand("dream", "run a dream recipe on one image");
    c_dream->add_option("--recipe", dream_a.recipe)->required();
    c_dream->add_option("--iterations", dream_a.iterations, "override the recipe's iterations");
    c_dream->add_option("--seed", dream_a.seed, "override the recipe's seed");
    c_dream->add_option("--guide", dream_a.guide, "override the recipe's guide image");
    c_dream->add_option("input", dream_a.input)->required();
    c_dream->add_option("output", dream_a.output)->required();

    RenderArgs render;
    auto* c_render = app.add_subcommand("render", "painterly stroke rendering of one image");
    c_render->add_option("--seed", render.seed)->required();
    c_render->add_option("--params", render.params, "render parameter JSON");
    c_render->add_option("--k", render.k, "palette size");
    c_render->add_option("--strokes", render.strokes, "write the stroke list as CSV");
    c_render->add_option("input", render.input)->required();
    c_render->add_option("output", render.output)->required();

    RetimeArgs retime_a;
    auto* c_retime = app.add_subcommand("retime", "stretch a frame sequence in time");
    c_retime->add_option("--factor", retime_a.factor, "duration multiplier, e.g. 3.5 or 7/2")->required();
    c_retime->add_option("--fps", retime_a.fps, "output frame rate (default: input)");
    c_retime->add_option("input", retime_a.input)->required();
    c_retime->add_option("output", retime_a.output)->required();

    StylizeArgs sty;
    auto* c_sty = app.add_subcommand("stylize-seq", "dream and paint every frame of a sequence");
    c_sty->add_option("--recipe", sty.recipe)->required();
    c_sty->add_option("--seed", sty.seed, "render seed")->required();
    c_sty->add_option("--params", sty.params, "render parameter JSON");
    c_sty->add_option("--workers", sty.workers, "0 = all cores")->capture_default_str();
    c_sty->add_option("input", sty.input)->required();
    c_sty->add_option("output", sty.output)->required();

    StatsArgs stats;
    auto* c_stats = app.add_subcommand("stats", "summaries, paired t-tests and preference partition");
    c_stats->add_option("ratings", stats.ratings)->required();
    c_stats->add_option("--format", stats.format, "text or csv")->capture_default_str();
    c_stats->add_option("--output", stats.output);

    PlanArgs plan;
    auto* c_plan = app.add_subcommand("plan", "print a participant's presentation plan");
    c_plan->add_option("--participant", plan.participant)->required();
    c_plan->add_option("--config", plan.config, "study config JSON");
    c_plan->add_option("--seed", plan.seed, "study seed (instead of --config)");

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "run the rating study HTTP service");
    c_serve->add_option("--config", serve.config)->required();
    c_serve->add_option("--bind", serve.bind, "host:port, overrides the config");
    c_serve->add_option("--port-file", serve.port_file, "write the bound port here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "studio: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (*c_tile) return cmd_tile(tile, out);
        if (*c_train) return cmd_train(train, out);
        if (*c_dream) return cmd_dream(dream_a, out);
        if (*c_render) return cmd_render(render, out);
        if (*c_retime) return cmd_retime(retime_a, out);
        if (*c_sty) return cmd_stylize(sty, out);
        if (*c_stats) return cmd_stats(stats, out, err);
        if (*c_plan) return cmd_plan(plan, out);
        if (*c_serve) return cmd_serve(serve, out);
    } catch (const IoError& e) {
        err << "studio: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "studio: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "studio: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace artdream::studio
