#include "artdream/studio/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>

#include "artdream/error.hpp"
#include "artdream/motionlab/sequence.hpp"
#include "artdream/studio/store.hpp"
#include "httplib.h"
#include "json.hpp"

namespace artdream::studio {

using nlohmann::json;
using psychstats::RatingRecord;

namespace {

struct StimulusInfo {
    std::filesystem::path dir;
    std::size_t frame_count = 0;
    std::size_t width = 0, height = 0;
    motionlab::Rational fps;
    motionlab::Rational duration;
    motionlab::Rational retime_factor;
    std::optional<std::uint64_t> recipe_hash;
};

struct BadRequest {
    std::string code;
    std::string field;
    std::string reason;
};

std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const BadRequest& e) {
    json body{{"error", e.code}, {"reason", e.reason}};
    if (!e.field.empty()) body["field"] = e.field;
    send_json(res, status, body);
}

const char* const kRatingFields[] = {"participant_id", "pair_id",        "speed",
                                     "presentation_index", "likability", "aesthetic_pleasantness",
                                     "artistic_value",     "timestamp_iso8601", "display"};

int score_field(const json& j, const char* name) {
    if (!j.contains(name)) throw BadRequest{"missing_field", name, std::string("missing '") + name + "'"};
    const auto& v = j[name];
    if (!v.is_number_integer()) throw BadRequest{"wrong_type", name, std::string(name) + " must be an integer"};
    const auto x = v.get<long long>();
    if (x < 1 || x > 7) {
        throw BadRequest{"out_of_range", name, std::string(name) + " score " + std::to_string(x) + " outside 1..7"};
    }
    return static_cast<int>(x);
}

std::string string_field(const json& j, const char* name) {
    if (!j.contains(name)) throw BadRequest{"missing_field", name, std::string("missing '") + name + "'"};
    if (!j[name].is_string()) throw BadRequest{"wrong_type", name, std::string(name) + " must be a string"};
    return j[name].get<std::string>();
}

RatingRecord parse_rating(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        throw BadRequest{"malformed_json", "", "request body is not valid JSON"};
    }
    if (!j.is_object()) throw BadRequest{"malformed_json", "", "request body must be a JSON object"};
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* f : kRatingFields) known = known || key == f;
        if (!known) throw BadRequest{"unknown_field", key, "unknown field '" + key + "'"};
    }
    RatingRecord r;
    r.participant_id = string_field(j, "participant_id");
    if (!psychstats::valid_participant_id(r.participant_id)) {
        throw BadRequest{"invalid_value", "participant_id", "participant id must match [A-Za-z0-9_-]{1,64}"};
    }
    const auto pair = psychstats::parse_pair(string_field(j, "pair_id"));
    if (!pair) throw BadRequest{"invalid_value", "pair_id", "pair_id must be abstract or portrait"};
    const auto speed = psychstats::parse_speed(string_field(j, "speed"));
    if (!speed) throw BadRequest{"invalid_value", "speed", "speed must be slow or fast"};
    r.pair = *pair;
    r.speed = *speed;
    if (!j.contains("presentation_index")) {
        throw BadRequest{"missing_field", "presentation_index", "missing 'presentation_index'"};
    }
    if (!j["presentation_index"].is_number_integer()) {
        throw BadRequest{"wrong_type", "presentation_index", "presentation_index must be an integer"};
    }
    const auto idx = j["presentation_index"].get<long long>();
    if (idx < 1 || idx > 4) throw BadRequest{"out_of_range", "presentation_index", "presentation_index outside 1..4"};
    r.presentation_index = static_cast<int>(idx);
    r.scores = {score_field(j, "likability"), score_field(j, "aesthetic_pleasantness"),
                score_field(j, "artistic_value")};
    if (j.contains("timestamp_iso8601")) {
        r.timestamp = string_field(j, "timestamp_iso8601");
        if (!psychstats::valid_timestamp(r.timestamp)) {
            throw BadRequest{"invalid_value", "timestamp_iso8601", "timestamp is not ISO 8601"};
        }
    } else {
        r.timestamp = now_iso8601();
    }
    if (j.contains("display") && !j["display"].is_object()) {
        throw BadRequest{"wrong_type", "display", "display must be an object"};
    }
    return r;
}

}  // namespace

struct StudyService::Impl {
    StudyConfig config;
    RatingStore store;
    std::map<std::pair<Pair, Speed>, StimulusInfo> stimuli;
    httplib::Server server;

    explicit Impl(StudyConfig c) : config((c.validate(), std::move(c))), store(config.ratings) {
        for (const auto& [pair, sp] : config.stimuli) {
            for (Speed s : psychstats::kSpeeds) {
                const auto seq = motionlab::load_sequence(sp.at(s));
                stimuli[{pair, s}] = {sp.at(s),       seq.count(),    seq.frames[0].width, seq.frames[0].height,
                                      seq.fps,        seq.duration(), seq.retime_factor,   seq.recipe_hash};
            }
        }
        routes();
    }

    const StimulusInfo* find(const std::string& pair, const std::string& speed) const {
        const auto p = psychstats::parse_pair(pair);
        const auto s = psychstats::parse_speed(speed);
        if (!p || !s) return nullptr;
        return &stimuli.at({*p, *s});
    }

    void routes() {
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            send_json(res, 500, {{"error", "internal"}, {"reason", what}});
        });

        server.Get("/api/plan", [this](const httplib::Request& req, httplib::Response& res) {
            if (!req.has_param("participant")) {
                return send_error(res, 400, {"missing_field", "participant", "participant query parameter required"});
            }
            const auto id = req.get_param_value("participant");
            if (!psychstats::valid_participant_id(id)) {
                return send_error(res, 400,
                                  {"invalid_value", "participant", "participant id must match [A-Za-z0-9_-]{1,64}"});
            }
            res.set_content(plan_to_json(make_plan(config.seed, id)), "application/json");
        });

        server.Get(R"(/api/stimulus/([^/]+)/([^/]+)/manifest)",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       const auto* info = find(req.matches[1], req.matches[2]);
                       if (!info) return send_error(res, 404, {"not_found", "", "unknown stimulus"});
                       const std::string base = "/api/stimulus/" + std::string(req.matches[1]) + "/" +
                                                std::string(req.matches[2]) + "/frames/";
                       json frames = json::array();
                       for (std::size_t i = 0; i < info->frame_count; ++i) frames.push_back(base + std::to_string(i));
                       send_json(res, 200,
                                 {{"pair_id", std::string(req.matches[1])},
                                  {"speed", std::string(req.matches[2])},
                                  {"fps", info->fps.to_double()},
                                  {"fps_exact", info->fps.str()},
                                  {"frame_count", info->frame_count},
                                  {"duration", info->duration.to_double()},
                                  {"duration_exact", info->duration.str()},
                                  {"retime_factor", info->retime_factor.str()},
                                  {"width", info->width},
                                  {"height", info->height},
                                  {"frames", frames}});
                   });

        server.Get(R"(/api/stimulus/([^/]+)/([^/]+)/frames/(\d+))",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       const auto* info = find(req.matches[1], req.matches[2]);
                       if (!info) return send_error(res, 404, {"not_found", "", "unknown stimulus"});
                       const std::string digits = req.matches[3];
                       std::size_t n = 0;
                       try {
                           n = std::stoull(digits);
                       } catch (const std::exception&) {
                           n = info->frame_count;
                       }
                       if (n >= info->frame_count) return send_error(res, 404, {"not_found", "", "frame out of range"});
                       std::ifstream in(info->dir / motionlab::frame_name(n + 1), std::ios::binary);
                       if (!in) return send_error(res, 500, {"io", "", "frame file unreadable"});
                       std::stringstream ss;
                       ss << in.rdbuf();
                       res.set_content(ss.str(), "image/png");
                   });

        server.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
            RatingRecord r;
            try {
                r = parse_rating(req.body);
            } catch (const BadRequest& e) {
                return send_error(res, 400, e);
            }
            const auto plan = make_plan(config.seed, r.participant_id);
            for (const auto& t : plan.trials) {
                if (t.pair == r.pair && t.speed == r.speed && t.presentation_index != r.presentation_index) {
                    return send_error(res, 400,
                                      {"plan_mismatch", "presentation_index",
                                       "this participant's plan shows the cell at position " +
                                           std::to_string(t.presentation_index)});
                }
            }
            if (store.append(r) == RatingStore::Outcome::duplicate) {
                return send_error(res, 409, {"duplicate", "", "rating for this participant, pair and speed exists"});
            }
            const auto j = json::parse(req.body);
            if (j.contains("display")) {
                store.append_display(json{{"participant_id", r.participant_id},
                                          {"pair_id", psychstats::to_string(r.pair)},
                                          {"speed", psychstats::to_string(r.speed)},
                                          {"display", j["display"]}}
                                         .dump());
            }
            send_json(res, 201, {{"status", "recorded"}, {"row", psychstats::to_csv_row(r)}});
        });

        server.Get("/api/export.csv", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(store.snapshot(), "text/csv");
        });
    }
};

StudyService::StudyService(StudyConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
StudyService::~StudyService() = default;

int StudyService::bind() {
    int port = impl_->config.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->config.host);
        if (port < 0) throw IoError("cannot bind " + impl_->config.host);
    } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
        throw IoError("cannot bind " + impl_->config.host + ":" + std::to_string(port));
    }
    return port;
}

void StudyService::run() { impl_->server.listen_after_bind(); }
void StudyService::stop() { impl_->server.stop(); }
const StudyConfig& StudyService::config() const { return impl_->config; }

}  // namespace artdream::studio
