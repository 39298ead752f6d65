#include "artdream/studio/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "artdream/error.hpp"
#include "artdream/motionlab/sequence.hpp"
#include "json.hpp"

namespace artdream::studio {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

std::pair<std::string, int> parse_bind(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ValidationError("bind address must be host:port");
    int port = -1;
    const char* b = text.data() + colon + 1;
    const char* e = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(b, e, port);
    if (ec != std::errc() || ptr != e || b == e || port < 0 || port > 65535) {
        throw ValidationError("bad port in bind address '" + text + "'");
    }
    return {text.substr(0, colon), port};
}

void StudyConfig::validate() const {
    for (Pair p : psychstats::kPairs) {
        const auto it = stimuli.find(p);
        if (it == stimuli.end()) throw ValidationError(std::string("study: no stimuli for pair ") + to_string(p));
        for (Speed s : psychstats::kSpeeds) {
            const auto& dir = it->second.at(s);
            if (dir.empty()) {
                throw ValidationError(std::string("study: missing ") + to_string(s) + " stimulus for " + to_string(p));
            }
            motionlab::load_sequence(dir).validate();
        }
    }
    if (ratings.empty()) throw ValidationError("study: ratings path is empty");
    if (port < 0 || port > 65535) throw ValidationError("study: port out of range");
}

StudyConfig study_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("study config: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("study config must be a JSON object");
    reject_unknown(j, {"stimuli", "seed", "ratings", "bind"}, "study config");
    for (const char* key : {"stimuli", "seed", "ratings"}) {
        if (!j.contains(key)) throw ValidationError(std::string("study config: missing '") + key + "'");
    }
    StudyConfig c;
    try {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("study config: seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
        c.ratings = resolve(base_dir, j["ratings"].get<std::string>());
        if (j.contains("bind")) std::tie(c.host, c.port) = parse_bind(j["bind"].get<std::string>());
        const auto& st = j["stimuli"];
        if (!st.is_object()) throw ValidationError("study config: stimuli must be an object");
        for (const auto& [name, entry] : st.items()) {
            const auto pair = psychstats::parse_pair(name);
            if (!pair) throw ValidationError("study config: unknown pair '" + name + "'");
            if (!entry.is_object()) throw ValidationError("study config: stimuli." + name + " must be an object");
            reject_unknown(entry, {"slow", "fast"}, "study config: stimuli." + name);
            StimulusPair sp;
            if (entry.contains("slow")) sp.slow = resolve(base_dir, entry["slow"].get<std::string>());
            if (entry.contains("fast")) sp.fast = resolve(base_dir, entry["fast"].get<std::string>());
            c.stimuli[*pair] = sp;
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("study config: ") + e.what());
    }
    return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open study config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return study_config_from_json(ss.str(), path.parent_path());
}

}  // namespace artdream::studio
