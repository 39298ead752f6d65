#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "artdream/studio/plan.hpp"

namespace artdream::studio {

struct StimulusPair {
    std::filesystem::path slow;
    std::filesystem::path fast;

    [[nodiscard]] const std::filesystem::path& at(Speed s) const { return s == Speed::slow ? slow : fast; }
};

struct StudyConfig {
    std::map<Pair, StimulusPair> stimuli;
    std::uint64_t seed = 0;
    std::filesystem::path ratings;
    std::string host = "127.0.0.1";
    int port = 8080;

    // Both pairs with both speeds, every directory a loadable sequence.
    void validate() const;
};

// {"stimuli": {"abstract": {"slow": dir, "fast": dir}, "portrait": {...}},
//  "seed": n, "ratings": path, "bind": "host:port"}
// Relative paths resolve against the config file's directory.
StudyConfig load_study_config(const std::filesystem::path& path);
StudyConfig study_config_from_json(const std::string& text, const std::filesystem::path& base_dir);

// "host:port"; port 0 asks the OS for a free one.
std::pair<std::string, int> parse_bind(const std::string& text);

}  // namespace artdream::studio
