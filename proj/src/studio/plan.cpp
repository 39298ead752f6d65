#include "artdream/studio/plan.hpp"

#include "artdream/error.hpp"
#include "json.hpp"

namespace artdream::studio {

namespace {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Speed other(Speed s) { return s == Speed::slow ? Speed::fast : Speed::slow; }

}  // namespace

int SessionPlan::ordering() const {
    const int portrait_first = trials[0].pair == Pair::portrait;
    const int fast_a = trials[0].speed == Speed::fast;
    const int fast_b = trials[2].speed == Speed::fast;
    return portrait_first << 2 | fast_a << 1 | fast_b;
}

std::string stimulus_ref(Pair pair, Speed speed) {
    return std::string("/api/stimulus/") + psychstats::to_string(pair) + "/" + psychstats::to_string(speed) +
           "/manifest";
}

SessionPlan make_plan(std::uint64_t study_seed, std::string_view participant_id) {
    if (!psychstats::valid_participant_id(participant_id)) {
        throw ValidationError("participant id must match [A-Za-z0-9_-]{1,64}");
    }
    const std::uint64_t h = mix(mix(study_seed) ^ fnv1a(participant_id));
    const int ordering = static_cast<int>(h >> 61);  // top three bits

    const Pair first = ordering & 4 ? Pair::portrait : Pair::abstract;
    const Pair second = first == Pair::abstract ? Pair::portrait : Pair::abstract;
    const Speed sa = ordering & 2 ? Speed::fast : Speed::slow;
    const Speed sb = ordering & 1 ? Speed::fast : Speed::slow;

    SessionPlan plan;
    plan.participant_id = std::string(participant_id);
    const std::pair<Pair, Speed> cells[4] = {{first, sa}, {first, other(sa)}, {second, sb}, {second, other(sb)}};
    for (int i = 0; i < 4; ++i) {
        plan.trials[i] = {i + 1, cells[i].first, cells[i].second, stimulus_ref(cells[i].first, cells[i].second)};
    }
    return plan;
}

std::string plan_to_json(const SessionPlan& plan) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : plan.trials) {
        trials.push_back({{"presentation_index", t.presentation_index},
                          {"pair_id", psychstats::to_string(t.pair)},
                          {"speed", psychstats::to_string(t.speed)},
                          {"stimulus_ref", t.stimulus_ref}});
    }
    return nlohmann::json{{"participant_id", plan.participant_id}, {"trials", trials}}.dump();
}

}  // namespace artdream::studio
