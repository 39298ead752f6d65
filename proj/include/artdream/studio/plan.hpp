#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "artdream/psychstats/stats.hpp"

namespace artdream::studio {

using psychstats::Pair;
using psychstats::Speed;

struct Trial {
    int presentation_index = 1;  // 1..4
    Pair pair = Pair::abstract;
    Speed speed = Speed::slow;
    std::string stimulus_ref;  // manifest URL path

    friend bool operator==(const Trial&, const Trial&) = default;
};

struct SessionPlan {
    std::string participant_id;
    std::array<Trial, 4> trials;

    // 0..7: bit 2 = portrait first, bit 1 / bit 0 = fast first within the
    // first / second pair shown.
    [[nodiscard]] int ordering() const;
    friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

std::string stimulus_ref(Pair pair, Speed speed);

// Deterministic in (seed, participant_id), uniform over the 8 orderings.
// Throws ValidationError for ids outside [A-Za-z0-9_-]{1,64}.
SessionPlan make_plan(std::uint64_t study_seed, std::string_view participant_id);

std::string plan_to_json(const SessionPlan& plan);

}  // namespace artdream::studio
