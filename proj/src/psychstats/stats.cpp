#include "artdream/psychstats/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <sstream>
#include <tuple>

namespace artdream::psychstats {

const char* to_string(Pair p) { return p == Pair::abstract ? "abstract" : "portrait"; }
const char* to_string(Speed s) { return s == Speed::slow ? "slow" : "fast"; }
const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::likability: return "likability";
        case Dimension::aesthetic_pleasantness: return "aesthetic_pleasantness";
        default: return "artistic_value";
    }
}

std::optional<Pair> parse_pair(std::string_view s) {
    if (s == "abstract") return Pair::abstract;
    if (s == "portrait") return Pair::portrait;
    return std::nullopt;
}

std::optional<Speed> parse_speed(std::string_view s) {
    if (s == "slow") return Speed::slow;
    if (s == "fast") return Speed::fast;
    return std::nullopt;
}

bool valid_participant_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

bool valid_timestamp(std::string_view ts) {
    static const std::regex iso(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d{1,9})?(Z|[+-]\d{2}:\d{2}))");
    return std::regex_match(ts.begin(), ts.end(), iso);
}

void RatingRecord::validate() const {
    if (!valid_participant_id(participant_id)) {
        throw ValidationError("participant_id '" + participant_id + "' must match [A-Za-z0-9_-]{1,64}");
    }
    if (presentation_index < 1 || presentation_index > 4) {
        throw ValidationError("presentation_index " + std::to_string(presentation_index) + " outside 1..4");
    }
    for (auto d : kDimensions) {
        const int v = score(d);
        if (v < 1 || v > 7) {
            throw ValidationError(std::string(to_string(d)) + " score " + std::to_string(v) + " outside 1..7");
        }
    }
    if (!valid_timestamp(timestamp)) throw ValidationError("timestamp '" + timestamp + "' is not ISO 8601");
}

std::string to_csv_row(const RatingRecord& r) {
    std::ostringstream os;
    os << r.participant_id << ',' << to_string(r.pair) << ',' << to_string(r.speed) << ',' << r.presentation_index
       << ',' << r.scores[0] << ',' << r.scores[1] << ',' << r.scores[2] << ',' << r.timestamp;
    return os.str();
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

RatingRecord parse_row(std::string_view line) {
    const auto f = split(line, ',');
    if (f.size() != 8) throw ValidationError("expected 8 fields, found " + std::to_string(f.size()));
    RatingRecord r;
    r.participant_id = std::string(f[0]);
    const auto pair = parse_pair(f[1]);
    if (!pair) throw ValidationError("unknown pair_id '" + std::string(f[1]) + "'");
    r.pair = *pair;
    const auto speed = parse_speed(f[2]);
    if (!speed) throw ValidationError("unknown speed '" + std::string(f[2]) + "'");
    r.speed = *speed;
    const auto idx = parse_int(f[3]);
    if (!idx) throw ValidationError("presentation_index '" + std::string(f[3]) + "' is not an integer");
    r.presentation_index = *idx;
    for (std::size_t d = 0; d < 3; ++d) {
        const auto v = parse_int(f[4 + d]);
        if (!v) {
            throw ValidationError(std::string(to_string(kDimensions[d])) + " score '" + std::string(f[4 + d]) +
                                  "' is not an integer");
        }
        r.scores[d] = *v;
    }
    r.timestamp = std::string(f[7]);
    r.validate();
    return r;
}

using CellKey = std::tuple<std::string, Pair, Speed>;

}  // namespace

IngestResult ingest_ratings(std::string_view text) {
    IngestResult out;
    std::vector<std::string_view> lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    }
    if (lines.empty() || lines.front() != kRatingsHeader) {
        throw FormatError("ratings CSV header must be exactly: " + std::string(kRatingsHeader));
    }
    std::map<CellKey, std::size_t> first_seen;
    std::vector<RatingRecord> valid;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (lines[i].empty()) {
            out.rejected.push_back({lineno, "empty line"});
            continue;
        }
        try {
            auto r = parse_row(lines[i]);
            CellKey key{r.participant_id, r.pair, r.speed};
            if (auto it = first_seen.find(key); it != first_seen.end()) {
                out.rejected.push_back({lineno, "duplicate cell (" + r.participant_id + ", " + to_string(r.pair) +
                                                    ", " + to_string(r.speed) + "), first at line " +
                                                    std::to_string(it->second)});
                continue;
            }
            first_seen.emplace(std::move(key), lineno);
            valid.push_back(std::move(r));
        } catch (const ValidationError& e) {
            out.rejected.push_back({lineno, e.what()});
        }
    }
    std::map<std::string, std::size_t> cells;
    for (const auto& r : valid) ++cells[r.participant_id];
    for (auto& r : valid) {
        if (cells[r.participant_id] == 4) {
            out.records.push_back(std::move(r));
        } else {
            out.excluded.insert(r.participant_id);
            out.excluded_records.push_back(std::move(r));
        }
    }
    return out;
}

IngestResult ingest_ratings_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open ratings file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ingest_ratings(ss.str());
}

TTestResult paired_t(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError("paired_t: length mismatch " + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()));
    }
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("paired_t: need at least 2 pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = x[i] - y[i];
        if (!std::isfinite(d[i])) throw NonFiniteError("paired_t: non-finite difference");
    }
    double sum = 0.0;
    for (double v : d) sum += v;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw ValidationError("paired_t: differences have zero variance (degenerate)");
    TTestResult r;
    r.n = n;
    r.df = n - 1;
    r.mean_diff = mean;
    r.sd_diff = sd;
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = t_two_sided_p(r.t, static_cast<double>(r.df));
    return r;
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300, eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
    return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double t_two_sided_p(double t, double df) {
    if (!(df >= 1.0) || !std::isfinite(df)) throw ValidationError("t_two_sided_p: df must be >= 1");
    if (!std::isfinite(t)) throw ValidationError("t_two_sided_p: t must be finite");
    if (t == 0.0) return 1.0;
    const double x = df / (df + t * t);
    return std::clamp(incomplete_beta(x, 0.5 * df, 0.5), 0.0, 1.0);
}

namespace {

// participant -> value, keyed and therefore ordered by id
using PerParticipant = std::map<std::string, double>;

PerParticipant cell_values(std::span<const RatingRecord> records, Dimension d, Speed s, std::optional<Pair> pair) {
    PerParticipant out;
    if (pair) {
        for (const auto& r : records) {
            if (r.pair == *pair && r.speed == s) out[r.participant_id] = r.score(d);
        }
        return out;
    }
    std::map<std::string, std::pair<int, int>> acc;  // sum, count
    for (const auto& r : records) {
        if (r.speed != s) continue;
        auto& a = acc[r.participant_id];
        a.first += r.score(d);
        ++a.second;
    }
    for (const auto& [id, a] : acc) {
        if (a.second == 2) out[id] = a.first / 2.0;
    }
    return out;
}

SummaryCell make_cell(std::span<const RatingRecord> records, Dimension d, Speed s, std::optional<Pair> pair) {
    const auto values = cell_values(records, d, s, pair);
    SummaryCell c{d, s, pair, values.size(), 0.0, std::nullopt};
    if (values.empty()) {
        throw ValidationError(std::string("summarize: empty cell ") + to_string(d) + "/" + to_string(s) + "/" +
                              (pair ? to_string(*pair) : "both"));
    }
    double sum = 0.0;
    for (const auto& [id, v] : values) sum += v;
    c.mean = sum / static_cast<double>(c.n);
    if (c.n >= 2) {
        double ss = 0.0;
        for (const auto& [id, v] : values) ss += (v - c.mean) * (v - c.mean);
        c.sd = std::sqrt(ss / static_cast<double>(c.n - 1));
    }
    return c;
}

}  // namespace

std::vector<SummaryCell> summarize(std::span<const RatingRecord> records) {
    if (records.empty()) throw ValidationError("summarize: no records");
    std::vector<SummaryCell> out;
    for (auto d : kDimensions)
        for (auto s : kSpeeds) out.push_back(make_cell(records, d, s, std::nullopt));
    for (auto d : kDimensions)
        for (auto p : kPairs)
            for (auto s : kSpeeds) out.push_back(make_cell(records, d, s, p));
    return out;
}

TTestResult compare_speeds(std::span<const RatingRecord> records, Dimension d, std::optional<Pair> pair) {
    const auto slow = cell_values(records, d, Speed::slow, pair);
    const auto fast = cell_values(records, d, Speed::fast, pair);
    std::vector<double> x, y;
    for (const auto& [id, v] : slow) {
        if (auto it = fast.find(id); it != fast.end()) {
            x.push_back(v);
            y.push_back(it->second);
        }
    }
    return paired_t(x, y);
}

PartitionCounts preference_partition(std::span<const RatingRecord> records) {
    // id -> [pair][speed] -> sum of the three scores, plus presence mask
    std::map<std::string, std::array<std::array<int, 2>, 2>> sums;
    std::map<std::string, int> seen;
    for (const auto& r : records) {
        auto& s = sums[r.participant_id];
        const auto p = static_cast<std::size_t>(r.pair), v = static_cast<std::size_t>(r.speed);
        s[p][v] = r.scores[0] + r.scores[1] + r.scores[2];
        seen[r.participant_id] |= 1 << (p * 2 + v);
    }
    PartitionCounts out;
    for (const auto& [id, s] : sums) {
        if (seen[id] != 0b1111) throw ValidationError("preference_partition: participant " + id + " is incomplete");
        const int abstract = s[0][0] - s[0][1];  // slow minus fast
        const int portrait = s[1][0] - s[1][1];
        if (abstract == 0 || portrait == 0) {
            ++out.tied;
        } else if (abstract > 0 && portrait > 0) {
            ++out.always_slow;
        } else if (abstract < 0 && portrait < 0) {
            ++out.always_fast;
        } else if (abstract > 0) {
            ++out.slow_abstract_fast_portrait;
        } else {
            ++out.slow_portrait_fast_abstract;
        }
    }
    return out;
}

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

}  // namespace

std::string format_summary_text(const std::vector<SummaryCell>& cells) {
    std::string out = fmt("%-24s %-5s %-9s %4s %7s %7s\n", "dimension", "speed", "pair", "n", "mean", "sd");
    for (const auto& c : cells) {
        const std::string sd = c.sd ? fmt("%7.2f", *c.sd) : std::string("    n/a  flagged: n < 2");
        out += fmt("%-24s %-5s %-9s %4zu %7.2f ", to_string(c.dimension), to_string(c.speed),
                   c.pair ? to_string(*c.pair) : "both", c.n, c.mean) +
               sd + "\n";
    }
    return out;
}

std::string format_summary_csv(const std::vector<SummaryCell>& cells) {
    std::string out = "dimension,speed,pair,n,mean,sd,flag\n";
    for (const auto& c : cells) {
        out += fmt("%s,%s,%s,%zu,%.6f,", to_string(c.dimension), to_string(c.speed),
                   c.pair ? to_string(*c.pair) : "both", c.n, c.mean);
        out += c.sd ? fmt("%.6f,", *c.sd) : std::string(",n<2");
        out += "\n";
    }
    return out;
}

std::string analysis_report(std::span<const RatingRecord> records) {
    std::string out = "Condition summary\n" + format_summary_text(summarize(records));
    out += "\nPaired t-tests (slow vs fast)\n";
    out += fmt("%-24s %-9s %4s %8s %8s %8s %10s\n", "dimension", "pair", "df", "diff", "sd_diff", "t", "p");
    for (auto d : kDimensions) {
        for (std::optional<Pair> p : {std::optional<Pair>{}, std::optional{Pair::abstract}, std::optional{Pair::portrait}}) {
            const char* pname = p ? to_string(*p) : "both";
            try {
                const auto r = compare_speeds(records, d, p);
                out += fmt("%-24s %-9s %4zu %8.3f %8.3f %8.3f %10.3g\n", to_string(d), pname, r.df, r.mean_diff,
                           r.sd_diff, r.t, r.p);
            } catch (const ValidationError& e) {
                out += fmt("%-24s %-9s   not computable: %s\n", to_string(d), pname, e.what());
            }
        }
    }
    out += "\nPreference partition\n";
    try {
        const auto c = preference_partition(records);
        out += fmt("always_slow %zu\nalways_fast %zu\nslow_abstract_fast_portrait %zu\n"
                   "slow_portrait_fast_abstract %zu\ntied %zu\n",
                   c.always_slow, c.always_fast, c.slow_abstract_fast_portrait, c.slow_portrait_fast_abstract, c.tied);
    } catch (const ValidationError& e) {
        out += std::string("not computable: ") + e.what() + "\n";
    }
    return out;
}

}  // namespace artdream::psychstats
