#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artdream/error.hpp"

namespace artdream::psychstats {

enum class Pair { abstract, portrait };
enum class Speed { slow, fast };
enum class Dimension { likability, aesthetic_pleasantness, artistic_value };

inline constexpr std::array kPairs{Pair::abstract, Pair::portrait};
inline constexpr std::array kSpeeds{Speed::slow, Speed::fast};
inline constexpr std::array kDimensions{Dimension::likability, Dimension::aesthetic_pleasantness,
                                        Dimension::artistic_value};

const char* to_string(Pair p);
const char* to_string(Speed s);
const char* to_string(Dimension d);
std::optional<Pair> parse_pair(std::string_view s);
std::optional<Speed> parse_speed(std::string_view s);

inline constexpr std::string_view kRatingsHeader =
    "participant_id,pair_id,speed,presentation_index,likability,aesthetic_pleasantness,artistic_value,"
    "timestamp_iso8601";

bool valid_participant_id(std::string_view id);
bool valid_timestamp(std::string_view ts);

struct RatingRecord {
    std::string participant_id;
    Pair pair = Pair::abstract;
    Speed speed = Speed::slow;
    int presentation_index = 1;   // 1..4 within the session
    std::array<int, 3> scores{};  // indexed by Dimension, each 1..7
    std::string timestamp;

    [[nodiscard]] int score(Dimension d) const { return scores[static_cast<std::size_t>(d)]; }
    // Throws ValidationError describing the first broken field.
    void validate() const;
    friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

std::string to_csv_row(const RatingRecord& r);  // no trailing newline

struct Rejection {
    std::size_t line = 0;  // 1-based, the header is line 1
    std::string reason;
};

struct IngestResult {
    std::vector<RatingRecord> records;        // participants with all four cells
    std::vector<Rejection> rejected;          // malformed rows and duplicate cells
    std::set<std::string> excluded;           // participants with missing cells
    std::vector<RatingRecord> excluded_records;
};

// The header must match kRatingsHeader byte for byte (FormatError otherwise).
IngestResult ingest_ratings(std::string_view csv_text);
IngestResult ingest_ratings_file(const std::filesystem::path& path);

struct TTestResult {
    std::size_t n = 0;
    std::size_t df = 0;
    double mean_diff = 0;
    double sd_diff = 0;
    double t = 0;
    double p = 1;
};

// Paired t on d = x - y. Throws ValidationError on length mismatch, n < 2 or
// zero variance of the differences.
TTestResult paired_t(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double x, double a, double b);
// Two-sided Student t tail, I_{df/(df+t^2)}(df/2, 1/2).
double t_two_sided_p(double t, double df);

struct SummaryCell {
    Dimension dimension;
    Speed speed;
    std::optional<Pair> pair;  // nullopt: averaged over both pairs per participant
    std::size_t n = 0;
    double mean = 0;
    std::optional<double> sd;  // nullopt when n < 2 (flagged)

    [[nodiscard]] bool flagged() const noexcept { return !sd.has_value(); }
};

// 6 pooled cells followed by 12 per-pair cells. Pooled cells use each
// participant's mean over the two pairs, so n counts participants.
std::vector<SummaryCell> summarize(std::span<const RatingRecord> records);

// Slow minus fast per participant (pooled over pairs when pair is nullopt).
TTestResult compare_speeds(std::span<const RatingRecord> records, Dimension d, std::optional<Pair> pair = {});

struct PartitionCounts {
    std::size_t always_slow = 0;
    std::size_t always_fast = 0;
    std::size_t slow_abstract_fast_portrait = 0;
    std::size_t slow_portrait_fast_abstract = 0;
    std::size_t tied = 0;

    friend bool operator==(const PartitionCounts&, const PartitionCounts&) = default;
};

PartitionCounts preference_partition(std::span<const RatingRecord> records);

std::string format_summary_text(const std::vector<SummaryCell>& cells);
std::string format_summary_csv(const std::vector<SummaryCell>& cells);
// Summary, paired tests (where defined) and partition as aligned text.
std::string analysis_report(std::span<const RatingRecord> records);

}  // namespace artdream::psychstats
