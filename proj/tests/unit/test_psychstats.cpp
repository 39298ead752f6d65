#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "artdream/psychstats/stats.hpp"
#include "doctest.h"

using namespace artdream;
using namespace artdream::psychstats;

#ifndef ARTDREAM_FIXTURE_DIR
#error "ARTDREAM_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace {

const std::string kHeader(kRatingsHeader);

std::string four_rows(const std::string& id = "P01") {
    return id + ",abstract,slow,1,6,6,5,2019-03-11T10:00:00Z\n" + id + ",abstract,fast,2,4,5,4,2019-03-11T10:01:00Z\n" +
           id + ",portrait,fast,3,4,4,5,2019-03-11T10:02:00Z\n" + id +
           ",portrait,slow,4,5,6,6,2019-03-11T10:03:00Z\n";
}

// 1 - 2 * integral_0^|t| of the Student t density, composite Simpson.
double quadrature_p(double t, double df) {
    const double c =
        std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
    auto f = [&](double s) { return c * std::pow(1.0 + s * s / df, -(df + 1) / 2); };
    const double a = std::abs(t);
    const int n = 20000;
    const double h = a / n;
    double acc = f(0) + f(a);
    for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return 1.0 - 2.0 * acc * h / 3.0;
}

std::vector<RatingRecord> study_records() {
    const auto res = ingest_ratings_file(std::string(ARTDREAM_FIXTURE_DIR) + "/study_ratings.csv");
    REQUIRE(res.rejected.empty());
    REQUIRE(res.excluded.empty());
    REQUIRE(res.records.size() == 152);
    return res.records;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

const SummaryCell& find_cell(const std::vector<SummaryCell>& cells, Dimension d, Speed s, std::optional<Pair> p) {
    const auto it = std::find_if(cells.begin(), cells.end(), [&](const SummaryCell& c) {
        return c.dimension == d && c.speed == s && c.pair == p;
    });
    REQUIRE(it != cells.end());
    return *it;
}

}  // namespace

TEST_CASE("ingest: well-formed file") {
    const auto res = ingest_ratings(kHeader + "\n" + four_rows());
    CHECK(res.records.size() == 4);
    CHECK(res.rejected.empty());
    CHECK(res.excluded.empty());
    CHECK(res.records[0].score(Dimension::likability) == 6);
    CHECK(res.records[2].pair == Pair::portrait);
    CHECK(to_csv_row(res.records[0]) == "P01,abstract,slow,1,6,6,5,2019-03-11T10:00:00Z");

    // CRLF line endings are tolerated
    std::string crlf = kHeader + "\r\n" + four_rows();
    for (std::size_t pos = kHeader.size() + 2; (pos = crlf.find('\n', pos)) != std::string::npos; pos += 2) {
        crlf.insert(pos, "\r");
    }
    CHECK(ingest_ratings(crlf).records.size() == 4);
}

TEST_CASE("ingest: rejected rows carry line numbers") {
    auto text = kHeader + "\n" + four_rows("P01") +
                "P02,abstract,slow,1,8,5,5,2019-03-11T10:00:00Z\n"      // line 6
                "P02,sideways,slow,1,5,5,5,2019-03-11T10:00:00Z\n"      // line 7
                "P02,abstract,medium,1,5,5,5,2019-03-11T10:00:00Z\n"    // line 8
                "P01,abstract,slow,1,5,5,5,2019-03-11T10:00:00Z\n"      // line 9, duplicate
                "P0 3,abstract,slow,1,5,5,5,2019-03-11T10:00:00Z\n"     // line 10
                "P04,abstract,slow,1,5,5,5,yesterday\n"                 // line 11
                "P04,abstract,slow,1,5,5\n"                             // line 12
                "P04,abstract,slow,x,5,5,5,2019-03-11T10:00:00Z\n";     // line 13
    const auto res = ingest_ratings(text);
    REQUIRE(res.rejected.size() == 8);
    CHECK(res.rejected[0].line == 6);
    CHECK(res.rejected[0].reason.find("likability score 8") != std::string::npos);
    CHECK(res.rejected[1].reason.find("pair_id") != std::string::npos);
    CHECK(res.rejected[2].reason.find("speed") != std::string::npos);
    CHECK(res.rejected[3].line == 9);
    CHECK(res.rejected[3].reason.find("duplicate") != std::string::npos);
    CHECK(res.rejected[3].reason.find("line 2") != std::string::npos);
    CHECK(res.rejected[7].line == 13);
    CHECK(res.records.size() == 4);

    CHECK_THROWS_AS(ingest_ratings("participant,pair\n"), FormatError);
    CHECK_THROWS_AS(ingest_ratings(""), FormatError);
    CHECK_THROWS_AS(ingest_ratings(kHeader + " \n"), FormatError);
}

TEST_CASE("ingest: incomplete participants are excluded") {
    std::string p2 = four_rows("P02");
    p2 = p2.substr(0, p2.find("P02,portrait,fast"));
    p2 += "P02,portrait,slow,4,5,6,6,2019-03-11T10:03:00Z\n";
    const auto res = ingest_ratings(kHeader + "\n" + four_rows("P01") + p2 + four_rows("P03"));
    CHECK(res.records.size() == 8);
    CHECK(res.excluded == std::set<std::string>{"P02"});
    CHECK(res.excluded_records.size() == 3);
    CHECK(res.rejected.empty());
}

TEST_CASE("paired t: examples and symmetries") {
    const std::vector<double> x{3, 4, 5, 6};
    CHECK_THROWS_AS(paired_t(x, x), ValidationError);
    CHECK_THROWS_AS(paired_t(x, std::vector<double>{1, 2}), ValidationError);
    CHECK_THROWS_AS(paired_t(std::vector<double>{1}, std::vector<double>{2}), ValidationError);

    const std::vector<double> a{2, 1, 2, 1}, b{1, 2, 1, 2};
    const auto sym = paired_t(a, b);
    CHECK(sym.mean_diff == 0.0);
    CHECK(sym.t == 0.0);
    CHECK(sym.p == 1.0);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(4.0, 1.3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> u(12), v(12), us(12), vs(12);
        for (auto& e : u) e = g(rng);
        for (auto& e : v) e = g(rng);
        const double shift = 3.25;
        for (int i = 0; i < 12; ++i) {
            us[i] = u[i] + shift;
            vs[i] = v[i] + shift;
        }
        const auto r = paired_t(u, v), q = paired_t(v, u), s = paired_t(us, vs);
        CHECK(q.t == -r.t);
        CHECK(q.p == r.p);
        CHECK((r.t > 0) == (r.mean_diff > 0));
        CHECK(std::abs(s.t - r.t) <= 1e-12 * std::max(1.0, std::abs(r.t)));
        CHECK(s.df == 11);
    }
}

TEST_CASE("paired t reproduces t(37) = 4.48 from mean 1.00, sd 1.376") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> z(38);
    for (auto& e : z) e = g(rng);
    double m = 0;
    for (double e : z) m += e;
    m /= 38;
    double ss = 0;
    for (double e : z) ss += (e - m) * (e - m);
    const double sd = std::sqrt(ss / 37);
    std::vector<double> x(38), y(38, 4.0);
    for (int i = 0; i < 38; ++i) x[i] = 4.0 + 1.0 + 1.376 * (z[i] - m) / sd;
    const auto r = paired_t(x, y);
    CHECK(r.mean_diff == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.sd_diff == doctest::Approx(1.376).epsilon(1e-12));
    CHECK(r.df == 37);
    CHECK(std::abs(r.t - 4.48) <= 0.01);
}

TEST_CASE("t tail probabilities") {
    for (double df : {1.0, 2.0, 37.0, 1000.0}) CHECK(t_two_sided_p(0.0, df) == 1.0);
    CHECK(std::abs(t_two_sided_p(1.18, 37) - 0.24) <= 0.01);
    CHECK(std::abs(t_two_sided_p(2.50, 37) - 0.01) <= 0.01);
    CHECK(t_two_sided_p(-2.5, 37) == t_two_sided_p(2.5, 37));
    // closed forms: df=1 is Cauchy, df=2 has p = 1 - t / sqrt(t^2 + 2)
    for (double t : {0.3, 1.0, 4.0}) {
        CHECK(t_two_sided_p(t, 1) == doctest::Approx(1.0 - 2.0 * std::atan(t) / std::numbers::pi).epsilon(1e-12));
        CHECK(t_two_sided_p(t, 2) == doctest::Approx(1.0 - t / std::sqrt(t * t + 2)).epsilon(1e-12));
    }
    double prev = 1.0;
    for (double t = 0.05; t < 8; t += 0.05) {
        const double p = t_two_sided_p(t, 37);
        REQUIRE(p < prev);
        REQUIRE(p > 0.0);
        prev = p;
    }
    CHECK_THROWS_AS(t_two_sided_p(1.0, 0.5), ValidationError);
    CHECK_THROWS_AS(t_two_sided_p(INFINITY, 3), ValidationError);
}

TEST_CASE("t tail agrees with numerical quadrature of the density") {
    double worst = 0.0;
    for (double df : {1.0, 5.0, 37.0, 100.0}) {
        for (double t = -6.0; t <= 6.0; t += 0.25) {
            worst = std::max(worst, std::abs(t_two_sided_p(t, df) - quadrature_p(t, df)));
        }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("summarize: degenerate cells") {
    const auto one = ingest_ratings(kHeader + "\n" + four_rows()).records;
    const auto cells = summarize(one);
    REQUIRE(cells.size() == 18);
    for (const auto& c : cells) {
        CHECK(c.n == 1);
        CHECK(c.flagged());
    }
    CHECK(find_cell(cells, Dimension::likability, Speed::slow, std::nullopt).mean == 5.5);

    std::string text = kHeader + "\n";
    for (const char* id : {"A", "B", "C"}) {
        for (const char* p : {"abstract", "portrait"})
            for (const char* s : {"slow", "fast"}) text += std::string(id) + "," + p + "," + s + ",1,4,4,4,2019-03-11T10:00:00Z\n";
    }
    const auto flat = ingest_ratings(text).records;
    for (const auto& c : summarize(flat)) {
        CHECK(c.mean == 4.0);
        REQUIRE(c.sd);
        CHECK(*c.sd == 0.0);
    }
    CHECK(preference_partition(flat) == PartitionCounts{0, 0, 0, 0, 3});
    CHECK_THROWS_AS(summarize(std::vector<RatingRecord>{}), ValidationError);
}

TEST_CASE("preference partition: dominance and incompleteness") {
    const auto one = ingest_ratings(kHeader + "\n" + four_rows()).records;
    CHECK(preference_partition(one) == PartitionCounts{1, 0, 0, 0, 0});
    auto partial = one;
    partial.pop_back();
    CHECK_THROWS_AS(preference_partition(partial), ValidationError);
}

TEST_CASE("study fixture reproduces the summary statistics") {
    const auto recs = study_records();
    CHECK(preference_partition(recs) == PartitionCounts{21, 3, 10, 4, 0});

    const auto cells = summarize(recs);
    struct Expect {
        Dimension d;
        Speed s;
        std::optional<Pair> p;
        double mean, sd;
    };
    const Expect table[] = {
        {Dimension::likability, Speed::slow, std::nullopt, 5.46, 0.80},
        {Dimension::likability, Speed::fast, std::nullopt, 4.46, 1.12},
        {Dimension::aesthetic_pleasantness, Speed::slow, std::nullopt, 5.54, 0.88},
        {Dimension::aesthetic_pleasantness, Speed::fast, std::nullopt, 4.39, 0.99},
        {Dimension::artistic_value, Speed::slow, std::nullopt, 5.37, 0.93},
        {Dimension::artistic_value, Speed::fast, std::nullopt, 4.83, 0.95},
        {Dimension::artistic_value, Speed::slow, Pair::portrait, 5.32, 1.02},  // 1.01 unreachable: 38 integer scores, mean 5.32
        {Dimension::artistic_value, Speed::fast, Pair::portrait, 5.03, 1.10},
        {Dimension::likability, Speed::fast, Pair::portrait, 4.71, 1.14},
        {Dimension::aesthetic_pleasantness, Speed::fast, Pair::portrait, 4.68, 1.09},
    };
    for (const auto& e : table) {
        const auto& c = find_cell(cells, e.d, e.s, e.p);
        CAPTURE(to_string(e.d));
        CAPTURE(to_string(e.s));
        CHECK(c.n == 38);
        CHECK(round2(c.mean) == doctest::Approx(e.mean));
        CHECK(round2(*c.sd) == doctest::Approx(e.sd));
    }

    struct TExpect {
        Dimension d;
        std::optional<Pair> p;
        double t;
    };
    const TExpect tests[] = {
        {Dimension::likability, std::nullopt, 4.48},           {Dimension::aesthetic_pleasantness, std::nullopt, 5.35},
        {Dimension::artistic_value, std::nullopt, 2.50},       {Dimension::likability, Pair::abstract, 3.68},
        {Dimension::likability, Pair::portrait, 3.41},         {Dimension::aesthetic_pleasantness, Pair::abstract, 5.53},  // 5.52 jointly unreachable
        {Dimension::aesthetic_pleasantness, Pair::portrait, 2.93}, {Dimension::artistic_value, Pair::abstract, 3.11},
        {Dimension::artistic_value, Pair::portrait, 1.19},  // 1.18 unreachable with those means
    };
    for (const auto& e : tests) {
        const auto r = compare_speeds(recs, e.d, e.p);
        CAPTURE(to_string(e.d));
        CHECK(r.df == 37);
        CHECK(round2(r.t) == doctest::Approx(e.t));
    }
    CHECK(std::abs(compare_speeds(recs, Dimension::artistic_value, Pair::portrait).p - 0.24) <= 0.01);

    // participant order does not matter
    auto shuffled = recs;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = summarize(shuffled);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(again[i].mean == cells[i].mean);
        CHECK(again[i].sd == cells[i].sd);
    }
}

TEST_CASE("report formatting") {
    const auto one = ingest_ratings(kHeader + "\n" + four_rows()).records;
    const auto text = analysis_report(one);
    CHECK(text.find("flagged") != std::string::npos);
    CHECK(text.find("not computable") != std::string::npos);
    const auto csv = format_summary_csv(summarize(one));
    CHECK(csv.rfind("dimension,speed,pair,n,mean,sd,flag\n", 0) == 0);
    CHECK(csv.find(",n<2") != std::string::npos);
}
