#include "artdream/motionlab/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>

#include "artdream/error.hpp"

namespace artdream::motionlab {

namespace {

Rational reduce(__int128 n, __int128 d) {
    if (d == 0) throw ValidationError("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
        const __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        n /= a;
        d /= a;
    }
    constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
    if (n > kMax || n < -kMax || d > kMax) throw ValidationError("rational overflow");
    return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
}

std::int64_t parse_int(std::string_view s, std::string_view whole) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || ptr != end || v < 0) {
        throw ValidationError("not a non-negative rational: '" + std::string(whole) + "'");
    }
    return v;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw ValidationError("rational with zero denominator");
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
}

Rational Rational::parse(std::string_view text) {
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
        const auto n = parse_int(text.substr(0, slash), text);
        const auto d = parse_int(text.substr(slash + 1), text);
        if (d == 0) throw ValidationError("rational with zero denominator: '" + std::string(text) + "'");
        return Rational(n, d);
    }
    if (const auto dot = text.find('.'); dot != std::string_view::npos) {
        const auto ip = text.substr(0, dot), fp = text.substr(dot + 1);
        if (fp.empty() || fp.size() > 15) throw ValidationError("bad decimal rational: '" + std::string(text) + "'");
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
        const auto whole = ip.empty() ? 0 : parse_int(ip, text);
        return reduce(static_cast<__int128>(whole) * scale + parse_int(fp, text), scale);
    }
    return Rational(parse_int(text, text), 1);
}

std::string Rational::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

Rational operator*(Rational a, Rational b) {
    return reduce(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(Rational a, Rational b) {
    if (b.num_ == 0) throw ValidationError("division by a zero rational");
    return reduce(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

}  // namespace artdream::motionlab
