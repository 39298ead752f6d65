#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace artdream::motionlab {

// Positive-or-zero exact fraction, always reduced, den > 0.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    // "30", "30000/1001" or a plain decimal such as "3.5".
    static Rational parse(std::string_view text);

    [[nodiscard]] std::int64_t num() const noexcept { return num_; }
    [[nodiscard]] std::int64_t den() const noexcept { return den_; }
    [[nodiscard]] double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
    [[nodiscard]] std::string str() const;  // "num/den"
    [[nodiscard]] bool positive() const noexcept { return num_ > 0; }

    friend Rational operator*(Rational a, Rational b);
    friend Rational operator/(Rational a, Rational b);
    friend bool operator==(const Rational&, const Rational&) = default;
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }

    // floor / ceil of num/den for non-negative values
    [[nodiscard]] std::int64_t floor() const noexcept { return num_ / den_; }
    [[nodiscard]] std::int64_t ceil() const noexcept { return (num_ + den_ - 1) / den_; }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace artdream::motionlab
