#pragma once

// Two-mode scalar: arbitrary-precision rational or binary64. A model fixes
// one mode for all of its parameters; mixing modes in arithmetic throws.
// Exact mode is what makes overlap detection trustworthy, float mode is for
// Monte-Carlo work where logs and samples dominate anyway.

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <variant>

#include "safd/errors.hpp"

namespace safd {

using Rational = boost::multiprecision::cpp_rational;

enum class NumMode { Exact, Float };

class Scalar {
public:
    Scalar() : v_(0.0) {}

    static Scalar exact(Rational q) { return Scalar(std::move(q)); }
    static Scalar exact(long num, long den = 1) { return Scalar(Rational(num, den)); }
    static Scalar real(double x) { return Scalar(x); }

    // Exact dyadic rational equal to the given binary64 value.
    static Scalar exact_from_double(double x) {
        Rational q;
        if (x == 0.0) return Scalar(Rational(0));
        int exp = 0;
        double m = std::frexp(x, &exp); // x = m * 2^exp, |m| in [0.5, 1)
        auto mant = static_cast<long long>(std::ldexp(m, 53));
        exp -= 53;
        q = Rational(mant);
        if (exp > 0) {
            q *= boost::multiprecision::pow(boost::multiprecision::cpp_int(2), exp);
        } else if (exp < 0) {
            q /= boost::multiprecision::pow(boost::multiprecision::cpp_int(2), -exp);
        }
        return Scalar(std::move(q));
    }

    NumMode mode() const { return is_exact() ? NumMode::Exact : NumMode::Float; }
    bool is_exact() const { return std::holds_alternative<Rational>(v_); }

    double as_double() const {
        if (is_exact()) return static_cast<double>(std::get<Rational>(v_));
        return std::get<double>(v_);
    }

    const Rational& rat() const {
        if (!is_exact()) throw ModeMismatch("Scalar::rat on float-mode value");
        return std::get<Rational>(v_);
    }

    Scalar to_mode(NumMode m) const {
        if (m == mode()) return *this;
        if (m == NumMode::Float) return Scalar(as_double());
        return exact_from_double(std::get<double>(v_));
    }

    Scalar operator+(const Scalar& o) const { return binop(o, [](auto a, auto b) { return a + b; }); }
    Scalar operator-(const Scalar& o) const { return binop(o, [](auto a, auto b) { return a - b; }); }
    Scalar operator*(const Scalar& o) const { return binop(o, [](auto a, auto b) { return a * b; }); }
    Scalar operator-() const {
        if (is_exact()) return Scalar(Rational(-std::get<Rational>(v_)));
        return Scalar(-std::get<double>(v_));
    }

    Scalar abs() const {
        if (is_exact()) {
            Rational q = std::get<Rational>(v_);
            if (q < 0) q = -q;
            return Scalar(std::move(q));
        }
        return Scalar(std::fabs(std::get<double>(v_)));
    }

    bool operator==(const Scalar& o) const {
        check_mode(o);
        if (is_exact()) return std::get<Rational>(v_) == std::get<Rational>(o.v_);
        return std::get<double>(v_) == std::get<double>(o.v_);
    }
    bool operator!=(const Scalar& o) const { return !(*this == o); }
    bool operator<(const Scalar& o) const {
        check_mode(o);
        if (is_exact()) return std::get<Rational>(v_) < std::get<Rational>(o.v_);
        return std::get<double>(v_) < std::get<double>(o.v_);
    }
    bool operator>(const Scalar& o) const { return o < *this; }
    bool operator<=(const Scalar& o) const { return !(o < *this); }
    bool operator>=(const Scalar& o) const { return !(*this < o); }

    // "num/den" in exact mode, shortest round-trip decimal otherwise.
    std::string str() const {
        if (is_exact()) {
            const Rational& q = std::get<Rational>(v_);
            std::string s = numerator(q).str();
            if (denominator(q) != 1) s += "/" + denominator(q).str();
            return s;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(v_));
        return buf;
    }

private:
    explicit Scalar(Rational q) : v_(std::move(q)) {}
    explicit Scalar(double x) : v_(x) {}

    void check_mode(const Scalar& o) const {
        if (is_exact() != o.is_exact())
            throw ModeMismatch("mixed exact/float Scalar arithmetic");
    }

    template <class F>
    Scalar binop(const Scalar& o, F f) const {
        check_mode(o);
        if (is_exact()) return Scalar(Rational(f(std::get<Rational>(v_), std::get<Rational>(o.v_))));
        return Scalar(f(std::get<double>(v_), std::get<double>(o.v_)));
    }

    std::variant<Rational, double> v_;
};

// Parses "a/b", integer, or decimal ("-1.25", "3e-2") strings into an exact
// rational. Decimal digits are taken at face value (0.1 -> 1/10).
inline Rational parse_rational(const std::string& text) {
    auto fail = [&]() -> Rational { throw ParseError("bad numeric literal: '" + text + "'"); };
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) return fail();

    auto slash = s.find('/');
    if (slash != std::string::npos) {
        auto to_int = [&](std::string part) -> boost::multiprecision::cpp_int {
            bool neg = false;
            if (!part.empty() && (part[0] == '+' || part[0] == '-')) {
                neg = part[0] == '-';
                part.erase(part.begin());
            }
            size_t nz = part.find_first_not_of('0'); // avoid the octal prefix
            part = (nz == std::string::npos) ? (part.empty() ? "" : "0") : part.substr(nz);
            if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
                throw ParseError("bad numeric literal: '" + text + "'");
            boost::multiprecision::cpp_int v(part);
            return neg ? -v : v;
        };
        boost::multiprecision::cpp_int num = to_int(s.substr(0, slash));
        boost::multiprecision::cpp_int den = to_int(s.substr(slash + 1));
        if (den == 0) return fail();
        return Rational(num, den);
    }

    bool neg = false;
    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');
    std::string digits;
    long frac_digits = 0;
    bool seen_dot = false, seen_digit = false;
    long exp10 = 0;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            seen_digit = true;
            if (seen_dot) ++frac_digits;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else if ((c == 'e' || c == 'E') && seen_digit) {
            try {
                exp10 = std::stol(s.substr(i + 1));
            } catch (const std::exception&) {
                return fail();
            }
            break;
        } else {
            return fail();
        }
    }
    if (!seen_digit) return fail();
    // cpp_int treats a leading 0 as an octal prefix
    size_t nz = digits.find_first_not_of('0');
    digits = (nz == std::string::npos) ? "0" : digits.substr(nz);
    boost::multiprecision::cpp_int num(digits);
    if (neg) num = -num;
    Rational q(num);
    long shift = exp10 - frac_digits;
    if (shift > 0)
        q *= boost::multiprecision::pow(boost::multiprecision::cpp_int(10), shift);
    else if (shift < 0)
        q /= boost::multiprecision::pow(boost::multiprecision::cpp_int(10), -shift);
    return q;
}

} // namespace safd
