#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace renewal_ldp {

/// A value in (-inf, +inf]. Positive infinity is an explicit state rather than
/// an IEEE sentinel, so rate functions and effective domains can carry it
/// through arithmetic without silently producing NaN.
class ExtendedReal {
public:
    constexpr ExtendedReal() : finite_(0.0) {}
    constexpr ExtendedReal(double v) : finite_(v) {}  // NOLINT: implicit from double is intended

    static constexpr ExtendedReal infinity() { return ExtendedReal(Infinite{}); }

    /// Maps IEEE +inf onto the infinite state; NaN and -inf are rejected.
    static ExtendedReal from_double(double v) {
        if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
            throw std::domain_error("ExtendedReal: NaN or -inf is not representable");
        if (std::isinf(v)) return infinity();
        return ExtendedReal(v);
    }

    constexpr bool is_finite() const { return finite_.has_value(); }
    constexpr bool is_infinite() const { return !finite_.has_value(); }

    double value() const {
        if (!finite_) throw std::logic_error("ExtendedReal: value() on +inf");
        return *finite_;
    }

    /// IEEE view, for printing and for code that wants a plain double.
    constexpr double as_double() const {
        return finite_ ? *finite_ : std::numeric_limits<double>::infinity();
    }

    friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
        if (a.is_infinite() || b.is_infinite()) return infinity();
        return ExtendedReal(*a.finite_ + *b.finite_);
    }
    friend constexpr ExtendedReal operator-(ExtendedReal a, double b) {
        if (a.is_infinite()) return infinity();
        return ExtendedReal(*a.finite_ - b);
    }

    friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) {
        return a.finite_ == b.finite_;
    }
    friend constexpr bool operator<(ExtendedReal a, ExtendedReal b) {
        if (a.is_infinite()) return false;
        if (b.is_infinite()) return true;
        return *a.finite_ < *b.finite_;
    }
    friend constexpr bool operator>(ExtendedReal a, ExtendedReal b) { return b < a; }
    friend constexpr bool operator<=(ExtendedReal a, ExtendedReal b) { return !(b < a); }
    friend constexpr bool operator>=(ExtendedReal a, ExtendedReal b) { return !(a < b); }

    friend std::ostream& operator<<(std::ostream& os, ExtendedReal x) {
        if (x.is_infinite()) return os << "inf";
        return os << *x.finite_;
    }

private:
    struct Infinite {};
    constexpr explicit ExtendedReal(Infinite) : finite_(std::nullopt) {}

    std::optional<double> finite_;
};

inline ExtendedReal min(ExtendedReal a, ExtendedReal b) { return b < a ? b : a; }

}  // namespace renewal_ldp
