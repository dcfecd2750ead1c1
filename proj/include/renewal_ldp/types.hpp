#pragma once

#include <optional>
#include <string_view>

#include "extended_real.hpp"

namespace renewal_ldp {

/// Dual variables: a1 is conjugate to tau(x)/x, a2 to A(x)/x^2.
struct Tilt {
    double a1 = 0.0;
    double a2 = 0.0;
    friend bool operator==(const Tilt&, const Tilt&) = default;
};

/// Scaled passage coordinates (tau(x)/x, A(x)/x^2).
struct ScaledPoint {
    double z1 = 0.0;
    double z2 = 0.0;
    friend bool operator==(const ScaledPoint&, const ScaledPoint&) = default;
};

enum class RateMethod { closed_form, newton, ascent, poisson_g_root };

inline std::string_view to_string(RateMethod m) {
    switch (m) {
        case RateMethod::closed_form: return "closed_form";
        case RateMethod::newton: return "newton";
        case RateMethod::ascent: return "ascent";
        case RateMethod::poisson_g_root: return "poisson_g_root";
    }
    return "unknown";
}

/// Value of a rate function together with the optimizing tilt and how it was found.
struct RateEvaluation {
    ExtendedReal value = 0.0;
    std::optional<Tilt> argmax_tilt;
    bool converged = true;
    int iterations = 0;
    RateMethod method = RateMethod::closed_form;
    bool on_boundary = false;
};

}  // namespace renewal_ldp
