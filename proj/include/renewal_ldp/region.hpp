#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace renewal_ldp {

/// {z : n1 z1 + n2 z2 >= c}, or > c when strict.
struct HalfPlane {
    double n1 = 1.0;
    double n2 = 0.0;
    double c = 0.0;
    bool strict = false;

    bool contains(const ScaledPoint& z) const {
        const double v = n1 * z.z1 + n2 * z.z2;
        return strict ? v > c : v >= c;
    }
};

/// Closed axis-aligned rectangle; bounds may be infinite.
struct Box {
    double lo1 = -std::numeric_limits<double>::infinity();
    double hi1 = std::numeric_limits<double>::infinity();
    double lo2 = -std::numeric_limits<double>::infinity();
    double hi2 = std::numeric_limits<double>::infinity();

    bool contains(const ScaledPoint& z) const {
        return z.z1 >= lo1 && z.z1 <= hi1 && z.z2 >= lo2 && z.z2 <= hi2;
    }
};

using RegionPiece = std::variant<HalfPlane, Box>;

/// Finite union of half-planes and rectangles in the (z1, z2) plane.
///
/// Text form, pieces joined by '|':
///   z1>=1.5   z2<0.2   z2>z1   z1-z2<=0.3
///   box:lo1,hi1,lo2,hi2        (inf / -inf allowed)
///   linf>0.5                   (shorthand for |z1|>0.5 | |z2|>0.5)
struct Region {
    std::vector<RegionPiece> pieces;

    bool empty() const { return pieces.empty(); }

    bool contains(const ScaledPoint& z) const {
        for (const auto& p : pieces)
            if (std::visit([&](const auto& q) { return q.contains(z); }, p)) return true;
        return false;
    }

    static Region parse(const std::string& text);
};

namespace detail {

inline std::string strip_spaces(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

inline double parse_number(const std::string& s) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DomainError("region: cannot parse number '" + s + "'");
    }
    if (used != s.size()) throw DomainError("region: cannot parse number '" + s + "'");
    return v;
}

// Linear expression in z1, z2 with a constant: coefficients (k1, k2, k0).
struct Linear {
    double k1 = 0.0, k2 = 0.0, k0 = 0.0;
};

inline Linear parse_linear(const std::string& s) {
    if (s.empty()) throw DomainError("region: empty expression");
    Linear out;
    std::size_t i = 0;
    while (i < s.size()) {
        double sign = 1.0;
        if (s[i] == '+' || s[i] == '-') {
            sign = s[i] == '-' ? -1.0 : 1.0;
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && s[j] != '+' && !(s[j] == '-' && j > i && s[j - 1] != 'e')) ++j;
        const std::string term = s.substr(i, j - i);
        if (term == "z1") out.k1 += sign;
        else if (term == "z2") out.k2 += sign;
        else out.k0 += sign * parse_number(term);
        i = j;
    }
    return out;
}

inline RegionPiece parse_piece(const std::string& raw) {
    const std::string s = strip_spaces(raw);
    if (s.rfind("box:", 0) == 0) {
        std::vector<double> v;
        std::size_t start = 4;
        while (start <= s.size()) {
            const std::size_t comma = s.find(',', start);
            v.push_back(parse_number(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (v.size() != 4) throw DomainError("region: box needs four bounds");
        if (v[0] > v[1] || v[2] > v[3]) throw DomainError("region: box bounds out of order");
        return Box{v[0], v[1], v[2], v[3]};
    }
    static const char* ops[] = {">=", "<=", ">", "<"};
    for (const char* op : ops) {
        const std::size_t pos = s.find(op);
        if (pos == std::string::npos) continue;
        const std::string lhs = s.substr(0, pos);
        const std::string rhs = s.substr(pos + std::char_traits<char>::length(op));
        const Linear l = parse_linear(lhs);
        const Linear r = parse_linear(rhs);
        // (l - r) op 0
        double n1 = l.k1 - r.k1, n2 = l.k2 - r.k2, c = r.k0 - l.k0;
        const std::string o(op);
        const bool strict = o.size() == 1;
        if (o[0] == '<') {
            n1 = -n1;
            n2 = -n2;
            c = -c;
        }
        if (n1 == 0.0 && n2 == 0.0) throw DomainError("region: constraint has no z1/z2 term");
        return HalfPlane{n1, n2, c, strict};
    }
    throw DomainError("region: cannot parse '" + raw + "'");
}

}  // namespace detail

inline Region Region::parse(const std::string& text) {
    Region region;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t bar = text.find('|', start);
        const std::string piece =
            detail::strip_spaces(text.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
        if (!piece.empty()) {
            if (piece.rfind("linf", 0) == 0) {
                const bool strict = piece.compare(4, 2, ">=") != 0;
                const std::size_t skip = strict ? 5 : 6;
                if (piece.size() <= skip || piece[4] != '>') throw DomainError("region: expected linf>d");
                const double d = detail::parse_number(piece.substr(skip));
                region.pieces.push_back(HalfPlane{1.0, 0.0, d, strict});
                region.pieces.push_back(HalfPlane{-1.0, 0.0, d, strict});
                region.pieces.push_back(HalfPlane{0.0, 1.0, d, strict});
                region.pieces.push_back(HalfPlane{0.0, -1.0, d, strict});
            } else {
                region.pieces.push_back(detail::parse_piece(piece));
            }
        }
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    if (region.pieces.empty()) throw DomainError("region: no pieces in '" + text + "'");
    return region;
}

}  // namespace renewal_ldp
