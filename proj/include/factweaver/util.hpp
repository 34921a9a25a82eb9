#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace factweaver {

// mt19937_64 output is fully specified by the standard, so every draw below
// is reproducible across standard libraries (unlike std::*_distribution).
using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return static_cast<std::size_t>(draw % bound);
}

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng, i);
        std::swap(items[i - 1], items[j]);
    }
}

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// splitmix64 finalizer
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::string group_thousands(std::string digits) {
    std::string out;
    const std::size_t n = digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[i]);
        const std::size_t remaining = n - i - 1;
        if (remaining > 0 && remaining % 3 == 0) out.push_back(',');
    }
    return out;
}

/// Integral values print without decimals, everything else with two.
/// The integer part always carries thousands separators.
inline std::string format_number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "NaN" : (v > 0 ? "Infinity" : "-Infinity");
    const bool negative = v < 0;
    double a = std::fabs(v);
    const double rounded = std::round(a);
    char buf[64];
    std::string fraction;
    if (std::fabs(a - rounded) < 1e-9 * std::max(1.0, a)) {
        std::snprintf(buf, sizeof buf, "%.0f", rounded);
    } else {
        std::snprintf(buf, sizeof buf, "%.2f", a);
        std::string s(buf);
        const auto dot = s.find('.');
        fraction = s.substr(dot);
        s.resize(dot);
        std::snprintf(buf, sizeof buf, "%s", s.c_str());
    }
    std::string out = group_thousands(buf) + fraction;
    if (negative && out != "0" && out != "0.00") out.insert(out.begin(), '-');
    return out;
}

inline std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
    return buf;
}

inline std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace factweaver
