// Small locale-free CSV helpers shared by the readers/writers.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ximpact::csv {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view field) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);  // from_chars rejects '+'
    if (field.empty()) return std::nullopt;
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
    return value;
}

inline std::optional<std::int64_t> parse_int64(std::string_view field) {
    if (field.empty()) return std::nullopt;
    std::int64_t value = 0;
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
    return value;
}

// Shortest representation that round-trips a double.
inline std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::from_chars(buf, buf + len, back);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[32];
            const int l2 = std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            double b2 = 0.0;
            std::from_chars(shorter, shorter + l2, b2);
            if (b2 == v) return std::string(shorter, l2);
        }
    }
    return std::string(buf, len);
}

}  // namespace ximpact::csv
