#pragma once

#include "cehis/errors.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cehis {

// Shortest round-trip decimal form. All floating-point output that must reload
// bit-exactly (dumps, caches, CSV reports) goes through here.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

// Strict integer parse: the whole field must be consumed.
inline std::int64_t parse_int(std::string_view s, const std::string& context) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(context + ": expected integer, got '" + std::string(s) + "'");
    return v;
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(context + ": expected number, got '" + std::string(s) + "'");
    return v;
}

} // namespace cehis
