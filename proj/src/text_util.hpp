#pragma once

// Internal helpers shared by the text formats (CSV, model files, configs).

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "fdnn/errors.hpp"

namespace fdnn::detail {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline bool try_parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Int>
bool try_parse_int(std::string_view s, Int& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    if (!try_parse_double(s, v)) fail(ErrorKind::Parse, context + ": expected a number, got '" + std::string(s) + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view s, const std::string& context) {
    Int v{};
    if (!try_parse_int(s, v)) fail(ErrorKind::Parse, context + ": expected an integer, got '" + std::string(s) + "'");
    return v;
}

template <typename Range>
std::string join_doubles(const Range& values, char sep = ' ') {
    std::string out;
    bool first = true;
    for (double v : values) {
        if (!first) out.push_back(sep);
        out += format_double(v);
        first = false;
    }
    return out;
}

}  // namespace fdnn::detail
