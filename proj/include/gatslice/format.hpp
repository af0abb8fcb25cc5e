#pragma once

#include <charconv>
#include <string>

namespace gatslice {

/// Shortest text that parses back to exactly `v`, in plain decimal notation
/// unless that would be long.
inline std::string format_number(double v) {
    char buf[400];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    if (res.ec == std::errc() && res.ptr - buf <= 12) return std::string(buf, res.ptr);
    res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace gatslice
