#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace bhtwa::io {

/// 17 significant digits, round-trips any double.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void put(std::ostream& os, double v) { os << num(v); }

}  // namespace bhtwa::io
