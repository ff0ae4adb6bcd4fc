#pragma once

#include <cstdio>
#include <string>

namespace mkpoe {

/// Shortest-round-trip decimal rendering of a double (17 significant
/// digits), so written values parse back bit-identically.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

}  // namespace mkpoe
