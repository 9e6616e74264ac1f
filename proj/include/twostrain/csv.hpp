#pragma once

#include <cstdio>
#include <string>

namespace twostrain {

// 17 significant digits: enough that a double survives the text round trip exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace twostrain
