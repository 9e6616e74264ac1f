#pragma once

namespace twostrain {
inline constexpr const char* version = "0.1.0";
}
