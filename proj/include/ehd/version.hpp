#pragma once

namespace ehd {
inline constexpr const char* version = "0.1.0";
}
