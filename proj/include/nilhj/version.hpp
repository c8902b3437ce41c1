#pragma once

namespace nilhj {
inline constexpr const char* kVersion = "nilhj 0.1.0";
}
