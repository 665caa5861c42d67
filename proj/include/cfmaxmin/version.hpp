#pragma once

namespace cfmaxmin {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cfmaxmin
