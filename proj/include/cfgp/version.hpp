#pragma once

namespace cfgp {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace cfgp
