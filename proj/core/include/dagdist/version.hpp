#pragma once

namespace dagdist {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dagdist
