#pragma once

namespace dru {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dru
