#pragma once

namespace eastwalk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace eastwalk
