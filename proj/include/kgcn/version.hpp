#pragma once

namespace kgcn {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "kgcn";

}  // namespace kgcn
