#pragma once

namespace earscan {

inline constexpr const char* kToolName = "earscan";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace earscan
