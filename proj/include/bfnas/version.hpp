#pragma once

namespace bfnas {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace bfnas
