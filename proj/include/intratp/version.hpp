#pragma once

namespace intratp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace intratp
