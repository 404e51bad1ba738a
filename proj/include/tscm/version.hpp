#pragma once

namespace tscm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tscm
