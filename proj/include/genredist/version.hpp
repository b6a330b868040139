#pragma once

namespace genredist {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace genredist
