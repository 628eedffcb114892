#pragma once

namespace glb {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace glb
