#pragma once

namespace bsem {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace bsem
