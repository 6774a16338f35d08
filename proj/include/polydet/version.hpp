#pragma once

namespace polydet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace polydet
