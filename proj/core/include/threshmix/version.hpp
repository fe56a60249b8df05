#pragma once

namespace threshmix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace threshmix
