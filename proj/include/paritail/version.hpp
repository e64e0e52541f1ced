#pragma once

namespace paritail {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace paritail
