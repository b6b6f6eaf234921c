#pragma once

namespace solarpipe {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace solarpipe
