#pragma once

namespace hflab {

inline constexpr int schema_version = 1;
inline constexpr const char* version_string = "0.1.0";

}  // namespace hflab
