#pragma once

namespace taac {

inline constexpr const char* kVersion = "0.1.0";

}
