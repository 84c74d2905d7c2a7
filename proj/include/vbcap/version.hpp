#pragma once

namespace vbcap {

inline constexpr const char* kVersion = "0.3.1";

}
