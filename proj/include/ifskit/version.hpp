#pragma once

namespace ifskit {
inline constexpr const char* kVersion = "0.1.0";
}
