#pragma once

namespace ordbench {
inline constexpr const char* kVersion = "0.1.0";
}
