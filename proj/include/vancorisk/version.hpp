#pragma once

namespace vancorisk {
inline constexpr const char* kVersion = "0.1.0";
}
