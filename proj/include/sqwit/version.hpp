#pragma once

#define SQWIT_VERSION "1.0.0"

namespace sqwit {
inline constexpr const char* engine_version = SQWIT_VERSION;
inline constexpr int schema_version = 1;
}
