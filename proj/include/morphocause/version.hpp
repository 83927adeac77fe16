#pragma once

namespace morphocause {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace morphocause
