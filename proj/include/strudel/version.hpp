#pragma once

namespace strudel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace strudel
