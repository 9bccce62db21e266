#pragma once

namespace graspcause {

inline constexpr const char* kVersion = "0.1.0";

}
