#pragma once

namespace crrr {

inline constexpr const char* kVersion = "0.1.0";

// Bumped when any serialized artifact (model bundle, rank set, report)
// changes shape. Readers reject mismatched majors.
inline constexpr int kFormatVersion = 1;

}  // namespace crrr
