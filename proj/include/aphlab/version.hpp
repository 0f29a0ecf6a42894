#pragma once

namespace aphlab {

inline const char* version_string() { return "aphlab 1.0.0"; }

}  // namespace aphlab
