#pragma once

#include <iosfwd>

namespace svo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Subcommands run-vo, gen-homography, select-patches, eval-ate and selfcheck.
// Returns the process exit code: 0 success, 1 usage or validation error, 2
// failure while running.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace svo
