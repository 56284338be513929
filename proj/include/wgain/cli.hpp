#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wgain {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one command line (args[0] is the program name). Usage and error text
/// go to `err`, progress to spdlog.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace wgain
